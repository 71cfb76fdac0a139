use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge endpoint {site} out of range for {n} sites")]
    EndpointOutOfRange { site: usize, n: usize },
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at site {0}")]
    SelfLoop(usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph must have at least one site")]
    EmptyGraph,
    #[error("invalid terminal: {0}")]
    InvalidTerminal(String),
    #[error("{0} has no calibrated definition")]
    CalibrationNotRun(&'static str),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("relative entropy {0:e} is below the clipping threshold")]
    NegativeEntropy(f64),
    #[error("negative dephasing strength {0}")]
    NegativeDelta(f64),
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("explicit-bath generators have no affine matrix form")]
    ExplicitBathNotVectorizable,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("unphysical state at t = {t}: hermiticity deviation {hermiticity:e}, min eigenvalue {min_eigenvalue:e}")]
    UnphysicalState {
        t: f64,
        hermiticity: f64,
        min_eigenvalue: f64,
    },
    #[error("linear solve is rank deficient: residual {residual:e} but solution is unphysical")]
    RankDeficient { residual: f64 },
    #[error("linear solve residual {0:e} is neither stationary nor a divergence verdict")]
    IllConditioned(f64),
    #[error("trajectory too short: spans {span} time units, need {needed}")]
    TrajectoryTooShort { span: f64, needed: f64 },
    #[error("steady state not reached before t_max; resistance is indeterminate")]
    Indeterminate,
    #[error("negative eigenvalue {0:e} beyond tolerance")]
    NegativeEigenvalue(f64),
    #[error("conductance curve has no interior peak")]
    NoPeak,
    #[error("ratio - 1 does not change sign over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("candidate family is empty")]
    EmptyFamily,
    #[error("circuit {label} diverges at delta = {delta}; no finite resistance")]
    UnsolvableTarget { label: String, delta: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown builtin circuit '{0}'")]
    UnknownCircuit(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
