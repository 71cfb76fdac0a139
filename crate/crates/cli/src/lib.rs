//! Command-line driver: argument and config-file handling, dispatch to the
//! experiments, and CSV/SVG emission.
//!
//! Exit codes: 0 success, 2 physical divergence verdict (no steady state),
//! 1 usage or numerical error.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qtransport::circuit::calibrate::{
    additivity_targets, calibrate_extensions, calibrate_topology, pentagon_targets, placements_of, singletons,
    smallest, triangle_targets, Candidate,
};
use qtransport::circuit::enumerate::{
    connected_graphs, pentagon_family, triangular_lattice_graphs, MAX_EDGES, MAX_SITES,
    TRIANGLE_MAX_SITES,
};
use qtransport::circuit::file::{parse_circuit, write_circuit};
use qtransport::circuit::registry::{self, PROVENANCE_MARKER};
use qtransport::experiments::{
    self, entropy_trace, find_conductance_peak, find_ratio_crossing, rectification_sweep_for, sweep_branch_count_with,
    sweep_dephasing, CROSSING_TOL, DEFAULT_M_MAX, ENTROPY_SAMPLES, ENTROPY_T_END,
};
use qtransport::lindblad::{assemble_generator, DensityMatrix, Form};
use qtransport::observables::{current_out, relative_entropy_coherence, transport_reading};
use qtransport::output::{
    branch_series, chart_svg, dephasing_series, entropy_series, parse_delta_grid, ratio_series, ratios_csv,
    records_csv, traces_csv, Axis, ChartSpec, Series,
};
use qtransport::solver::{evolve, solve_ness, solve_ness_by_evolution, EvolveControls, Sampling, SolveStatus};
use qtransport::{Circuit, Error, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

/// Set to any non-empty value other than `0` for progress notes on stderr.
pub const VERBOSE_ENV: &str = "QTRANSPORT_VERBOSE";

#[derive(Debug, Parser)]
#[command(
    name = "qtransport",
    version,
    about = "Dephasing-controlled particle transport through graph circuits",
    long_about = "Solves the master equation of a graph circuit driven by a source bath, drained by a sink \
                  bath and dephased at strength Δ (in units of the hopping rate). Resistance is the \
                  steady-state population difference between source and sink divided by the injected \
                  current of 1.\n\nExit codes: 0 success, 2 no steady state (divergence), 1 usage or numerical error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady state of one circuit at one Δ: resistance, conductance, coherence.
    Ness(NessArgs),
    /// Time evolution from an empty device: particle number, outflow, coherence.
    Evolve(EvolveArgs),
    /// Conductance versus number of parallel branches, per Δ.
    SweepBranches(BranchArgs),
    /// Resistance versus Δ for one circuit.
    SweepDephasing(CommonArgs),
    /// Forward and reverse resistance versus Δ, their ratio, and the Δ where they are equal.
    Rectify(RectifyArgs),
    /// Relative-entropy coherence over time from an empty device.
    EntropyTrace(TraceArgs),
    /// Search a candidate family for circuits meeting a named set of targets.
    Calibrate(CalibrateArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Builtin circuit name (wire<N>, parallel-m<M>[-l<L>], pentagon, pentagon-k<1..4>,
    /// additivity-a, additivity-b, triangle, triangle-reverse) or a circuit file path.
    #[arg(long)]
    pub circuit: Option<String>,
    /// Dephasing strength Δ = γ_D / τ (default 0).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Δ values: `log:lo:hi:count`, `lin:lo:hi:count`, or a comma list.
    #[arg(long)]
    pub delta_grid: Option<String>,
    /// Max-norm of dρ/dt accepted as stationary (default 1e-9).
    #[arg(long)]
    pub stationarity_tol: Option<f64>,
    /// Integrator relative tolerance (default 1e-9).
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Integrator absolute tolerance (default 1e-12).
    #[arg(long)]
    pub atol: Option<f64>,
    /// Evolution cutoff in model time (default 1e4).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Output file (CSV or circuit text); stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write an SVG chart next to the output file.
    #[arg(long)]
    pub plot: bool,
    /// TOML file with defaults for any of these options; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Evolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Reduced,
    /// Source and sink reservoirs kept as explicit levels (evolution only).
    ExplicitBath,
}

#[derive(Debug, Args)]
pub struct NessArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Steady-state method (default direct; explicit-bath always evolves).
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum, default_value = "reduced")]
    pub form: FormArg,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// End time.
    #[arg(long, default_value_t = 50.0)]
    pub t_end: f64,
    /// Evenly spaced samples including t = 0 and t_end.
    #[arg(long, default_value_t = 501)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct BranchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest branch count.
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Interior sites per branch.
    #[arg(long, default_value_t = 1)]
    pub branch_length: usize,
}

#[derive(Debug, Args)]
pub struct RectifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Bracket `lo,hi` searched for the equal-resistance point.
    #[arg(long, default_value = "0.01,1.0")]
    pub bracket: String,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = ENTROPY_T_END)]
    pub t_end: f64,
    #[arg(long, default_value_t = ENTROPY_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetSet {
    /// Base circuit plus one edge, both with R = 1.75 at Δ = 0.
    Additivity,
    /// Pentagon sinks without a steady state at Δ = 0.
    Pentagon,
    /// Triangular-lattice funnels with equal forward/reverse resistance at Δ = 0.2259.
    Triangle,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub target: TargetSet,
    /// Largest candidate circuit, in sites (default 8; 7 for triangle)
    #[arg(long)]
    pub max_sites: Option<usize>,
    /// Largest candidate circuit, in edges
    #[arg(long, default_value_t = MAX_EDGES)]
    pub max_edges: usize,
}

/// Config-file counterpart of [`CommonArgs`].
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub circuit: Option<String>,
    pub delta: Option<f64>,
    pub delta_grid: Option<String>,
    pub stationarity_tol: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub t_max: Option<f64>,
    pub output: Option<PathBuf>,
    pub plot: Option<bool>,
}

/// Options after merging the config file under the flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub circuit: Option<String>,
    pub delta: f64,
    pub delta_grid: Option<Vec<f64>>,
    pub solver: SolverConfig,
    pub output: Option<PathBuf>,
    pub plot: bool,
}

impl RunConfig {
    pub fn deltas_or(&self, default: &[f64]) -> Vec<f64> {
        self.delta_grid.clone().unwrap_or_else(|| default.to_vec())
    }

    fn circuit_or(&self, default: &str) -> anyhow::Result<Circuit> {
        resolve_circuit(self.circuit.as_deref().unwrap_or(default))
    }

    fn circuit_required(&self) -> anyhow::Result<Circuit> {
        let name = self.circuit.as_deref().ok_or_else(|| anyhow!("--circuit is required"))?;
        resolve_circuit(name)
    }
}

pub fn read_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Merges flags over the optional config file over the defaults.
pub fn merge_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let file = match &common.config {
        Some(p) => read_file_config(p)?,
        None => FileConfig::default(),
    };
    let mut solver = SolverConfig::default();
    if let Some(v) = common.stationarity_tol.or(file.stationarity_tol) {
        solver.stationarity_tol = v;
    }
    if let Some(v) = common.rtol.or(file.rtol) {
        solver.step.rtol = v;
    }
    if let Some(v) = common.atol.or(file.atol) {
        solver.step.atol = v;
    }
    if let Some(v) = common.t_max.or(file.t_max) {
        solver.t_max = v;
    }
    for (name, v) in [
        ("stationarity-tol", solver.stationarity_tol),
        ("rtol", solver.step.rtol),
        ("atol", solver.step.atol),
        ("t-max", solver.t_max),
    ] {
        if !(v.is_finite() && v > 0.0) {
            bail!("--{name} must be a positive number, got {v}");
        }
    }
    let delta = common.delta.or(file.delta).unwrap_or(0.0);
    if !(delta.is_finite() && delta >= 0.0) {
        bail!("--delta must be finite and non-negative, got {delta}");
    }
    let delta_grid = match common.delta_grid.as_ref().or(file.delta_grid.as_ref()) {
        Some(g) => Some(parse_delta_grid(g)?),
        None => None,
    };
    Ok(RunConfig {
        circuit: common.circuit.clone().or(file.circuit),
        delta,
        delta_grid,
        solver,
        output: common.output.clone().or(file.output),
        plot: common.plot || file.plot.unwrap_or(false),
    })
}

/// Builtin name first, then a circuit file path.
pub fn resolve_circuit(spec: &str) -> anyhow::Result<Circuit> {
    match registry::builtin(spec) {
        Ok(c) => Ok(c),
        Err(Error::UnknownCircuit(_)) if Path::new(spec).is_file() => {
            let text = std::fs::read_to_string(spec).with_context(|| format!("reading circuit file {spec}"))?;
            parse_circuit(&text).with_context(|| format!("circuit file {spec}"))
        }
        Err(Error::UnknownCircuit(_)) => Err(anyhow!(
            "'{spec}' is neither a builtin circuit nor a readable file (builtins: {})",
            registry::builtin_names().join(", ")
        )),
        Err(e) => Err(e.into()),
    }
}

fn verbose() -> bool {
    std::env::var(VERBOSE_ENV).map(|v| !v.is_empty() && v != "0").unwrap_or(false)
}

fn note(err: &mut dyn Write, msg: &str) {
    if verbose() {
        let _ = writeln!(err, "{msg}");
    }
}

fn emit(cfg: &RunConfig, text: &str, out: &mut dyn Write) -> anyhow::Result<()> {
    match &cfg.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn chart(cfg: &RunConfig, series: &[Series], spec: ChartSpec, err: &mut dyn Write) -> anyhow::Result<()> {
    if !cfg.plot {
        return Ok(());
    }
    let path = cfg
        .output
        .as_ref()
        .map(|p| p.with_extension("svg"))
        .ok_or_else(|| anyhow!("--plot needs --output to place the chart"))?;
    match chart_svg(series, &spec) {
        Some(svg) => std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?,
        None => writeln!(err, "warning: nothing to plot for '{}' (every point diverged); chart omitted", spec.title)?,
    }
    Ok(())
}

fn parse_bracket(s: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| anyhow!("bracket must be 'lo,hi', got '{s}'"))?;
    let lo: f64 = lo.trim().parse().with_context(|| format!("bracket lower end '{lo}'"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("bracket upper end '{hi}'"))?;
    if !(lo >= 0.0 && hi > lo) {
        bail!("bracket needs 0 <= lo < hi, got {lo},{hi}");
    }
    Ok((lo, hi))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"))
}

fn run_ness(args: &NessArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(&args.common)?;
    let c = cfg.circuit_required()?;
    let form = match args.form {
        FormArg::Reduced => Form::Reduced,
        FormArg::ExplicitBath => Form::ExplicitBath,
    };
    let g = assemble_generator(&c, cfg.delta, form)?;
    let res = match (args.method, form) {
        (Some(MethodArg::Direct), Form::ExplicitBath) => {
            bail!("the explicit-bath form has no direct solver; use --method evolution")
        }
        (Some(MethodArg::Evolution), _) | (_, Form::ExplicitBath) => solve_ness_by_evolution(&g, &cfg.solver)?,
        _ => solve_ness(&g, &cfg.solver)?,
    };
    let mut text = String::new();
    text.push_str(&format!("circuit: {}\n", c.display_label()));
    text.push_str(&format!("delta: {:e}\n", cfg.delta));
    text.push_str(&format!("status: {}\n", res.status.as_str()));
    text.push_str(&format!("residual: {:e}\n", res.residual));
    if let Some(k) = res.kernel_dim {
        text.push_str(&format!("kernel_dim: {k}\n"));
    }
    if let Some(t) = res.elapsed_model_time {
        text.push_str(&format!("model_time: {t:e}\n"));
    }
    let code = match res.status {
        SolveStatus::Converged => {
            let reading = transport_reading(&res, &c)?;
            let rho = res.rho_ness.as_ref().expect("converged result carries a state");
            text.push_str(&format!("R: {}\n", reading.resistance));
            text.push_str(&format!("G: {:e}\n", reading.conductance));
            text.push_str(&format!("voltage: {}\n", fmt_opt(reading.voltage)));
            text.push_str(&format!("current_out: {:e}\n", current_out(rho, &c)));
            text.push_str(&format!("coherence: {:e}\n", relative_entropy_coherence(rho)?));
            let pops: Vec<String> = (0..c.n()).map(|i| format!("{:e}", rho.population(i))).collect();
            text.push_str(&format!("populations: {}\n", pops.join(" ")));
            EXIT_OK
        }
        SolveStatus::Diverged => {
            text.push_str("R: inf\nG: 0\n");
            EXIT_DIVERGED
        }
        SolveStatus::MaxTimeExceeded => {
            text.push_str("R: indeterminate\n");
            EXIT_FAILURE
        }
    };
    emit(&cfg, &text, out)?;
    Ok(code)
}

fn run_evolve(args: &EvolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(&args.common)?;
    let c = cfg.circuit_required()?;
    let g = assemble_generator(&c, cfg.delta, Form::Reduced)?;
    let controls = EvolveControls {
        step: cfg.solver.step,
        sampling: Sampling::Uniform(args.samples),
        check_physicality: true,
    };
    let traj = evolve(&g, &DensityMatrix::zeros(c.n()), args.t_end, &controls)?;
    let mut text = String::from("t,particles,current_out,coherence\n");
    let mut series = vec![
        Series { name: "particles".into(), points: Vec::new() },
        Series { name: "coherence".into(), points: Vec::new() },
    ];
    for (i, rho) in traj.states.iter().enumerate() {
        let t = traj.times[i];
        let s = relative_entropy_coherence(rho)?;
        text.push_str(&format!("{t:e},{:e},{:e},{s:e}\n", traj.trace_series[i], current_out(rho, &c)));
        series[0].points.push((t, traj.trace_series[i]));
        series[1].points.push((t, s));
    }
    emit(&cfg, &text, out)?;
    let spec = ChartSpec {
        title: format!("{} at Δ = {}", c.display_label(), cfg.delta),
        x: Axis::linear("time t (1/τ)"),
        y: Axis::linear("particle number / relative entropy (nats)"),
        reference_y: None,
    };
    chart(&cfg, &series, spec, err)?;
    Ok(EXIT_OK)
}

fn run_branches(args: &BranchArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(&args.common)?;
    let m_max = args.m_max.unwrap_or(DEFAULT_M_MAX);
    let deltas = cfg.deltas_or(&experiments::BRANCH_DELTAS);
    let records = sweep_branch_count_with(m_max, args.branch_length, &deltas, &cfg.solver)?;
    emit(&cfg, &records_csv(&records), out)?;
    if args.branch_length == 1 {
        for &d in &deltas {
            match find_conductance_peak(d, m_max, &cfg.solver) {
                Ok(m) => writeln!(err, "peak at Δ = {d}: m* = {m}")?,
                Err(Error::NoPeak) => writeln!(err, "peak at Δ = {d}: none (monotone over 1..={m_max})")?,
                Err(e) => return Err(e.into()),
            }
        }
    }
    let spec = ChartSpec {
        title: "Conductance vs parallel branches".into(),
        x: Axis::linear("branches m"),
        y: Axis::linear("conductance G (1/R)"),
        reference_y: None,
    };
    chart(&cfg, &branch_series(&records), spec, err)?;
    Ok(EXIT_OK)
}

fn run_dephasing(common: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(common)?;
    let c = cfg.circuit_required()?;
    let deltas = cfg.deltas_or(&experiments::default_log_deltas());
    let records = sweep_dephasing(&c, &deltas, &cfg.solver)?;
    note(err, &format!("{} points solved", records.len()));
    emit(&cfg, &records_csv(&records), out)?;
    let log_x = deltas.iter().all(|&d| d > 0.0);
    let spec = ChartSpec {
        title: format!("Resistance vs dephasing: {}", c.display_label()),
        x: if log_x { Axis::log("dephasing strength Δ") } else { Axis::linear("dephasing strength Δ") },
        y: Axis::linear("resistance R (voltage / current)"),
        reference_y: None,
    };
    chart(&cfg, &dephasing_series(&records), spec, err)?;
    Ok(EXIT_OK)
}

fn run_rectify(args: &RectifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(&args.common)?;
    let c = cfg.circuit_or("triangle")?;
    let deltas = cfg.deltas_or(&experiments::default_log_deltas());
    let (records, ratios) = rectification_sweep_for(&c, &deltas, &cfg.solver)?;
    emit(&cfg, &records_csv(&records), out)?;
    if let Some(p) = &cfg.output {
        let path = p.with_extension("ratio.csv");
        std::fs::write(&path, ratios_csv(&ratios)).with_context(|| format!("writing {}", path.display()))?;
    }
    let bracket = parse_bracket(&args.bracket)?;
    match find_ratio_crossing(&c, bracket, CROSSING_TOL, &cfg.solver) {
        Ok(x) => writeln!(err, "equal resistance at Δ* = {x:.6}")?,
        Err(Error::NoSignChange { lo, hi }) => writeln!(err, "no equal-resistance point in [{lo}, {hi}]")?,
        Err(e) => return Err(e.into()),
    }
    let log_x = deltas.iter().all(|&d| d > 0.0);
    let spec = ChartSpec {
        title: format!("Resistance ratio: {}", c.display_label()),
        x: if log_x { Axis::log("dephasing strength Δ") } else { Axis::linear("dephasing strength Δ") },
        y: Axis::linear("R_forward / R_reverse"),
        reference_y: Some(1.0),
    };
    chart(&cfg, &ratio_series(&c.display_label(), &ratios), spec, err)?;
    Ok(EXIT_OK)
}

fn run_trace(args: &TraceArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(&args.common)?;
    let c = cfg.circuit_required()?;
    let trace = entropy_trace(&c, cfg.delta, args.t_end, args.samples)?;
    let traces = [trace];
    emit(&cfg, &traces_csv(&traces), out)?;
    let spec = ChartSpec {
        title: "Relative entropy of coherence over time".into(),
        x: Axis::linear("time t (1/τ)"),
        y: Axis::linear("S(ρ || dephased ρ) (nats)"),
        reference_y: None,
    };
    chart(&cfg, &entropy_series(&traces), spec, err)?;
    Ok(EXIT_OK)
}

fn run_calibrate(args: &CalibrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = merge_config(&args.common)?;
    let (hits, description): (Vec<Candidate>, &str) = match args.target {
        TargetSet::Pentagon => (
            calibrate_topology(&singletons(pentagon_family()?), &pentagon_targets(), &cfg.solver)?,
            "divergence of the Δ = 0 steady-state search",
        ),
        TargetSet::Additivity => {
            let bases = placements_of(&connected_graphs(args.max_sites.unwrap_or(MAX_SITES), args.max_edges))?;
            note(err, &format!("{} base circuits", bases.len()));
            (
                calibrate_extensions(&bases, &additivity_targets(), &cfg.solver)?,
                "R = 1.75 ± 0.01 at Δ = 0 for both members, R_B > R_A at Δ = 5, S_B < S_A at Δ = 0",
            )
        }
        TargetSet::Triangle => {
            let graphs: Vec<_> = triangular_lattice_graphs(args.max_sites.unwrap_or(TRIANGLE_MAX_SITES))
                .into_iter()
                .filter(|g| g.edge_count() <= args.max_edges)
                .collect();
            let family = singletons(placements_of(&graphs)?);
            note(err, &format!("{} candidate funnels", family.len()));
            (
                calibrate_topology(&family, &triangle_targets(), &cfg.solver)?,
                "single forward/reverse ratio crossing in (0.01, 1) at Δ* = 0.2259 ± 0.005, ratio(Δ = 100) within 1% of 1",
            )
        }
    };
    writeln!(err, "{} matching candidates", hits.len())?;
    for h in &hits {
        let parts: Vec<String> = h
            .iter()
            .map(|c| format!("{:?} source {} sink {}", c.graph().edges(), c.source(), c.sink()))
            .collect();
        writeln!(err, "  {}", parts.join("  +  "))?;
    }
    let Some(best) = smallest(&hits) else {
        return Ok(EXIT_FAILURE);
    };
    let mut text = String::new();
    for c in best {
        let comments = vec![
            format!("{PROVENANCE_MARKER} {description}"),
            format!("choice: smallest of {} matches (fewest sites, then fewest edges)", hits.len()),
        ];
        text.push_str(&write_circuit(c, &comments));
        text.push('\n');
    }
    emit(&cfg, &text, out)?;
    Ok(EXIT_OK)
}

/// Runs a parsed command.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Ness(a) => run_ness(a, out),
        Command::Evolve(a) => run_evolve(a, out, err),
        Command::SweepBranches(a) => run_branches(a, out, err),
        Command::SweepDephasing(a) => run_dephasing(a, out, err),
        Command::Rectify(a) => run_rectify(a, out, err),
        Command::EntropyTrace(a) => run_trace(a, out, err),
        Command::Calibrate(a) => run_calibrate(a, out, err),
    }
}

/// Parses `argv` (including the program name) and runs it, mapping every
/// failure onto the exit-code contract.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}
