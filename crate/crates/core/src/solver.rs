//! Non-equilibrium steady states: direct affine solve, time evolution, and
//! divergence detection for circuits that never reach a steady state.

use nalgebra::linalg::FullPivLU;

use crate::lindblad::{DensityMatrix, Form, Generator};
use crate::ode::{Dopri5, StepControls};
use crate::{CMatrix, CVector, Error, Result};

/// Solver thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Max-norm of dρ/dt below which a state counts as stationary.
    pub stationarity_tol: f64,
    /// Least-squares residual above which the affine system is declared
    /// inconsistent (no steady state).
    pub divergence_residual: f64,
    /// Singular values below `rank_rtol * σ_max` are treated as zero.
    pub rank_rtol: f64,
    /// Evolution cutoff in model time.
    pub t_max: f64,
    /// Window length for divergence detection.
    pub window: f64,
    /// Minimum particle-number growth rate for a divergence verdict.
    pub slope_min: f64,
    pub step: StepControls,
    /// Check Hermiticity and positivity at every accepted step.
    pub check_physicality: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            stationarity_tol: 1e-9,
            divergence_residual: 1e-8,
            rank_rtol: 1e-10,
            t_max: 1e4,
            window: 200.0,
            slope_min: 0.01,
            step: StepControls::default(),
            check_physicality: true,
        }
    }
}

/// Relative slack allowed when testing that dρ/dt is non-decreasing.
pub const NON_DECREASING_SLACK: f64 = 1e-3;

/// Hermiticity deviation allowed along trajectories.
pub const TRAJECTORY_HERMITIAN_TOL: f64 = 1e-10;

/// Most negative eigenvalue allowed along trajectories.
pub const TRAJECTORY_PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolveStatus {
    Converged,
    Diverged,
    MaxTimeExceeded,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Diverged => "diverged",
            SolveStatus::MaxTimeExceeded => "max-time-exceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Evolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub status: SolveStatus,
    /// Present iff converged. Always the `n`-site system block.
    pub rho_ness: Option<DensityMatrix>,
    /// Max-norm of dρ/dt at the returned state (direct: of `M x + c`).
    pub residual: f64,
    pub method: Method,
    /// Model time integrated (evolution only).
    pub elapsed_model_time: Option<f64>,
    /// Dimension of the numerical kernel of `M` (direct only). Non-zero
    /// means the steady state is not unique; the minimum-norm one is
    /// returned, which is the state reached from an empty device.
    pub kernel_dim: Option<usize>,
}

impl SteadyStateResult {
    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Sampled solution of the master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Total particle number `Tr ρ` per sample.
    pub trace_series: Vec<f64>,
    /// Max-norm of dρ/dt per sample.
    pub derivative_norms: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            trace_series: Vec::with_capacity(n),
            derivative_norms: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Which points of the solution `evolve` keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Every accepted step, plus `t = 0`.
    EveryStep,
    /// `count` evenly spaced times from 0 to `t_end` (dense output).
    Uniform(usize),
    /// Explicit increasing times in `[0, t_end]`.
    At(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveControls {
    pub step: StepControls,
    pub sampling: Sampling,
    pub check_physicality: bool,
}

impl Default for EvolveControls {
    fn default() -> Self {
        EvolveControls {
            step: StepControls::default(),
            sampling: Sampling::EveryStep,
            check_physicality: true,
        }
    }
}

fn max_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

fn check_physical(t: f64, m: &CMatrix) -> Result<()> {
    let rho = DensityMatrix::from_matrix(m.clone());
    let herm = rho.hermiticity_deviation();
    let min_eig = rho.min_eigenvalue();
    if herm > TRAJECTORY_HERMITIAN_TOL || min_eig < -TRAJECTORY_PSD_TOL {
        return Err(Error::UnphysicalState {
            t,
            hermiticity: herm,
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

/// Integrates `dρ/dt = g(ρ)` from `rho0` at `t = 0` to `t_end`.
pub fn evolve(
    g: &Generator,
    rho0: &DensityMatrix,
    t_end: f64,
    controls: &EvolveControls,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
    }
    let start = g.prepare(rho0)?;
    let sample_times: Option<Vec<f64>> = match &controls.sampling {
        Sampling::EveryStep => None,
        Sampling::Uniform(count) => {
            if *count < 2 {
                return Err(Error::InvalidArgument("need at least two samples".into()));
            }
            Some(
                (0..*count)
                    .map(|i| t_end * i as f64 / (*count - 1) as f64)
                    .collect(),
            )
        }
        Sampling::At(ts) => {
            if ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|&t| t < 0.0 || t > t_end) {
                return Err(Error::InvalidArgument(
                    "sample times must be increasing and within [0, t_end]".into(),
                ));
            }
            Some(ts.clone())
        }
    };

    let mut ode = Dopri5::new(|m: &CMatrix| g.derivative(m), 0.0, start.into_inner(), controls.step);
    let mut traj = Trajectory::with_capacity(sample_times.as_ref().map_or(1024, Vec::len));
    let push = |traj: &mut Trajectory, t: f64, m: CMatrix, d: f64| {
        traj.times.push(t);
        traj.trace_series.push(trace_re(&m));
        traj.derivative_norms.push(d);
        traj.states.push(DensityMatrix::from_matrix(m));
    };

    if controls.check_physicality {
        check_physical(0.0, ode.y())?;
    }
    let mut next_sample = 0;
    match &sample_times {
        None => push(&mut traj, 0.0, ode.y().clone(), max_norm(ode.derivative())),
        Some(ts) => {
            while next_sample < ts.len() && ts[next_sample] <= 0.0 {
                push(&mut traj, 0.0, ode.y().clone(), max_norm(ode.derivative()));
                next_sample += 1;
            }
        }
    }

    while ode.t() < t_end {
        ode.step(t_end)?;
        let t = ode.t();
        if controls.check_physicality {
            check_physical(t, ode.y())?;
        }
        match &sample_times {
            None => push(&mut traj, t, ode.y().clone(), max_norm(ode.derivative())),
            Some(ts) => {
                let dense = ode.dense().expect("accepted step has an interpolant");
                while next_sample < ts.len() && ts[next_sample] <= t {
                    let ts_i = ts[next_sample];
                    let m = if ts_i == t { ode.y().clone() } else { dense.eval(ts_i) };
                    let d = max_norm(&g.derivative(&m));
                    push(&mut traj, ts_i, m, d);
                    next_sample += 1;
                }
            }
        }
    }
    Ok(traj)
}

/// Solves `M vec(ρ) + c = 0` for a reduced-form generator.
pub fn solve_ness_direct(g: &Generator, config: &SolverConfig) -> Result<SteadyStateResult> {
    let (m, c) = g.vectorize()?;
    let n = g.dim();
    let rhs = -&c;

    let (x, kernel_dim) = match lu_solve(&m, &rhs) {
        Some(x) => (x, 0),
        None => least_squares(&m, &rhs, config.rank_rtol),
    };
    let residual = (&m * &x + &c).iter().map(|z| z.norm()).fold(0.0, f64::max);

    if residual > config.divergence_residual {
        return Ok(SteadyStateResult {
            status: SolveStatus::Diverged,
            rho_ness: None,
            residual,
            method: Method::Direct,
            elapsed_model_time: None,
            kernel_dim: Some(kernel_dim),
        });
    }
    if residual > config.stationarity_tol {
        return Err(Error::IllConditioned(residual));
    }
    let rho = DensityMatrix::from_vec(&x, n);
    let scale = max_norm(rho.matrix()).max(1.0);
    if rho.hermiticity_deviation() > TRAJECTORY_HERMITIAN_TOL * scale
        || rho.min_eigenvalue() < -TRAJECTORY_PSD_TOL * scale
    {
        return Err(Error::RankDeficient { residual });
    }
    Ok(SteadyStateResult {
        status: SolveStatus::Converged,
        rho_ness: Some(rho),
        residual,
        method: Method::Direct,
        elapsed_model_time: None,
        kernel_dim: Some(kernel_dim),
    })
}

/// LU with full pivoting; `None` when the pivots reveal a (near) singular
/// matrix.
fn lu_solve(m: &CMatrix, rhs: &CVector) -> Option<CVector> {
    let lu = FullPivLU::new(m.clone());
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if hi == 0.0 || lo / hi < 1e-10 {
        return None;
    }
    lu.solve(rhs)
}

/// Minimum-norm least-squares solution and numerical kernel dimension.
fn least_squares(m: &CMatrix, rhs: &CVector, rank_rtol: f64) -> (CVector, usize) {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = rank_rtol * smax;
    let kernel = svd.singular_values.iter().filter(|&&s| s <= eps).count();
    let x = svd
        .solve(rhs, eps)
        .expect("U and V were computed");
    (x, kernel)
}

/// Integrates from the empty device until stationary, divergent, or `t_max`.
pub fn solve_ness_by_evolution(g: &Generator, config: &SolverConfig) -> Result<SteadyStateResult> {
    solve_ness_by_evolution_from(g, &g.empty_state(), config)
}

/// As [`solve_ness_by_evolution`] from an arbitrary initial state.
pub fn solve_ness_by_evolution_from(
    g: &Generator,
    rho0: &DensityMatrix,
    config: &SolverConfig,
) -> Result<SteadyStateResult> {
    if !(config.stationarity_tol > 0.0) {
        return Err(Error::InvalidArgument("stationarity tolerance must be positive".into()));
    }
    let start = g.prepare(rho0)?;
    let mut step = config.step;
    // Tighter tolerances are the fallback when the step size collapses.
    for attempt in 0..3 {
        match evolve_to_stationarity(g, &start, config, step) {
            Err(Error::StepSizeUnderflow { .. }) if attempt < 2 => {
                step.rtol /= 10.0;
                step.atol /= 10.0;
            }
            other => return other,
        }
    }
    unreachable!("loop returns on the last attempt")
}

fn evolve_to_stationarity(
    g: &Generator,
    start: &DensityMatrix,
    config: &SolverConfig,
    mut step: StepControls,
) -> Result<SteadyStateResult> {
    let mut refinements = 0;
    let rhs = |m: &CMatrix| g.derivative(m);
    let mut ode = Dopri5::new(rhs, 0.0, start.matrix().clone(), step);
    let mut times = vec![0.0];
    let mut traces = vec![trace_re(ode.y())];
    let mut dnorms = vec![max_norm(ode.derivative())];
    let mut next_check = 2.0 * config.window;

    let finish = |status, rho: Option<DensityMatrix>, residual, t| SteadyStateResult {
        status,
        rho_ness: rho,
        residual,
        method: Method::Evolution,
        elapsed_model_time: Some(t),
        kernel_dim: None,
    };

    if dnorms[0] <= config.stationarity_tol {
        let rho = g.system_block(&DensityMatrix::from_matrix(ode.y().clone()));
        return Ok(finish(SolveStatus::Converged, Some(rho), dnorms[0], 0.0));
    }

    while ode.t() < config.t_max {
        ode.step(config.t_max)?;
        let t = ode.t();
        if config.check_physicality {
            check_physical(t, ode.y())?;
        }
        let d = max_norm(ode.derivative());
        times.push(t);
        traces.push(trace_re(ode.y()));
        dnorms.push(d);

        if d <= config.stationarity_tol {
            let rho = g.system_block(&DensityMatrix::from_matrix(ode.y().clone()));
            return Ok(finish(SolveStatus::Converged, Some(rho), d, t));
        }
        if t >= next_check {
            next_check = t + config.window;
            if divergence_verdict(&times, &traces, &dnorms, config.window, config.slope_min)? {
                return Ok(finish(SolveStatus::Diverged, None, d, t));
            }
            // A residual stalled just above tolerance is the step-size
            // controller riding the stability boundary: tighten and continue.
            if refinements < MAX_REFINEMENTS && residual_stalled(&times, &dnorms, config) {
                refinements += 1;
                step.rtol /= REFINE_FACTOR;
                step.atol /= REFINE_FACTOR;
                let y = ode.y().clone();
                ode = Dopri5::new(rhs, t, y, step);
            }
        }
    }
    let d = *dnorms.last().expect("non-empty");
    Ok(finish(SolveStatus::MaxTimeExceeded, None, d, ode.t()))
}

/// Tolerance tightenings allowed when the residual stalls near the floor.
pub const MAX_REFINEMENTS: usize = 3;

/// Factor by which rtol and atol shrink on each tightening.
pub const REFINE_FACTOR: f64 = 100.0;

/// Residual within this multiple of the stationarity tolerance counts as
/// near the floor for stall detection.
const STALL_BAND: f64 = 1e3;

/// True iff the peak residual of the last window is within the stall band
/// and has not fallen by half against the window before it.
fn residual_stalled(times: &[f64], dnorms: &[f64], config: &SolverConfig) -> bool {
    let t_end = *times.last().expect("non-empty");
    let peak = |lo: f64, hi: f64| {
        times
            .iter()
            .zip(dnorms)
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(_, &d)| d)
            .fold(0.0, f64::max)
    };
    let d0 = peak(t_end - 2.0 * config.window, t_end - config.window);
    let d1 = peak(t_end - config.window, t_end);
    d1 <= STALL_BAND * config.stationarity_tol && d1 > 0.5 * d0
}

/// True iff particle number keeps growing: the least-squares slope of
/// `Tr ρ` exceeds `slope_min` over each of the two trailing windows, and the
/// peak max-norm of dρ/dt per window does not decay from the first to the second.
pub fn detect_divergence(traj: &Trajectory, window: f64, slope_min: f64) -> Result<bool> {
    divergence_verdict(
        &traj.times,
        &traj.trace_series,
        &traj.derivative_norms,
        window,
        slope_min,
    )
}

fn divergence_verdict(
    times: &[f64],
    traces: &[f64],
    dnorms: &[f64],
    window: f64,
    slope_min: f64,
) -> Result<bool> {
    if !(window > 0.0) {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    let span = match (times.first(), times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if span < 2.0 * window {
        return Err(Error::TrajectoryTooShort {
            span,
            needed: 2.0 * window,
        });
    }
    let t_end = *times.last().expect("span > 0");
    let bounds = [t_end - 2.0 * window, t_end - window, t_end];

    for w in bounds.windows(2) {
        let slope = ls_slope(times, traces, w[0], w[1]);
        if !(slope > slope_min) {
            return Ok(false);
        }
    }
    // Coherent oscillations survive at Δ = 0, so compare the peak
    // derivative norm of each window rather than point samples.
    let peak = |lo: f64, hi: f64| {
        times
            .iter()
            .zip(dnorms)
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(_, &d)| d)
            .fold(0.0, f64::max)
    };
    let (d0, d1) = (peak(bounds[0], bounds[1]), peak(bounds[1], bounds[2]));
    Ok(d0 > 0.0 && d1 >= (1.0 - NON_DECREASING_SLACK) * d0)
}

fn ls_slope(times: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Convenience: the steady state of `form`-agnostic callers. Reduced
/// generators use the direct solver, explicit-bath ones evolve.
pub fn solve_ness(g: &Generator, config: &SolverConfig) -> Result<SteadyStateResult> {
    match g.form() {
        Form::Reduced => solve_ness_direct(g, config),
        Form::ExplicitBath => solve_ness_by_evolution(g, config),
    }
}
