//! Scripted parameter sweeps: branch counts, dephasing strength, current
//! direction and coherence over time.
//!
//! Sweep points are independent and run on the rayon pool; records come
//! back sorted by (circuit label, Δ, direction, branches) regardless of
//! completion order.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::circuit::{
    make_additivity_pair, make_parallel_circuit, make_pentagon, make_triangle_funnel, reverse_circuit, Circuit,
    Direction, DEFAULT_BRANCH_LENGTH, PENTAGON_SINK,
};
use crate::lindblad::{assemble_generator, DensityMatrix, Form};
use crate::observables::{relative_entropy_coherence, resistance, Resistance};
use crate::solver::{evolve, solve_ness_direct, EvolveControls, Sampling, SolveStatus, SolverConfig};
use crate::{Error, Result};

/// Default Δ values for branch sweeps.
pub const BRANCH_DELTAS: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 20.0];

/// Default largest branch count.
pub const DEFAULT_M_MAX: usize = 10;

/// Bisection width for ratio crossings.
pub const CROSSING_TOL: f64 = 1e-6;

/// Grid points used to locate sign changes before bisection.
pub const CROSSING_SCAN_POINTS: usize = 40;

/// `|ratio - 1|` below this counts as equal resistance (no side of 1).
pub const RATIO_DEADBAND: f64 = 1e-9;

/// Relative conductance difference treated as a tie in peak finding.
pub const PEAK_TIE_RTOL: f64 = 1e-12;

/// `count` points spaced logarithmically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "log grid needs 0 < lo < hi and at least two points, got {lo}:{hi}:{count}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| match i {
            0 => lo,
            _ if i == count - 1 => hi,
            _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect())
}

/// `count` evenly spaced points over `[lo, hi]`.
pub fn lin_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(hi > lo) || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "linear grid needs lo < hi and at least two points, got {lo}:{hi}:{count}"
        )));
    }
    Ok((0..count)
        .map(|i| if i == count - 1 { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
        .collect())
}

/// Default grid for pentagon and rectification sweeps: 40 log points on
/// `[1e-3, 50]`.
pub fn default_log_deltas() -> Vec<f64> {
    log_grid(1e-3, 50.0, 40).expect("valid constant grid")
}

/// One solved point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub circuit_label: String,
    pub delta: f64,
    pub direction: Direction,
    /// Branch count, for parallel-family sweeps.
    pub branches: Option<usize>,
    pub resistance: Resistance,
    pub conductance: f64,
    /// Relative-entropy coherence of the NESS; `None` without a NESS.
    pub coherence: Option<f64>,
    pub status: SolveStatus,
}

impl SweepRecord {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.circuit_label
            .cmp(&other.circuit_label)
            .then(self.delta.total_cmp(&other.delta))
            .then(self.direction.cmp(&other.direction))
            .then(self.branches.cmp(&other.branches))
    }
}

pub fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(SweepRecord::sort_key_cmp);
}

/// Solves one point with the direct solver. `label` overrides the
/// circuit's own label in the record.
pub fn solve_point(
    c: &Circuit,
    delta: f64,
    direction: Direction,
    branches: Option<usize>,
    label: Option<&str>,
    config: &SolverConfig,
) -> Result<SweepRecord> {
    let g = assemble_generator(c, delta, Form::Reduced)?;
    let res = solve_ness_direct(&g, config)?;
    let r = resistance(&res, c)?;
    let coherence = match &res.rho_ness {
        Some(rho) => Some(relative_entropy_coherence(rho)?),
        None => None,
    };
    Ok(SweepRecord {
        circuit_label: label.map_or_else(|| c.display_label(), String::from),
        delta,
        direction,
        branches,
        resistance: r,
        conductance: r.conductance(),
        coherence,
        status: res.status,
    })
}

fn run_points(points: Vec<(Circuit, f64, Direction, Option<usize>, Option<String>)>, config: &SolverConfig) -> Result<Vec<SweepRecord>> {
    let mut records: Vec<SweepRecord> = points
        .par_iter()
        .map(|(c, d, dir, m, label)| solve_point(c, *d, *dir, *m, label.as_deref(), config))
        .collect::<Result<_>>()?;
    sort_records(&mut records);
    Ok(records)
}

/// Label shared by the records of a branch sweep; `branches` tells the
/// members apart.
pub fn parallel_family_label(branch_length: usize) -> String {
    format!("parallel-l{branch_length}")
}

/// G for m = 1..m_max parallel branches at every Δ.
pub fn sweep_branch_count(m_max: usize, deltas: &[f64], config: &SolverConfig) -> Result<Vec<SweepRecord>> {
    sweep_branch_count_with(m_max, DEFAULT_BRANCH_LENGTH, deltas, config)
}

pub fn sweep_branch_count_with(
    m_max: usize,
    branch_length: usize,
    deltas: &[f64],
    config: &SolverConfig,
) -> Result<Vec<SweepRecord>> {
    if m_max < 2 {
        return Err(Error::InvalidArgument(format!("m_max must be at least 2, got {m_max}")));
    }
    let label = parallel_family_label(branch_length);
    let mut points = Vec::new();
    for m in 1..=m_max {
        let c = make_parallel_circuit(m, branch_length)?;
        for &d in deltas {
            points.push((c.clone(), d, Direction::Forward, Some(m), Some(label.clone())));
        }
    }
    run_points(points, config)
}

/// R over Δ for a fixed circuit.
pub fn sweep_dephasing(c: &Circuit, deltas: &[f64], config: &SolverConfig) -> Result<Vec<SweepRecord>> {
    let points = deltas.iter().map(|&d| (c.clone(), d, Direction::Forward, None, None)).collect();
    run_points(points, config)
}

/// Index (into `g`, 0-based) of the conductance maximum; ties go to the
/// earlier entry. `None` when the maximum sits at either end.
pub fn interior_peak(g: &[f64]) -> Option<usize> {
    let mut best = 0;
    for (i, &v) in g.iter().enumerate().skip(1) {
        if v > g[best] * (1.0 + PEAK_TIE_RTOL) {
            best = i;
        }
    }
    (best > 0 && best + 1 < g.len()).then_some(best)
}

/// Branch count maximizing G at `delta`, over m = 1..m_max.
pub fn find_conductance_peak(delta: f64, m_max: usize, config: &SolverConfig) -> Result<usize> {
    let records = sweep_branch_count(m_max, &[delta], config)?;
    let g: Vec<f64> = records.iter().map(|r| r.conductance).collect();
    interior_peak(&g).map(|i| i + 1).ok_or(Error::NoPeak)
}

/// `round(2.785 + 1.909 Δ)`, halves rounded away from zero.
pub fn predicted_peak(delta: f64) -> usize {
    (2.785 + 1.909 * delta).round() as usize
}

/// Coherence over time from an empty device.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTrace {
    pub circuit_label: String,
    pub delta: f64,
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
}

/// `S(ρ(t) || dephase(ρ(t)))` at `samples` evenly spaced times in
/// `[0, t_end]`, starting from ρ₀ = 0.
pub fn entropy_trace(c: &Circuit, delta: f64, t_end: f64, samples: usize) -> Result<EntropyTrace> {
    let g = assemble_generator(c, delta, Form::Reduced)?;
    let controls = EvolveControls {
        sampling: Sampling::Uniform(samples),
        ..EvolveControls::default()
    };
    let traj = evolve(&g, &DensityMatrix::zeros(c.n()), t_end, &controls)?;
    let entropy = traj
        .states
        .iter()
        .map(relative_entropy_coherence)
        .collect::<Result<_>>()?;
    Ok(EntropyTrace {
        circuit_label: c.display_label(),
        delta,
        times: traj.times,
        entropy,
    })
}

/// Default window for coherence traces: long enough for the additivity
/// pair to settle at Δ = 0.
pub const ENTROPY_T_END: f64 = 60.0;
pub const ENTROPY_SAMPLES: usize = 601;

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    pub records: Vec<SweepRecord>,
    /// Traces at Δ = 0 for A then B.
    pub traces: Vec<EntropyTrace>,
}

/// R over Δ for both members of the additivity pair, plus their Δ = 0
/// coherence traces.
pub fn additivity_experiment(deltas: &[f64], config: &SolverConfig) -> Result<AdditivityReport> {
    let (a, b) = make_additivity_pair()?;
    let mut points = Vec::new();
    for c in [&a, &b] {
        for &d in deltas {
            points.push((c.clone(), d, Direction::Forward, None, None));
        }
    }
    let records = run_points(points, config)?;
    let traces = [&a, &b]
        .par_iter()
        .map(|c| entropy_trace(c, 0.0, ENTROPY_T_END, ENTROPY_SAMPLES))
        .collect::<Result<_>>()?;
    Ok(AdditivityReport { records, traces })
}

/// R over Δ for the canonical pentagon.
pub fn pentagon_sweep(deltas: &[f64], config: &SolverConfig) -> Result<Vec<SweepRecord>> {
    let p = make_pentagon(PENTAGON_SINK)?.with_label("pentagon");
    sweep_dephasing(&p, deltas, config)
}

/// Forward and reverse resistance at one Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub delta: f64,
    pub forward: Resistance,
    pub reverse: Resistance,
    /// `R_forward / R_reverse`; NaN when both diverge.
    pub ratio: f64,
}

fn ratio_of(f: Resistance, r: Resistance) -> f64 {
    f.value() / r.value()
}

/// Both current directions through `c` (as forward) at each Δ.
pub fn rectification_sweep_for(
    c: &Circuit,
    deltas: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<SweepRecord>, Vec<RatioPoint>)> {
    let label = c.display_label();
    let rev = reverse_circuit(c);
    let mut points = Vec::new();
    for &d in deltas {
        points.push((c.clone(), d, Direction::Forward, None, Some(label.clone())));
        points.push((rev.clone(), d, Direction::Reverse, None, Some(label.clone())));
    }
    let records = run_points(points, config)?;
    let ratios = records
        .chunks(2)
        .map(|pair| {
            let (f, r) = (&pair[0], &pair[1]);
            debug_assert!(f.direction == Direction::Forward && r.direction == Direction::Reverse);
            RatioPoint {
                delta: f.delta,
                forward: f.resistance,
                reverse: r.resistance,
                ratio: ratio_of(f.resistance, r.resistance),
            }
        })
        .collect();
    Ok((records, ratios))
}

/// Rectification sweep of the calibrated triangular funnel.
pub fn rectification_sweep(deltas: &[f64], config: &SolverConfig) -> Result<(Vec<SweepRecord>, Vec<RatioPoint>)> {
    rectification_sweep_for(&make_triangle_funnel(Direction::Forward)?, deltas, config)
}

/// `R(c) / R(reverse c)` at one Δ.
pub fn direction_ratio(c: &Circuit, delta: f64, config: &SolverConfig) -> Result<f64> {
    let r = |c: &Circuit| -> Result<Resistance> {
        let g = assemble_generator(c, delta, Form::Reduced)?;
        resistance(&solve_ness_direct(&g, config)?, c)
    };
    Ok(ratio_of(r(c)?, r(&reverse_circuit(c))?))
}

fn side(x: f64) -> i8 {
    if x.is_nan() {
        0
    } else if x > RATIO_DEADBAND {
        1
    } else if x < -RATIO_DEADBAND {
        -1
    } else {
        0
    }
}

/// Bisects a sign change of `f` on `[lo, hi]` down to width `tol` and
/// returns the midpoint of the final bracket.
pub fn bisect_sign_change(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(hi > lo) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let sa = side(f(a)?);
    let sb = side(f(b)?);
    if sa == 0 || sb == 0 || sa == sb {
        return Err(Error::NoSignChange { lo, hi });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        match side(f(m)?) {
            0 => return Ok(m),
            s if s == sa => a = m,
            _ => b = m,
        }
    }
    Ok(0.5 * (a + b))
}

/// Δ in `bracket` where `R(c) = R(reverse c)`.
pub fn find_ratio_crossing(c: &Circuit, bracket: (f64, f64), tol: f64, config: &SolverConfig) -> Result<f64> {
    bisect_sign_change(|d| Ok(direction_ratio(c, d, config)? - 1.0), bracket.0, bracket.1, tol)
}

/// Result of scanning `ratio - 1` for sign changes.
#[derive(Debug, Clone, PartialEq)]
pub enum RatioScan {
    /// Refined crossing positions, increasing.
    Crossings(Vec<f64>),
    /// Some grid point had no finite ratio.
    NotFinite,
}

/// Locates every sign change of `ratio - 1` on a
/// [`CROSSING_SCAN_POINTS`]-point grid over `[lo, hi]`, each refined by
/// bisection to [`CROSSING_TOL`].
pub fn scan_ratio_crossings(c: &Circuit, lo: f64, hi: f64, config: &SolverConfig) -> Result<RatioScan> {
    let grid = lin_grid(lo, hi, CROSSING_SCAN_POINTS)?;
    let mut vals = Vec::with_capacity(grid.len());
    for &d in &grid {
        let r = direction_ratio(c, d, config)?;
        if !r.is_finite() {
            return Ok(RatioScan::NotFinite);
        }
        vals.push(r - 1.0);
    }
    let mut crossings = Vec::new();
    for i in 0..grid.len() - 1 {
        let (s0, s1) = (side(vals[i]), side(vals[i + 1]));
        if s0 != 0 && s1 != 0 && s0 != s1 {
            crossings.push(find_ratio_crossing(c, (grid[i], grid[i + 1]), CROSSING_TOL, config)?);
        }
    }
    Ok(RatioScan::Crossings(crossings))
}
