//! Transport readings and coherence measures.
//!
//! The injected current is fixed by the source bath, so resistance is the
//! steady-state voltage (source minus sink population) divided by that
//! current.

use std::fmt;

use nalgebra::SymmetricEigen;

use crate::circuit::Circuit;
use crate::lindblad::{dephase, DensityMatrix, RateSet};
use crate::solver::{SolveStatus, SteadyStateResult};
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalues below this are exact zeros in entropy sums.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Most negative eigenvalue accepted by the entropy routines.
pub const PSD_TOL: f64 = 1e-8;

/// Most negative raw relative entropy still clipped to 0.
pub const ENTROPY_CLIP: f64 = -1e-9;

/// Injected current; the unit of current.
pub const CURRENT: f64 = RateSet::GAMMA_BATH * RateSet::RHO_L;

/// Resistance, with divergence as a tagged value rather than a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resistance {
    Finite(f64),
    Infinite,
}

impl Resistance {
    pub fn value(self) -> f64 {
        match self {
            Resistance::Finite(r) => r,
            Resistance::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Resistance::Finite(_))
    }

    pub fn conductance(self) -> f64 {
        match self {
            Resistance::Finite(r) => 1.0 / r,
            Resistance::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Resistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resistance::Finite(r) => write!(f, "{r:e}"),
            Resistance::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportReading {
    pub current: f64,
    /// `None` for diverged circuits.
    pub voltage: Option<f64>,
    pub resistance: Resistance,
    pub conductance: f64,
    pub converged: bool,
}

/// Instantaneous ejection rate `γ ρ_kk`.
pub fn current_out(rho: &DensityMatrix, c: &Circuit) -> f64 {
    RateSet::GAMMA_BATH * rho.population(c.sink())
}

/// `ρ_ss - ρ_kk`.
pub fn voltage(rho: &DensityMatrix, c: &Circuit) -> f64 {
    rho.population(c.source()) - rho.population(c.sink())
}

pub fn resistance(res: &SteadyStateResult, c: &Circuit) -> Result<Resistance> {
    match (res.status, &res.rho_ness) {
        (SolveStatus::Converged, Some(rho)) => Ok(Resistance::Finite(voltage(rho, c) / CURRENT)),
        (SolveStatus::Diverged, _) => Ok(Resistance::Infinite),
        _ => Err(Error::Indeterminate),
    }
}

pub fn conductance(res: &SteadyStateResult, c: &Circuit) -> Result<f64> {
    resistance(res, c).map(Resistance::conductance)
}

pub fn transport_reading(res: &SteadyStateResult, c: &Circuit) -> Result<TransportReading> {
    let r = resistance(res, c)?;
    Ok(TransportReading {
        current: CURRENT,
        voltage: res.rho_ness.as_ref().map(|rho| voltage(rho, c)),
        resistance: r,
        conductance: r.conductance(),
        converged: res.is_converged(),
    })
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `S(ρ||σ) = Tr ρ ln ρ - Tr ρ ln σ`, via eigendecompositions of both.
/// Infinite when ρ has weight outside the support of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let rho_eig = SymmetricEigen::new(hermitian_part(rho.matrix()));
    let mut rho_log_rho = 0.0;
    for &lambda in rho_eig.eigenvalues.iter() {
        if lambda < -PSD_TOL {
            return Err(Error::NegativeEigenvalue(lambda));
        }
        if lambda > EIGENVALUE_FLOOR {
            rho_log_rho += lambda * lambda.ln();
        }
    }

    let sigma_eig = SymmetricEigen::new(hermitian_part(sigma.matrix()));
    let mut rho_log_sigma = 0.0;
    for (j, &mu) in sigma_eig.eigenvalues.iter().enumerate() {
        if mu < -PSD_TOL {
            return Err(Error::NegativeEigenvalue(mu));
        }
        let v = sigma_eig.eigenvectors.column(j);
        // <v_j| ρ |v_j>
        let weight = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if mu > EIGENVALUE_FLOOR {
            rho_log_sigma += weight * mu.ln();
        } else if weight > EIGENVALUE_FLOOR {
            return Ok(f64::INFINITY);
        }
    }
    // Klein's inequality makes the exact value non-negative; small negative
    // values are rounding and clip to 0.
    let s = rho_log_rho - rho_log_sigma;
    if s < ENTROPY_CLIP {
        return Err(Error::NegativeEntropy(s));
    }
    Ok(s.max(0.0))
}

/// Relative entropy between ρ and its fully dephased counterpart.
pub fn relative_entropy_coherence(rho: &DensityMatrix) -> Result<f64> {
    let sigma = dephase(rho);
    if sigma == *rho {
        // Exactly diagonal: the eigenbases coincide and the value is 0.
        return match (0..rho.dim()).map(|i| rho.population(i)).find(|&p| p < -PSD_TOL) {
            Some(p) => Err(Error::NegativeEigenvalue(p)),
            None => Ok(0.0),
        };
    }
    relative_entropy(rho, &sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

pub fn physicality_report(rho: &DensityMatrix) -> PhysicalityReport {
    PhysicalityReport {
        hermiticity_deviation: rho.hermiticity_deviation(),
        min_eigenvalue: rho.min_eigenvalue(),
        trace: rho.trace(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{make_pentagon, make_wire, PENTAGON_SINK};
    use crate::lindblad::{assemble_generator, Form};
    use crate::solver::{solve_ness_by_evolution, solve_ness_direct, SolverConfig};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ness(circuit: &Circuit, delta: f64) -> SteadyStateResult {
        let g = assemble_generator(circuit, delta, Form::Reduced).unwrap();
        solve_ness_direct(&g, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn wire_readings() {
        let w2 = make_wire(2).unwrap();
        let res = ness(&w2, 0.0);
        let rho = res.rho_ness.as_ref().unwrap();
        assert!((current_out(rho, &w2) - 1.0).abs() < 1e-12);
        assert!((voltage(rho, &w2) - 0.5).abs() < 1e-12);
        let r = resistance(&res, &w2).unwrap();
        assert!((r.value() - 0.5).abs() < 1e-12);
        assert!((conductance(&res, &w2).unwrap() - 2.0).abs() < 1e-12);

        let res1 = ness(&w2, 1.0);
        assert!((voltage(res1.rho_ness.as_ref().unwrap(), &w2) - 1.5).abs() < 1e-12);

        let w1 = make_wire(1).unwrap();
        let r1 = ness(&w1, 0.0);
        assert_eq!(voltage(r1.rho_ness.as_ref().unwrap(), &w1), 0.0);
        assert_eq!(current_out(&DensityMatrix::zeros(2), &w2), 0.0);
    }

    #[test]
    fn diverged_and_indeterminate() {
        let p = make_pentagon(PENTAGON_SINK).unwrap();
        let res = ness(&p, 0.0);
        assert_eq!(resistance(&res, &p).unwrap(), Resistance::Infinite);
        assert_eq!(conductance(&res, &p).unwrap(), 0.0);
        let reading = transport_reading(&res, &p).unwrap();
        assert!(!reading.converged && reading.voltage.is_none());

        let g = assemble_generator(&make_wire(3).unwrap(), 0.0, Form::Reduced).unwrap();
        let cut = SolverConfig { t_max: 0.5, ..SolverConfig::default() };
        let unfinished = solve_ness_by_evolution(&g, &cut).unwrap();
        assert_eq!(resistance(&unfinished, &make_wire(3).unwrap()), Err(Error::Indeterminate));
    }

    #[test]
    fn resistance_times_conductance() {
        let w = make_wire(3).unwrap();
        let r = transport_reading(&ness(&w, 0.3), &w).unwrap();
        assert!((r.resistance.value() * r.conductance - 1.0).abs() < 1e-14);
    }

    #[test]
    fn entropy_examples() {
        let diag = DensityMatrix::diagonal(&[0.3, 0.7, 0.0]);
        assert_eq!(relative_entropy_coherence(&diag).unwrap(), 0.0);

        let pure = DensityMatrix::from_matrix(CMatrix::from_element(2, 2, c(0.5, 0.0)));
        let s = relative_entropy_coherence(&pure).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_negative_states() {
        let bad = DensityMatrix::diagonal(&[1.0, -0.1]);
        assert!(matches!(relative_entropy_coherence(&bad), Err(Error::NegativeEigenvalue(_))));
    }

    #[test]
    fn support_mismatch_is_infinite() {
        let rho = DensityMatrix::diagonal(&[0.5, 0.5]);
        let sigma = DensityMatrix::diagonal(&[1.0, 0.0]);
        assert_eq!(relative_entropy(&rho, &sigma).unwrap(), f64::INFINITY);
    }

    #[test]
    fn physicality_examples() {
        let rho = DensityMatrix::diagonal(&[0.25, 0.75]);
        let rep = physicality_report(&rho);
        assert!(rep.hermiticity_deviation <= 1e-15);
        assert!(rep.min_eigenvalue >= 0.0);
        assert_eq!(rep.trace, 1.0);

        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        let rep = physicality_report(&DensityMatrix::from_matrix(m));
        assert_eq!(rep.hermiticity_deviation, 1.0);
    }

    fn psd(n: usize, vals: &[f64]) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |i, j| c(vals[i * n + j], vals[n * n + i * n + j]));
        &a * a.adjoint()
    }

    proptest! {
        #[test]
        fn coherence_positive_iff_offdiagonal(vals in proptest::collection::vec(-1.0f64..1.0, 18)) {
            let m = psd(3, &vals);
            let rho = DensityMatrix::from_matrix(m.clone());
            let s = relative_entropy_coherence(&rho).unwrap();
            let off = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|(i, j)| i != j)
                .map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max);
            prop_assert!(s >= 0.0);
            if off > 1e-3 {
                prop_assert!(s > 0.0);
            }
            prop_assert_eq!(relative_entropy_coherence(&crate::lindblad::dephase(&rho)).unwrap(), 0.0);
        }

        #[test]
        fn coherence_permutation_invariant(vals in proptest::collection::vec(-1.0f64..1.0, 32), perm in Just([2usize, 0, 3, 1]).prop_shuffle()) {
            let m = psd(4, &vals);
            let p = CMatrix::from_fn(4, 4, |i, j| if perm[i] == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let a = relative_entropy_coherence(&DensityMatrix::from_matrix(m.clone())).unwrap();
            let b = relative_entropy_coherence(&DensityMatrix::from_matrix(&p * m * p.transpose())).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
