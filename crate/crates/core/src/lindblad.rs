//! Master-equation generator for a circuit coupled to source, sink and
//! dephasing baths.
//!
//! The reduced form works on the `n`-site space with the baths eliminated:
//!
//! ```text
//! dρ/dt = -i[H, ρ] + S |s><s| - (γ/2) {|k><k|, ρ} - 2 γ_D (ρ - diag ρ)
//! ```
//!
//! with `S = γ ρ_L` the injected flux, `s` the source and `k` the sink. The
//! explicit-bath form carries two extra levels `|L>` (index `n`) and `|R>`
//! (index `n + 1`) and applies the injection/ejection dissipators of the
//! jump operators `√γ |s><L|` and `√γ |R><k|` literally, clamping the bath
//! block after every evaluation.
//!
//! Vectorization is column-stacking: entry `(i, j)` sits at `i + j n`.

use nalgebra::SymmetricEigen;

use crate::circuit::{hermiticity_deviation, Circuit, HermitianMatrix};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Density matrix in the site basis. The trace is the particle number and is
/// not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const POPULATION_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-8;

    /// Wraps a matrix without checking physicality.
    pub fn from_matrix(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    /// Wraps a matrix after checking Hermiticity, populations and PSD.
    pub fn new(m: CMatrix) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.validate()?;
        Ok(rho)
    }

    pub fn zeros(dim: usize) -> Self {
        DensityMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn diagonal(pops: &[f64]) -> Self {
        let n = pops.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &p) in pops.iter().enumerate() {
            m[(i, i)] = C64::new(p, 0.0);
        }
        DensityMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.0)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        let min_pop = (0..self.dim())
            .map(|i| self.0[(i, i)].re)
            .fold(f64::INFINITY, f64::min);
        let min_eig = self.min_eigenvalue();
        if herm > Self::HERMITIAN_TOL
            || (self.dim() > 0 && min_pop < -Self::POPULATION_TOL)
            || min_eig < -Self::PSD_TOL
        {
            return Err(Error::UnphysicalState {
                t: 0.0,
                hermiticity: herm,
                min_eigenvalue: min_eig,
            });
        }
        Ok(())
    }

    /// Column-stacked vector.
    pub fn vec(&self) -> CVector {
        CVector::from_iterator(self.0.len(), self.0.iter().copied())
    }

    pub fn from_vec(v: &CVector, dim: usize) -> Self {
        DensityMatrix(CMatrix::from_column_slice(dim, dim, v.as_slice()))
    }
}

/// `ρ ↦ Σ_j |j><j| ρ |j><j|`: keeps the diagonal, drops every coherence.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let n = rho.dim();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = rho.0[(i, i)];
    }
    DensityMatrix(out)
}

/// Bath rates. The defaults give a source flux of exactly one particle per
/// unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    /// Injection and ejection Lindblad rate γ.
    pub gamma_bath: f64,
    /// Clamped population of the source bath level.
    pub rho_l: f64,
    /// Dephasing rate γ_D; equals Δ because the hopping amplitude is 1.
    pub gamma_d: f64,
}

impl RateSet {
    pub const GAMMA_BATH: f64 = 2.0;
    pub const RHO_L: f64 = 0.5;

    pub fn with_delta(delta: f64) -> Result<Self> {
        RateSet {
            gamma_bath: Self::GAMMA_BATH,
            rho_l: Self::RHO_L,
            gamma_d: delta,
        }
        .validated()
    }

    /// Non-default bath parameters, for exploration only.
    pub fn custom(gamma_bath: f64, rho_l: f64, delta: f64) -> Result<Self> {
        RateSet {
            gamma_bath,
            rho_l,
            gamma_d: delta,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.gamma_d >= 0.0) || !self.gamma_d.is_finite() {
            return Err(Error::NegativeDelta(self.gamma_d));
        }
        if !(self.gamma_bath > 0.0) || !(self.rho_l >= 0.0) {
            return Err(Error::InvalidRates(format!(
                "gamma = {}, rho_L = {}",
                self.gamma_bath, self.rho_l
            )));
        }
        Ok(self)
    }

    pub fn delta(&self) -> f64 {
        self.gamma_d
    }

    /// Injected particles per unit time, `γ ρ_L`.
    pub fn source_flux(&self) -> f64 {
        self.gamma_bath * self.rho_l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Reduced,
    ExplicitBath,
}

/// The affine map `ρ ↦ dρ/dt` for one circuit at one dephasing strength.
#[derive(Debug, Clone)]
pub struct Generator {
    circuit: Circuit,
    rates: RateSet,
    hamiltonian: HermitianMatrix,
    form: Form,
}

pub fn assemble_generator(c: &Circuit, delta: f64, form: Form) -> Result<Generator> {
    Generator::new(c, RateSet::with_delta(delta)?, form)
}

pub fn apply_generator(g: &Generator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    g.apply(rho)
}

pub fn vectorize_generator(g: &Generator) -> Result<(CMatrix, CVector)> {
    g.vectorize()
}

impl Generator {
    pub fn new(c: &Circuit, rates: RateSet, form: Form) -> Result<Self> {
        let rates = rates.validated()?;
        Ok(Generator {
            circuit: c.clone(),
            rates,
            hamiltonian: c.hamiltonian(),
            form,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn rates(&self) -> &RateSet {
        &self.rates
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// State-space dimension: `n` reduced, `n + 2` with explicit baths.
    pub fn dim(&self) -> usize {
        match self.form {
            Form::Reduced => self.circuit.n(),
            Form::ExplicitBath => self.circuit.n() + 2,
        }
    }

    /// Initial state with the bath block clamped (a no-op for reduced form).
    pub fn prepare(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_dim(rho)?;
        let mut m = rho.0.clone();
        if self.form == Form::ExplicitBath {
            self.clamp_bath(&mut m);
        }
        Ok(DensityMatrix(m))
    }

    /// Empty device in this generator's state space.
    pub fn empty_state(&self) -> DensityMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        if self.form == Form::ExplicitBath {
            self.clamp_bath(&mut m);
        }
        DensityMatrix(m)
    }

    /// System-site block of a state (the whole state in reduced form).
    pub fn system_block(&self, rho: &DensityMatrix) -> DensityMatrix {
        let n = self.circuit.n();
        DensityMatrix(rho.0.view((0, 0), (n, n)).into_owned())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_dim(rho)?;
        Ok(DensityMatrix(self.derivative(&rho.0)))
    }

    fn check_dim(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim() || !rho.0.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rho.dim(),
            });
        }
        Ok(())
    }

    /// Raw derivative on matrices of the right dimension.
    pub(crate) fn derivative(&self, rho: &CMatrix) -> CMatrix {
        match self.form {
            Form::Reduced => self.reduced_derivative(rho),
            Form::ExplicitBath => self.explicit_derivative(rho),
        }
    }

    fn reduced_derivative(&self, rho: &CMatrix) -> CMatrix {
        let n = self.circuit.n();
        let h = self.hamiltonian.matrix();
        let (s, k) = (self.circuit.source(), self.circuit.sink());
        let half_gamma = 0.5 * self.rates.gamma_bath;
        let two_gd = 2.0 * self.rates.gamma_d;

        let mut out = commutator_term(h, rho);
        out[(s, s)] += self.rates.source_flux();
        // -(γ/2)(|k><k|ρ + ρ|k><k|)
        for j in 0..n {
            let v = rho[(k, j)] * half_gamma;
            out[(k, j)] -= v;
            let w = rho[(j, k)] * half_gamma;
            out[(j, k)] -= w;
        }
        if two_gd != 0.0 {
            for j in 0..n {
                for i in 0..n {
                    if i != j {
                        out[(i, j)] -= rho[(i, j)] * two_gd;
                    }
                }
            }
        }
        out
    }

    fn clamp_bath(&self, m: &mut CMatrix) {
        let n = self.circuit.n();
        let (l, r) = (n, n + 1);
        for b in [l, r] {
            for j in 0..n + 2 {
                m[(b, j)] = C64::new(0.0, 0.0);
                m[(j, b)] = C64::new(0.0, 0.0);
            }
        }
        m[(l, l)] = C64::new(self.rates.rho_l, 0.0);
    }

    fn explicit_derivative(&self, rho: &CMatrix) -> CMatrix {
        let n = self.circuit.n();
        let dim = n + 2;
        let (l, r) = (n, n + 1);
        let (s, k) = (self.circuit.source(), self.circuit.sink());
        let gamma = self.rates.gamma_bath;

        let mut state = rho.clone();
        self.clamp_bath(&mut state);

        let mut h = CMatrix::zeros(dim, dim);
        h.view_mut((0, 0), (n, n)).copy_from(self.hamiltonian.matrix());
        let mut out = commutator_term(&h, &state);

        // Jump √γ|s><L|: γ (|s><L| ρ |L><s| - ½{|L><L|, ρ})
        out[(s, s)] += state[(l, l)] * gamma;
        for j in 0..dim {
            let a = state[(l, j)] * (0.5 * gamma);
            out[(l, j)] -= a;
            let b = state[(j, l)] * (0.5 * gamma);
            out[(j, l)] -= b;
        }
        // Jump √γ|R><k|: γ (|R><k| ρ |k><R| - ½{|k><k|, ρ})
        out[(r, r)] += state[(k, k)] * gamma;
        for j in 0..dim {
            let a = state[(k, j)] * (0.5 * gamma);
            out[(k, j)] -= a;
            let b = state[(j, k)] * (0.5 * gamma);
            out[(j, k)] -= b;
        }
        // Dephasing on the system sites: γ_D Σ_j (2 P_j ρ P_j - {P_j, ρ}).
        let gd = self.rates.gamma_d;
        if gd != 0.0 {
            for j in 0..n {
                for i in 0..dim {
                    if i == j {
                        continue;
                    }
                    let a = state[(j, i)] * gd;
                    out[(j, i)] -= a;
                    let b = state[(i, j)] * gd;
                    out[(i, j)] -= b;
                }
            }
        }

        // The bath block is held fixed.
        for b in [l, r] {
            for j in 0..dim {
                out[(b, j)] = C64::new(0.0, 0.0);
                out[(j, b)] = C64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `(M, c)` with `vec(dρ/dt) = M vec(ρ) + c`, column-stacked.
    pub fn vectorize(&self) -> Result<(CMatrix, CVector)> {
        if self.form != Form::Reduced {
            return Err(Error::ExplicitBathNotVectorizable);
        }
        let n = self.circuit.n();
        let nn = n * n;
        let h = self.hamiltonian.matrix();
        let (s, k) = (self.circuit.source(), self.circuit.sink());
        let half_gamma = 0.5 * self.rates.gamma_bath;
        let two_gd = 2.0 * self.rates.gamma_d;
        let minus_i = C64::new(0.0, -1.0);
        let idx = |i: usize, j: usize| i + j * n;

        let mut m = CMatrix::zeros(nn, nn);
        for j in 0..n {
            for i in 0..n {
                let row = idx(i, j);
                // -i (H ρ)_{ij} = -i Σ_a H_{ia} ρ_{aj}
                for a in 0..n {
                    if h[(i, a)] != C64::new(0.0, 0.0) {
                        m[(row, idx(a, j))] += minus_i * h[(i, a)];
                    }
                    // +i (ρ H)_{ij} = +i Σ_a ρ_{ia} H_{aj}
                    if h[(a, j)] != C64::new(0.0, 0.0) {
                        m[(row, idx(i, a))] -= minus_i * h[(a, j)];
                    }
                }
                let mut decay = 0.0;
                if i == k {
                    decay += half_gamma;
                }
                if j == k {
                    decay += half_gamma;
                }
                if i != j {
                    decay += two_gd;
                }
                m[(row, row)] -= C64::new(decay, 0.0);
            }
        }
        let mut c = CVector::zeros(nn);
        c[idx(s, s)] = C64::new(self.rates.source_flux(), 0.0);
        Ok((m, c))
    }
}

fn commutator_term(h: &CMatrix, rho: &CMatrix) -> CMatrix {
    let hr = h * rho;
    let rh = rho * h;
    (hr - rh) * C64::new(0.0, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{make_pentagon, make_wire};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn hermitian_from(n: usize, vals: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        let mut it = vals.iter().copied().cycle();
        for i in 0..n {
            m[(i, i)] = c(it.next().unwrap().abs(), 0.0);
            for j in i + 1..n {
                let z = c(it.next().unwrap(), it.next().unwrap());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn pure_injection_at_empty_state() {
        let g = assemble_generator(&make_wire(2).unwrap(), 0.0, Form::Reduced).unwrap();
        let d = g.apply(&DensityMatrix::zeros(2)).unwrap();
        assert_eq!(d.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(max_abs(&(d.matrix() - CMatrix::from_fn(2, 2, |i, j| if i + j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) }))), 0.0);
    }

    #[test]
    fn dephasing_contribution() {
        let w = make_wire(2).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 0)] = c(1.0, 0.0);
        m[(0, 0)] = c(0.7, 0.0);
        let rho = DensityMatrix::from_matrix(m);
        let with = assemble_generator(&w, 1.0, Form::Reduced).unwrap().apply(&rho).unwrap();
        let without = assemble_generator(&w, 0.0, Form::Reduced).unwrap().apply(&rho).unwrap();
        let ld = with.matrix() - without.matrix();
        assert!((ld[(0, 1)] - c(-2.0, 0.0)).norm() < 1e-15);
        assert_eq!(ld[(0, 0)], c(0.0, 0.0));
        assert_eq!(ld[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn two_site_ness_is_stationary() {
        let g = assemble_generator(&make_wire(2).unwrap(), 0.0, Form::Reduced).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.0, -0.5);
        m[(1, 0)] = c(0.0, 0.5);
        let d = g.apply(&DensityMatrix::from_matrix(m)).unwrap();
        assert!(max_abs(d.matrix()) < 1e-15);
    }

    #[test]
    fn single_site_vectorization() {
        let g = assemble_generator(&make_wire(1).unwrap(), 0.3, Form::Reduced).unwrap();
        let (m, cvec) = g.vectorize().unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert_eq!(m[(0, 0)], c(-2.0, 0.0));
        assert_eq!(cvec[0], c(1.0, 0.0));
    }

    #[test]
    fn explicit_bath_not_vectorizable() {
        let g = assemble_generator(&make_wire(2).unwrap(), 0.0, Form::ExplicitBath).unwrap();
        assert_eq!(g.vectorize().unwrap_err(), Error::ExplicitBathNotVectorizable);
        assert_eq!(g.dim(), 4);
    }

    #[test]
    fn rejects_negative_delta_and_bad_dims() {
        let w = make_wire(2).unwrap();
        assert!(matches!(
            assemble_generator(&w, -0.1, Form::Reduced),
            Err(Error::NegativeDelta(_))
        ));
        let g = assemble_generator(&w, 0.0, Form::Reduced).unwrap();
        assert!(matches!(
            g.apply(&DensityMatrix::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dephase_examples() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.0, 0.2);
        m[(1, 0)] = c(0.0, -0.2);
        let rho = DensityMatrix::from_matrix(m);
        let d = dephase(&rho);
        assert_eq!(d, DensityMatrix::diagonal(&[0.5, 0.5]));
        assert_eq!(dephase(&d), d);
        assert_eq!(d.trace(), rho.trace());
    }

    #[test]
    fn explicit_bath_matches_reduced_derivative() {
        let w = make_pentagon(2).unwrap();
        let vals: Vec<f64> = (0..40).map(|i| ((i * 37 % 17) as f64 - 8.0) / 10.0).collect();
        let sys = hermitian_from(5, &vals);
        for delta in [0.0, 0.8] {
            let red = assemble_generator(&w, delta, Form::Reduced).unwrap();
            let exp = assemble_generator(&w, delta, Form::ExplicitBath).unwrap();
            let mut big = CMatrix::zeros(7, 7);
            big.view_mut((0, 0), (5, 5)).copy_from(&sys);
            let dr = red.apply(&DensityMatrix::from_matrix(sys.clone())).unwrap();
            let de = exp.apply(&DensityMatrix::from_matrix(big)).unwrap();
            let block = exp.system_block(&de);
            assert!(max_abs(&(block.matrix() - dr.matrix())) < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn vectorized_form_agrees(vals in proptest::collection::vec(-1.0f64..1.0, 32), delta in 0.0f64..3.0) {
            let w = make_wire(3).unwrap();
            let g = assemble_generator(&w, delta, Form::Reduced).unwrap();
            let (m, cvec) = g.vectorize().unwrap();
            // arbitrary (not necessarily Hermitian) complex matrix
            let rho = CMatrix::from_fn(3, 3, |i, j| c(vals[i * 3 + j], vals[9 + i * 3 + j]));
            let rho = DensityMatrix::from_matrix(rho);
            let lhs = g.apply(&rho).unwrap().vec();
            let rhs = &m * rho.vec() + &cvec;
            let err = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12);
        }

        #[test]
        fn hermiticity_preserved(vals in proptest::collection::vec(-1.0f64..1.0, 30), delta in 0.0f64..5.0) {
            let g = assemble_generator(&make_pentagon(2).unwrap(), delta, Form::Reduced).unwrap();
            let rho = DensityMatrix::from_matrix(hermitian_from(5, &vals));
            let d = g.apply(&rho).unwrap();
            prop_assert!(d.hermiticity_deviation() <= 1e-12);
            // g(ρ)† = g(ρ†) on a non-Hermitian input too
            let a = CMatrix::from_fn(5, 5, |i, j| c(vals[(i * 5 + j) % 30], vals[(j * 7 + i) % 30]));
            let lhs = g.apply(&DensityMatrix::from_matrix(a.clone())).unwrap().into_inner().adjoint();
            let rhs = g.apply(&DensityMatrix::from_matrix(a.adjoint())).unwrap().into_inner();
            prop_assert!(max_abs(&(lhs - rhs)) <= 1e-12);
        }

        #[test]
        fn trace_dynamics(vals in proptest::collection::vec(-1.0f64..1.0, 30), delta in 0.0f64..5.0) {
            let circuit = make_pentagon(3).unwrap();
            let g = assemble_generator(&circuit, delta, Form::Reduced).unwrap();
            let rho = DensityMatrix::from_matrix(hermitian_from(5, &vals));
            let d = g.apply(&rho).unwrap();
            let expected = 1.0 - 2.0 * rho.population(circuit.sink());
            prop_assert!((d.trace() - expected).abs() <= 1e-12);
        }

        #[test]
        fn dephasing_leaves_populations(vals in proptest::collection::vec(-1.0f64..1.0, 30), delta in 0.0f64..5.0) {
            let circuit = make_pentagon(2).unwrap();
            let rho = DensityMatrix::from_matrix(hermitian_from(5, &vals));
            let a = assemble_generator(&circuit, delta, Form::Reduced).unwrap().apply(&rho).unwrap();
            let b = assemble_generator(&circuit, 0.0, Form::Reduced).unwrap().apply(&rho).unwrap();
            for i in 0..5 {
                prop_assert_eq!(a.matrix()[(i, i)], b.matrix()[(i, i)]);
            }
        }

        #[test]
        fn homogeneous_part_is_linear(v1 in proptest::collection::vec(-1.0f64..1.0, 18), v2 in proptest::collection::vec(-1.0f64..1.0, 18), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
            let g = assemble_generator(&make_wire(3).unwrap(), 0.4, Form::Reduced).unwrap();
            let (m, _) = g.vectorize().unwrap();
            let r1 = CMatrix::from_fn(3, 3, |i, j| c(v1[i * 3 + j], v1[9 + i * 3 + j]));
            let r2 = CMatrix::from_fn(3, 3, |i, j| c(v2[i * 3 + j], v2[9 + i * 3 + j]));
            let combo = DensityMatrix::from_matrix(&r1 * C64::new(alpha, 0.0) + &r2 * C64::new(beta, 0.0)).vec();
            let lhs = &m * combo;
            let rhs = &m * DensityMatrix::from_matrix(r1).vec() * C64::new(alpha, 0.0)
                + &m * DensityMatrix::from_matrix(r2).vec() * C64::new(beta, 0.0);
            let err = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12);
        }
    }

    #[test]
    fn diagonal_flux_identity() {
        // Summing M vec(ρ) over diagonal positions gives -2 ρ_kk for diagonal ρ.
        let circuit = make_wire(3).unwrap();
        let g = assemble_generator(&circuit, 0.7, Form::Reduced).unwrap();
        let (m, _) = g.vectorize().unwrap();
        let rho = DensityMatrix::diagonal(&[0.3, 0.9, 0.4]);
        let out = &m * rho.vec();
        let diag_sum: C64 = (0..3).map(|i| out[i + 3 * i]).sum();
        assert!((diag_sum - c(-0.8, 0.0)).norm() < 1e-14);
    }
}
