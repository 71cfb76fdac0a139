//! Dormand–Prince 5(4) integrator for complex matrix-valued ODEs, with
//! embedded error control, FSAL and 4th-order dense output.

use crate::{CMatrix, Error, Result, C64};

/// Step-size policy and error tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    pub safety: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            h_max: 10.0,
            h_min: 1e-12,
            max_steps: 5_000_000,
            safety: 0.9,
        }
    }
}

// Autonomous right-hand sides only, so the nodes c_i are not needed.
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolant over the most recent accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t_old: f64,
    pub h: f64,
    cont: [CMatrix; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> CMatrix {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let [c0, c1, c2, c3, c4] = &self.cont;
        c0 + (c1 + (c2 + (c3 + c4 * C64::from(s1)) * C64::from(s)) * C64::from(s1)) * C64::from(s)
    }
}

/// Integrator state between accepted steps.
pub struct Dopri5<F>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    rhs: F,
    controls: StepControls,
    t: f64,
    y: CMatrix,
    /// Derivative at `(t, y)` (FSAL).
    k1: CMatrix,
    h: f64,
    facold: f64,
    steps: usize,
    rejected: usize,
    dense: Option<DenseStep>,
}

fn axpy(terms: &[(f64, &CMatrix)], base: &CMatrix, h: f64) -> CMatrix {
    let mut out = base.clone();
    for &(coef, k) in terms {
        if coef != 0.0 {
            out.zip_apply(k, |o, kv| *o += kv * (coef * h));
        }
    }
    out
}

impl<F> Dopri5<F>
where
    F: Fn(&CMatrix) -> CMatrix,
{
    pub fn new(rhs: F, t0: f64, y0: CMatrix, controls: StepControls) -> Self {
        let k1 = rhs(&y0);
        let mut me = Dopri5 {
            rhs,
            controls,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            facold: 1e-4,
            steps: 0,
            rejected: 0,
            dense: None,
        };
        me.h = controls.h0.unwrap_or_else(|| me.initial_step());
        me
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    /// Derivative at the current point.
    pub fn derivative(&self) -> &CMatrix {
        &self.k1
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Interpolant for the last accepted step.
    pub fn dense(&self) -> Option<&DenseStep> {
        self.dense.as_ref()
    }

    /// RMS of `m` scaled by `atol + rtol * max(|a|, |b|)`.
    fn err_norm(&self, m: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
        let (rtol, atol) = (self.controls.rtol, self.controls.atol);
        let n = m.len().max(1) as f64;
        let sum: f64 = m
            .iter()
            .zip(a.iter().zip(b.iter()))
            .map(|(v, (x, y))| (v.norm() / (atol + rtol * x.norm().max(y.norm()))).powi(2))
            .sum();
        (sum / n).sqrt()
    }

    // Hairer's starting step heuristic.
    fn initial_step(&self) -> f64 {
        let d0 = self.err_norm(&self.y, &self.y, &self.y);
        let d1 = self.err_norm(&self.k1, &self.y, &self.y);
        let h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.controls.h_max);
        let y1 = axpy(&[(1.0, &self.k1)], &self.y, h0);
        let k2 = (self.rhs)(&y1);
        let diff = &k2 - &self.k1;
        let d2 = self.err_norm(&diff, &self.y, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.controls.h_max)
    }

    /// Advances by one accepted step, never passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        let expo1 = 0.2 - 0.04 * 0.75;
        let beta = 0.04;
        loop {
            if self.steps + self.rejected >= self.controls.max_steps {
                return Err(Error::TooManySteps(self.controls.max_steps));
            }
            let mut h = self.h.min(self.controls.h_max);
            let mut last = false;
            if self.t + h >= t_limit {
                h = t_limit - self.t;
                last = true;
            }
            if h < self.controls.h_min && !last {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }
            let y = &self.y;
            let k1 = &self.k1;
            let f = &self.rhs;
            let k2 = f(&axpy(&[(A21, k1)], y, h));
            let k3 = f(&axpy(&[(A31, k1), (A32, &k2)], y, h));
            let k4 = f(&axpy(&[(A41, k1), (A42, &k2), (A43, &k3)], y, h));
            let k5 = f(&axpy(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], y, h));
            let k6 = f(&axpy(
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                y,
                h,
            ));
            let y_new = axpy(
                &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
                y,
                h,
            );
            let k7 = f(&y_new);
            let err_vec = axpy(
                &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
                &CMatrix::zeros(y.nrows(), y.ncols()),
                h,
            );
            let err = self.err_norm(&err_vec, y, &y_new);

            // PI step-size controller.
            let fac11 = err.max(1e-300).powf(expo1);
            let fac = (fac11 / self.facold.powf(beta)) / self.controls.safety;
            let fac = fac.clamp(1.0 / 10.0, 1.0 / 0.2);

            if err <= 1.0 {
                self.facold = err.max(1e-4);
                let ydiff = &y_new - y;
                let bspl = k1 * C64::from(h) - &ydiff;
                let c3 = &ydiff - &k7 * C64::from(h) - &bspl;
                let c4 = axpy(
                    &[(D1, k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
                    &CMatrix::zeros(y.nrows(), y.ncols()),
                    h,
                );
                self.dense = Some(DenseStep {
                    t_old: self.t,
                    h,
                    cont: [y.clone(), ydiff, bspl, c3, c4],
                });
                self.t = if last { t_limit } else { self.t + h };
                self.y = y_new;
                self.k1 = k7;
                self.steps += 1;
                let h_new = h / fac;
                // keep the nominal step when a step was truncated at t_limit
                self.h = if last { self.h.max(h_new) } else { h_new };
                return Ok(());
            }
            self.rejected += 1;
            self.h = h / (fac11 / self.controls.safety).min(1.0 / 0.2);
        }
    }
}
