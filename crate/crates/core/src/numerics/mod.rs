//! Quadrature over `(0, ∞)` and one-step ODE integration shared by the
//! model, risk and estimation code.
//!
//! The semi-infinite integrator splits the half line at a truncation point
//! `L`. The head `[0, L]` is handled by a tanh-sinh rule, whose nodes never
//! touch the endpoints and which stays accurate for integrable algebraic
//! singularities at the origin (tempered-stable Lévy densities behave like
//! `z^{-1-α}`). The tail is covered by panels `[L, 2L]`, `[2L, 4L]`, ...
//! integrated with adaptive Gauss–Kronrod until a panel contributes less than
//! the absolute tolerance.

mod simplex;
mod special;

pub use simplex::{minimize, SimplexOptions, SimplexResult};
pub use special::{gamma_quantile, ln_gamma, regularized_gamma_p};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_truncation: f64,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, initial_truncation: f64) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
            return Err(Error::invalid(
                "quadrature tolerance",
                format!("tolerances must be positive (rel {rel_tol}, abs {abs_tol})"),
            ));
        }
        if !(initial_truncation > 0.0) || !initial_truncation.is_finite() {
            return Err(Error::invalid(
                "quadrature truncation point",
                format!("must be positive and finite, got {initial_truncation}"),
            ));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            initial_truncation,
        })
    }

    /// Same tolerances, different head length.
    pub fn with_truncation(self, initial_truncation: f64) -> Self {
        Self {
            initial_truncation: if initial_truncation > 0.0 && initial_truncation.is_finite() {
                initial_truncation
            } else {
                self.initial_truncation
            },
            ..self
        }
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_truncation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSpec {
    pub initial_step: f64,
    /// Relative agreement required between the solution on `n` and `2n` steps.
    pub error_control: f64,
    pub max_steps: usize,
}

impl OdeSpec {
    pub fn new(initial_step: f64, error_control: f64, max_steps: usize) -> Result<Self> {
        if !(initial_step > 0.0) || !(error_control > 0.0) || max_steps == 0 {
            return Err(Error::invalid(
                "ode settings",
                format!(
                    "need initial_step > 0, error_control > 0, max_steps >= 1 \
                     (got {initial_step}, {error_control}, {max_steps})"
                ),
            ));
        }
        Ok(Self {
            initial_step,
            error_control,
            max_steps,
        })
    }
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            error_control: 1e-11,
            max_steps: 1 << 22,
        }
    }
}

const MAX_DOUBLINGS: usize = 256;
const TANH_SINH_MAX_LEVEL: u32 = 11;
const TANH_SINH_T_MAX: f64 = 6.5;
const GK_MAX_INTERVALS: usize = 4000;

/// Integrate `f` over `(0, ∞)`.
pub fn integrate_semi_infinite<F>(f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut upper = spec.initial_truncation;
    let head = tanh_sinh(&f, 0.0, upper, spec.rel_tol, spec.abs_tol)?;
    let mut total = head;
    let mut small_panels = 0;
    for _ in 0..MAX_DOUBLINGS {
        let next = 2.0 * upper;
        if !next.is_finite() {
            break;
        }
        let panel = gauss_kronrod(&f, upper, next, spec.rel_tol, spec.abs_tol)?;
        total += panel;
        upper = next;
        if panel.abs() <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            small_panels += 1;
            // two quiet panels in a row: the tail is negligible
            if small_panels >= 2 {
                return Ok(total);
            }
        } else {
            small_panels = 0;
        }
    }
    Err(Error::NonConvergent(format!(
        "tail of semi-infinite integral still significant beyond z = {upper:e}"
    )))
}

/// Integrate `f` over the finite interval `[a, b]` (endpoints never evaluated).
pub fn integrate_interval<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_interval(f, b, a, spec).map(|v| -v);
    }
    tanh_sinh(&f, a, b, spec.rel_tol, spec.abs_tol)
}

fn tanh_sinh<F>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let half = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    // Contribution of node t: w(t) f(x(t)). Distances to the nearer endpoint
    // are formed directly so nodes crowd the ends without cancellation.
    let term = |t: f64| -> Result<f64> {
        let u = half_pi * t.sinh();
        let cu = u.abs().cosh();
        let w = half * half_pi * t.cosh() / (cu * cu);
        if w == 0.0 || !w.is_finite() {
            return Ok(0.0);
        }
        let dist = 2.0 * half / (1.0 + (2.0 * u.abs()).exp());
        if dist == 0.0 {
            return Ok(0.0);
        }
        let x = if t < 0.0 { a + dist } else { b - dist };
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::NonConvergent(format!(
                "integrand is not finite at x = {x:e}"
            )));
        }
        Ok(w * fx)
    };

    let mut h = 1.0;
    let mut sum = term(0.0)?;
    let mut k = 1;
    while (k as f64) * h <= TANH_SINH_T_MAX {
        let t = k as f64 * h;
        sum += term(t)? + term(-t)?;
        k += 1;
    }
    let mut estimate = h * sum;
    for level in 1..=TANH_SINH_MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= TANH_SINH_T_MAX {
            let t = k as f64 * h;
            sum += term(t)? + term(-t)?;
            k += 2;
        }
        let refined = h * sum;
        let change = (refined - estimate).abs();
        estimate = refined;
        if level >= 3 && change <= abs_tol.max(rel_tol * refined.abs()) {
            return Ok(refined);
        }
    }
    Err(Error::NonConvergent(format!(
        "tanh-sinh rule on [{a:e}, {b:e}] did not reach tolerance"
    )))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonConvergent(format!(
                "integrand is not finite at x = {x:e}"
            )))
        }
    };
    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

fn gauss_kronrod<F>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (value, err) = gk15(f, a, b)?;
    let mut intervals = vec![(a, b, value, err)];
    let mut total = value;
    let mut total_err = err;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if intervals.len() >= GK_MAX_INTERVALS {
            return Err(Error::NonConvergent(format!(
                "adaptive Gauss-Kronrod on [{a:e}, {b:e}] exceeded {GK_MAX_INTERVALS} panels"
            )));
        }
        // split the panel with the largest error estimate
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, v, e) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid)?;
        let (v2, e2) = gk15(f, mid, hi)?;
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    Ok(total)
}

/// Solve `y' = rhs(t, y)` from `t0` to `t1` with classical RK4, doubling the
/// step count until two successive solutions agree; the returned value is
/// the Richardson-corrected finer solution.
pub fn solve_ode<F>(rhs: F, y0: f64, t0: f64, t1: f64, spec: &OdeSpec) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if t0 == t1 {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut steps = ((span.abs() / spec.initial_step).ceil() as usize).max(1);
    if steps > spec.max_steps {
        return Err(Error::NonConvergent(format!(
            "initial step {} needs {steps} steps, cap is {}",
            spec.initial_step, spec.max_steps
        )));
    }
    let mut coarse = rk4(&rhs, y0, t0, span, steps)?;
    loop {
        let fine_steps = 2 * steps;
        if fine_steps > spec.max_steps {
            return Err(Error::NonConvergent(format!(
                "ODE did not meet error control {} within {} steps",
                spec.error_control, spec.max_steps
            )));
        }
        let fine = rk4(&rhs, y0, t0, span, fine_steps)?;
        let diff = (fine - coarse).abs();
        if diff <= spec.error_control * fine.abs().max(f64::MIN_POSITIVE) || diff == 0.0 {
            return Ok(fine + (fine - coarse) / 15.0);
        }
        coarse = fine;
        steps = fine_steps;
    }
}

fn rk4<F>(rhs: &F, y0: f64, t0: f64, span: f64, steps: usize) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let h = span / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = rhs(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !y.is_finite() {
            return Err(Error::NonConvergent(format!(
                "ODE solution blew up near t = {t:e}"
            )));
        }
    }
    Ok(y)
}
