//! Cross-checks of the closed forms against independent numerical oracles.

use crate::error::Result;
use crate::jumps::JumpMeasure;
use crate::mixing::MixingMeasure;
use crate::numerics::{integrate_semi_infinite, ln_gamma, solve_ode, OdeSpec, QuadratureSpec};
use crate::orlicz::{distorted_acf, stationary_log_disutility, Bound, OrliczFunction, RiskQuery};
use crate::process::{riccati_exponent, SupJcirModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, max_error: f64, tolerance: f64) -> Self {
        Self {
            name,
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

/// Five models from jump-dominated to diffusion-dominated.
pub fn builtin_models() -> Vec<SupJcirModel> {
    let specs: [(f64, f64, f64, f64, f64, f64); 5] = [
        (0.1, 0.2, 3.0, 2.0, 2.5, 0.1),
        (0.5, 0.4, 1.5, 4.0, 2.0, 0.5),
        (1.0, 0.8, 0.55, 5.0, 2.5, 0.1),
        (2.0, 1.0, 0.2, 8.0, 3.5, 1.0),
        (3.0, 1.2, 0.01, 10.0, 1.5, 0.05),
    ];
    specs
        .iter()
        .map(|&(a, sigma, mu, beta, omega, theta)| {
            SupJcirModel::new(
                a,
                sigma,
                JumpMeasure::Exponential { mu, beta },
                MixingMeasure::Gamma { omega, theta },
            )
            .expect("built-in parameters are valid")
        })
        .collect()
}

/// Riccati closed form against RK4 over s ∈ [0, 20].
pub fn riccati_vs_ode(models: &[SupJcirModel]) -> Result<f64> {
    let mut shifts = vec![0.05, 0.5, 2.0];
    shifts.extend(models.iter().map(|m| 0.5 * m.sigma2()));
    let mut worst = 0.0f64;
    for &half in &shifts {
        for &frac in &[0.1, 0.5, 0.9] {
            let p = frac / half;
            for &r in &[0.1, 1.0, 3.0] {
                for &s in &[0.5, 2.0, 5.0, 20.0] {
                    let exact = riccati_exponent(p, r, half, s)?;
                    let ode = solve_ode(
                        |_, u| -r * u + half * r * u * u,
                        p,
                        0.0,
                        s,
                        &OdeSpec::default(),
                    )?;
                    worst = worst.max(((exact - ode) / exact).abs());
                }
            }
        }
    }
    Ok(worst)
}

fn gamma_density(omega: f64, theta: f64) -> impl Fn(f64) -> f64 {
    let log_norm = ln_gamma(omega) + omega * theta.ln();
    move |r: f64| ((omega - 1.0) * r.ln() - r / theta - log_norm).exp()
}

/// ∫ e^{−rh} π(dr)/r / ∫ π(dr)/r by quadrature.
pub fn mixture_acf_by_quadrature(omega: f64, theta: f64, h: f64) -> Result<f64> {
    let dens = gamma_density(omega, theta);
    let spec = QuadratureSpec::default().with_truncation(4.0 * omega * theta);
    let num = integrate_semi_infinite(|r| dens(r) / r * (-r * h).exp(), &spec)?;
    let den = integrate_semi_infinite(|r| dens(r) / r, &spec)?;
    Ok(num / den)
}

pub fn gamma_acf_vs_quadrature(models: &[SupJcirModel]) -> Result<f64> {
    let mut pairs = vec![(1.5, 0.05), (2.0, 1.0), (2.5, 0.1), (3.0, 0.5), (5.0, 2.0)];
    for m in models {
        if let MixingMeasure::Gamma { omega, theta } = m.mixing {
            pairs.push((omega, theta));
        }
    }
    let mut worst = 0.0f64;
    for &(omega, theta) in &pairs {
        let g = MixingMeasure::gamma(omega, theta)?;
        for &h in &[0.1, 1.0, 10.0, 100.0] {
            worst = worst.max((g.acf(h) - mixture_acf_by_quadrature(omega, theta, h)?).abs());
        }
    }
    Ok(worst)
}

/// First three cumulants of `k` at 0 from the degree-6 polynomial through
/// the origin and p = h, 2h, …, 6h.
#[allow(clippy::needless_range_loop)]
pub fn cumulants_by_differences<F: Fn(f64) -> Result<f64>>(k: F, h: f64) -> Result<[f64; 3]> {
    const N: usize = 6;
    let mut a = [[0.0; N]; N];
    let mut b = [0.0; N];
    for j in 0..N {
        let x = (j + 1) as f64;
        for (i, cell) in a[j].iter_mut().enumerate() {
            *cell = x.powi(i as i32 + 1);
        }
        b[j] = k((j + 1) as f64 * h)?;
    }
    // Gaussian elimination with partial pivoting
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for c in col..N {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut c = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|j| a[row][j] * c[j]).sum();
        c[row] = (b[row] - s) / a[row][row];
    }
    // K(p) = κ₁p + κ₂p²/2 + κ₃p³/6 + …, and p = jh
    Ok([c[0] / h, 2.0 * c[1] / (h * h), 6.0 * c[2] / (h * h * h)])
}

/// Relative errors (mean, variance, skewness) of the closed-form moments
/// against finite-difference cumulants.
pub fn moment_errors(model: &SupJcirModel) -> Result<[f64; 3]> {
    let mo = model.stationary_moments()?;
    let h = model.p_max() / 60.0;
    let [k1, k2, k3] = cumulants_by_differences(|p| model.log_mgf(p), h)?;
    let skew = k3 / k2.powf(1.5);
    Ok([
        ((mo.mean - k1) / k1).abs(),
        ((mo.variance - k2) / k2).abs(),
        ((mo.skewness - skew) / skew).abs(),
    ])
}

/// |τ(λ = 1e-8) − log_mgf(p)| for both bounds with Φ = identity, at half
/// a fifth of the admissible range.
pub fn small_lambda_gap(model: &SupJcirModel) -> Result<f64> {
    let p = 0.2 * model.p_max();
    let k = model.log_mgf(p)?;
    let mut worst = 0.0f64;
    for (q, bound) in [(0.75, Bound::Upper), (1.5, Bound::Lower)] {
        let query = RiskQuery::new(p, OrliczFunction::Identity, q, 1e-8, 1e-8, bound)?;
        worst = worst.max((stationary_log_disutility(model, &query)? - k).abs());
    }
    Ok(worst)
}

/// Distorted Gamma ACF against quadrature over the rescaled mixture.
pub fn distorted_acf_gap(model: &SupJcirModel) -> Result<f64> {
    let MixingMeasure::Gamma { omega, theta } = model.mixing else {
        return Ok(0.0);
    };
    let p = 0.2 * model.p_max();
    let mut worst = 0.0f64;
    for (q, bound, factor) in [(0.75, Bound::Upper, -1.0), (1.5, Bound::Lower, 1.0)] {
        // ξ = 0.3 for both bounds
        let lambda = 0.3 / (model.sigma2() * p);
        let query = RiskQuery::new(p, OrliczFunction::Identity, q, lambda, 0.0, bound)?;
        if crate::orlicz::admissibility_check(model, &query).is_err() {
            continue;
        }
        for &h in &[0.1, 1.0, 10.0, 100.0] {
            let closed = distorted_acf(model, &query, h)?;
            let quad = mixture_acf_by_quadrature(omega, theta * (1.0 + factor * 0.3), h)?;
            worst = worst.max((closed - quad).abs());
        }
    }
    Ok(worst)
}

/// Run every check; `tol_override` replaces all default tolerances.
pub fn run_checks(models: &[SupJcirModel], tol_override: Option<f64>) -> Result<Vec<CheckResult>> {
    let tol = |default: f64| tol_override.unwrap_or(default);
    let mut out = vec![
        CheckResult::new("riccati_vs_ode", riccati_vs_ode(models)?, tol(1e-8)),
        CheckResult::new(
            "gamma_acf_vs_quadrature",
            gamma_acf_vs_quadrature(models)?,
            tol(1e-8),
        ),
    ];
    let (mut mean, mut var, mut skew, mut lam, mut dacf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for m in models {
        let [e1, e2, e3] = moment_errors(m)?;
        mean = mean.max(e1);
        var = var.max(e2);
        if !m.jumps.is_none() {
            skew = skew.max(e3);
        }
        lam = lam.max(small_lambda_gap(m)?);
        dacf = dacf.max(distorted_acf_gap(m)?);
    }
    out.push(CheckResult::new("mean_vs_cumulant", mean, tol(1e-4)));
    out.push(CheckResult::new("variance_vs_cumulant", var, tol(1e-4)));
    out.push(CheckResult::new("skewness_vs_cumulant", skew, tol(1e-3)));
    out.push(CheckResult::new("small_lambda_consistency", lam, tol(1e-6)));
    out.push(CheckResult::new(
        "distorted_acf_vs_quadrature",
        dacf,
        tol(1e-8),
    ));
    Ok(out)
}
