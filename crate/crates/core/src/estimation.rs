//! Empirical statistics of a sampled series and the two-step fit: θ, ω from
//! the autocorrelation, then (β, σ, a) from the first three moments.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::jumps::JumpMeasure;
use crate::mixing::MixingMeasure;
use crate::numerics::{minimize, SimplexOptions};
use crate::process::{Moments, SupJcirModel};

pub const DEFAULT_MAX_LAG: usize = 52;

/// Fraction of a step an observation may sit off the nominal grid and still
/// enter ACF pairs.
const GRID_SLACK: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub name: String,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 8 {
            return Err(Error::InvalidInput(format!(
                "need at least 8 observations, got {}",
                times.len()
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "times and values must be finite".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            values,
            name: name.into(),
        })
    }

    /// Evenly spaced samples at unit step.
    pub fn regular(values: Vec<f64>, step: f64, name: impl Into<String>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64 * step).collect();
        Self::new(times, values, name)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Median time increment.
    pub fn nominal_step(&self) -> f64 {
        let mut d: Vec<f64> = self.times.windows(2).map(|w| w[1] - w[0]).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len();
        if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// (lag in time units, autocorrelation), starting at lag 0.
    pub acf: Vec<(f64, f64)>,
}

impl EmpiricalStats {
    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.mean,
            variance: self.variance,
            skewness: self.skewness,
        }
    }
}

/// Biased autocorrelation estimator: global mean, lag-0 denominator, pairs
/// matched on the median-step grid.
pub fn empirical_acf(series: &TimeSeries, max_lag_steps: usize) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if max_lag_steps == 0 || 2 * max_lag_steps >= n {
        return Err(Error::InvalidInput(format!(
            "max lag {max_lag_steps} must be positive and below half the series length {n}"
        )));
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.values.iter().map(|v| (v - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let step = series.nominal_step();
    let t0 = series.times[0];
    let mut slots: HashMap<i64, f64> = HashMap::with_capacity(n);
    let mut order = Vec::with_capacity(n);
    for (t, v) in series.times.iter().zip(&series.values) {
        let pos = (t - t0) / step;
        let k = pos.round();
        if (pos - k).abs() <= GRID_SLACK {
            let k = k as i64;
            if let std::collections::hash_map::Entry::Vacant(e) = slots.entry(k) {
                e.insert(v - mean);
                order.push(k);
            }
        }
    }
    let mut acf = Vec::with_capacity(max_lag_steps + 1);
    acf.push((0.0, 1.0));
    for lag in 1..=max_lag_steps {
        let lag_i = lag as i64;
        let num: f64 = order
            .iter()
            .filter_map(|k| slots.get(&(k + lag_i)).map(|b| slots[k] * b))
            .sum();
        acf.push((lag as f64 * step, num / denom));
    }
    Ok(acf)
}

/// Population mean, variance and skewness.
pub fn empirical_moments(series: &TimeSeries) -> Result<Moments> {
    moments_of(&series.values)
}

fn moments_of(values: &[f64]) -> Result<Moments> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if variance == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let third = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    Ok(Moments {
        mean,
        variance,
        skewness: third / variance.powf(1.5),
    })
}

pub fn empirical_stats(series: &TimeSeries, max_lag_steps: usize) -> Result<EmpiricalStats> {
    let m = empirical_moments(series)?;
    Ok(EmpiricalStats {
        mean: m.mean,
        variance: m.variance,
        skewness: m.skewness,
        acf: empirical_acf(series, max_lag_steps)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcfFit {
    pub theta: f64,
    pub omega: f64,
    /// Sum of squared ACF residuals over the fitted lags.
    pub residual: f64,
}

/// Least-squares fit of (1 + θh)^{−(ω−1)} with no residual ceiling.
pub fn fit_acf(emp: &[(f64, f64)]) -> Result<AcfFit> {
    fit_acf_with(emp, f64::INFINITY)
}

/// As [`fit_acf`], failing when the best residual exceeds `ceiling`.
pub fn fit_acf_with(emp: &[(f64, f64)], ceiling: f64) -> Result<AcfFit> {
    let points: Vec<(f64, f64)> = emp.iter().copied().filter(|(h, _)| *h > 0.0).collect();
    if points.iter().filter(|(_, v)| *v > 0.0).count() < 3 {
        return Err(Error::FitFailed(
            "need at least 3 positive lags with positive ACF".into(),
        ));
    }
    if points.iter().all(|(_, v)| *v >= 1.0 - 1e-12) {
        return Err(Error::FitFailed("empirical ACF shows no decay".into()));
    }
    let mut lags: Vec<f64> = points.iter().map(|p| p.0).collect();
    lags.sort_by(f64::total_cmp);
    let median_lag = lags[lags.len() / 2];

    let sse = |x: &[f64]| {
        let theta = x[0].exp();
        let power = x[1].exp();
        points
            .iter()
            .map(|(h, v)| (v - (-power * (theta * h).ln_1p()).exp()).powi(2))
            .sum::<f64>()
    };
    let opts = SimplexOptions::default();
    let mut best: Option<AcfFit> = None;
    for theta0 in [0.01, 0.1, 1.0] {
        for omega0 in [1.2f64, 2.0, 4.0] {
            let x0 = [(theta0 / median_lag).ln(), (omega0 - 1.0).ln()];
            let res = minimize(sse, &x0, &opts);
            let fit = AcfFit {
                theta: res.x[0].exp(),
                omega: 1.0 + res.x[1].exp(),
                residual: res.value,
            };
            if fit.residual.is_finite() && best.is_none_or(|b| fit.residual < b.residual) {
                best = Some(fit);
            }
        }
    }
    let best =
        best.ok_or_else(|| Error::FitFailed("no start produced a finite residual".into()))?;
    if best.residual > ceiling {
        return Err(Error::FitFailed(format!(
            "best ACF residual {} exceeds ceiling {ceiling}",
            best.residual
        )));
    }
    if best.omega - 1.0 < 1e-8 || best.theta * median_lag < 1e-10 {
        return Err(Error::FitFailed(format!(
            "ACF fit ran to the boundary (theta = {}, omega = {})",
            best.theta, best.omega
        )));
    }
    Ok(best)
}

/// Sum of squared relative errors of mean and variance, plus skewness when
/// `include_skew`.
pub fn moment_error(model: &Moments, emp: &Moments, include_skew: bool) -> Result<f64> {
    if emp.mean == 0.0 {
        return Err(Error::DegenerateEmpirical("empirical mean is zero".into()));
    }
    if emp.variance == 0.0 {
        return Err(Error::DegenerateEmpirical(
            "empirical variance is zero".into(),
        ));
    }
    if include_skew && emp.skewness == 0.0 {
        return Err(Error::DegenerateEmpirical(
            "empirical skewness is zero".into(),
        ));
    }
    let rel = |m: f64, e: f64| ((m - e) / e).powi(2);
    let mut err = rel(model.mean, emp.mean) + rel(model.variance, emp.variance);
    if include_skew {
        err += rel(model.skewness, emp.skewness);
    }
    Ok(err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: SupJcirModel,
    pub y: f64,
    pub error_metric: f64,
    pub include_skew: bool,
    /// Per-statistic relative errors and optimizer bookkeeping.
    pub diagnostics: BTreeMap<String, f64>,
}

/// Errors within this of each other count as ties (broken by smaller β).
const TIE: f64 = 1e-15;

/// Fit (β, σ, a) with R fixed by (θ, ω) and μ = ((1−y)/y)βa.
///
/// The mean is R·a/y for every (β, σ), so a is pinned by the empirical mean
/// and the simplex only searches (ln β, ln σ), or ln σ alone when y = 1.
pub fn fit_moments(
    emp: &Moments,
    theta: f64,
    omega: f64,
    y: f64,
    include_skew: bool,
) -> Result<FitResult> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "y must lie in (0, 1], got {y}"
        )));
    }
    if !(emp.mean > 0.0) {
        return Err(Error::DegenerateEmpirical(format!(
            "a nonnegative process needs a positive mean, got {}",
            emp.mean
        )));
    }
    if !(emp.variance > 0.0) {
        return Err(Error::DegenerateEmpirical(
            "empirical variance is zero".into(),
        ));
    }
    let mixing = MixingMeasure::gamma(omega, theta)?;
    let r = mixing.inverse_moment();
    let a = y * emp.mean / r;
    let jump_share = (1.0 - y) / y;

    let build = |beta: f64, sigma: f64| -> Result<SupJcirModel> {
        let jumps = if y == 1.0 {
            JumpMeasure::None
        } else {
            JumpMeasure::exponential(jump_share * beta * a, beta)?
        };
        SupJcirModel::new(a, sigma, jumps, mixing.clone())
    };
    let objective = |beta: f64, sigma: f64| -> f64 {
        build(beta, sigma)
            .and_then(|m| m.stationary_moments())
            .and_then(|mo| moment_error(&mo, emp, include_skew))
            .unwrap_or(f64::NAN)
    };

    let sigma_ref = (2.0 * emp.variance / emp.mean).sqrt();
    let opts = SimplexOptions::default();
    let mut best: Option<(f64, f64, f64)> = None;
    let mut evals = 0usize;
    let mut starts = 0usize;
    let sigma_starts = [0.3, 0.7, 0.95];
    let beta_starts: &[f64] = if y == 1.0 {
        &[1.0]
    } else {
        &[0.3, 3.0, 30.0, 300.0]
    };
    for &bs in beta_starts {
        for &ss in &sigma_starts {
            starts += 1;
            let beta0 = bs / emp.mean;
            let sigma0 = ss * sigma_ref;
            let (beta, sigma, value) = if y == 1.0 {
                let res = minimize(|x| objective(beta0, x[0].exp()), &[sigma0.ln()], &opts);
                evals += res.evals;
                (beta0, res.x[0].exp(), res.value)
            } else {
                let res = minimize(
                    |x| objective(x[0].exp(), x[1].exp()),
                    &[beta0.ln(), sigma0.ln()],
                    &opts,
                );
                evals += res.evals;
                (res.x[0].exp(), res.x[1].exp(), res.value)
            };
            if !value.is_finite() {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, _, v)) => value < v - TIE || (value <= v + TIE && beta < b),
            };
            if better {
                best = Some((beta, sigma, value));
            }
        }
    }
    let (beta, sigma, _) =
        best.ok_or_else(|| Error::FitFailed("no start produced a finite moment error".into()))?;
    let model = build(beta, sigma)?;
    let fitted = model.stationary_moments()?;
    let error_metric = moment_error(&fitted, emp, include_skew)?;

    let mut diagnostics = BTreeMap::new();
    let rel = |m: f64, e: f64| (m - e) / e;
    diagnostics.insert("rel_err_mean".into(), rel(fitted.mean, emp.mean));
    diagnostics.insert(
        "rel_err_variance".into(),
        rel(fitted.variance, emp.variance),
    );
    if emp.skewness != 0.0 {
        diagnostics.insert(
            "rel_err_skewness".into(),
            rel(fitted.skewness, emp.skewness),
        );
    }
    diagnostics.insert("inverse_moment".into(), r);
    diagnostics.insert("starts".into(), starts as f64);
    diagnostics.insert("evaluations".into(), evals as f64);
    Ok(FitResult {
        model,
        y,
        error_metric,
        include_skew,
        diagnostics,
    })
}

/// The full two-step pipeline on a series.
pub fn fit_series(
    series: &TimeSeries,
    y: f64,
    include_skew: bool,
    max_lag_steps: usize,
) -> Result<(EmpiricalStats, AcfFit, FitResult)> {
    let stats = empirical_stats(series, max_lag_steps)?;
    let acf = fit_acf(&stats.acf)?;
    let fit = fit_moments(&stats.moments(), acf.theta, acf.omega, y, include_skew)?;
    Ok((stats, acf, fit))
}
