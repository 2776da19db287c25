//! Disutility bounds: ρ coefficients, τ integrals and normalized reports.

use std::cell::RefCell;

use super::distortion::{self, EntropyRates};
use super::{ensure_admissible, q_exp_m1, Bound, OrliczFunction, RiskQuery};
use crate::error::{Error, Result};
use crate::jumps::JumpMeasure;
use crate::mixing::MixingMeasure;
use crate::numerics::{integrate_semi_infinite, solve_ode, OdeSpec, QuadratureSpec};
use crate::process::{riccati_exponent, riccati_integral, SupJcirModel};

/// Atoms used when a Gamma mixing has to be lifted to finitely many components.
pub const DEFAULT_LIFT_ATOMS: usize = 1000;

/// Deviations of U past 1 smaller than this are quadrature noise.
const U_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub bound: Bound,
    pub log_disutility: f64,
    pub disutility: f64,
    pub baseline_log_disutility: f64,
    pub normalized_u: f64,
    pub xi: f64,
    /// Mixing measure of the worst-case model; `None` when it does not exist.
    pub distorted_mixing: Option<MixingMeasure>,
    /// Worst-case mean and variance relative to the nominal model.
    pub normalized_a: Option<f64>,
    pub normalized_v: Option<f64>,
    /// Entropy production of the worst case at the stationary mean state.
    pub entropy: Option<EntropyRates>,
}

impl RiskReport {
    pub fn baseline_disutility(&self) -> f64 {
        self.baseline_log_disutility.exp()
    }
}

/// ρ coefficient of the state in log Ψ at `time_to_horizon` before the
/// horizon, for a component with reversion speed `r`.
pub fn rho(query: &RiskQuery, model: &SupJcirModel, r: f64, time_to_horizon: f64) -> Result<f64> {
    query.validate()?;
    let limit = query.p_limit(model);
    if !(query.p < limit) {
        let condition = match query.bound {
            Bound::Upper => "upper bound requires p < min{2/(sigma^2 (1 + shift)), beta}",
            Bound::Lower => "lower bound requires p < min{2/sigma^2, beta}",
        };
        return Err(Error::ParameterOutOfRange(format!(
            "{condition}: p = {}, limit = {limit}",
            query.p
        )));
    }
    riccati_exponent(query.p, r, query.sigma2_half(model), time_to_horizon)
}

/// Jump contribution to dτ per unit of ν at exponent ρ:
/// `±(1/(λΦ'(1))) ∫ (q_exp(±λ(Φ(e^{ρz}) − 1)) − 1) ν(dz)`, or its λ → 0 limit
/// `∫ (Φ(e^{ρz}) − 1) ν(dz) / Φ'(1)`.
pub(crate) fn jump_term(nu: &JumpMeasure, query: &RiskQuery, rho: f64) -> Result<f64> {
    if nu.is_none() || rho == 0.0 {
        return Ok(0.0);
    }
    let phi = query.phi;
    let d1 = phi.d1();
    let lambda = query.lambda_jump;
    if lambda == 0.0 {
        if phi == OrliczFunction::Identity {
            return nu.exp_compensator(rho);
        }
        return Ok(nu.weighted_integral(|z| phi.exp_shift(rho * z))? / d1);
    }
    let sign = query.bound.sign();
    let q = query.q;
    let integral = nu.weighted_integral(|z| {
        q_exp_m1(sign * lambda * phi.exp_shift(rho * z), q).unwrap_or(f64::NAN)
    })?;
    Ok(sign * integral / (lambda * d1))
}

/// τ_{−∞}: the stationary log-disutility bound.
///
/// Every component at speed r sees ρ(r s) = ρ₁(r s), so the superposition
/// integral factors through R for both mixing families.
pub fn stationary_log_disutility(model: &SupJcirModel, query: &RiskQuery) -> Result<f64> {
    model.validate()?;
    ensure_admissible(model, query)?;
    let p = query.p;
    let half = query.sigma2_half(model);
    let drift = model.a * riccati_integral(p, 1.0, half, None)?;
    let jumps = if model.jumps.is_none() {
        0.0
    } else {
        let nu = model.jumps;
        let failure = RefCell::new(None);
        let value = integrate_semi_infinite(
            |s| {
                let r = riccati_exponent(p, 1.0, half, s).and_then(|u| jump_term(&nu, query, u));
                r.unwrap_or_else(|e| {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            },
            &QuadratureSpec::default().with_truncation(6.0),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        value?
    };
    Ok(model.inverse_moment() * (drift + jumps))
}

/// τ_{−∞} of the same query without model uncertainty (λ's → 0, Φ kept).
pub fn stationary_baseline(model: &SupJcirModel, query: &RiskQuery) -> Result<f64> {
    stationary_log_disutility(model, &query.baseline())
}

/// log Ψ_t(x) = Σ ρ_t^{(i)} x_i + τ_t for a finite lift, with τ integrated
/// backward from τ_T = 0.
pub fn finite_horizon_log_disutility(
    model: &SupJcirModel,
    query: &RiskQuery,
    t: f64,
    horizon: f64,
    state: &[f64],
) -> Result<f64> {
    model.validate()?;
    ensure_admissible(model, query)?;
    let atoms = model.mixing.atoms().ok_or_else(|| {
        Error::InvalidInput("finite-horizon evaluation needs a discrete mixing measure".into())
    })?;
    if state.len() != atoms.len() {
        return Err(Error::InvalidInput(format!(
            "state has {} entries for {} components",
            state.len(),
            atoms.len()
        )));
    }
    if state.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidInput(
            "state entries must be nonnegative".into(),
        ));
    }
    if !(t <= horizon) {
        return Err(Error::ParameterOutOfRange(format!(
            "need t <= T, got t = {t}, T = {horizon}"
        )));
    }
    let remaining = horizon - t;
    let mut state_part = 0.0;
    for (atom, x) in atoms.iter().zip(state) {
        state_part += rho(query, model, atom.rate, remaining)? * x;
    }
    if remaining == 0.0 {
        return Ok(state_part);
    }
    // dτ/du in remaining time u = T − t
    let failure = RefCell::new(None);
    let nu = model.jumps;
    let rhs = |u: f64, _tau: f64| {
        let mut total = 0.0;
        for atom in atoms {
            let step = rho(query, model, atom.rate, u)
                .and_then(|r| Ok(atom.weight * (model.a * r + jump_term(&nu, query, r)?)));
            match step {
                Ok(v) => total += v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return f64::NAN;
                }
            }
        }
        total
    };
    let tau = solve_ode(rhs, 0.0, 0.0, remaining, &OdeSpec::default());
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(state_part + tau?)
}

/// U = exp(τ − τ_baseline), with sub-slack excursions past 1 snapped back.
pub fn normalized_ratio(log_disutility: f64, baseline_log_disutility: f64, bound: Bound) -> f64 {
    let u = (log_disutility - baseline_log_disutility).exp();
    match bound {
        Bound::Upper if u < 1.0 && 1.0 - u < U_SLACK => 1.0,
        Bound::Lower if u > 1.0 && u - 1.0 < U_SLACK => 1.0,
        _ => u,
    }
}

/// Stationary bound with uncertainty, its no-uncertainty baseline, the
/// normalized ratio U and the worst-case diagnostics.
pub fn normalized_disutility(model: &SupJcirModel, query: &RiskQuery) -> Result<RiskReport> {
    let tau = stationary_log_disutility(model, query)?;
    let base = stationary_baseline(model, query)?;
    let u = normalized_ratio(tau, base, query.bound);
    let (xi, _) = distortion::worst_case_distortion(model, query)?;
    let (distorted_mixing, normalized_a, normalized_v, entropy) =
        match distortion::distorted_mixing(model, query) {
            Ok(mix) => {
                let (a, v) = distortion::distorted_moment_ratios(model, query)?;
                let lifted = model.discretized(DEFAULT_LIFT_ATOMS)?;
                let state = distortion::stationary_mean_state(&lifted)?;
                let rates = distortion::entropy_rates(&lifted, query, &state)?;
                (Some(mix), Some(a), Some(v), Some(rates))
            }
            Err(Error::DegenerateDistortion(_)) => (None, None, None, None),
            Err(e) => return Err(e),
        };
    Ok(RiskReport {
        bound: query.bound,
        log_disutility: tau,
        disutility: tau.exp(),
        baseline_log_disutility: base,
        normalized_u: u,
        xi,
        distorted_mixing,
        normalized_a,
        normalized_v,
        entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_interval;

    fn gamma_model(jumps: JumpMeasure) -> SupJcirModel {
        SupJcirModel::new(0.8, 0.6, jumps, MixingMeasure::gamma(2.5, 0.3).unwrap()).unwrap()
    }

    fn query(p: f64, phi: OrliczFunction, q: f64, ld: f64, lj: f64, bound: Bound) -> RiskQuery {
        RiskQuery::new(p, phi, q, ld, lj, bound).unwrap()
    }

    #[test]
    fn rho_terminal_value_and_reduction() {
        let m = gamma_model(JumpMeasure::exponential(1.0, 5.0).unwrap());
        let q = query(0.4, OrliczFunction::Identity, 0.5, 0.0, 0.0, Bound::Upper);
        assert_eq!(rho(&q, &m, 2.0, 0.0).unwrap(), 0.4);
        for &s in &[0.1, 1.0, 7.0] {
            let plain = riccati_exponent(0.4, 2.0, 0.5 * m.sigma2(), s).unwrap();
            assert_eq!(rho(&q, &m, 2.0, s).unwrap(), plain);
        }
    }

    #[test]
    fn rho_upper_example() {
        let m = SupJcirModel::new(
            1.0,
            1.0,
            JumpMeasure::None,
            MixingMeasure::gamma(2.0, 1.0).unwrap(),
        )
        .unwrap();
        let q = query(0.1, OrliczFunction::Identity, 0.5, 1.0, 0.0, Bound::Upper);
        let v = rho(&q, &m, 1.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((v - 1.0 / (1.0 + 9.0 * e)).abs() < 1e-15);
        assert!((v - 0.039270).abs() < 1e-6);
        let ode = solve_ode(|_, u| -u + u * u, 0.1, 0.0, 1.0, &OdeSpec::default()).unwrap();
        assert!((v - ode).abs() < 1e-8 * v);
    }

    #[test]
    fn rho_names_violated_condition() {
        let m = SupJcirModel::new(
            1.0,
            1.0,
            JumpMeasure::None,
            MixingMeasure::gamma(2.0, 1.0).unwrap(),
        )
        .unwrap();
        let q = query(1.5, OrliczFunction::Identity, 0.5, 1.0, 0.0, Bound::Upper);
        match rho(&q, &m, 1.0, 1.0) {
            Err(Error::ParameterOutOfRange(msg)) => assert!(msg.contains("upper bound")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_baseline_is_log_mgf() {
        for jumps in [
            JumpMeasure::None,
            JumpMeasure::exponential(1.5, 4.0).unwrap(),
            JumpMeasure::tempered_stable(0.5, 4.0, 0.4).unwrap(),
        ] {
            let m = gamma_model(jumps);
            let up = query(0.5, OrliczFunction::Identity, 0.75, 0.0, 0.0, Bound::Upper);
            let lo = RiskQuery {
                q: 1.5,
                bound: Bound::Lower,
                ..up
            };
            let k = m.log_mgf(0.5).unwrap();
            assert!((stationary_log_disutility(&m, &up).unwrap() - k).abs() < 1e-8);
            assert!((stationary_log_disutility(&m, &lo).unwrap() - k).abs() < 1e-8);
        }
    }

    #[test]
    fn no_jump_upper_closed_form() {
        let m = gamma_model(JumpMeasure::None);
        let q = query(0.5, OrliczFunction::Identity, 0.75, 0.7, 3.0, Bound::Upper);
        let s2 = m.sigma2() * 1.7;
        let exact = -m.inverse_moment() * m.a * (2.0 / s2) * (1.0 - 0.5 * s2 / 2.0).ln();
        let got = stationary_log_disutility(&m, &q).unwrap();
        assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
    }

    #[test]
    fn small_lambda_consistency() {
        let m = gamma_model(JumpMeasure::exponential(1.5, 4.0).unwrap());
        let k = m.log_mgf(0.5).unwrap();
        for (q, bound) in [(0.75, Bound::Upper), (1.5, Bound::Lower)] {
            let qq = query(0.5, OrliczFunction::Identity, q, 1e-8, 1e-8, bound);
            let tau = stationary_log_disutility(&m, &qq).unwrap();
            assert!((tau - k).abs() < 1e-6, "{bound}: {tau} vs {k}");
        }
    }

    #[test]
    fn ordering_and_monotonicity() {
        let m = gamma_model(JumpMeasure::exponential(1.5, 4.0).unwrap());
        let k = m.log_mgf(0.3).unwrap();
        let mut prev_up = f64::NEG_INFINITY;
        let mut prev_lo = f64::INFINITY;
        for i in 0..6 {
            let l = 0.2 * i as f64;
            let up = query(
                0.3,
                OrliczFunction::Identity,
                0.75,
                l,
                2.0 * l,
                Bound::Upper,
            );
            let lo = query(
                0.3,
                OrliczFunction::Identity,
                1.25,
                l,
                2.0 * l,
                Bound::Lower,
            );
            let tu = stationary_log_disutility(&m, &up).unwrap();
            let tl = stationary_log_disutility(&m, &lo).unwrap();
            assert!(tl <= k + 1e-8 && k <= tu + 1e-8);
            assert!(tu >= prev_up - 1e-10 && tl <= prev_lo + 1e-10);
            prev_up = tu;
            prev_lo = tl;
        }
    }

    #[test]
    fn finite_horizon_terminal_and_oracle() {
        let mix = MixingMeasure::from_pairs(&[(1.0, 0.5)]).unwrap();
        let m = SupJcirModel::new(1.2, 0.7, JumpMeasure::None, mix).unwrap();
        let q = query(0.3, OrliczFunction::Identity, 0.5, 0.0, 0.0, Bound::Upper);
        assert!(
            (finite_horizon_log_disutility(&m, &q, 2.0, 2.0, &[1.7]).unwrap() - 0.3 * 1.7).abs()
                < 1e-15
        );
        let span = 3.0;
        let got = finite_horizon_log_disutility(&m, &q, 0.0, span, &[0.0]).unwrap();
        let half = 0.5 * m.sigma2();
        let oracle = 1.2
            * integrate_interval(
                |s| riccati_exponent(0.3, 0.5, half, s).unwrap(),
                0.0,
                span,
                &QuadratureSpec::default(),
            )
            .unwrap();
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn finite_horizon_converges_to_stationary() {
        let mix = MixingMeasure::from_pairs(&[(0.4, 0.5), (0.6, 2.0)]).unwrap();
        let m =
            SupJcirModel::new(1.0, 0.5, JumpMeasure::exponential(0.8, 6.0).unwrap(), mix).unwrap();
        let q = query(0.4, OrliczFunction::Identity, 0.5, 0.0, 0.0, Bound::Upper);
        let stat = stationary_log_disutility(&m, &q).unwrap();
        let mut prev = 0.0;
        for &span in &[1.0, 10.0, 100.0] {
            let v = finite_horizon_log_disutility(&m, &q, 0.0, span, &[0.0, 0.0]).unwrap();
            assert!(v > prev && v <= stat + 1e-9);
            prev = v;
        }
        assert!((stat - prev).abs() < 1e-6, "{stat} vs {prev}");
    }

    #[test]
    fn zero_lambdas_give_unit_u() {
        let m = gamma_model(JumpMeasure::exponential(1.5, 4.0).unwrap());
        let phi = OrliczFunction::power_convex(1.5).unwrap();
        let q = query(0.2, phi, 0.75, 0.0, 0.0, Bound::Upper);
        let r = normalized_disutility(&m, &q).unwrap();
        assert_eq!(r.normalized_u, 1.0);
        assert_eq!(r.xi, 0.0);
        assert!((r.normalized_a.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.entropy.unwrap().diff_rate, 0.0);
    }

    #[test]
    fn report_ranges() {
        let m = gamma_model(JumpMeasure::exponential(1.5, 4.0).unwrap());
        let up = query(0.2, OrliczFunction::Identity, 0.75, 0.5, 1.0, Bound::Upper);
        let r = normalized_disutility(&m, &up).unwrap();
        assert!(
            r.normalized_u > 1.0
                && r.normalized_a.unwrap() >= 1.0
                && r.normalized_v.unwrap() >= 1.0
        );
        let sqrt = OrliczFunction::power_concave(2.0).unwrap();
        let lo = query(0.2, sqrt, 1.5, 0.5, 1.0, Bound::Lower);
        let r = normalized_disutility(&m, &lo).unwrap();
        assert!(r.normalized_u > 0.0 && r.normalized_u < 1.0 && r.normalized_a.unwrap() <= 1.0);
    }

    #[test]
    fn inadmissible_query_is_rejected() {
        let m = gamma_model(JumpMeasure::exponential(1.5, 4.0).unwrap());
        let q = query(0.2, OrliczFunction::Identity, 1.0, 0.5, 1.0, Bound::Upper);
        assert!(matches!(
            stationary_log_disutility(&m, &q),
            Err(Error::Inadmissible(_))
        ));
    }
}
