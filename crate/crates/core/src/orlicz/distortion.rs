//! Worst-case probability distortions attaining the stationary bounds and the
//! distorted models they induce.

use super::{ensure_admissible, Bound, RiskQuery};
use crate::error::{Error, Result};
use crate::jumps::{JumpMultiplier, ModulatedJumps};
use crate::mixing::{Atom, MixingMeasure};
use crate::orlicz::risk::DEFAULT_LIFT_ATOMS;
use crate::process::{sum_moments, JcirComponent, SupJcirModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRates {
    /// Relative-entropy production of the drift distortion per unit time.
    pub diff_rate: f64,
    /// Tsallis-divergence production of the jump distortion per unit time.
    pub jump_rate: f64,
}

/// The worst-case model: every component keeps its drift and diffusion
/// factor σ²r but reverts at r(1 ∓ ξ), and jumps arrive with g(z)ν(dz).
#[derive(Debug, Clone, PartialEq)]
pub enum DistortedModel {
    Gamma {
        a: f64,
        sigma: f64,
        omega: f64,
        theta_eff: f64,
        jumps: ModulatedJumps,
    },
    Discrete(Vec<JcirComponent>),
}

/// ξ = λ_diff Φ'(1) σ² p and the jump multiplier g at the stationary ρ = p.
pub fn worst_case_distortion(
    model: &SupJcirModel,
    query: &RiskQuery,
) -> Result<(f64, JumpMultiplier)> {
    ensure_admissible(model, query)?;
    let xi = query.lambda_diff * query.phi.d1() * model.sigma2() * query.p;
    let multiplier = if query.lambda_jump == 0.0 {
        JumpMultiplier::Unit
    } else {
        JumpMultiplier::WorstCase {
            phi: query.phi,
            p: query.p,
            lambda_jump: query.lambda_jump,
            q: query.q,
            bound: query.bound,
        }
    };
    Ok((xi, multiplier))
}

fn reversion_factor(xi: f64, bound: Bound) -> Result<f64> {
    match bound {
        Bound::Upper if xi >= 1.0 => Err(Error::DegenerateDistortion(xi)),
        Bound::Upper => Ok(1.0 - xi),
        Bound::Lower => Ok(1.0 + xi),
    }
}

fn scale_mixing(mixing: &MixingMeasure, factor: f64) -> Result<MixingMeasure> {
    match mixing {
        MixingMeasure::Gamma { omega, theta } => MixingMeasure::gamma(*omega, theta * factor),
        MixingMeasure::Discrete { atoms } => MixingMeasure::discrete(
            atoms
                .iter()
                .map(|a| Atom {
                    weight: a.weight,
                    rate: a.rate * factor,
                })
                .collect(),
        ),
    }
}

/// Reversion-speed distribution of the worst-case model.
pub fn distorted_mixing(model: &SupJcirModel, query: &RiskQuery) -> Result<MixingMeasure> {
    let (xi, _) = worst_case_distortion(model, query)?;
    scale_mixing(&model.mixing, reversion_factor(xi, query.bound)?)
}

pub fn distorted_model(model: &SupJcirModel, query: &RiskQuery) -> Result<DistortedModel> {
    let (xi, multiplier) = worst_case_distortion(model, query)?;
    let factor = reversion_factor(xi, query.bound)?;
    match &model.mixing {
        MixingMeasure::Gamma { omega, theta } => Ok(DistortedModel::Gamma {
            a: model.a,
            sigma: model.sigma,
            omega: *omega,
            theta_eff: theta * factor,
            jumps: ModulatedJumps {
                base: model.jumps,
                scale: 1.0,
                multiplier,
            },
        }),
        MixingMeasure::Discrete { atoms } => {
            let s2 = model.sigma2();
            Ok(DistortedModel::Discrete(
                atoms
                    .iter()
                    .map(|atom| JcirComponent {
                        drift_const: model.a * atom.weight,
                        reversion: atom.rate * factor,
                        diffusion_factor: s2 * atom.rate,
                        jumps: ModulatedJumps {
                            base: model.jumps,
                            scale: atom.weight,
                            multiplier,
                        },
                    })
                    .collect(),
            ))
        }
    }
}

/// ACF of the worst-case model at lag `h`.
pub fn distorted_acf(model: &SupJcirModel, query: &RiskQuery, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "lag must be nonnegative, got {h}"
        )));
    }
    Ok(distorted_mixing(model, query)?.acf(h))
}

/// Worst-case stationary mean and variance divided by the nominal ones,
/// summing component cumulants over a finite lift.
pub fn distorted_moment_ratios(model: &SupJcirModel, query: &RiskQuery) -> Result<(f64, f64)> {
    let lifted = model.discretized(DEFAULT_LIFT_ATOMS)?;
    let nominal = sum_moments(&lifted.components()?)?;
    let DistortedModel::Discrete(components) = distorted_model(&lifted, query)? else {
        unreachable!("a lifted model is discrete");
    };
    // the jump distortion is shared by every component; integrate it once
    let unit = ModulatedJumps {
        scale: 1.0,
        ..components[0].jumps
    };
    let m1 = unit.moment(1)?;
    let m2 = unit.moment(2)?;
    let (mut mean, mut variance) = (0.0, 0.0);
    for c in &components {
        let w = c.jumps.scale;
        let level = c.drift_const + w * m1;
        mean += level / c.reversion;
        variance += (c.riccati_shift() * level + 0.5 * w * m2) / c.reversion;
    }
    Ok((mean / nominal.mean, variance / nominal.variance))
}

/// Nominal stationary mean of each component of a discrete model.
pub fn stationary_mean_state(model: &SupJcirModel) -> Result<Vec<f64>> {
    let atoms = model
        .mixing
        .atoms()
        .ok_or_else(|| Error::InvalidInput("mean state needs a discrete mixing measure".into()))?;
    let level = model.a + model.jumps.moment(1)?;
    Ok(atoms.iter().map(|a| a.weight * level / a.rate).collect())
}

/// D_q(g) = (1 − q − g^q + q g)/(1 − q), the pointwise Tsallis divergence
/// of a density ratio g from 1; g ln g − g + 1 at q = 1.
pub fn tsallis_divergence(g: f64, q: f64) -> f64 {
    let e = g - 1.0;
    let v = if q == 1.0 {
        g * e.ln_1p() - e
    } else {
        // q e − (g^q − 1), arranged to keep accuracy for g near 1
        (q * e - (q * e.ln_1p()).exp_m1()) / (1.0 - q)
    };
    v.max(0.0)
}

/// Entropy production of the worst-case controls at state `x`.
pub fn entropy_rates(
    model: &SupJcirModel,
    query: &RiskQuery,
    state: &[f64],
) -> Result<EntropyRates> {
    let atoms = model.mixing.atoms().ok_or_else(|| {
        Error::InvalidInput("entropy rates need a discrete mixing measure".into())
    })?;
    if state.len() != atoms.len() {
        return Err(Error::InvalidInput(format!(
            "state has {} entries for {} components",
            state.len(),
            atoms.len()
        )));
    }
    let (_, multiplier) = worst_case_distortion(model, query)?;
    let scale = query.lambda_diff * query.phi.d1() * model.sigma * query.p;
    let diff_rate = 0.5
        * atoms
            .iter()
            .zip(state)
            .map(|(a, x)| scale * scale * a.rate * x.max(0.0))
            .sum::<f64>();
    let jump_rate = if multiplier.is_unit() {
        0.0
    } else {
        let q = query.q;
        let total_weight: f64 = atoms.iter().map(|a| a.weight).sum();
        total_weight
            * model
                .jumps
                .weighted_integral(|z| tsallis_divergence(multiplier.eval(z), q))?
    };
    Ok(EntropyRates {
        diff_rate,
        jump_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::JumpMeasure;
    use crate::numerics::{integrate_semi_infinite, ln_gamma, QuadratureSpec};
    use crate::orlicz::{q_exp, OrliczFunction};
    use crate::process::Horizon;

    fn model(jumps: JumpMeasure, mixing: MixingMeasure) -> SupJcirModel {
        SupJcirModel::new(1.0, 0.2, jumps, mixing).unwrap()
    }

    fn query(p: f64, q: f64, ld: f64, lj: f64, bound: Bound) -> RiskQuery {
        RiskQuery::new(p, OrliczFunction::Identity, q, ld, lj, bound).unwrap()
    }

    #[test]
    fn no_distortion_at_zero_lambdas() {
        let m = model(
            JumpMeasure::exponential(1.0, 5.0).unwrap(),
            MixingMeasure::gamma(2.0, 0.1).unwrap(),
        );
        let (xi, g) = worst_case_distortion(&m, &query(0.1, 0.5, 0.0, 0.0, Bound::Upper)).unwrap();
        assert_eq!(xi, 0.0);
        assert!(g.is_unit());
        assert_eq!(g.eval(3.0), 1.0);
    }

    #[test]
    fn xi_product_formula() {
        let m = model(JumpMeasure::None, MixingMeasure::gamma(2.0, 0.1).unwrap());
        let (xi, _) =
            worst_case_distortion(&m, &query(0.02, 0.75, 1000.0, 0.0, Bound::Upper)).unwrap();
        assert!((xi - 0.8).abs() < 1e-14);
    }

    #[test]
    fn upper_multiplier_example() {
        let m = model(
            JumpMeasure::exponential(1.0, 5.0).unwrap(),
            MixingMeasure::gamma(2.0, 0.1).unwrap(),
        );
        let (_, g) = worst_case_distortion(&m, &query(0.1, 0.5, 0.0, 2.0, Bound::Upper)).unwrap();
        let oracle = (1.0 + 0.5 * 2.0 * (0.1f64.exp() - 1.0)).powi(2);
        assert!((g.eval(1.0) - oracle).abs() < 1e-14);
        assert!((g.eval(1.0) - 1.221403).abs() < 1e-6);
    }

    #[test]
    fn lower_multiplier_in_unit_interval() {
        let m = model(
            JumpMeasure::exponential(1.0, 5.0).unwrap(),
            MixingMeasure::gamma(2.0, 0.1).unwrap(),
        );
        let (_, g) = worst_case_distortion(&m, &query(0.3, 1.5, 0.0, 4.0, Bound::Lower)).unwrap();
        for i in 1..200 {
            let v = g.eval(0.05 * i as f64);
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn degenerate_upper_distortion() {
        let m = model(JumpMeasure::None, MixingMeasure::gamma(2.0, 0.1).unwrap());
        let q = query(0.02, 0.75, 1250.0, 0.0, Bound::Upper);
        assert!(matches!(
            distorted_model(&m, &q),
            Err(Error::DegenerateDistortion(_))
        ));
        assert!(matches!(
            distorted_acf(&m, &q, 1.0),
            Err(Error::DegenerateDistortion(_))
        ));
        let lower = query(0.02, 1.25, 1250.0, 0.0, Bound::Lower);
        assert!(distorted_model(&m, &lower).is_ok());
    }

    #[test]
    fn gamma_scale_change() {
        let m = model(JumpMeasure::None, MixingMeasure::gamma(2.0, 0.4).unwrap());
        // ξ = λ·σ²·p = 0.25
        let q = query(0.5, 0.75, 12.5, 0.0, Bound::Upper);
        match distorted_model(&m, &q).unwrap() {
            DistortedModel::Gamma { theta_eff, .. } => assert!((theta_eff - 0.3).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distorted_acf_example_and_quadrature() {
        let m = SupJcirModel::new(
            1.0,
            1.0,
            JumpMeasure::None,
            MixingMeasure::gamma(2.0, 1.0).unwrap(),
        )
        .unwrap();
        // ξ = λσ²p = 0.5
        let q = query(0.5, 0.5, 1.0, 0.0, Bound::Upper);
        let v = distorted_acf(&m, &q, 2.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        // mixture over distorted speeds r(1 − ξ), weights π(dr)/r
        let (omega, theta, xi, h) = (2.0f64, 1.0f64, 0.5, 2.0);
        let ln_norm = ln_gamma(omega) + omega * theta.ln();
        let dens = |r: f64| ((omega - 1.0) * r.ln() - r / theta - ln_norm).exp();
        let spec = QuadratureSpec::default();
        let num =
            integrate_semi_infinite(|r| dens(r) / r * (-(1.0 - xi) * r * h).exp(), &spec).unwrap();
        let den = integrate_semi_infinite(|r| dens(r) / r, &spec).unwrap();
        assert!((v - num / den).abs() < 1e-8);
    }

    #[test]
    fn acf_ordering() {
        let m = model(JumpMeasure::None, MixingMeasure::gamma(2.5, 0.2).unwrap());
        let up = query(0.5, 0.75, 10.0, 0.0, Bound::Upper);
        let lo = query(0.5, 1.25, 10.0, 0.0, Bound::Lower);
        for &h in &[0.1, 1.0, 10.0, 1000.0] {
            let (u, n, l) = (
                distorted_acf(&m, &up, h).unwrap(),
                m.acf(h),
                distorted_acf(&m, &lo, h).unwrap(),
            );
            assert!(u > n && n > l, "h = {h}");
        }
    }

    #[test]
    fn moment_ratios_without_jumps() {
        let m = model(JumpMeasure::None, MixingMeasure::gamma(2.0, 0.4).unwrap());
        let q = query(0.5, 0.75, 12.5, 0.0, Bound::Upper);
        let (a, v) = distorted_moment_ratios(&m, &q).unwrap();
        assert!((a - 1.0 / 0.75).abs() < 1e-12, "{a}");
        assert!(v > a);
        let (a, v) =
            distorted_moment_ratios(&m, &query(0.5, 0.75, 0.0, 0.0, Bound::Upper)).unwrap();
        assert!((a - 1.0).abs() < 1e-13 && (v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn distorted_component_moments_match_finite_differences() {
        let mix = MixingMeasure::from_pairs(&[(0.3, 0.5), (0.7, 2.0)]).unwrap();
        let m = model(JumpMeasure::exponential(1.0, 8.0).unwrap(), mix);
        let q = query(0.5, 0.75, 3.0, 2.0, Bound::Upper);
        let DistortedModel::Discrete(comps) = distorted_model(&m, &q).unwrap() else {
            panic!()
        };
        for c in &comps {
            let mo = c.stationary_moments().unwrap();
            let h = 1e-3;
            let k = |p: f64| c.log_mgf(p, Horizon::Stationary).unwrap();
            let (k1, k2, k3, k4) = (k(h), k(2.0 * h), k(3.0 * h), k(4.0 * h));
            let d1 = (48.0 * k1 - 36.0 * k2 + 16.0 * k3 - 3.0 * k4) / (12.0 * h);
            let d2 = (-104.0 * k1 + 114.0 * k2 - 56.0 * k3 + 11.0 * k4) / (12.0 * h * h);
            assert!((d1 - mo.mean).abs() < 1e-5 * mo.mean, "{d1} vs {}", mo.mean);
            assert!(
                (d2 - mo.variance).abs() < 1e-3 * mo.variance,
                "{d2} vs {}",
                mo.variance
            );
        }
    }

    #[test]
    fn zero_distortion_component_is_nominal() {
        let mix = MixingMeasure::from_pairs(&[(0.3, 0.5), (0.7, 2.0)]).unwrap();
        let m = model(JumpMeasure::exponential(1.0, 8.0).unwrap(), mix);
        let q = query(0.5, 0.75, 0.0, 0.0, Bound::Upper);
        let DistortedModel::Discrete(comps) = distorted_model(&m, &q).unwrap() else {
            panic!()
        };
        assert_eq!(comps, m.components().unwrap());
    }

    #[test]
    fn entropy_examples() {
        let mix = MixingMeasure::from_pairs(&[(1.0, 1.0)]).unwrap();
        let m =
            SupJcirModel::new(1.0, 0.5, JumpMeasure::exponential(1.0, 5.0).unwrap(), mix).unwrap();
        let r = entropy_rates(&m, &query(0.1, 0.5, 0.0, 0.0, Bound::Upper), &[1.0]).unwrap();
        assert_eq!((r.diff_rate, r.jump_rate), (0.0, 0.0));
        let r = entropy_rates(&m, &query(0.1, 0.5, 2.0, 0.0, Bound::Upper), &[1.0]).unwrap();
        // φ* = λΦ'(1)σρ√(rx) = 0.1
        let phi_star: f64 = 2.0 * 1.0 * 0.5 * 0.1 * 1.0;
        assert!((r.diff_rate - 0.5 * phi_star * phi_star).abs() < 1e-16);
        assert!((r.diff_rate - 0.005).abs() < 1e-15);
        let r = entropy_rates(&m, &query(0.1, 0.5, 0.0, 2.0, Bound::Upper), &[1.0]).unwrap();
        assert!(r.jump_rate > 0.0);
    }

    #[test]
    fn jump_entropy_against_oracle() {
        let mix = MixingMeasure::from_pairs(&[(1.0, 1.0)]).unwrap();
        let m =
            SupJcirModel::new(1.0, 0.5, JumpMeasure::exponential(1.0, 5.0).unwrap(), mix).unwrap();
        let (p, q, lam) = (0.1, 0.5, 2.0);
        let r = entropy_rates(&m, &query(p, q, 0.0, lam, Bound::Upper), &[1.0]).unwrap();
        // midpoint sum with the divergence written in its textbook form
        let n = 400_000;
        let h = 20.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let z = (i as f64 + 0.5) * h;
                let g = q_exp(lam * ((p * z).exp() - 1.0), q).unwrap();
                (1.0 - q - g.powf(q) + q * g) / (1.0 - q) * 5.0 * (-5.0 * z).exp() * h
            })
            .sum();
        assert!(
            (r.jump_rate - oracle).abs() < 1e-8 * oracle,
            "{} vs {oracle}",
            r.jump_rate
        );
    }

    #[test]
    fn tsallis_limits() {
        assert_eq!(tsallis_divergence(1.0, 0.5), 0.0);
        assert_eq!(tsallis_divergence(1.0, 1.0), 0.0);
        let a = tsallis_divergence(1.7, 1.0 + 1e-7);
        let b = tsallis_divergence(1.7, 1.0);
        assert!((a - b).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn divergence_nonnegative(g in 1e-6f64..50.0, q in 0.05f64..3.0) {
                prop_assert!(tsallis_divergence(g, q) >= 0.0);
            }

            #[test]
            fn gamma_tail_power_preserved(omega in 1.2f64..5.0, theta in 0.05f64..2.0, ld in 0.0f64..20.0) {
                let m = SupJcirModel::new(1.0, 0.2, JumpMeasure::None, MixingMeasure::gamma(omega, theta).unwrap()).unwrap();
                let q = RiskQuery::new(0.5, OrliczFunction::Identity, 0.75, ld, 0.0, Bound::Upper).unwrap();
                let (h1, h2) = (1e7, 2e7);
                let slope = (distorted_acf(&m, &q, h2).unwrap().ln() - distorted_acf(&m, &q, h1).unwrap().ln()) / 2f64.ln();
                prop_assert!((slope + (omega - 1.0)).abs() < 1e-3);
            }
        }
    }
}
