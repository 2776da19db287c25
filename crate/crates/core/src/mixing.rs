//! The distribution π of reversion speeds across the superposed components.

use crate::error::{Error, Result};
use crate::numerics::gamma_quantile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixingMeasure {
    /// π(dr) ∝ r^{ω−1} e^{−r/θ} dr, shape ω > 1 and scale θ (1/time).
    Gamma { omega: f64, theta: f64 },
    /// Finite lift: weights c_i summing to one at strictly increasing rates r_i.
    Discrete { atoms: Vec<Atom> },
}

impl MixingMeasure {
    pub fn gamma(omega: f64, theta: f64) -> Result<Self> {
        if !(omega > 1.0) || !omega.is_finite() {
            return Err(Error::invalid(
                "mixing.omega",
                format!("shape must exceed 1 for a finite inverse moment, got {omega}"),
            ));
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::invalid(
                "mixing.theta",
                format!("must be positive, got {theta}"),
            ));
        }
        Ok(Self::Gamma { omega, theta })
    }

    pub fn discrete(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid(
                "mixing.atoms",
                "at least one atom is required",
            ));
        }
        for a in &atoms {
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::invalid(
                    "mixing.weights",
                    format!("weight {} is not positive", a.weight),
                ));
            }
            if !(a.rate > 0.0) || !a.rate.is_finite() {
                return Err(Error::invalid(
                    "mixing.rates",
                    format!("rate {} is not positive and finite", a.rate),
                ));
            }
        }
        if atoms.windows(2).any(|w| !(w[1].rate > w[0].rate)) {
            return Err(Error::invalid(
                "mixing.rates",
                "rates must be strictly increasing",
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "mixing.weights",
                format!("weights sum to {total}, not 1"),
            ));
        }
        Ok(Self::Discrete { atoms })
    }

    /// Convenience for `(weight, rate)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::discrete(
            pairs
                .iter()
                .map(|&(weight, rate)| Atom { weight, rate })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gamma { omega, theta } => Self::gamma(*omega, *theta).map(|_| ()),
            Self::Discrete { atoms } => Self::discrete(atoms.clone()).map(|_| ()),
        }
    }

    /// R = ∫ π(dr) / r.
    pub fn inverse_moment(&self) -> f64 {
        match self {
            Self::Gamma { omega, theta } => 1.0 / (theta * (omega - 1.0)),
            Self::Discrete { atoms } => atoms.iter().map(|a| a.weight / a.rate).sum(),
        }
    }

    /// Autocorrelation of the superposition at lag `h`.
    pub fn acf(&self, h: f64) -> f64 {
        let h = h.max(0.0);
        match self {
            Self::Gamma { omega, theta } => (1.0 + theta * h).powf(-(omega - 1.0)),
            Self::Discrete { atoms } => {
                let r = self.inverse_moment();
                atoms
                    .iter()
                    .map(|a| a.weight / a.rate * (-a.rate * h).exp())
                    .sum::<f64>()
                    / r
            }
        }
    }

    /// Equal-weight atoms at the Gamma quantiles (i − 1/2)/n.
    pub fn quantile_discretize(&self, n: usize) -> Result<MixingMeasure> {
        let Self::Gamma { omega, theta } = *self else {
            return Err(Error::InvalidInput(
                "quantile discretization needs a Gamma mixing measure".into(),
            ));
        };
        if n == 0 {
            return Err(Error::InvalidInput("need at least one atom".into()));
        }
        let weight = 1.0 / n as f64;
        let mut atoms = Vec::with_capacity(n);
        for i in 0..n {
            let prob = (i as f64 + 0.5) / n as f64;
            atoms.push(Atom {
                weight,
                rate: gamma_quantile(omega, theta, prob)?,
            });
        }
        // equal weights 1/n can miss 1 by an ulp or two; renormalize the last one
        let partial: f64 = atoms[..n - 1].iter().map(|a| a.weight).sum();
        atoms[n - 1].weight = 1.0 - partial;
        Self::discrete(atoms)
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match self {
            Self::Discrete { atoms } => Some(atoms),
            Self::Gamma { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_semi_infinite, ln_gamma, QuadratureSpec};

    fn gamma_density(omega: f64, theta: f64) -> impl Fn(f64) -> f64 {
        let log_norm = ln_gamma(omega) + omega * theta.ln();
        move |r: f64| ((omega - 1.0) * r.ln() - r / theta - log_norm).exp()
    }

    #[test]
    fn inverse_moment_gamma_against_quadrature() {
        let g = MixingMeasure::gamma(2.0, 0.5).unwrap();
        assert!((g.inverse_moment() - 2.0).abs() < 1e-15);
        let dens = gamma_density(2.0, 0.5);
        let q = integrate_semi_infinite(|r| dens(r) / r, &QuadratureSpec::default()).unwrap();
        assert!((q - 2.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_moment_discrete() {
        let d = MixingMeasure::from_pairs(&[(0.5, 1.0), (0.5, 2.0)]).unwrap();
        assert!((d.inverse_moment() - 0.75).abs() < 1e-15);
        let single = MixingMeasure::from_pairs(&[(1.0, 4.0)]).unwrap();
        assert_eq!(single.inverse_moment(), 0.25);
    }

    #[test]
    fn single_quantile_atom_is_the_median() {
        let g = MixingMeasure::gamma(2.0, 1.0).unwrap();
        let d = g.quantile_discretize(1).unwrap();
        let atoms = d.atoms().unwrap();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].weight, 1.0);
        // independent oracle: bisection on the closed-form CDF 1 − (1 + x)e^{−x}
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - (1.0 + mid) * (-mid).exp() < 0.5 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((atoms[0].rate - lo).abs() < 1e-10);
        assert!((atoms[0].rate - 1.67835).abs() < 1e-5);
    }

    #[test]
    fn equal_weights() {
        let g = MixingMeasure::gamma(3.0, 0.2).unwrap();
        let d = g.quantile_discretize(3).unwrap();
        for a in d.atoms().unwrap() {
            assert!((a.weight - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn discretized_inverse_moment_converges() {
        for &(omega, theta) in &[(2.0, 0.5), (2.5, 0.3), (4.0, 1.0)] {
            let g = MixingMeasure::gamma(omega, theta).unwrap();
            let r = g.inverse_moment();
            let errs: Vec<f64> = [10, 100, 1000]
                .iter()
                .map(|&n| (g.quantile_discretize(n).unwrap().inverse_moment() - r).abs() / r)
                .collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
            // the lowest atom sits near the (1/2n)-quantile, so the error decays like n^{1/ω − 1}
            assert!(
                errs[2] < 2.0 * 1000f64.powf(1.0 / omega - 1.0),
                "{omega}: {errs:?}"
            );
        }
    }

    #[test]
    fn discretized_inverse_moment_against_statrs_quantiles() {
        use statrs::distribution::{ContinuousCDF, Gamma};
        let (omega, theta, n) = (2.0, 0.5, 1000);
        let dist = Gamma::new(omega, 1.0 / theta).unwrap();
        let oracle: f64 = (0..n)
            .map(|i| 1.0 / dist.inverse_cdf((i as f64 + 0.5) / n as f64))
            .sum::<f64>()
            / n as f64;
        let ours = MixingMeasure::gamma(omega, theta)
            .unwrap()
            .quantile_discretize(n)
            .unwrap()
            .inverse_moment();
        assert!((ours - oracle).abs() < 1e-6 * oracle, "{ours} vs {oracle}");
        // midpoint quantiles leave a 1.35% shortfall here
        assert!(((2.0 - ours) / 2.0 - 0.0135).abs() < 1e-3);
    }

    #[test]
    fn gamma_acf_examples() {
        let g = MixingMeasure::gamma(2.0, 1.0).unwrap();
        assert_eq!(g.acf(0.0), 1.0);
        assert!((g.acf(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_acf_matches_mixture_quadrature() {
        let (omega, theta, h) = (2.5, 0.2, 5.0);
        let g = MixingMeasure::gamma(omega, theta).unwrap();
        let dens = gamma_density(omega, theta);
        let r = g.inverse_moment();
        let q =
            integrate_semi_infinite(|x| (-x * h).exp() * dens(x) / x, &QuadratureSpec::default())
                .unwrap()
                / r;
        assert!((g.acf(h) - q).abs() < 1e-8, "{} vs {q}", g.acf(h));
    }

    #[test]
    fn discrete_acf_converges_to_gamma() {
        let g = MixingMeasure::gamma(2.5, 0.3).unwrap();
        let mut prev = [f64::INFINITY; 3];
        for &n in &[500, 2000, 8000] {
            let d = g.quantile_discretize(n).unwrap();
            assert_eq!(d.acf(0.0), 1.0);
            for (k, &h) in [0.1, 1.0, 10.0].iter().enumerate() {
                let err = (d.acf(h) - g.acf(h)).abs();
                assert!(err < prev[k], "n = {n}, h = {h}");
                prev[k] = err;
            }
        }
        assert!(prev.iter().all(|e| *e < 2e-3), "{prev:?}");
    }

    #[test]
    fn invariants_enforced() {
        assert!(MixingMeasure::gamma(1.0, 1.0).is_err());
        assert!(MixingMeasure::gamma(2.0, 0.0).is_err());
        assert!(MixingMeasure::from_pairs(&[(0.5, 1.0), (0.4, 2.0)]).is_err());
        assert!(MixingMeasure::from_pairs(&[(0.5, 2.0), (0.5, 1.0)]).is_err());
        assert!(MixingMeasure::from_pairs(&[(1.0, -1.0)]).is_err());
        assert!(MixingMeasure::from_pairs(&[]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gamma_acf_decreasing_convex(omega in 1.05f64..6.0, theta in 0.01f64..5.0,
                                           h in 0.0f64..100.0, dh in 0.01f64..10.0) {
                let g = MixingMeasure::gamma(omega, theta).unwrap();
                let (a, b, c) = (g.acf(h), g.acf(h + dh), g.acf(h + 2.0 * dh));
                prop_assert!(a > b && b > c);
                prop_assert!(b <= 0.5 * (a + c) + 1e-15);
                prop_assert!(a <= 1.0 && c > 0.0);
            }
        }
    }
}
