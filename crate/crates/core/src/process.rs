//! The superposed jump-CIR model: Riccati exponent, stationary log-MGF,
//! stationary moments and autocorrelation.
//!
//! Each component solves `dX = (a c − r X) dt + σ √(r X) dB + dL`, and the
//! stationary log-MGF of the superposition factors as
//! `R ∫₀^∞ { a u₁(s) + ∫ (e^{u₁(s) z} − 1) ν(dz) } ds`, with `u₁` the
//! Riccati exponent at unit reversion speed.

use crate::error::{Error, Result};
use crate::jumps::{JumpMeasure, ModulatedJumps};
use crate::mixing::MixingMeasure;
use crate::numerics::{integrate_interval, integrate_semi_infinite, QuadratureSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SupJcirModel {
    pub a: f64,
    pub sigma: f64,
    pub jumps: JumpMeasure,
    pub mixing: MixingMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

/// One generalized JCIR component `dX = (drift − κX)dt + √(dX) dW + dJ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcirComponent {
    pub drift_const: f64,
    pub reversion: f64,
    pub diffusion_factor: f64,
    pub jumps: ModulatedJumps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Integrate the exponent over `[0, S]`.
    Finite(f64),
    Stationary,
}

/// Closed-form solution of `u' = −r u + A r u²`, `u(0) = p`:
/// `u(s) = 1 / (A + (1/p − A) e^{rs})`.
///
/// `sigma2_half` may be negative (lower-bound shifts larger than one); only
/// `1/p − A > 0` is required.
pub fn riccati_exponent(p: f64, r: f64, sigma2_half: f64, s: f64) -> Result<f64> {
    check_riccati(p, r, sigma2_half)?;
    if s < 0.0 {
        return Err(Error::ParameterOutOfRange(format!(
            "negative time to horizon {s}"
        )));
    }
    if s == 0.0 {
        return Ok(p);
    }
    Ok(1.0 / (sigma2_half + (1.0 / p - sigma2_half) * (r * s).exp()))
}

/// ∫₀^S u(s) ds for the Riccati exponent; `None` means S = ∞.
pub fn riccati_integral(p: f64, r: f64, sigma2_half: f64, horizon: Option<f64>) -> Result<f64> {
    check_riccati(p, r, sigma2_half)?;
    let pa = p * sigma2_half;
    let decay = match horizon {
        None => 1.0,
        Some(s) => -(-r * s).exp_m1(),
    };
    if sigma2_half == 0.0 {
        return Ok(p * decay / r);
    }
    Ok(-(-pa * decay).ln_1p() / (r * sigma2_half))
}

fn check_riccati(p: f64, r: f64, sigma2_half: f64) -> Result<()> {
    if !(p > 0.0) || !(r > 0.0) || !(1.0 / p - sigma2_half > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "Riccati exponent needs p > 0, r > 0 and 1/p > A (p = {p}, r = {r}, A = {sigma2_half})"
        )));
    }
    Ok(())
}

fn s_integral_spec() -> QuadratureSpec {
    QuadratureSpec::default().with_truncation(6.0)
}

impl SupJcirModel {
    pub fn new(a: f64, sigma: f64, jumps: JumpMeasure, mixing: MixingMeasure) -> Result<Self> {
        let m = Self {
            a,
            sigma,
            jumps,
            mixing,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::invalid(
                "a",
                format!("drift level must be positive, got {}", self.a),
            ));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(
                "sigma",
                format!("diffusion scale must be positive, got {}", self.sigma),
            ));
        }
        self.jumps.validate()?;
        self.mixing.validate()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn inverse_moment(&self) -> f64 {
        self.mixing.inverse_moment()
    }

    /// Upper end of the log-MGF domain, min{2/σ², β}.
    pub fn p_max(&self) -> f64 {
        let diffusive = 2.0 / self.sigma2();
        self.jumps.beta().map_or(diffusive, |b| diffusive.min(b))
    }

    /// Stationary log E[exp(pY)].
    pub fn log_mgf(&self, p: f64) -> Result<f64> {
        if p == 0.0 {
            return Ok(0.0);
        }
        if !(p > 0.0) || !(p < self.p_max()) {
            return Err(Error::ParameterOutOfRange(format!(
                "log-MGF needs 0 <= p < min(2/sigma^2, beta) = {}, got {p}",
                self.p_max()
            )));
        }
        let half = 0.5 * self.sigma2();
        let drift = self.a * riccati_integral(p, 1.0, half, None)?;
        let jumps = if self.jumps.is_none() {
            0.0
        } else {
            let nu = self.jumps;
            integrate_semi_infinite(
                |s| {
                    let u = riccati_exponent(p, 1.0, half, s).unwrap_or(0.0);
                    nu.exp_compensator(u).unwrap_or(f64::NAN)
                },
                &s_integral_spec(),
            )?
        };
        Ok(self.inverse_moment() * (drift + jumps))
    }

    pub fn stationary_moments(&self) -> Result<Moments> {
        let r = self.inverse_moment();
        let s2 = self.sigma2();
        let m1 = self.jumps.moment(1)?;
        let m2 = self.jumps.moment(2)?;
        let m3 = self.jumps.moment(3)?;
        let level = self.a + m1;
        let mean = r * level;
        let variance = r * (0.5 * m2 + 0.5 * s2 * level);
        let third = r * (0.5 * s2 * s2 * level + 0.5 * s2 * m2 + m3 / 3.0);
        Ok(Moments {
            mean,
            variance,
            skewness: third / variance.powf(1.5),
        })
    }

    pub fn acf(&self, h: f64) -> f64 {
        self.mixing.acf(h)
    }

    /// The nominal components of a discrete model.
    pub fn components(&self) -> Result<Vec<JcirComponent>> {
        let atoms = self.mixing.atoms().ok_or_else(|| {
            Error::InvalidInput("components need a discrete mixing measure".into())
        })?;
        let s2 = self.sigma2();
        Ok(atoms
            .iter()
            .map(|atom| JcirComponent {
                drift_const: self.a * atom.weight,
                reversion: atom.rate,
                diffusion_factor: s2 * atom.rate,
                jumps: ModulatedJumps::plain(self.jumps, atom.weight),
            })
            .collect())
    }

    /// Same model with a Gamma mixing replaced by its `n`-atom quantile lift;
    /// discrete models are returned unchanged.
    pub fn discretized(&self, n: usize) -> Result<SupJcirModel> {
        match self.mixing {
            MixingMeasure::Discrete { .. } => Ok(self.clone()),
            MixingMeasure::Gamma { .. } => Ok(SupJcirModel {
                mixing: self.mixing.quantile_discretize(n)?,
                ..self.clone()
            }),
        }
    }
}

impl JcirComponent {
    /// A = d / (2κ): the quadratic coefficient of the component's Riccati
    /// equation at unit time scale.
    pub fn riccati_shift(&self) -> f64 {
        self.diffusion_factor / (2.0 * self.reversion)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reversion > 0.0) || !(self.diffusion_factor > 0.0) || !(self.drift_const >= 0.0) {
            return Err(Error::invalid(
                "component",
                format!(
                    "need reversion > 0, diffusion > 0, drift >= 0 (got {}, {}, {})",
                    self.reversion, self.diffusion_factor, self.drift_const
                ),
            ));
        }
        Ok(())
    }

    /// log E[exp(pX)] over the requested horizon, where
    /// `u' = −κu + (d/2)u²`, `u(0) = p`.
    pub fn log_mgf(&self, p: f64, horizon: Horizon) -> Result<f64> {
        self.validate()?;
        if p == 0.0 {
            return Ok(0.0);
        }
        let shift = self.riccati_shift();
        let kappa = self.reversion;
        let mut limit = 2.0 * kappa / self.diffusion_factor;
        if let Some(rate) = self.jumps.tail_rate() {
            limit = limit.min(rate);
        }
        if !(p > 0.0) || !(p < limit) {
            return Err(Error::ParameterOutOfRange(format!(
                "component log-MGF needs 0 < p < {limit}, got {p}"
            )));
        }
        let span = match horizon {
            Horizon::Finite(s) if s < 0.0 => {
                return Err(Error::ParameterOutOfRange(format!("negative horizon {s}")))
            }
            Horizon::Finite(s) => Some(s),
            Horizon::Stationary => None,
        };
        let drift = self.drift_const * riccati_integral(p, kappa, shift, span)?;
        if self.jumps.base.is_none() || self.jumps.scale == 0.0 {
            return Ok(drift);
        }
        let jumps = self.jumps;
        let integrand = |s: f64| {
            let u = riccati_exponent(p, kappa, shift, s).unwrap_or(0.0);
            jumps.exp_compensator(u).unwrap_or(f64::NAN)
        };
        let jump_part = match span {
            None => {
                integrate_semi_infinite(integrand, &s_integral_spec().with_truncation(6.0 / kappa))?
            }
            Some(s) => integrate_interval(integrand, 0.0, s, &QuadratureSpec::default())?,
        };
        Ok(drift + jump_part)
    }

    /// Stationary cumulant-based moments of the component.
    pub fn stationary_moments(&self) -> Result<Moments> {
        self.validate()?;
        let shift = self.riccati_shift();
        let m1 = self.jumps.moment(1)?;
        let m2 = self.jumps.moment(2)?;
        let m3 = self.jumps.moment(3)?;
        let level = self.drift_const + m1;
        let kappa = self.reversion;
        let mean = level / kappa;
        let variance = (shift * level + 0.5 * m2) / kappa;
        let third = (2.0 * shift * shift * level + shift * m2 + m3 / 3.0) / kappa;
        Ok(Moments {
            mean,
            variance,
            skewness: if variance > 0.0 {
                third / variance.powf(1.5)
            } else {
                0.0
            },
        })
    }
}

/// Mean and variance of a sum of independent components (cumulants add).
pub fn sum_moments(components: &[JcirComponent]) -> Result<Moments> {
    let mut mean = 0.0;
    let mut variance = 0.0;
    let mut third = 0.0;
    for c in components {
        let m = c.stationary_moments()?;
        mean += m.mean;
        variance += m.variance;
        third += m.skewness * m.variance.powf(1.5);
    }
    Ok(Moments {
        mean,
        variance,
        skewness: if variance > 0.0 {
            third / variance.powf(1.5)
        } else {
            0.0
        },
    })
}
