//! Lévy measures of the subordinator driving the jumps, and integrals
//! against them.

use crate::error::{Error, Result};
use crate::numerics::{integrate_semi_infinite, QuadratureSpec};
use crate::orlicz::{q_exp, Bound, OrliczFunction};

/// Lévy measure ν(dz) on `z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpMeasure {
    /// Compound Poisson with intensity `mu` and exponential jump sizes of
    /// mean `1 / beta`: ν(dz) = μ β e^{-βz} dz.
    Exponential { mu: f64, beta: f64 },
    /// ν(dz) = γ z^{-1-α} e^{-βz} dz; infinite activity when `alpha >= 0`.
    TemperedStable { gamma: f64, beta: f64, alpha: f64 },
    /// ν ≡ 0.
    None,
}

impl JumpMeasure {
    pub fn exponential(mu: f64, beta: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(
                "jump.mu",
                format!("must be positive, got {mu}"),
            ));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(
                "jump.beta",
                format!("must be positive, got {beta}"),
            ));
        }
        Ok(Self::Exponential { mu, beta })
    }

    pub fn tempered_stable(gamma: f64, beta: f64, alpha: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(
                "jump.gamma",
                format!("must be positive, got {gamma}"),
            ));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(
                "jump.beta",
                format!("must be positive, got {beta}"),
            ));
        }
        if !(alpha < 1.0) || !alpha.is_finite() {
            return Err(Error::invalid(
                "jump.alpha",
                format!("must be below 1, got {alpha}"),
            ));
        }
        Ok(Self::TemperedStable { gamma, beta, alpha })
    }

    /// Re-check the constructor invariants (for values built by hand).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { mu, beta } => Self::exponential(mu, beta).map(|_| ()),
            Self::TemperedStable { gamma, beta, alpha } => {
                Self::tempered_stable(gamma, beta, alpha).map(|_| ())
            }
            Self::None => Ok(()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    /// Exponential tempering rate β, `None` when there are no jumps.
    pub fn beta(&self) -> Option<f64> {
        match *self {
            Self::Exponential { beta, .. } | Self::TemperedStable { beta, .. } => Some(beta),
            Self::None => None,
        }
    }

    /// Lévy density at `z > 0`.
    pub fn density(&self, z: f64) -> f64 {
        match *self {
            Self::Exponential { mu, beta } => mu * beta * (-beta * z).exp(),
            Self::TemperedStable { gamma, beta, alpha } => {
                gamma * (-(1.0 + alpha) * z.ln() - beta * z).exp()
            }
            Self::None => 0.0,
        }
    }

    fn ln_density(&self, z: f64) -> f64 {
        match *self {
            Self::Exponential { mu, beta } => (mu * beta).ln() - beta * z,
            Self::TemperedStable { gamma, beta, alpha } => {
                gamma.ln() - (1.0 + alpha) * z.ln() - beta * z
            }
            Self::None => f64::NEG_INFINITY,
        }
    }

    /// M_k = ∫ z^k ν(dz). `k = 0` (total activity) is only finite for
    /// compound Poisson measures.
    pub fn moment(&self, k: u32) -> Result<f64> {
        match *self {
            Self::None => Ok(0.0),
            Self::Exponential { mu, beta } => {
                let factorial: f64 = (1..=k).map(f64::from).product();
                Ok(mu * factorial / beta.powi(k as i32))
            }
            Self::TemperedStable { alpha, .. } => {
                if k == 0 && alpha >= 0.0 {
                    return Err(Error::UnsupportedMoment(0));
                }
                let kk = k as i32;
                self.weighted_integral(|z| z.powi(kk))
            }
        }
    }

    /// ∫ (e^{uz} − 1) ν(dz), defined for `u < β`.
    pub fn exp_compensator(&self, u: f64) -> Result<f64> {
        match *self {
            Self::None => Ok(0.0),
            _ if u == 0.0 => Ok(0.0),
            Self::Exponential { mu, beta } => {
                if !(u < beta) {
                    return Err(Error::ParameterOutOfRange(format!(
                        "exponential tilt u = {u} must stay below beta = {beta}"
                    )));
                }
                Ok(mu * u / (beta - u))
            }
            Self::TemperedStable { beta, .. } => {
                if !(u < beta) {
                    return Err(Error::ParameterOutOfRange(format!(
                        "exponential tilt u = {u} must stay below beta = {beta}"
                    )));
                }
                self.weighted_integral_unchecked(|z| (u * z).exp_m1(), &QuadratureSpec::default())
            }
        }
    }

    /// ∫ g(z) ν(dz) with the default quadrature settings.
    pub fn weighted_integral<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        self.weighted_integral_with(g, &QuadratureSpec::default())
    }

    /// ∫ g(z) ν(dz). Fails with [`Error::Divergent`] when `g` grows at an
    /// exponential rate that the tempering `e^{-βz}` cannot absorb.
    pub fn weighted_integral_with<G>(&self, g: G, spec: &QuadratureSpec) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        let Some(beta) = self.beta() else {
            return Ok(0.0);
        };
        check_tail_growth(&g, beta)?;
        self.weighted_integral_unchecked(g, spec)
    }

    fn weighted_integral_unchecked<G>(&self, g: G, spec: &QuadratureSpec) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        let Some(beta) = self.beta() else {
            return Ok(0.0);
        };
        let spec = spec.with_truncation(8.0 / beta);
        integrate_semi_infinite(
            |z| {
                let gz = g(z);
                if gz == 0.0 {
                    0.0
                } else {
                    // z^{-1-α} overflows near the origin where g is tiny
                    gz.signum() * (gz.abs().ln() + self.ln_density(z)).exp()
                }
            },
            &spec,
        )
    }
}

/// Fit the exponential growth rate of |g| at z = 10/β, 20/β, 40/β and refuse
/// rates that reach the tempering rate.
fn check_tail_growth<G>(g: &G, beta: f64) -> Result<()>
where
    G: Fn(f64) -> f64,
{
    let zs = [10.0 / beta, 20.0 / beta, 40.0 / beta];
    let mut pts = Vec::with_capacity(3);
    for &z in &zs {
        let v = g(z).abs();
        if !v.is_finite() {
            return Err(Error::Divergent(format!(
                "integrand overflows at z = {z:e} (tempering rate {beta})"
            )));
        }
        if v > 0.0 {
            pts.push((z, v.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(());
    }
    let n = pts.len() as f64;
    let mz = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mz) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mz).powi(2)).sum();
    let rate = sxy / sxx;
    if rate >= 0.999 * beta {
        return Err(Error::Divergent(format!(
            "integrand grows at exponential rate {rate:.6} >= tempering rate {beta}"
        )));
    }
    Ok(())
}

/// A positive multiplier g(z) applied to ν(dz): the worst-case jump
/// distortion `q_exp(±λ_ψ (Φ(e^{pz}) − 1), q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpMultiplier {
    Unit,
    WorstCase {
        phi: OrliczFunction,
        p: f64,
        lambda_jump: f64,
        q: f64,
        bound: Bound,
    },
}

impl JumpMultiplier {
    pub fn is_unit(&self) -> bool {
        match *self {
            Self::Unit => true,
            Self::WorstCase { lambda_jump, .. } => lambda_jump == 0.0,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Self::Unit => 1.0,
            Self::WorstCase {
                phi,
                p,
                lambda_jump,
                q,
                bound,
            } => {
                if lambda_jump == 0.0 {
                    return 1.0;
                }
                let arg = bound.sign() * lambda_jump * phi.exp_shift(p * z);
                // the argument always lies inside the domain for admissible
                // (bound, q) pairs
                q_exp(arg, q).unwrap_or(f64::NAN)
            }
        }
    }

    /// Asymptotic exponential growth rate of g(z) as z → ∞.
    pub fn growth_rate(&self) -> f64 {
        match *self {
            Self::Unit => 0.0,
            Self::WorstCase {
                phi,
                p,
                lambda_jump,
                q,
                bound,
            } => {
                if lambda_jump == 0.0 || bound == Bound::Lower {
                    0.0
                } else {
                    match phi.growth_power() {
                        Some(m) => m * p / (1.0 - q),
                        None => f64::INFINITY,
                    }
                }
            }
        }
    }
}

/// The jump measure of one component: `scale · g(z) · ν(dz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatedJumps {
    pub base: JumpMeasure,
    pub scale: f64,
    pub multiplier: JumpMultiplier,
}

impl ModulatedJumps {
    pub fn plain(base: JumpMeasure, scale: f64) -> Self {
        Self {
            base,
            scale,
            multiplier: JumpMultiplier::Unit,
        }
    }

    /// Exponential tail rate of the modulated measure, `None` without jumps.
    pub fn tail_rate(&self) -> Option<f64> {
        self.base.beta().map(|b| b - self.multiplier.growth_rate())
    }

    pub fn weighted_integral<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        if self.base.is_none() || self.scale == 0.0 {
            return Ok(0.0);
        }
        if self.multiplier.is_unit() {
            return Ok(self.scale * self.base.weighted_integral(g)?);
        }
        let m = self.multiplier;
        Ok(self.scale * self.base.weighted_integral(|z| g(z) * m.eval(z))?)
    }

    pub fn moment(&self, k: u32) -> Result<f64> {
        if self.multiplier.is_unit() {
            return Ok(self.scale * self.base.moment(k)?);
        }
        let kk = k as i32;
        self.weighted_integral(|z| z.powi(kk))
    }

    pub fn exp_compensator(&self, u: f64) -> Result<f64> {
        if self.multiplier.is_unit() {
            return Ok(self.scale * self.base.exp_compensator(u)?);
        }
        if let Some(rate) = self.tail_rate() {
            if !(u < rate) {
                return Err(Error::ParameterOutOfRange(format!(
                    "exponential tilt u = {u} must stay below the distorted tail rate {rate}"
                )));
            }
        }
        self.weighted_integral(|z| (u * z).exp_m1())
    }
}
