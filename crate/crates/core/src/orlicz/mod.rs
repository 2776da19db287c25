//! Orlicz-type robust bounds of the exponential disutility E[exp(pY)].
//!
//! The adversary may distort the diffusion drift (penalized by relative
//! entropy, weight `lambda_diff`) and the jump intensity (penalized by a
//! Tsallis divergence of order `q`, weight `lambda_jump`). The resulting HJB
//! equations stay affine, so everything reduces to Riccati exponents plus
//! one-dimensional integrals.

mod distortion;
mod risk;

pub use distortion::{
    distorted_acf, distorted_mixing, distorted_model, distorted_moment_ratios, entropy_rates,
    stationary_mean_state, tsallis_divergence, worst_case_distortion, DistortedModel, EntropyRates,
};
pub use risk::{
    finite_horizon_log_disutility, normalized_disutility, normalized_ratio, rho,
    stationary_baseline, stationary_log_disutility, RiskReport, DEFAULT_LIFT_ATOMS,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::process::SupJcirModel;

/// Orlicz function Φ with Φ(0) = 0 and Φ(1) = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrliczFunction {
    Identity,
    /// Φ(x) = x^m, m > 1.
    PowerConvex {
        m: f64,
    },
    /// Φ(x) = x^{1/m}, m > 1.
    PowerConcave {
        m: f64,
    },
    /// Φ(x) = (e^{mx} − 1)/(e^m − 1), m > 0.
    Exponential {
        m: f64,
    },
}

impl OrliczFunction {
    pub fn power_convex(m: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::invalid(
                "phi.m",
                format!("power must exceed 1, got {m}"),
            ));
        }
        Self::PowerConvex { m }.checked()
    }

    pub fn power_concave(m: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::invalid(
                "phi.m",
                format!("root order must exceed 1, got {m}"),
            ));
        }
        Self::PowerConcave { m }.checked()
    }

    pub fn exponential(m: f64) -> Result<Self> {
        if !(m > 0.0) || !(m < 700.0) {
            return Err(Error::invalid(
                "phi.m",
                format!("rate must lie in (0, 700), got {m}"),
            ));
        }
        Self::Exponential { m }.checked()
    }

    fn checked(self) -> Result<Self> {
        let (at0, at1) = (self.value(0.0), self.value(1.0));
        if at0.abs() > 1e-14 || (at1 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "phi.normalization",
                format!("need phi(0) = 0 and phi(1) = 1, got {at0} and {at1}"),
            ));
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Identity => Ok(()),
            Self::PowerConvex { m } => Self::power_convex(m).map(|_| ()),
            Self::PowerConcave { m } => Self::power_concave(m).map(|_| ()),
            Self::Exponential { m } => Self::exponential(m).map(|_| ()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::PowerConvex { m } => x.powf(m),
            Self::PowerConcave { m } => x.powf(1.0 / m),
            Self::Exponential { m } => (m * x).exp_m1() / m.exp_m1(),
        }
    }

    /// Φ'(1).
    pub fn d1(&self) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::PowerConvex { m } => m,
            Self::PowerConcave { m } => 1.0 / m,
            Self::Exponential { m } => m / (-(-m).exp_m1()),
        }
    }

    /// Φ''(1).
    pub fn d2(&self) -> f64 {
        match *self {
            Self::Identity => 0.0,
            Self::PowerConvex { m } => m * (m - 1.0),
            Self::PowerConcave { m } => (1.0 / m) * (1.0 / m - 1.0),
            Self::Exponential { m } => m * m / (-(-m).exp_m1()),
        }
    }

    /// Φ(e^y) − 1 without cancellation near y = 0.
    pub fn exp_shift(&self, y: f64) -> f64 {
        match *self {
            Self::Identity => y.exp_m1(),
            Self::PowerConvex { m } => (m * y).exp_m1(),
            Self::PowerConcave { m } => (y / m).exp_m1(),
            Self::Exponential { m } => (m * y.exp_m1()).exp_m1() / (-(-m).exp_m1()),
        }
    }

    /// Exponent k with Φ(e^y) ~ e^{ky}; `None` for super-exponential growth.
    pub fn growth_power(&self) -> Option<f64> {
        match *self {
            Self::Identity => Some(1.0),
            Self::PowerConvex { m } => Some(m),
            Self::PowerConcave { m } => Some(1.0 / m),
            Self::Exponential { .. } => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::PowerConcave { .. })
    }

    pub fn is_concave(&self) -> bool {
        matches!(self, Self::Identity | Self::PowerConcave { .. })
    }
}

impl fmt::Display for OrliczFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::PowerConvex { m } => write!(f, "pow:{m}"),
            Self::PowerConcave { m } => write!(f, "powinv:{m}"),
            Self::Exponential { m } => write!(f, "exp:{m}"),
        }
    }
}

/// Parses `identity`, `pow:m`, `powinv:m` or `exp:m`.
impl FromStr for OrliczFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("identity") {
            return Ok(Self::Identity);
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("unknown phi '{s}'")))?;
        let m: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("phi parameter '{arg}' is not a number")))?;
        match kind.trim() {
            "pow" => Self::power_convex(m),
            "powinv" => Self::power_concave(m),
            "exp" => Self::exponential(m),
            other => Err(Error::InvalidInput(format!("unknown phi family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Upper,
    Lower,
}

impl Bound {
    pub fn sign(&self) -> f64 {
        match self {
            Self::Upper => 1.0,
            Self::Lower => -1.0,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
        })
    }
}

impl FromStr for Bound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            other => Err(Error::InvalidInput(format!(
                "bound must be upper or lower, got '{other}'"
            ))),
        }
    }
}

/// Tsallis q-exponential (1 + (1−q)z)^{1/(1−q)}; e^z at q = 1.
pub fn q_exp(z: f64, q: f64) -> Result<f64> {
    // computed directly so that values near 0 keep their relative precision
    q_log_base(z, q).map(f64::exp)
}

/// q_exp(z, q) − 1, accurate for small `z`.
pub fn q_exp_m1(z: f64, q: f64) -> Result<f64> {
    q_log_base(z, q).map(f64::exp_m1)
}

/// ln q_exp(z, q).
fn q_log_base(z: f64, q: f64) -> Result<f64> {
    if q == 1.0 {
        return Ok(z);
    }
    let k = 1.0 - q;
    let base = k * z;
    if !(base > -1.0) {
        return Err(Error::DomainError { q, z });
    }
    Ok(base.ln_1p() / k)
}

/// λ̄ (upper) or λ (lower): the diffusion aversion seen by the Riccati
/// exponent once Φ's curvature at 1 is folded in.
pub fn aversion_shift(phi: &OrliczFunction, lambda_diff: f64, bound: Bound) -> f64 {
    let d1 = phi.d1();
    let d2 = phi.d2();
    match bound {
        Bound::Upper => (d1 * d1 * lambda_diff + d2) / d1,
        Bound::Lower => (d1 * d1 * lambda_diff - d2) / d1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskQuery {
    pub p: f64,
    pub phi: OrliczFunction,
    pub q: f64,
    pub lambda_diff: f64,
    pub lambda_jump: f64,
    pub bound: Bound,
}

impl RiskQuery {
    pub fn new(
        p: f64,
        phi: OrliczFunction,
        q: f64,
        lambda_diff: f64,
        lambda_jump: f64,
        bound: Bound,
    ) -> Result<Self> {
        let query = Self {
            p,
            phi,
            q,
            lambda_diff,
            lambda_jump,
            bound,
        };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::invalid(
                "query.p",
                format!("must be positive, got {}", self.p),
            ));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::invalid(
                "query.q",
                format!("must be positive, got {}", self.q),
            ));
        }
        if !(self.lambda_diff >= 0.0) || !self.lambda_diff.is_finite() {
            return Err(Error::invalid(
                "query.lambda_diff",
                format!("must be >= 0, got {}", self.lambda_diff),
            ));
        }
        if !(self.lambda_jump >= 0.0) || !self.lambda_jump.is_finite() {
            return Err(Error::invalid(
                "query.lambda_jump",
                format!("must be >= 0, got {}", self.lambda_jump),
            ));
        }
        self.phi.validate()
    }

    /// The same query without model uncertainty (λ's set to zero, Φ kept).
    pub fn baseline(&self) -> Self {
        Self {
            lambda_diff: 0.0,
            lambda_jump: 0.0,
            ..*self
        }
    }

    pub fn with_lambdas(&self, lambda_diff: f64, lambda_jump: f64) -> Self {
        Self {
            lambda_diff,
            lambda_jump,
            ..*self
        }
    }

    pub fn shift(&self) -> f64 {
        aversion_shift(&self.phi, self.lambda_diff, self.bound)
    }

    /// Quadratic Riccati coefficient σ²(1 ± shift)/2.
    pub fn sigma2_half(&self, model: &SupJcirModel) -> f64 {
        0.5 * model.sigma2() * (1.0 + self.bound.sign() * self.shift())
    }

    /// Largest admissible p for this query on `model`.
    pub fn p_limit(&self, model: &SupJcirModel) -> f64 {
        let s2 = model.sigma2();
        let diffusive = match self.bound {
            Bound::Upper => 2.0 / (s2 * (1.0 + self.shift())),
            Bound::Lower => 2.0 / s2,
        };
        model.jumps.beta().map_or(diffusive, |b| diffusive.min(b))
    }

    /// Exponential growth rate in z of the jump integrand at ρ = p.
    fn jump_growth(&self) -> f64 {
        match self.phi.growth_power() {
            None => f64::INFINITY,
            Some(m) if self.bound == Bound::Upper && self.lambda_jump > 0.0 => {
                m * self.p / (1.0 - self.q)
            }
            Some(m) => m * self.p,
        }
    }
}

/// Why a query cannot be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Inadmissible {
    WrongQ { bound: Bound, q: f64 },
    WrongPhiShape { bound: Bound, phi: OrliczFunction },
    POutOfRange { p: f64, limit: f64 },
    JumpIntegrabilityFail { growth: f64, beta: f64 },
}

impl Inadmissible {
    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Self::WrongQ { .. } => "WrongQ",
            Self::WrongPhiShape { .. } => "WrongPhiShape",
            Self::POutOfRange { .. } => "POutOfRange",
            Self::JumpIntegrabilityFail { .. } => "JumpIntegrabilityFail",
        }
    }
}

impl fmt::Display for Inadmissible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WrongQ { bound: Bound::Upper, q } => {
                write!(f, "WrongQ: the upper bound needs 0 < q < 1, got q = {q}")
            }
            Self::WrongQ { bound: Bound::Lower, q } => {
                write!(f, "WrongQ: the lower bound needs q >= 1, got q = {q}")
            }
            Self::WrongPhiShape { bound: Bound::Upper, phi } => {
                write!(f, "WrongPhiShape: the upper bound needs a convex phi, got {phi}")
            }
            Self::WrongPhiShape { bound: Bound::Lower, phi } => {
                write!(f, "WrongPhiShape: the lower bound needs a concave phi, got {phi}")
            }
            Self::POutOfRange { p, limit } => {
                write!(f, "POutOfRange: p = {p} must be below {limit}")
            }
            Self::JumpIntegrabilityFail { growth, beta } => write!(
                f,
                "JumpIntegrabilityFail: jump integrand grows at rate {growth} >= tail rate beta = {beta}"
            ),
        }
    }
}

/// Checks, in order: q range, Φ shape, p range, jump integrability.
pub fn admissibility_check(
    model: &SupJcirModel,
    query: &RiskQuery,
) -> std::result::Result<(), Inadmissible> {
    let bound = query.bound;
    let q_ok = match bound {
        Bound::Upper => query.q > 0.0 && query.q < 1.0,
        Bound::Lower => query.q >= 1.0,
    };
    if !q_ok {
        return Err(Inadmissible::WrongQ { bound, q: query.q });
    }
    let shape_ok = match bound {
        Bound::Upper => query.phi.is_convex(),
        Bound::Lower => query.phi.is_concave(),
    };
    if !shape_ok {
        return Err(Inadmissible::WrongPhiShape {
            bound,
            phi: query.phi,
        });
    }
    let limit = query.p_limit(model);
    if !(query.p > 0.0 && query.p < limit) {
        return Err(Inadmissible::POutOfRange { p: query.p, limit });
    }
    if let (Bound::Upper, Some(beta)) = (bound, model.jumps.beta()) {
        let growth = query.jump_growth();
        if !(growth < beta) {
            return Err(Inadmissible::JumpIntegrabilityFail { growth, beta });
        }
    }
    Ok(())
}

/// [`admissibility_check`] lifted into the crate error type.
pub fn ensure_admissible(model: &SupJcirModel, query: &RiskQuery) -> Result<()> {
    query.validate()?;
    admissibility_check(model, query).map_err(Error::Inadmissible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::JumpMeasure;
    use crate::mixing::MixingMeasure;

    fn numeric_d1_d2(phi: &OrliczFunction) -> (f64, f64) {
        let h = 1e-4;
        let (a, b, c) = (phi.value(1.0 - h), phi.value(1.0), phi.value(1.0 + h));
        ((c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h))
    }

    #[test]
    fn normalization_and_derivatives() {
        let phis = [
            OrliczFunction::Identity,
            OrliczFunction::power_convex(1.5).unwrap(),
            OrliczFunction::power_concave(2.0).unwrap(),
            OrliczFunction::exponential(0.7).unwrap(),
        ];
        for phi in phis {
            assert_eq!(phi.value(0.0), 0.0);
            assert!((phi.value(1.0) - 1.0).abs() < 1e-15);
            let (d1, d2) = numeric_d1_d2(&phi);
            assert!((phi.d1() - d1).abs() < 1e-7, "{phi}");
            assert!((phi.d2() - d2).abs() < 1e-5, "{phi}");
            for &y in &[-3.0f64, -1e-9, 0.0, 1e-9, 0.4, 2.0] {
                let direct = phi.value(y.exp()) - 1.0;
                let stable = phi.exp_shift(y);
                assert!(
                    (direct - stable).abs() <= 1e-12 * (1.0 + direct.abs()),
                    "{phi} {y}"
                );
            }
        }
        let sqrt = OrliczFunction::power_concave(2.0).unwrap();
        assert_eq!(sqrt.d1(), 0.5);
        assert_eq!(sqrt.d2(), -0.25);
    }

    #[test]
    fn shapes() {
        assert!(OrliczFunction::Identity.is_convex() && OrliczFunction::Identity.is_concave());
        let pc = OrliczFunction::power_concave(3.0).unwrap();
        assert!(pc.is_concave() && !pc.is_convex());
        let ex = OrliczFunction::exponential(1.0).unwrap();
        assert!(ex.is_convex() && !ex.is_concave());
        assert!(OrliczFunction::power_convex(1.0).is_err());
        assert!(OrliczFunction::exponential(-1.0).is_err());
    }

    #[test]
    fn phi_parse_round_trip() {
        for s in ["identity", "pow:1.5", "powinv:2", "exp:0.5"] {
            let phi: OrliczFunction = s.parse().unwrap();
            let again: OrliczFunction = phi.to_string().parse().unwrap();
            assert_eq!(phi, again);
        }
        assert!("pow:abc".parse::<OrliczFunction>().is_err());
        assert!("cube:3".parse::<OrliczFunction>().is_err());
        assert!("pow:0.5".parse::<OrliczFunction>().is_err());
    }

    #[test]
    fn q_exp_examples() {
        for &q in &[0.3, 1.0, 1.7] {
            assert_eq!(q_exp(0.0, q).unwrap(), 1.0);
        }
        assert!((q_exp(1.0, 0.5).unwrap() - 2.25).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((q_exp(1.0, 1.0 + 1e-8).unwrap() - e).abs() < 1e-6);
        assert!((q_exp(1.0, 1.0 - 1e-8).unwrap() - e).abs() < 1e-6);
        assert!(matches!(q_exp(-3.0, 0.5), Err(Error::DomainError { .. })));
        assert!(matches!(q_exp(1.0, 2.0), Err(Error::DomainError { .. })));
    }

    #[test]
    fn q_exp_against_direct_power() {
        for &(z, q) in &[(0.3f64, 0.25f64), (2.0, 0.75), (-0.4, 1.5), (5.0, 0.9)] {
            let direct = (1.0 + (1.0 - q) * z).powf(1.0 / (1.0 - q));
            assert!((q_exp(z, q).unwrap() - direct).abs() < 1e-13 * direct);
        }
    }

    #[test]
    fn q_exp_keeps_precision_near_zero() {
        // (1 + 0.25 * 1.2e4)^{-4} ≈ 1.2e-14, far below the spacing of floats near 1
        let direct = (1.0f64 + 0.25 * 1.2e4).powf(-4.0);
        let v = q_exp(-1.2e4, 1.25).unwrap();
        assert!(v > 0.0 && (v - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn aversion_shift_examples() {
        assert!((aversion_shift(&OrliczFunction::Identity, 0.3, Bound::Upper) - 0.3).abs() < 1e-15);
        let p15 = OrliczFunction::power_convex(1.5).unwrap();
        assert!((aversion_shift(&p15, 2.0, Bound::Upper) - 3.5).abs() < 1e-14);
        let sqrt = OrliczFunction::power_concave(2.0).unwrap();
        assert!((aversion_shift(&sqrt, 2.0, Bound::Lower) - 1.5).abs() < 1e-14);
    }

    fn model(beta: f64) -> SupJcirModel {
        SupJcirModel::new(
            1.0,
            0.5,
            JumpMeasure::exponential(1.0, beta).unwrap(),
            MixingMeasure::gamma(2.0, 0.1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn admissibility_reasons() {
        let m = model(5.0);
        let upper =
            RiskQuery::new(0.5, OrliczFunction::Identity, 1.0, 0.1, 0.1, Bound::Upper).unwrap();
        assert!(matches!(
            admissibility_check(&m, &upper),
            Err(Inadmissible::WrongQ { .. })
        ));

        let m = model(1.0);
        let p15 = OrliczFunction::power_convex(1.5).unwrap();
        let q = RiskQuery::new(0.2, p15, 0.75, 0.1, 0.1, Bound::Upper).unwrap();
        let err = admissibility_check(&m, &q).unwrap_err();
        assert_eq!(err.code(), "JumpIntegrabilityFail");

        let sqrt = OrliczFunction::power_concave(2.0).unwrap();
        let lower = RiskQuery::new(0.5, sqrt, 1.5, 0.3, 0.3, Bound::Lower).unwrap();
        assert_eq!(admissibility_check(&model(5.0), &lower), Ok(()));

        let wrong_shape = RiskQuery { phi: sqrt, ..q };
        assert_eq!(
            admissibility_check(&m, &wrong_shape).unwrap_err().code(),
            "WrongPhiShape"
        );

        let far = RiskQuery { p: 20.0, ..lower };
        assert_eq!(
            admissibility_check(&model(5.0), &far).unwrap_err().code(),
            "POutOfRange"
        );

        let ex = RiskQuery {
            phi: OrliczFunction::exponential(1.0).unwrap(),
            p: 0.01,
            ..q
        };
        assert_eq!(
            admissibility_check(&model(5.0), &ex).unwrap_err().code(),
            "JumpIntegrabilityFail"
        );
        let no_jumps = SupJcirModel {
            jumps: JumpMeasure::None,
            ..model(5.0)
        };
        assert_eq!(admissibility_check(&no_jumps, &ex), Ok(()));
    }

    #[test]
    fn upper_p_range_tracks_shift() {
        let m = model(100.0);
        // σ² = 0.25, λ̄ = 3 ⇒ p < 2/(0.25·4) = 2
        let q =
            RiskQuery::new(1.99, OrliczFunction::Identity, 0.5, 3.0, 0.0, Bound::Upper).unwrap();
        assert!((q.p_limit(&m) - 2.0).abs() < 1e-14);
        assert!(admissibility_check(&m, &q).is_ok());
        let q = RiskQuery { p: 2.0, ..q };
        assert_eq!(
            admissibility_check(&m, &q).unwrap_err().code(),
            "POutOfRange"
        );
    }
}
