//! Superposed jump-CIR (supJCIR) models of environmental time series:
//! stationary statistics, Orlicz-type robust disutility bounds under model
//! uncertainty, and the two-step moment/ACF fit.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod io;
pub mod jumps;
pub mod mixing;
pub mod numerics;
pub mod orlicz;
pub mod process;
pub mod validation;

pub use error::{Error, Result};
pub use estimation::{EmpiricalStats, FitResult, TimeSeries};
pub use jumps::{JumpMeasure, JumpMultiplier, ModulatedJumps};
pub use mixing::{Atom, MixingMeasure};
pub use orlicz::{Bound, Inadmissible, OrliczFunction, RiskQuery, RiskReport};
pub use process::{Horizon, JcirComponent, Moments, SupJcirModel};
