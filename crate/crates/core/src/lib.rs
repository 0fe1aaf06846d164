//! Skorohod J1 geometry on piecewise-constant càdlàg paths and on paths of
//! such paths.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cadlag;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod matching;
pub mod metric;
pub mod nested;
mod partition;
pub mod simulate;
pub mod verify;

pub use cadlag::{Interval, StepFunction, TimeChange};
pub use diagnostics::{PathEnsemble, TightnessReport};
pub use error::{Error, Result};
pub use matching::{Matching, Objective};
pub use metric::{d_j1, d_j1_0, DistanceResult};
pub use nested::{d_d, d_d0, rho_d, Grid, NestedPath};
pub use simulate::SimConfig;
