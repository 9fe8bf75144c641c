//! Event-driven simulation and Monte Carlo estimation for the one-dimensional
//! Rayleigh gas and its small-mass limit, an equal-mass gas with an
//! inverse-square interaction between its two central particles.

// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cms_pair;
pub mod convergence;
pub mod engine_type1;
pub mod engine_type2;
pub mod estimator;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod trajectory;

pub use error::{Error, Result};

/// Lower bound `sqrt(pi/8)` on the limiting variance for any mass.
pub const SIGMA2_LOWER: f64 = 0.626_657_068_657_750_1;
/// Upper bound `sqrt(2/pi)`, attained at equal masses.
pub const SIGMA2_UPPER: f64 = 0.797_884_560_802_865_4;
