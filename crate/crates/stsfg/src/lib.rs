//! Spatio-temporal mode-selective sum-frequency conversion toolkit.
//!
//! The crate simulates a quasi-phase-matched χ² crystal driven by shaped
//! signal and pump fields, decomposed over Laguerre-Gaussian /
//! Hermite-Gaussian spatial bases and Hermite-Gauss temporal bases, and
//! optimizes the pump superposition to selectively upconvert one signal mode
//! among overlapping ones.
//!
//! The numeric core is generic over the scalar type via [`real::Real`];
//! `f64` aliases are exported at the crate root and are what the CLI uses.

pub mod error;
pub mod real;

pub mod field;
pub mod fft;
pub mod grid;
pub mod modes;

pub mod crystal;
pub mod metrics;
pub mod propagation;
pub mod pumpopt;

pub mod config;
pub mod scenario;

pub use error::{Error, Result};

/// Concrete double-precision aliases used by the CLI and scenarios.
pub type Grid64 = grid::Grid3D<f64>;
pub type Field64 = field::Field<f64>;
pub type ModeSpec64 = modes::ModeSpec<f64>;
pub type Crystal64 = crystal::CrystalParams<f64>;
