//! Image restoration by alternating ℓ2 deconvolution with lossy compression,
//! plus a rate-distortion engine for Gaussian signals under circulant degradations.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the common `f64` instantiations.

pub mod codec;
pub mod error;
pub mod linops;
pub mod metrics;
pub mod pnm;
pub mod restore;
pub mod scalar;
pub mod signal;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Real;
pub use signal::Signal;

pub type SignalF64 = Signal<f64>;
pub type SignalF32 = Signal<f32>;
pub type OperatorF64 = linops::DegradationOperator<f64>;
