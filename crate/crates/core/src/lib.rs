//! Balloon station-keeping simulation and launch-configuration search.
//!
//! The physics and Gaussian-process core is generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix it to `f64`, which is what the environment,
//! optimisers and harness use.

pub mod atmosphere;
pub mod balloon;
pub mod config;
pub mod env;
pub mod gp;
pub mod harness;
pub mod launch;
pub mod optimize;
pub mod policy;
pub mod scalar;
pub mod windfield;

pub use scalar::Scalar;

pub type Atmosphere = atmosphere::AtmosphereModel<f64>;
pub type AirProperties = atmosphere::AirProperties<f64>;
pub type BalloonParams = balloon::BalloonParams<f64>;
pub type BalloonState = balloon::BalloonState<f64>;
pub type KernelParams = gp::KernelParams<f64>;
pub type GpPosterior = gp::GpPosterior<f64>;
