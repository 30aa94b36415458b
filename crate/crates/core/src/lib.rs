//! Simulation core for a drone relay station (DRS) carrying a reconfigurable
//! intelligent surface (RIS) that adds a reflected path to V2X links.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the clock or the command line lives in the `drs` companion
//! crate.
//!
//! - [`geometry`]: positions, yaw-only poses, angle extraction.
//! - [`channel`]: RIS far-field path loss, direct V2V/V2I models, SNR and rate.
//! - [`trajectory`]: optimal hovering point and per-step motion.
//! - [`rl`]: tabular double Q-learning for the RIS yaw.
//! - [`sim`]: traffic, the control loop, metrics and path-loss surfaces.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

#[cfg(test)]
#[macro_use]
mod test_util;

pub mod channel;
pub mod error;
pub mod geometry;
pub mod minimize;
pub mod rl;
pub mod sim;
pub mod trajectory;

pub use error::{ConfigError, DomainError, SimError};
pub use geometry::{AngleSet, Pose, Vec3};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
