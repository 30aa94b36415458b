use core::f64::consts::{FRAC_PI_2, PI};

use super::AgentConfig;
use crate::geometry::AngleSet;

/// Quantized observation: azimuth bins in `[0, C_φ)`, elevation bins in
/// `[0, C_θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateIndex {
    pub phi_r: u16,
    pub phi_t: u16,
    pub theta_r: u16,
    pub theta_t: u16,
}

/// Elevation warp. `Sqrt` makes bins narrower towards θ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ElevationWarp {
    #[default]
    Sqrt,
    Linear,
}

/// Azimuth warp. `Square` makes bins narrower towards ±π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AzimuthWarp {
    #[default]
    Square,
    Linear,
}

fn bin(unit: f64, count: u16) -> u16 {
    let b = libm::floor(count as f64 * unit);
    if b <= 0.0 {
        0
    } else {
        (b as u16).min(count - 1)
    }
}

pub(crate) fn elevation_bin(theta: f64, count: u16, warp: ElevationWarp) -> u16 {
    let x = (theta / FRAC_PI_2).clamp(0.0, 1.0);
    let x = match warp {
        ElevationWarp::Sqrt => libm::sqrt(x),
        ElevationWarp::Linear => x,
    };
    bin(x, count)
}

pub(crate) fn azimuth_bin(phi: f64, count: u16, warp: AzimuthWarp) -> u16 {
    let x = (phi.abs() / PI).min(1.0);
    let u = match warp {
        AzimuthWarp::Square => x * x,
        AzimuthWarp::Linear => x,
    };
    let u = if phi < 0.0 { -u } else { u };
    bin((u + 1.0) / 2.0, count)
}

/// Maps the four link angles onto table coordinates.
pub fn quantize_state(angles: &AngleSet, cfg: &AgentConfig) -> StateIndex {
    StateIndex {
        phi_r: azimuth_bin(angles.phi_r, cfg.c_phi, cfg.azimuth_warp),
        phi_t: azimuth_bin(angles.phi_t, cfg.c_phi, cfg.azimuth_warp),
        theta_r: elevation_bin(angles.theta_r, cfg.c_theta, cfg.elevation_warp),
        theta_t: elevation_bin(angles.theta_t, cfg.c_theta, cfg.elevation_warp),
    }
}
