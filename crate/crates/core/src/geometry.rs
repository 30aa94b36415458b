//! Positions, yaw-only RIS poses and angle extraction.
//!
//! The RIS panel is horizontal with its boresight pointing straight down
//! (−z). The only controllable degree of freedom is the yaw about z.

use core::f64::consts::{PI, TAU};
use core::ops::{Add, Mul, Sub};

use crate::channel::RisConfig;
use crate::error::DomainError;
use crate::SPEED_OF_LIGHT;

/// Cartesian position in meters: `x` lateral, `y` longitudinal, `z` height.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (other - self).norm()
    }

    /// Distance between the projections onto the xy-plane.
    pub fn distance_xy(self, other: Vec3) -> f64 {
        libm::hypot(other.x - self.x, other.y - self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Axis-aligned box the DRS must stay in.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 500.0,
            y_min: 0.0,
            y_max: 5000.0,
            z_min: 50.0,
            z_max: 600.0,
        }
    }
}

impl BoundingBox {
    /// Largest distance by which `p` lies outside the box (0 when inside).
    pub fn excursion(&self, p: Vec3) -> f64 {
        let out = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
        out(p.x, self.x_min, self.x_max)
            .max(out(p.y, self.y_min, self.y_max))
            .max(out(p.z, self.z_min, self.z_max))
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.excursion(p) == 0.0
    }

    /// Euclidean projection onto the box.
    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
            p.z.clamp(self.z_min, self.z_max),
        )
    }

    pub fn is_valid(&self) -> bool {
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        ordered(self.x_min, self.x_max)
            && ordered(self.y_min, self.y_max)
            && ordered(self.z_min, self.z_max)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a - TAU * libm::floor(a / TAU);
    // r in [0, 2π); floating error can land exactly on 2π.
    let r = if r >= TAU { r - TAU } else { r };
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// DRS position plus RIS yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub position: Vec3,
    yaw: f64,
}

impl Pose {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw: wrap_angle(yaw),
        }
    }

    /// Yaw in (−π, π].
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn with_yaw(self, yaw: f64) -> Self {
        Self::new(self.position, yaw)
    }

    pub fn with_position(self, position: Vec3) -> Self {
        Self { position, ..self }
    }
}

/// Elevation (off boresight) and azimuth (RIS frame) angles towards the
/// transmitter and the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AngleSet {
    pub theta_t: f64,
    pub phi_t: f64,
    pub theta_r: f64,
    pub phi_r: f64,
}

impl AngleSet {
    /// Angles seen from `pose` towards `tx` and `rx`.
    pub fn observe(pose: &Pose, tx: Vec3, rx: Vec3) -> Result<Self, DomainError> {
        let (theta_t, phi_t) = angles_to_node(pose, tx)?;
        let (theta_r, phi_r) = angles_to_node(pose, rx)?;
        Ok(Self {
            theta_t,
            phi_t,
            theta_r,
            phi_r,
        })
    }

    /// Same angles with transmitter and receiver roles exchanged.
    pub fn swapped(self) -> Self {
        Self {
            theta_t: self.theta_r,
            phi_t: self.phi_r,
            theta_r: self.theta_t,
            phi_r: self.phi_t,
        }
    }
}

/// Horizontal displacements below this are treated as on-boresight.
const BORESIGHT_EPS: f64 = 1e-12;

/// Elevation θ (from the −z boresight) and RIS-frame azimuth φ of `node`.
///
/// A node straight below the panel has an undefined azimuth; it is returned
/// as 0.
pub fn angles_to_node(pose: &Pose, node: Vec3) -> Result<(f64, f64), DomainError> {
    let delta = node - pose.position;
    let dist = delta.norm();
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(DomainError::CoincidentPoints);
    }
    let cos_theta = (-delta.z / dist).clamp(-1.0, 1.0);
    let theta = libm::acos(cos_theta);

    let (s, c) = libm::sincos(pose.yaw());
    // Frame change by −yaw.
    let lx = c * delta.x + s * delta.y;
    let ly = -s * delta.x + c * delta.y;
    let phi = if libm::hypot(lx, ly) <= BORESIGHT_EPS * dist {
        0.0
    } else {
        wrap_angle(libm::atan2(ly, lx))
    };
    Ok((theta, phi))
}

/// Rotation angle between two yaw-only orientations, in [0, π].
///
/// Equivalent to the axis-angle `acos((tr(R_a R_bᵀ) − 1) / 2)` for the two
/// z-rotations.
pub fn yaw_rotation_angle(yaw_a: f64, yaw_b: f64) -> f64 {
    wrap_angle(yaw_b - yaw_a).abs()
}

/// Carrier wavelength in meters.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

/// Boundary between near and far field, `2 D² / λ`, with `D` the panel
/// diagonal.
pub fn fraunhofer_distance(ris: &RisConfig) -> f64 {
    let w = ris.m_rows as f64 * ris.dx;
    let h = ris.n_cols as f64 * ris.dy;
    2.0 * (w * w + h * h) / wavelength(ris.carrier_hz)
}
