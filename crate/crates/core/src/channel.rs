//! Path loss, SNR and rate.
//!
//! All path losses are carried in dB. A link that is effectively absent
//! (behind the panel, exact null of the array factor) is represented by
//! [`PL_CAP_DB`].

use core::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::DomainError;
use crate::geometry::{fraunhofer_distance, wavelength, AngleSet, Vec3};

/// Path loss ceiling, dB. Represents an absent link.
pub const PL_CAP_DB: f64 = 300.0;

/// Below this |sin u| the array-factor ratio switches to its analytic limit.
const SINC_RATIO_GUARD: f64 = 1e-9;

/// RIS panel geometry, gains and carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RisConfig {
    /// Unit-cell rows (M).
    pub m_rows: u32,
    /// Unit-cell columns (N).
    pub n_cols: u32,
    /// Row spacing, m.
    pub dx: f64,
    /// Column spacing, m.
    pub dy: f64,
    /// Reflection coefficient amplitude, (0, 1].
    pub reflect_amp: f64,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
    /// Unit-cell gain.
    pub gain_cell_dbi: f64,
    pub carrier_hz: f64,
}

impl Default for RisConfig {
    fn default() -> Self {
        Self {
            m_rows: 100,
            n_cols: 102,
            dx: 0.01,
            dy: 0.01,
            reflect_amp: 0.9,
            gain_tx_dbi: 9.03,
            gain_rx_dbi: 0.0,
            gain_cell_dbi: 0.0,
            carrier_hz: 5e9,
        }
    }
}

impl RisConfig {
    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_hz)
    }

    pub fn fraunhofer_distance(&self) -> f64 {
        fraunhofer_distance(self)
    }
}

/// Transmit power, noise and Shannon-rate correction factors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Bit-stream link effectiveness, (0, 1].
    pub eta: f64,
    pub eff_bandwidth_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            // 200 mW
            tx_power_dbm: 10.0 * libm::log10(200.0),
            noise_dbm: -131.27,
            eta: 0.82,
            eff_bandwidth_hz: 17.472e6,
        }
    }
}

/// Path loss in dB, clamped to `[0, PL_CAP_DB]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PathLossDb(f64);

impl PathLossDb {
    pub const CAP: PathLossDb = PathLossDb(PL_CAP_DB);

    /// Clamps into `[0, PL_CAP_DB]`; NaN maps to the cap.
    pub fn new(db: f64) -> Self {
        if db.is_nan() {
            Self::CAP
        } else {
            Self(db.clamp(0.0, PL_CAP_DB))
        }
    }

    pub fn db(self) -> f64 {
        self.0
    }

    pub fn is_capped(self) -> bool {
        self.0 >= PL_CAP_DB
    }
}

/// Normalized unit-cell radiation pattern: cos³θ in front of the panel, 0
/// behind it.
pub fn radiation_pattern(theta: f64) -> Result<f64, DomainError> {
    if !(0.0..=PI).contains(&theta) {
        return Err(DomainError::AngleOutOfRange {
            name: "theta",
            value: theta,
        });
    }
    if theta <= FRAC_PI_2 {
        let c = libm::cos(theta);
        Ok(c * c * c)
    } else {
        Ok(0.0)
    }
}

/// `sin(K u) / (K sin u)`, i.e. the sinc ratio `sinc(K u) / sinc(u)`.
///
/// Near zeros of `sin u` the analytic limit `cos(K u) / cos(u)` is used.
/// The magnitude is clipped to 1.
pub fn array_factor_ratio(k: u32, u: f64) -> f64 {
    let kf = k as f64;
    let s = libm::sin(u);
    let ratio = if s.abs() < SINC_RATIO_GUARD {
        libm::cos(kf * u) / libm::cos(u)
    } else {
        libm::sin(kf * u) / (kf * s)
    };
    ratio.clamp(-1.0, 1.0)
}

/// Phase arguments `(u_M, u_N)` of the two array-factor ratios.
pub fn array_factor_args(angles: &AngleSet, ris: &RisConfig) -> (f64, f64) {
    let (st, sr) = (libm::sin(angles.theta_t), libm::sin(angles.theta_r));
    let along_x = st * libm::cos(angles.phi_t) + sr * libm::cos(angles.phi_r);
    let along_y = st * libm::sin(angles.phi_t) + sr * libm::sin(angles.phi_r);
    let k = PI / ris.wavelength();
    (k * along_x * ris.dx, k * along_y * ris.dy)
}

/// |Ψ|, the orientation-dependent array factor, in [0, 1].
pub fn psi_factor(angles: &AngleSet, ris: &RisConfig) -> f64 {
    let (u_m, u_n) = array_factor_args(angles, ris);
    (array_factor_ratio(ris.m_rows, u_m) * array_factor_ratio(ris.n_cols, u_n)).abs()
}

fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Far-field RIS path loss with an explicit |Ψ|.
///
/// Used directly by the orientation-optimal surface mode, which fixes |Ψ| = 1.
pub fn ris_far_field_pl_with_psi(
    d1: f64,
    d2: f64,
    theta_t: f64,
    theta_r: f64,
    psi: f64,
    ris: &RisConfig,
) -> Result<PathLossDb, DomainError> {
    for (name, d) in [("d1", d1), ("d2", d2)] {
        if !(d > 0.0) || !d.is_finite() {
            return Err(DomainError::InvalidArgument { name, value: d });
        }
    }
    let d_fr = ris.fraunhofer_distance();
    for d in [d1, d2] {
        if d <= d_fr {
            return Err(DomainError::NearField {
                distance: d,
                fraunhofer: d_fr,
            });
        }
    }
    let gain = radiation_pattern(theta_t)? * radiation_pattern(theta_r)? * psi * psi;
    if !(gain > 0.0) {
        return Ok(PathLossDb::CAP);
    }
    let lambda = ris.wavelength();
    let (m, n) = (ris.m_rows as f64, ris.n_cols as f64);
    let pi3 = PI * PI * PI;
    let num = 64.0 * pi3 * (d1 * d1) * (d2 * d2);
    let den = db_to_linear(ris.gain_tx_dbi)
        * db_to_linear(ris.gain_rx_dbi)
        * db_to_linear(ris.gain_cell_dbi)
        * (m * m)
        * (n * n)
        * ris.dx
        * ris.dy
        * (lambda * lambda)
        * (ris.reflect_amp * ris.reflect_amp)
        * gain;
    Ok(PathLossDb::new(10.0 * libm::log10(num / den)))
}

/// Far-field path loss of the reflected link, transmitter → RIS → receiver.
///
/// Errors if either leg is within the Fraunhofer distance.
pub fn ris_far_field_pl(
    d1: f64,
    d2: f64,
    angles: &AngleSet,
    ris: &RisConfig,
) -> Result<PathLossDb, DomainError> {
    ris_far_field_pl_with_psi(
        d1,
        d2,
        angles.theta_t,
        angles.theta_r,
        psi_factor(angles, ris),
        ris,
    )
}

/// Parameters of the direct-link models.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DirectLinkModel {
    /// Taken from the RIS carrier when built from a scenario config.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub carrier_hz: f64,
    /// V2V LoS intercept, dB.
    pub v2v_los_intercept_db: f64,
    /// V2V LoS distance slope, dB per decade.
    pub v2v_los_slope_db: f64,
    /// NLoSv blockage mean: `base + max(0, slope·log10(d) − offset)`.
    pub nlosv_base_db: f64,
    pub nlosv_slope_db: f64,
    pub nlosv_offset_db: f64,
    pub nlosv_sigma_db: f64,
    /// A vehicle counts as a blocker when its xy distance to the link axis is
    /// at most this, m.
    pub blocker_lateral_m: f64,
    pub v2i_intercept_db: f64,
    pub v2i_slope_db: f64,
}

impl Default for DirectLinkModel {
    fn default() -> Self {
        Self {
            carrier_hz: 5e9,
            v2v_los_intercept_db: 32.4,
            v2v_los_slope_db: 20.0,
            nlosv_base_db: 9.0,
            nlosv_slope_db: 15.0,
            nlosv_offset_db: 41.0,
            nlosv_sigma_db: 4.5,
            blocker_lateral_m: 2.0,
            v2i_intercept_db: 28.0,
            v2i_slope_db: 22.0,
        }
    }
}

impl DirectLinkModel {
    fn freq_term_db(&self) -> f64 {
        20.0 * libm::log10(self.carrier_hz / 1e9)
    }

    /// Deterministic V2V line-of-sight path loss.
    pub fn v2v_los_pl(&self, d3: f64) -> PathLossDb {
        PathLossDb::new(
            self.v2v_los_intercept_db
                + self.v2v_los_slope_db * libm::log10(d3)
                + self.freq_term_db(),
        )
    }

    /// Mean of the NLoSv blockage loss at distance `d3`.
    pub fn nlosv_mean_db(&self, d3: f64) -> f64 {
        self.nlosv_base_db
            + (self.nlosv_slope_db * libm::log10(d3) - self.nlosv_offset_db).max(0.0)
    }
}

/// Whether any blocker rises above the straight line between the antennas.
///
/// Each blocker is given by its roof position (`z` = vehicle height).
pub fn is_blocked(tx: Vec3, rx: Vec3, blockers: &[Vec3], lateral_m: f64) -> bool {
    let (ax, ay) = (rx.x - tx.x, rx.y - tx.y);
    let len2 = ax * ax + ay * ay;
    if len2 == 0.0 {
        return false;
    }
    blockers.iter().any(|b| {
        let t = ((b.x - tx.x) * ax + (b.y - tx.y) * ay) / len2;
        if t <= 0.0 || t >= 1.0 {
            return false;
        }
        let lateral = libm::hypot(tx.x + t * ax - b.x, tx.y + t * ay - b.y);
        let line_z = tx.z + t * (rx.z - tx.z);
        lateral <= lateral_m && b.z > line_z
    })
}

/// Direct V2V path loss: LoS, or LoS plus a random vehicle-blockage loss.
///
/// `rng` is only drawn from when the link is blocked.
pub fn v2v_direct_pl<R: Rng + ?Sized>(
    model: &DirectLinkModel,
    tx: Vec3,
    rx: Vec3,
    blockers: &[Vec3],
    rng: &mut R,
) -> PathLossDb {
    let d3 = tx.distance(rx);
    let los = model.v2v_los_pl(d3);
    if !is_blocked(tx, rx, blockers, model.blocker_lateral_m) {
        return los;
    }
    let extra = match Normal::new(model.nlosv_mean_db(d3), model.nlosv_sigma_db) {
        Ok(dist) => dist.sample(rng).max(0.0),
        Err(_) => model.nlosv_mean_db(d3).max(0.0),
    };
    PathLossDb::new(los.db() + extra)
}

/// Direct V2I path loss (urban-macro LoS slope).
pub fn v2i_direct_pl(model: &DirectLinkModel, tx: Vec3, rx: Vec3) -> PathLossDb {
    let d3 = tx.distance(rx);
    PathLossDb::new(
        model.v2i_intercept_db + model.v2i_slope_db * libm::log10(d3) + model.freq_term_db(),
    )
}

/// Coherent (amplitude) sum of the direct and reflected paths.
///
/// A capped input is treated as an absent path.
pub fn combine_links(direct: PathLossDb, ris: PathLossDb) -> PathLossDb {
    match (direct.is_capped(), ris.is_capped()) {
        (true, _) => ris,
        (_, true) => direct,
        _ => {
            let amp = libm::pow(10.0, -direct.db() / 20.0) + libm::pow(10.0, -ris.db() / 20.0);
            PathLossDb::new(-20.0 * libm::log10(amp))
        }
    }
}

/// Received SNR in dB.
pub fn snr_db(pl_eff: PathLossDb, budget: &LinkBudget) -> f64 {
    budget.tx_power_dbm - pl_eff.db() - budget.noise_dbm
}

/// Modified Shannon rate, bit/s.
pub fn rate_bps(snr_db: f64, budget: &LinkBudget) -> f64 {
    budget.eta * budget.eff_bandwidth_hz * libm::log2(1.0 + libm::pow(10.0, snr_db / 10.0))
}
