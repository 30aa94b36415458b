//! Scenario configuration. Every field has a default; defaults follow the
//! reference highway setup (500 m × 5 km, two opposite lanes).

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{DirectLinkModel, LinkBudget, RisConfig};
use crate::error::ConfigError;
use crate::geometry::{BoundingBox, Vec3};
use crate::rl::{AgentConfig, Algorithm, AzimuthWarp, ElevationWarp};
use crate::trajectory::HeightObjective;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Number of control steps to simulate.
    pub steps: u64,
    /// Control period T_s, s.
    pub time_step_s: f64,
    pub bounds: BoundingBox,
    pub drs: DrsConfig,
    pub traffic: TrafficConfig,
    pub ris: RisConfig,
    pub link: LinkBudget,
    pub direct: DirectLinkModel,
    pub agent: AgentParams,
    pub trajectory: TrajectoryParams,
    pub metrics: MetricsParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            steps: 200_000,
            time_step_s: 0.5,
            bounds: BoundingBox::default(),
            drs: DrsConfig::default(),
            traffic: TrafficConfig::default(),
            ris: RisConfig::default(),
            link: LinkBudget::default(),
            direct: DirectLinkModel::default(),
            agent: AgentParams::default(),
            trajectory: TrajectoryParams::default(),
            metrics: MetricsParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DrsConfig {
    /// Maximum translational speed v_D, m/s.
    pub max_speed: f64,
    /// Maximum rotation rate Γ_D, rad/s.
    pub gamma_d: f64,
    /// Start position; `None` means the box center at `z_min`.
    pub initial_position: Option<Vec3>,
    pub initial_yaw: f64,
}

impl Default for DrsConfig {
    fn default() -> Self {
        Self {
            max_speed: 15.0,
            gamma_d: 0.349,
            initial_position: None,
            initial_yaw: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrafficConfig {
    /// Vehicle speed, m/s.
    pub vehicle_speed: f64,
    /// Vehicle arrivals per second per lane.
    pub arrival_rate: f64,
    /// Mean new V2V events per step.
    pub v2v_rate: f64,
    /// Mean new V2I events per step.
    pub v2i_rate: f64,
    pub height_min: f64,
    pub height_max: f64,
    /// Start with the road already at its stationary density.
    pub prefill: bool,
    /// RSU x position (median strip).
    pub rsu_x: f64,
    pub rsu_height: f64,
    pub rsu_spacing: f64,
    /// y of the first RSU.
    pub rsu_offset: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            vehicle_speed: 10.0,
            arrival_rate: 0.2,
            v2v_rate: 0.05,
            v2i_rate: 0.02,
            height_min: 1.5,
            height_max: 2.0,
            prefill: true,
            rsu_x: 250.0,
            rsu_height: 10.0,
            rsu_spacing: 1000.0,
            rsu_offset: 500.0,
        }
    }
}

/// How the RIS yaw is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum YawPolicy {
    /// ε-greedy over the Q-tables.
    #[default]
    QLearning,
    /// A uniformly random rotation action every step.
    Random,
    /// Never rotate.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AgentParams {
    pub policy: YawPolicy,
    /// Update the tables while running.
    pub learning: bool,
    pub epsilon: f64,
    pub gamma: f64,
    pub c_theta: u16,
    pub c_phi: u16,
    pub allow_hold: bool,
    pub algorithm: Algorithm,
    pub elevation_warp: ElevationWarp,
    pub azimuth_warp: AzimuthWarp,
}

impl Default for AgentParams {
    fn default() -> Self {
        let a = AgentConfig::default();
        Self {
            policy: YawPolicy::QLearning,
            learning: true,
            epsilon: a.epsilon,
            gamma: a.gamma,
            c_theta: a.c_theta,
            c_phi: a.c_phi,
            allow_hold: a.allow_hold,
            algorithm: a.algorithm,
            elevation_warp: a.elevation_warp,
            azimuth_warp: a.azimuth_warp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrajectoryParams {
    pub objective: HeightObjective,
    /// Pairs farther apart than this in xy are neither formed nor served.
    pub pair_xy_threshold_m: Option<f64>,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            objective: HeightObjective::AsPublished,
            pair_xy_threshold_m: Some(1000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MetricsParams {
    /// Lower edges of the episode-length groups, in steps.
    pub length_groups: Vec<u64>,
    /// Lower edges of the inter-pair distance buckets, m.
    pub distance_buckets: Vec<f64>,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            length_groups: vec![1, 50, 100, 200, 400, 800],
            distance_buckets: vec![0.0, 100.0, 250.0, 500.0, 1000.0],
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be positive and finite"))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be non-negative and finite"))
    }
}

impl ScenarioConfig {
    pub fn agent_config(&self) -> AgentConfig {
        let p = &self.agent;
        AgentConfig {
            epsilon: p.epsilon,
            gamma: p.gamma,
            c_theta: p.c_theta,
            c_phi: p.c_phi,
            gamma_d: self.drs.gamma_d,
            t_s: self.time_step_s,
            allow_hold: p.allow_hold,
            algorithm: p.algorithm,
            elevation_warp: p.elevation_warp,
            azimuth_warp: p.azimuth_warp,
        }
    }

    /// Direct-link model on the RIS carrier.
    pub fn direct_model(&self) -> DirectLinkModel {
        DirectLinkModel {
            carrier_hz: self.ris.carrier_hz,
            ..self.direct
        }
    }

    pub fn initial_position(&self) -> Vec3 {
        self.drs.initial_position.unwrap_or_else(|| {
            let b = &self.bounds;
            Vec3::new(0.5 * (b.x_min + b.x_max), 0.5 * (b.y_min + b.y_max), b.z_min)
        })
    }

    /// Field-level validation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("time_step_s", self.time_step_s)?;
        if !self.bounds.is_valid() {
            return Err(ConfigError::new("bounds", "each axis needs finite min < max"));
        }
        if self.bounds.z_min <= 0.0 {
            return Err(ConfigError::new("bounds.z_min", "must be above ground"));
        }
        positive("drs.max_speed", self.drs.max_speed)?;
        positive("drs.gamma_d", self.drs.gamma_d)?;
        if !self.drs.initial_yaw.is_finite() {
            return Err(ConfigError::new("drs.initial_yaw", "must be finite"));
        }
        if let Some(p) = self.drs.initial_position {
            if !p.is_finite() || !self.bounds.contains(p) {
                return Err(ConfigError::new("drs.initial_position", "must lie inside bounds"));
            }
        }

        let t = &self.traffic;
        positive("traffic.vehicle_speed", t.vehicle_speed)?;
        if self.drs.max_speed < t.vehicle_speed {
            return Err(ConfigError::new(
                "drs.max_speed",
                "must be at least traffic.vehicle_speed",
            ));
        }
        non_negative("traffic.arrival_rate", t.arrival_rate)?;
        non_negative("traffic.v2v_rate", t.v2v_rate)?;
        non_negative("traffic.v2i_rate", t.v2i_rate)?;
        positive("traffic.height_min", t.height_min)?;
        if !(t.height_max >= t.height_min && t.height_max.is_finite()) {
            return Err(ConfigError::new("traffic.height_max", "must be >= height_min"));
        }
        if t.height_max >= self.bounds.z_min || t.rsu_height >= self.bounds.z_min {
            return Err(ConfigError::new(
                "bounds.z_min",
                "must be above vehicle and RSU heights",
            ));
        }
        positive("traffic.rsu_spacing", t.rsu_spacing)?;
        positive("traffic.rsu_height", t.rsu_height)?;
        if !(t.rsu_x.is_finite() && t.rsu_offset.is_finite()) {
            return Err(ConfigError::new("traffic.rsu_x", "must be finite"));
        }

        let r = &self.ris;
        if r.m_rows == 0 || r.n_cols == 0 {
            return Err(ConfigError::new("ris.m_rows", "panel needs at least one cell"));
        }
        positive("ris.dx", r.dx)?;
        positive("ris.dy", r.dy)?;
        positive("ris.carrier_hz", r.carrier_hz)?;
        if !(r.reflect_amp > 0.0 && r.reflect_amp <= 1.0) {
            return Err(ConfigError::new("ris.reflect_amp", "must be in (0, 1]"));
        }
        for (f, v) in [
            ("ris.gain_tx_dbi", r.gain_tx_dbi),
            ("ris.gain_rx_dbi", r.gain_rx_dbi),
            ("ris.gain_cell_dbi", r.gain_cell_dbi),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::new(f, "must be finite"));
            }
        }

        let l = &self.link;
        positive("link.eff_bandwidth_hz", l.eff_bandwidth_hz)?;
        if !(l.eta > 0.0 && l.eta <= 1.0) {
            return Err(ConfigError::new("link.eta", "must be in (0, 1]"));
        }
        if !(l.tx_power_dbm.is_finite() && l.noise_dbm.is_finite()) {
            return Err(ConfigError::new("link.tx_power_dbm", "must be finite"));
        }
        non_negative("direct.nlosv_sigma_db", self.direct.nlosv_sigma_db)?;
        non_negative("direct.blocker_lateral_m", self.direct.blocker_lateral_m)?;

        self.agent_config().validate()?;
        if let Some(th) = self.trajectory.pair_xy_threshold_m {
            positive("trajectory.pair_xy_threshold_m", th)?;
        }
        let m = &self.metrics;
        if m.length_groups.is_empty() || m.length_groups.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new(
                "metrics.length_groups",
                "must be non-empty and strictly increasing",
            ));
        }
        if m.distance_buckets.is_empty()
            || m.distance_buckets.windows(2).any(|w| !(w[0] < w[1]))
            || m.distance_buckets.iter().any(|v| !v.is_finite())
        {
            return Err(ConfigError::new(
                "metrics.distance_buckets",
                "must be non-empty, finite and strictly increasing",
            ));
        }
        Ok(())
    }
}
