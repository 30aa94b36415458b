//! Tabular double Q-learning controller for the RIS yaw.

mod agent;
mod quantize;
mod tables;

pub use agent::{apply_yaw_action, choose_action, learning_rate, reward, update};
pub use quantize::{quantize_state, AzimuthWarp, ElevationWarp, StateIndex};
pub use tables::{QRow, QTables, MAX_ACTIONS};

use crate::error::ConfigError;

/// Rotation speeds as fractions of the maximum rotation rate.
pub const SPEED_FRACTIONS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Counter-clockwise, yaw increases.
    Left,
    /// Clockwise, yaw decreases.
    Right,
    Hold,
}

/// One of the eight rotation actions (plus an optional hold action).
///
/// Ids 0..4 rotate left at the four speeds, 4..8 rotate right, 8 holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub u8);

impl ActionId {
    pub const HOLD: ActionId = ActionId(8);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn direction(self) -> Direction {
        match self.0 {
            0..=3 => Direction::Left,
            4..=7 => Direction::Right,
            _ => Direction::Hold,
        }
    }

    pub fn speed_fraction(self) -> f64 {
        match self.0 {
            0..=7 => SPEED_FRACTIONS[(self.0 % 4) as usize],
            _ => 0.0,
        }
    }

    /// Signed yaw change applied over one time step.
    pub fn yaw_delta(self, gamma_d: f64, t_s: f64) -> f64 {
        let mag = self.speed_fraction() * gamma_d * t_s;
        match self.direction() {
            Direction::Left => mag,
            Direction::Right => -mag,
            Direction::Hold => 0.0,
        }
    }
}

/// Which update rule the agent uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Algorithm {
    #[default]
    DoubleQ,
    /// Plain Q-learning on `q1` only; baseline.
    SingleQ,
}

/// Hyperparameters of the orientation agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub epsilon: f64,
    /// Discount factor.
    pub gamma: f64,
    pub c_theta: u16,
    pub c_phi: u16,
    /// Maximum rotation rate, rad/s.
    pub gamma_d: f64,
    /// Time step, s.
    pub t_s: f64,
    pub allow_hold: bool,
    pub algorithm: Algorithm,
    pub elevation_warp: ElevationWarp,
    pub azimuth_warp: AzimuthWarp,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            gamma: 0.9,
            c_theta: 100,
            c_phi: 100,
            gamma_d: 0.349,
            t_s: 0.5,
            allow_hold: false,
            algorithm: Algorithm::DoubleQ,
            elevation_warp: ElevationWarp::Sqrt,
            azimuth_warp: AzimuthWarp::Square,
        }
    }
}

impl AgentConfig {
    pub fn n_actions(&self) -> usize {
        if self.allow_hold {
            9
        } else {
            8
        }
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.n_actions() as u8).map(ActionId)
    }

    /// Largest yaw change per step.
    pub fn max_yaw_step(&self) -> f64 {
        self.gamma_d * self.t_s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ConfigError::new("agent.epsilon", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::new("agent.gamma", "must be in [0, 1]"));
        }
        if self.c_theta == 0 {
            return Err(ConfigError::new("agent.c_theta", "must be at least 1"));
        }
        if self.c_phi == 0 {
            return Err(ConfigError::new("agent.c_phi", "must be at least 1"));
        }
        if !(self.gamma_d > 0.0 && self.gamma_d.is_finite()) {
            return Err(ConfigError::new("drs.gamma_d", "must be positive"));
        }
        if !(self.t_s > 0.0 && self.t_s.is_finite()) {
            return Err(ConfigError::new("time_step_s", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn eight_distinct_actions() {
        let cfg = AgentConfig::default();
        let deltas: BTreeSet<i64> = cfg
            .actions()
            .map(|a| (a.yaw_delta(1.0, 1.0) * 1e6).round() as i64)
            .collect();
        assert_eq!(cfg.n_actions(), 8);
        assert_eq!(deltas.len(), 8);
        assert!(!deltas.contains(&0));
    }

    #[test]
    fn hold_action_is_opt_in() {
        let cfg = AgentConfig {
            allow_hold: true,
            ..AgentConfig::default()
        };
        assert_eq!(cfg.n_actions(), 9);
        assert_eq!(ActionId::HOLD.yaw_delta(0.349, 0.5), 0.0);
    }

    #[test]
    fn validation() {
        assert!(AgentConfig::default().validate().is_ok());
        let bad = AgentConfig {
            epsilon: 1.5,
            ..AgentConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().field, "agent.epsilon");
        let bad = AgentConfig {
            c_phi: 0,
            ..AgentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
