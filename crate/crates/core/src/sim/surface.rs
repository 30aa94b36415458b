//! Path loss of the reflected (or combined) link over an xy grid of DRS
//! positions at fixed height and yaw.

use alloc::vec::Vec;

use crate::channel::{combine_links, ris_far_field_pl_with_psi, psi_factor, PathLossDb, RisConfig};
use crate::error::{ConfigError, DomainError};
use crate::geometry::{AngleSet, BoundingBox, Pose, Vec3};

/// Evenly spaced grid, endpoints included. A single point sits at the
/// minimum edge.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn x(&self, i: usize) -> f64 {
        axis(self.x_min, self.x_max, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        axis(self.y_min, self.y_max, self.ny, j)
    }

    /// Grid index nearest to `v` along x.
    pub fn nearest_x(&self, v: f64) -> usize {
        nearest(self.x_min, self.x_max, self.nx, v)
    }

    pub fn nearest_y(&self, v: f64) -> usize {
        nearest(self.y_min, self.y_max, self.ny, v)
    }

    pub fn validate(&self, bounds: &BoundingBox) -> Result<(), ConfigError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(ConfigError::new("grid", "needs at least one point per axis"));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max < self.x_min || self.y_max < self.y_min {
            return Err(ConfigError::new("grid", "axis ranges must be finite and ordered"));
        }
        if self.x_min < bounds.x_min
            || self.x_max > bounds.x_max
            || self.y_min < bounds.y_min
            || self.y_max > bounds.y_max
        {
            return Err(ConfigError::new("grid", "lies outside the flight bounds"));
        }
        Ok(())
    }
}

fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

fn nearest(lo: f64, hi: f64, n: usize, v: f64) -> usize {
    if n <= 1 || hi <= lo {
        return 0;
    }
    let t = (v - lo) / (hi - lo) * (n - 1) as f64;
    (libm::round(t).max(0.0) as usize).min(n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SurfaceMode {
    /// RIS held at the given yaw.
    #[default]
    FixedYaw,
    /// Array factor taken as 1, i.e. the best any orientation could do.
    OrientationOptimal,
}

/// Row-major grid of path losses: row `j` holds all x for `y(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub grid: GridSpec,
    pub height: f64,
    pub yaw: f64,
    pub mode: SurfaceMode,
    pub values_db: Vec<f64>,
    /// Cells inside the Fraunhofer distance; their value is the cap.
    pub near_field: Vec<bool>,
}

impl Surface {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values_db[j * self.grid.nx + i]
    }

    /// `(i, j)` of the smallest value (first in row-major order on ties).
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values_db.iter().enumerate() {
            if *v < self.values_db[best] {
                best = k;
            }
        }
        (best % self.grid.nx, best / self.grid.nx)
    }

    /// `max − min` over far-field cells, dB.
    pub fn range_db(&self) -> f64 {
        let (lo, hi) = self
            .values_db
            .iter()
            .zip(&self.near_field)
            .filter(|(_, nf)| !**nf)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| {
                (lo.min(*v), hi.max(*v))
            });
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Evaluates the link from `tx` via a DRS at each grid point to `rx`.
///
/// With `direct` given, each cell holds the combined path loss.
#[allow(clippy::too_many_arguments)]
pub fn pathloss_surface(
    tx: Vec3,
    rx: Vec3,
    height: f64,
    yaw: f64,
    grid: &GridSpec,
    mode: SurfaceMode,
    direct: Option<PathLossDb>,
    ris: &RisConfig,
    bounds: &BoundingBox,
) -> Result<Surface, ConfigError> {
    grid.validate(bounds)?;
    if !(height >= bounds.z_min && height <= bounds.z_max) {
        return Err(ConfigError::new("height", "lies outside the flight bounds"));
    }
    let mut values_db = Vec::with_capacity(grid.nx * grid.ny);
    let mut near_field = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let pose = Pose::new(Vec3::new(grid.x(i), grid.y(j), height), yaw);
            let (pl, nf) = match cell(&pose, tx, rx, mode, ris) {
                Ok(pl) => (pl, false),
                Err(DomainError::NearField { .. }) => (PathLossDb::CAP, true),
                Err(e) => return Err(ConfigError::new("pair", alloc::format!("{e}"))),
            };
            let pl = match direct {
                Some(d) => combine_links(d, pl),
                None => pl,
            };
            values_db.push(pl.db());
            near_field.push(nf);
        }
    }
    Ok(Surface {
        grid: *grid,
        height,
        yaw,
        mode,
        values_db,
        near_field,
    })
}

fn cell(pose: &Pose, tx: Vec3, rx: Vec3, mode: SurfaceMode, ris: &RisConfig) -> Result<PathLossDb, DomainError> {
    let angles = AngleSet::observe(pose, tx, rx)?;
    let psi = match mode {
        SurfaceMode::FixedYaw => psi_factor(&angles, ris),
        SurfaceMode::OrientationOptimal => 1.0,
    };
    let p = pose.position;
    ris_far_field_pl_with_psi(p.distance(tx), p.distance(rx), angles.theta_t, angles.theta_r, psi, ris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ris_far_field_pl;

    fn grid(nx: usize, ny: usize) -> GridSpec {
        GridSpec {
            x_min: 0.0,
            x_max: 500.0,
            nx,
            y_min: 2000.0,
            y_max: 3000.0,
            ny,
        }
    }

    #[test]
    fn one_cell_matches_channel_call() {
        let (tx, rx) = (Vec3::new(0.0, 2300.0, 1.5), Vec3::new(500.0, 2700.0, 10.0));
        let ris = RisConfig::default();
        let s = pathloss_surface(tx, rx, 500.0, 0.4, &grid(1, 1), SurfaceMode::FixedYaw, None, &ris, &BoundingBox::default())
            .unwrap();
        let pose = Pose::new(Vec3::new(0.0, 2000.0, 500.0), 0.4);
        let angles = AngleSet::observe(&pose, tx, rx).unwrap();
        let expect = ris_far_field_pl(pose.position.distance(tx), pose.position.distance(rx), &angles, &ris).unwrap();
        assert_eq!(s.values_db, [expect.db()]);
    }

    #[test]
    fn symmetric_about_bisector() {
        // Pair along y, symmetric about y = 2500; yaw 0 keeps the panel
        // axes aligned with the mirror plane.
        let (tx, rx) = (Vec3::new(250.0, 2300.0, 1.5), Vec3::new(250.0, 2700.0, 1.5));
        let s = pathloss_surface(
            tx,
            rx,
            500.0,
            0.0,
            &grid(11, 21),
            SurfaceMode::FixedYaw,
            None,
            &RisConfig::default(),
            &BoundingBox::default(),
        )
        .unwrap();
        for j in 0..21 {
            for i in 0..11 {
                let a = s.get(i, j);
                let b = s.get(i, 20 - j);
                assert!((a - b).abs() < 1e-6 * a.abs(), "({i},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn orientation_optimal_minimum_at_midpoint() {
        let (tx, rx) = (Vec3::new(0.0, 2300.0, 1.5), Vec3::new(500.0, 2700.0, 10.0));
        let g = grid(26, 51);
        let s = pathloss_surface(tx, rx, 500.0, 0.0, &g, SurfaceMode::OrientationOptimal, None, &RisConfig::default(), &BoundingBox::default())
            .unwrap();
        let (mi, mj) = s.argmin();
        assert_eq!((mi, mj), (g.nearest_x(250.0), g.nearest_y(2500.0)));
    }

    #[test]
    fn rejects_grid_outside_bounds() {
        let mut g = grid(2, 2);
        g.x_max = 600.0;
        let r = pathloss_surface(
            Vec3::ZERO,
            Vec3::new(1.0, 1.0, 1.0),
            500.0,
            0.0,
            &g,
            SurfaceMode::FixedYaw,
            None,
            &RisConfig::default(),
            &BoundingBox::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn near_field_cells_flagged() {
        let (tx, rx) = (Vec3::new(250.0, 2500.0, 1.5), Vec3::new(250.0, 2900.0, 1.5));
        let s = pathloss_surface(tx, rx, 50.0, 0.0, &grid(11, 11), SurfaceMode::FixedYaw, None, &RisConfig::default(), &BoundingBox::default())
            .unwrap();
        let k = 5 * 11 + 5;
        assert!(s.near_field[k]);
        assert_eq!(s.values_db[k], PathLossDb::CAP.db());
        assert!(s.near_field.iter().any(|nf| !nf));
    }
}
