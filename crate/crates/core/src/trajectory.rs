//! DRS trajectory heuristic: hover height, target point, per-step motion and
//! pair selection.

use crate::error::ConfigError;
use crate::geometry::{BoundingBox, Vec3};
use crate::minimize::golden_section;

/// Absolute tolerance of the height search, m.
pub const HEIGHT_TOL_M: f64 = 1e-4;

/// Objective minimized over the hover height above the pair midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HeightObjective {
    /// `(d² + h²) / cos⁶(atan(d/h))`, minimized at `h = √3·d`.
    #[default]
    AsPublished,
    /// `(d² + h²)² / cos⁶(atan(d/h))`, the full `d1²·d2²` dependence,
    /// minimized at `h = √(3/2)·d`.
    FullDistance,
}

impl HeightObjective {
    pub fn eval(self, d_half: f64, h: f64) -> f64 {
        let c = libm::cos(libm::atan(d_half / h));
        let c6 = c * c * c * c * c * c;
        let r2 = d_half * d_half + h * h;
        match self {
            Self::AsPublished => r2 / c6,
            Self::FullDistance => r2 * r2 / c6,
        }
    }

    /// Closed-form unconstrained minimizer.
    pub fn closed_form(self, d_half: f64) -> f64 {
        match self {
            Self::AsPublished => libm::sqrt(3.0) * d_half,
            Self::FullDistance => libm::sqrt(1.5) * d_half,
        }
    }
}

/// Hover height in `[z_min, z_max]` minimizing the published objective.
pub fn optimal_height(d_half: f64, z_min: f64, z_max: f64) -> Result<f64, ConfigError> {
    optimal_height_for(HeightObjective::AsPublished, d_half, z_min, z_max)
}

pub fn optimal_height_for(
    objective: HeightObjective,
    d_half: f64,
    z_min: f64,
    z_max: f64,
) -> Result<f64, ConfigError> {
    if !(z_min > 0.0 && z_min < z_max && z_max.is_finite()) {
        return Err(ConfigError::new(
            "bounds.z",
            "height bounds must satisfy 0 < z_min < z_max",
        ));
    }
    if !(d_half >= 0.0 && d_half.is_finite()) {
        return Err(ConfigError::new(
            "d_half",
            "half pair distance must be finite and non-negative",
        ));
    }
    Ok(golden_section(
        |h| objective.eval(d_half, h),
        z_min,
        z_max,
        HEIGHT_TOL_M,
    ))
}

/// Identifier of a V2X pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PairId(pub u64);

/// Where the DRS should hover to serve a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryTarget {
    pub location: Vec3,
    pub pair_id: PairId,
}

/// Endpoint positions of a pair as seen by the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCandidate {
    pub id: PairId,
    pub a: Vec3,
    pub b: Vec3,
    pub active: bool,
}

/// Pair midpoint in xy at the optimal hover height.
///
/// Bounds are assumed validated (see [`BoundingBox::is_valid`]).
pub fn optimal_location(a: Vec3, b: Vec3, bounds: &BoundingBox, objective: HeightObjective) -> Vec3 {
    let d_half = 0.5 * a.distance_xy(b);
    let z = optimal_height_for(objective, d_half, bounds.z_min, bounds.z_max)
        .unwrap_or(bounds.z_min);
    Vec3::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y), z)
}

pub fn target_for(pair: &PairCandidate, bounds: &BoundingBox, objective: HeightObjective) -> TrajectoryTarget {
    TrajectoryTarget {
        location: optimal_location(pair.a, pair.b, bounds, objective),
        pair_id: pair.id,
    }
}

/// Moves at most `v_d·t_s` straight towards `target`, landing on it exactly
/// when it is within reach.
pub fn step_towards(current: Vec3, target: Vec3, v_d: f64, t_s: f64) -> Vec3 {
    let delta = target - current;
    let dist = delta.norm();
    let reach = v_d * t_s;
    if dist <= reach {
        target
    } else {
        current + delta * (reach / dist)
    }
}

/// Active pair whose optimal location is closest to the DRS.
///
/// Ties go to the lowest id. Pairs whose endpoints are farther apart in xy
/// than `xy_threshold` are skipped.
pub fn select_pair<'a, I>(
    drs: Vec3,
    pairs: I,
    bounds: &BoundingBox,
    objective: HeightObjective,
    xy_threshold: Option<f64>,
) -> Option<PairId>
where
    I: IntoIterator<Item = &'a PairCandidate>,
{
    let mut best: Option<(f64, PairId)> = None;
    for p in pairs {
        if !p.active {
            continue;
        }
        if let Some(limit) = xy_threshold {
            if p.a.distance_xy(p.b) > limit {
                continue;
            }
        }
        let dist = drs.distance(optimal_location(p.a, p.b, bounds, objective));
        let better = match best {
            None => true,
            Some((bd, bid)) => dist < bd || (dist == bd && p.id < bid),
        };
        if better {
            best = Some((dist, p.id));
        }
    }
    best.map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    /// Dense grid search over [lo, hi] at `step` resolution.
    fn grid_argmin(d: f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .map(|h| (h, HeightObjective::AsPublished.eval(d, h)))
            .fold((lo, f64::INFINITY), |acc, (h, f)| if f < acc.1 { (h, f) } else { acc })
            .0
    }

    #[test]
    fn optimal_height_matches_grid_oracle() {
        for (d, expected) in [(100.0, 173.205), (20.0, 50.0), (400.0, 600.0)] {
            let oracle = grid_argmin(d, 50.0, 600.0, 0.001);
            assert_close!(oracle, expected, 1e-3);
            let h = optimal_height(d, 50.0, 600.0).unwrap();
            assert_close!(h, oracle, 1e-3);
        }
    }

    #[test]
    fn full_distance_objective_minimizer() {
        let h = optimal_height_for(HeightObjective::FullDistance, 100.0, 1.0, 1000.0).unwrap();
        assert_close!(h, 1.5f64.sqrt() * 100.0, 1e-3);
    }

    #[test]
    fn invalid_height_bounds() {
        assert!(optimal_height(10.0, 600.0, 50.0).is_err());
        assert!(optimal_height(10.0, 50.0, 50.0).is_err());
        assert!(optimal_height(-1.0, 50.0, 600.0).is_err());
    }

    #[test]
    fn optimal_location_examples() {
        let b = BoundingBox::default();
        let obj = HeightObjective::AsPublished;
        let l = optimal_location(Vec3::new(0.0, 0.0, 1.5), Vec3::new(200.0, 0.0, 1.8), &b, obj);
        assert_close!(l.x, 100.0, 1e-12);
        assert_close!(l.y, 0.0, 1e-12);
        assert_close!(l.z, 173.205, 1e-3);

        let l = optimal_location(Vec3::new(10.0, 20.0, 1.5), Vec3::new(10.0, 20.0, 10.0), &b, obj);
        assert_eq!((l.x, l.y, l.z), (10.0, 20.0, 50.0));

        let l = optimal_location(Vec3::new(0.0, 0.0, 1.5), Vec3::new(0.0, 4000.0, 1.5), &b, obj);
        assert_eq!((l.x, l.y, l.z), (0.0, 2000.0, 600.0));
    }

    #[test]
    fn step_examples() {
        let p = step_towards(Vec3::new(0.0, 0.0, 50.0), Vec3::new(30.0, 40.0, 50.0), 15.0, 0.5);
        assert_close!(p.x, 4.5, 1e-12);
        assert_close!(p.y, 6.0, 1e-12);
        assert_close!(p.z, 50.0, 1e-12);

        let c = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(step_towards(c, c, 15.0, 0.5), c);

        let t = Vec3::new(1.0, 2.0, 8.0);
        assert_eq!(step_towards(c, t, 15.0, 0.5), t);
    }

    fn cand(id: u64, a: Vec3, b: Vec3) -> PairCandidate {
        PairCandidate {
            id: PairId(id),
            a,
            b,
            active: true,
        }
    }

    #[test]
    fn select_pair_examples() {
        let bounds = BoundingBox::default();
        let obj = HeightObjective::AsPublished;
        let drs = Vec3::new(0.0, 1000.0, 50.0);
        // Zero-length pairs put L_opt at z_min directly above the midpoint.
        let near = cand(5, Vec3::new(0.0, 1100.0, 1.5), Vec3::new(0.0, 1100.0, 1.5));
        let far = cand(2, Vec3::new(0.0, 1400.0, 1.5), Vec3::new(0.0, 1400.0, 1.5));
        assert_eq!(select_pair(drs, &[far, near], &bounds, obj, None), Some(PairId(5)));

        let twin_a = cand(9, Vec3::new(0.0, 900.0, 1.5), Vec3::new(0.0, 900.0, 1.5));
        let twin_b = cand(4, Vec3::new(0.0, 1100.0, 1.5), Vec3::new(0.0, 1100.0, 1.5));
        assert_eq!(select_pair(drs, &[twin_a, twin_b], &bounds, obj, None), Some(PairId(4)));

        assert_eq!(select_pair(drs, &[], &bounds, obj, None), None);
        let mut idle = near;
        idle.active = false;
        assert_eq!(select_pair(drs, &[idle], &bounds, obj, None), None);

        let wide = cand(1, Vec3::new(0.0, 0.0, 1.5), Vec3::new(0.0, 2000.0, 1.5));
        assert_eq!(select_pair(drs, &[wide], &bounds, obj, Some(1000.0)), None);
        assert_eq!(select_pair(drs, &[wide], &bounds, obj, None), Some(PairId(1)));
    }

    #[test]
    fn repeated_steps_reach_target_on_schedule() {
        let start = Vec3::new(10.0, 20.0, 60.0);
        let target = Vec3::new(400.0, 3000.0, 500.0);
        let reach = 15.0 * 0.5;
        let expected = (start.distance(target) / reach).ceil() as usize;
        let mut p = start;
        let mut steps = Vec::new();
        while p != target {
            let next = step_towards(p, target, 15.0, 0.5);
            assert!(next.distance(target) <= p.distance(target));
            steps.push(next);
            p = next;
        }
        assert_eq!(steps.len(), expected);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn height_close_to_closed_form(d in 0.0..1500.0f64) {
                let h = optimal_height(d, 50.0, 600.0).unwrap();
                prop_assert!((50.0..=600.0).contains(&h));
                let cf = (3f64.sqrt() * d).clamp(50.0, 600.0);
                prop_assert!((h - cf).abs() <= 1e-3 * (3f64.sqrt() * d).max(1.0));
            }

            #[test]
            fn height_beats_random_heights(d in 1.0..800.0f64, seed in 0u64..1000) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let obj = HeightObjective::AsPublished;
                let h = optimal_height(d, 50.0, 600.0).unwrap();
                let fh = obj.eval(d, h);
                for _ in 0..10_000 {
                    let g: f64 = rng.random_range(50.0..=600.0);
                    prop_assert!(fh <= obj.eval(d, g) * (1.0 + 1e-12));
                }
            }

            #[test]
            fn steps_respect_speed_and_box(
                sx in 0.0..500.0f64, sy in 0.0..5000.0f64, sz in 50.0..600.0f64,
                tx in 0.0..500.0f64, ty in 0.0..5000.0f64, tz in 50.0..600.0f64,
            ) {
                let bounds = BoundingBox::default();
                let target = Vec3::new(tx, ty, tz);
                let mut p = Vec3::new(sx, sy, sz);
                for _ in 0..1000 {
                    let next = step_towards(p, target, 15.0, 0.5);
                    prop_assert!(next.distance(p) <= 7.5 + 1e-9);
                    prop_assert!(next.distance(target) <= p.distance(target) + 1e-12);
                    prop_assert!(bounds.excursion(next) <= 1e-9);
                    p = next;
                }
            }
        }
    }
}
