//! Highway traffic: two opposite lanes, RSUs on the median, and V2X pairs
//! that live until one endpoint leaves the segment.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use super::config::ScenarioConfig;
use crate::error::ConfigError;
use crate::geometry::Vec3;
use crate::trajectory::{PairCandidate, PairId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u64);

/// A vehicle. Lane 0 runs +y at `x_min`, lane 1 runs −y at `x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    pub lane: u8,
    /// Antenna position; `z` equals the vehicle height.
    pub position: Vec3,
    pub speed: f64,
    pub height: f64,
    pub pair: Option<PairId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rsu {
    pub index: usize,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PairKind {
    V2V,
    V2I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Vehicle(VehicleId),
    Rsu(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V2xPair {
    pub id: PairId,
    pub kind: PairKind,
    /// Transmitter (always a vehicle).
    pub endpoint_a: NodeRef,
    /// Receiver: a vehicle for V2V, an RSU for V2I.
    pub endpoint_b: NodeRef,
    pub active: bool,
}

/// Mutable world state.
#[derive(Debug, Clone)]
pub struct World {
    pub time_s: f64,
    /// Sorted by id.
    vehicles: Vec<Vehicle>,
    rsus: Vec<Rsu>,
    /// Active pairs only.
    pairs: BTreeMap<PairId, V2xPair>,
    next_arrival: [f64; 2],
    next_vehicle: u64,
    next_pair: u64,
}

impl World {
    /// Empty road (or a prefilled one, per config) at t = 0.
    pub fn new<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Self {
        let t = &cfg.traffic;
        let b = &cfg.bounds;
        let mut rsus = Vec::new();
        let mut y = t.rsu_offset;
        while y <= b.y_max {
            if y >= b.y_min {
                rsus.push(Rsu {
                    index: rsus.len(),
                    position: Vec3::new(t.rsu_x, y, t.rsu_height),
                });
            }
            y += t.rsu_spacing;
        }

        let mut world = Self {
            time_s: 0.0,
            vehicles: Vec::new(),
            rsus,
            pairs: BTreeMap::new(),
            next_arrival: [f64::INFINITY; 2],
            next_vehicle: 0,
            next_pair: 0,
        };
        let start = if t.prefill {
            -(b.y_max - b.y_min) / t.vehicle_speed
        } else {
            0.0
        };
        for lane in 0..2 {
            world.next_arrival[lane] = start + sample_gap(t.arrival_rate, rng);
        }
        world.admit_arrivals(cfg, rng);
        world
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn rsus(&self) -> &[Rsu] {
        &self.rsus
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &self.vehicles[i])
    }

    pub fn node_position(&self, node: NodeRef) -> Option<Vec3> {
        match node {
            NodeRef::Vehicle(id) => self.vehicle(id).map(|v| v.position),
            NodeRef::Rsu(i) => self.rsus.get(i).map(|r| r.position),
        }
    }

    pub fn pair(&self, id: PairId) -> Option<&V2xPair> {
        self.pairs.get(&id)
    }

    pub fn is_active(&self, id: PairId) -> bool {
        self.pairs.get(&id).is_some_and(|p| p.active)
    }

    pub fn active_pairs(&self) -> impl Iterator<Item = &V2xPair> {
        self.pairs.values().filter(|p| p.active)
    }

    /// Endpoint positions `(a, b)` of a pair.
    pub fn pair_endpoints(&self, id: PairId) -> Option<(Vec3, Vec3)> {
        let p = self.pairs.get(&id)?;
        Some((
            self.node_position(p.endpoint_a)?,
            self.node_position(p.endpoint_b)?,
        ))
    }

    pub fn candidates(&self) -> Vec<PairCandidate> {
        self.active_pairs()
            .filter_map(|p| {
                let (a, b) = self.pair_endpoints(p.id)?;
                Some(PairCandidate {
                    id: p.id,
                    a,
                    b,
                    active: p.active,
                })
            })
            .collect()
    }

    /// Roof positions of the lane's vehicles other than `exclude`.
    pub fn lane_blockers(&self, lane: u8, exclude: &[VehicleId]) -> Vec<Vec3> {
        self.vehicles
            .iter()
            .filter(|v| v.lane == lane && !exclude.contains(&v.id))
            .map(|v| v.position)
            .collect()
    }

    /// Moves every vehicle by `dt` seconds.
    pub fn advance(&mut self, dt: f64) {
        self.time_s += dt;
        for v in &mut self.vehicles {
            let dir = if v.lane == 0 { 1.0 } else { -1.0 };
            v.position.y += dir * v.speed * dt;
        }
    }

    /// Places a vehicle by hand. `position.z` is taken as its height.
    pub fn add_vehicle(&mut self, lane: u8, position: Vec3, speed: f64) -> VehicleId {
        let id = VehicleId(self.next_vehicle);
        self.next_vehicle += 1;
        self.vehicles.push(Vehicle {
            id,
            lane,
            position,
            speed,
            height: position.z,
            pair: None,
        });
        id
    }

    /// Forms a pair by hand. Both vehicles must exist and be unpaired.
    pub fn add_pair(&mut self, kind: PairKind, a: VehicleId, b: NodeRef) -> Result<PairId, ConfigError> {
        let free = |w: &Self, id: VehicleId| w.vehicle(id).is_some_and(|v| v.pair.is_none());
        if !free(self, a) {
            return Err(ConfigError::new("pair.endpoint_a", "unknown or already paired vehicle"));
        }
        match (kind, b) {
            (PairKind::V2V, NodeRef::Vehicle(vb)) if vb != a && free(self, vb) => {}
            (PairKind::V2I, NodeRef::Rsu(i)) if i < self.rsus.len() => {}
            _ => return Err(ConfigError::new("pair.endpoint_b", "does not match the pair kind")),
        }
        Ok(self.new_pair(kind, a, b))
    }

    fn spawn_vehicle<R: Rng + ?Sized>(&mut self, cfg: &ScenarioConfig, lane: u8, arrival: f64, rng: &mut R) {
        let t = &cfg.traffic;
        let b = &cfg.bounds;
        let travelled = t.vehicle_speed * (self.time_s - arrival);
        let (x, y) = if lane == 0 {
            (b.x_min, b.y_min + travelled)
        } else {
            (b.x_max, b.y_max - travelled)
        };
        if y < b.y_min || y > b.y_max {
            return;
        }
        let height = if t.height_max > t.height_min {
            rng.random_range(t.height_min..=t.height_max)
        } else {
            t.height_min
        };
        let id = VehicleId(self.next_vehicle);
        self.next_vehicle += 1;
        self.vehicles.push(Vehicle {
            id,
            lane,
            position: Vec3::new(x, y, height),
            speed: t.vehicle_speed,
            height,
            pair: None,
        });
    }

    fn admit_arrivals<R: Rng + ?Sized>(&mut self, cfg: &ScenarioConfig, rng: &mut R) {
        // Merge both lanes in arrival order so ids stay time-ordered.
        loop {
            let lane = if self.next_arrival[0] <= self.next_arrival[1] { 0 } else { 1 };
            let at = self.next_arrival[lane];
            if !(at <= self.time_s) {
                break;
            }
            self.spawn_vehicle(cfg, lane as u8, at, rng);
            self.next_arrival[lane] = at + sample_gap(cfg.traffic.arrival_rate, rng);
        }
    }

    /// Removes vehicles that left the segment and deactivates their pairs.
    fn remove_exited(&mut self, cfg: &ScenarioConfig) {
        let b = &cfg.bounds;
        let mut ended: Vec<PairId> = Vec::new();
        self.vehicles.retain(|v| {
            let inside = v.position.y >= b.y_min && v.position.y <= b.y_max;
            if !inside {
                if let Some(p) = v.pair {
                    ended.push(p);
                }
            }
            inside
        });
        for id in ended {
            if let Some(p) = self.pairs.remove(&id) {
                for node in [p.endpoint_a, p.endpoint_b] {
                    if let NodeRef::Vehicle(vid) = node {
                        if let Ok(i) = self.vehicles.binary_search_by_key(&vid, |v| v.id) {
                            self.vehicles[i].pair = None;
                        }
                    }
                }
            }
        }
    }

    fn new_pair(&mut self, kind: PairKind, a: VehicleId, b: NodeRef) -> PairId {
        let id = PairId(self.next_pair);
        self.next_pair += 1;
        self.pairs.insert(
            id,
            V2xPair {
                id,
                kind,
                endpoint_a: NodeRef::Vehicle(a),
                endpoint_b: b,
                active: true,
            },
        );
        for vid in [Some(a), if let NodeRef::Vehicle(v) = b { Some(v) } else { None }]
            .into_iter()
            .flatten()
        {
            if let Ok(i) = self.vehicles.binary_search_by_key(&vid, |v| v.id) {
                self.vehicles[i].pair = Some(id);
            }
        }
        id
    }

    fn unpaired(&self) -> Vec<usize> {
        (0..self.vehicles.len())
            .filter(|&i| self.vehicles[i].pair.is_none())
            .collect()
    }

    fn try_v2v<R: Rng + ?Sized>(&mut self, max_xy: f64, rng: &mut R) -> Option<PairId> {
        let free = self.unpaired();
        if free.is_empty() {
            return None;
        }
        let a = self.vehicles[free[rng.random_range(0..free.len())]];
        let partners: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| {
                let v = &self.vehicles[i];
                v.id != a.id && v.lane == a.lane && v.position.distance_xy(a.position) <= max_xy
            })
            .collect();
        if partners.is_empty() {
            return None;
        }
        let b = self.vehicles[partners[rng.random_range(0..partners.len())]].id;
        Some(self.new_pair(PairKind::V2V, a.id, NodeRef::Vehicle(b)))
    }

    fn try_v2i<R: Rng + ?Sized>(&mut self, max_xy: f64, rng: &mut R) -> Option<PairId> {
        let free = self.unpaired();
        if free.is_empty() || self.rsus.is_empty() {
            return None;
        }
        let a = self.vehicles[free[rng.random_range(0..free.len())]];
        let (rsu, dist) = self
            .rsus
            .iter()
            .map(|r| (r.index, r.position.distance_xy(a.position)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        if dist > max_xy {
            return None;
        }
        Some(self.new_pair(PairKind::V2I, a.id, NodeRef::Rsu(rsu)))
    }
}

fn sample_gap<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    match Exp::new(rate) {
        Ok(d) if rate > 0.0 => d.sample(rng),
        _ => f64::INFINITY,
    }
}

fn sample_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    match Poisson::new(rate) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// Per-step traffic update after [`World::advance`]: new arrivals, exits
/// (deactivating their pairs) and new V2V/V2I events.
///
/// Returns the ids of pairs created this step.
pub fn spawn_traffic<R: Rng + ?Sized>(world: &mut World, cfg: &ScenarioConfig, rng: &mut R) -> Vec<PairId> {
    world.admit_arrivals(cfg, rng);
    world.remove_exited(cfg);

    let max_xy = cfg.trajectory.pair_xy_threshold_m.unwrap_or(f64::INFINITY);
    let mut created = Vec::new();
    let n_v2v = sample_count(cfg.traffic.v2v_rate, rng);
    for _ in 0..n_v2v {
        created.extend(world.try_v2v(max_xy, rng));
    }
    let n_v2i = sample_count(cfg.traffic.v2i_rate, rng);
    for _ in 0..n_v2i {
        created.extend(world.try_v2i(max_xy, rng));
    }
    created
}
