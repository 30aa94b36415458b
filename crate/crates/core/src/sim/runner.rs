//! The per-step control loop: traffic, pair selection, DRS motion, RIS yaw
//! control, link evaluation and constraint auditing.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, YawPolicy};
use super::rng::{stream_rng, Stream};
use super::traffic::{spawn_traffic, NodeRef, PairKind, World};
use crate::channel::{
    combine_links, rate_bps, ris_far_field_pl, snr_db, v2i_direct_pl, v2v_direct_pl, DirectLinkModel,
    PathLossDb,
};
use crate::error::{DomainError, SimError};
use crate::geometry::{yaw_rotation_angle, AngleSet, Pose, Vec3};
use crate::rl::{self, ActionId, AgentConfig, QTables, StateIndex};
use crate::trajectory::{optimal_location, select_pair, step_towards, PairId};

/// Slack allowed on every audited constraint.
pub const AUDIT_TOL: f64 = 1e-9;

/// What happened on a step while a pair was being served.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ServingStep {
    pub pair_id: PairId,
    pub kind: PairKind,
    pub episode: u64,
    /// Step index within the episode, from 0.
    pub cycle: u64,
    pub endpoint_a: Vec3,
    pub endpoint_b: Vec3,
    /// xy distance between the endpoints, m.
    pub pair_distance_m: f64,
    /// Optimal hovering location for this step.
    pub target: Vec3,
    pub state: StateIndex,
    /// Rotation applied this step; `None` under the fixed-yaw policy.
    pub action: Option<u8>,
    /// Either leg was inside the Fraunhofer distance; the reflected path is
    /// then treated as absent.
    pub near_field: bool,
    pub ris_pl_db: f64,
    pub direct_pl_db: f64,
    pub combined_pl_db: f64,
    pub reward: f64,
    pub rate_with_bps: f64,
    pub rate_without_bps: f64,
}

/// One line of the episode log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub step: u64,
    pub time_s: f64,
    /// DRS pose after this step's motion.
    pub position: Vec3,
    pub yaw: f64,
    pub serving: Option<ServingStep>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeSummary {
    pub index: u64,
    pub pair_id: PairId,
    pub kind: PairKind,
    pub start_step: u64,
    pub steps: u64,
    pub cumulative_reward: f64,
    /// Mean reflected-link path loss over far-field steps.
    pub mean_ris_pl_db: Option<f64>,
    pub far_field_steps: u64,
    /// False when the run stopped before the pair ended.
    pub completed: bool,
}

/// Largest observed values of the audited kinematic quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintAudit {
    pub checks: u64,
    pub max_rotation_rad: f64,
    pub rotation_limit_rad: f64,
    pub max_displacement_m: f64,
    pub displacement_limit_m: f64,
    pub max_excursion_m: f64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub steps: u64,
    pub episodes: Vec<EpisodeSummary>,
    pub audit: ConstraintAudit,
    pub final_pose: Option<Pose>,
}

/// Receives step records and episode summaries as a run progresses.
pub trait StepSink {
    fn record(&mut self, rec: &StepRecord);

    fn episode_end(&mut self, _summary: &EpisodeSummary) {}
}

impl StepSink for () {
    fn record(&mut self, _rec: &StepRecord) {}
}

impl StepSink for Vec<StepRecord> {
    fn record(&mut self, rec: &StepRecord) {
        self.push(*rec);
    }
}

impl<A: StepSink, B: StepSink> StepSink for (A, B) {
    fn record(&mut self, rec: &StepRecord) {
        self.0.record(rec);
        self.1.record(rec);
    }

    fn episode_end(&mut self, summary: &EpisodeSummary) {
        self.0.episode_end(summary);
        self.1.episode_end(summary);
    }
}

impl<S: StepSink + ?Sized> StepSink for &mut S {
    fn record(&mut self, rec: &StepRecord) {
        (**self).record(rec);
    }

    fn episode_end(&mut self, summary: &EpisodeSummary) {
        (**self).episode_end(summary);
    }
}

struct Episode {
    index: u64,
    pair: PairId,
    kind: PairKind,
    start_step: u64,
    cycle: u64,
    /// Reflected-link loss after the previous step; `None` when near field.
    pl_prev: Option<PathLossDb>,
    cumulative_reward: f64,
    ris_pl_sum: f64,
    far_field_steps: u64,
}

struct Pending {
    s: StateIndex,
    a: ActionId,
    r: f64,
}

/// A running simulation. Drive it with [`Simulation::step`] or use [`run`].
pub struct Simulation {
    cfg: ScenarioConfig,
    agent: AgentConfig,
    direct: DirectLinkModel,
    world: World,
    pose: Pose,
    step: u64,
    agent_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    serving: Option<Episode>,
    pending: Option<Pending>,
    next_episode: u64,
    episodes: Vec<EpisodeSummary>,
    audit: ConstraintAudit,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let mut traffic_rng = stream_rng(cfg.seed, Stream::Traffic);
        let world = World::new(cfg, &mut traffic_rng);
        Ok(Self::assemble(cfg, world, traffic_rng))
    }

    /// Starts from a hand-built world instead of generated traffic.
    pub fn with_world(cfg: &ScenarioConfig, world: World) -> Result<Self, SimError> {
        cfg.validate()?;
        let traffic_rng = stream_rng(cfg.seed, Stream::Traffic);
        Ok(Self::assemble(cfg, world, traffic_rng))
    }

    fn assemble(cfg: &ScenarioConfig, world: World, traffic_rng: ChaCha8Rng) -> Self {
        let agent = cfg.agent_config();
        Self {
            cfg: cfg.clone(),
            agent,
            direct: cfg.direct_model(),
            world,
            pose: Pose::new(cfg.initial_position(), cfg.drs.initial_yaw),
            step: 0,
            agent_rng: stream_rng(cfg.seed, Stream::Agent),
            traffic_rng,
            channel_rng: stream_rng(cfg.seed, Stream::Channel),
            serving: None,
            pending: None,
            next_episode: 0,
            episodes: Vec::new(),
            audit: ConstraintAudit {
                rotation_limit_rad: agent.max_yaw_step(),
                displacement_limit_m: cfg.drs.max_speed * cfg.time_step_s,
                ..ConstraintAudit::default()
            },
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn serving_pair(&self) -> Option<PairId> {
        self.serving.as_ref().map(|e| e.pair)
    }

    fn learning(&self) -> bool {
        self.cfg.agent.policy == YawPolicy::QLearning && self.cfg.agent.learning
    }

    /// Reflected-link loss at `pose`, or `None` when a leg is in the near field.
    fn ris_pl(&self, pose: &Pose, a: Vec3, b: Vec3) -> Result<Option<PathLossDb>, SimError> {
        let angles = AngleSet::observe(pose, a, b)?;
        let p = pose.position;
        match ris_far_field_pl(p.distance(a), p.distance(b), &angles, &self.cfg.ris) {
            Ok(pl) => Ok(Some(pl)),
            Err(DomainError::NearField { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn end_episode<S: StepSink + ?Sized>(&mut self, tables: &mut QTables, completed: bool, sink: &mut S) {
        let Some(ep) = self.serving.take() else {
            return;
        };
        if let Some(p) = self.pending.take() {
            if completed && self.learning() {
                rl::update(tables, p.s, p.a, p.r, None, &self.agent, &mut self.agent_rng);
            }
        }
        let summary = EpisodeSummary {
            index: ep.index,
            pair_id: ep.pair,
            kind: ep.kind,
            start_step: ep.start_step,
            steps: ep.cycle,
            cumulative_reward: ep.cumulative_reward,
            mean_ris_pl_db: (ep.far_field_steps > 0).then(|| ep.ris_pl_sum / ep.far_field_steps as f64),
            far_field_steps: ep.far_field_steps,
            completed,
        };
        sink.episode_end(&summary);
        self.episodes.push(summary);
    }

    fn choose(&mut self, state: &StateIndex, tables: &QTables) -> Option<ActionId> {
        match self.cfg.agent.policy {
            YawPolicy::QLearning => Some(rl::choose_action(state, tables, &self.agent, &mut self.agent_rng)),
            YawPolicy::Random => {
                let n = self.agent.n_actions();
                Some(ActionId(self.agent_rng.random_range(0..n) as u8))
            }
            YawPolicy::Fixed => None,
        }
    }

    fn audit_move(&mut self, before: &Pose, after: &Pose) -> Result<(), SimError> {
        let rotation = yaw_rotation_angle(before.yaw(), after.yaw());
        let displacement = before.position.distance(after.position);
        let excursion = self.cfg.bounds.excursion(after.position);
        let a = &mut self.audit;
        a.checks += 1;
        a.max_rotation_rad = a.max_rotation_rad.max(rotation);
        a.max_displacement_m = a.max_displacement_m.max(displacement);
        a.max_excursion_m = a.max_excursion_m.max(excursion);
        for (constraint, value, limit) in [
            ("rotation", rotation, a.rotation_limit_rad),
            ("displacement", displacement, a.displacement_limit_m),
            ("box", excursion, 0.0),
        ] {
            if !(value <= limit + AUDIT_TOL) {
                a.violations += 1;
                return Err(SimError::ConstraintViolation {
                    step: self.step,
                    constraint,
                    value,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// Advances the simulation by one control period.
    pub fn step<S: StepSink + ?Sized>(&mut self, tables: &mut QTables, sink: &mut S) -> Result<StepRecord, SimError> {
        let cfg = &self.cfg;
        let ts = cfg.time_step_s;
        self.world.advance(ts);
        spawn_traffic(&mut self.world, cfg, &mut self.traffic_rng);

        if let Some(ep) = &self.serving {
            if !self.world.is_active(ep.pair) {
                self.end_episode(tables, true, sink);
            }
        }
        if self.serving.is_none() {
            self.try_start_episode()?;
        }

        let before = self.pose;
        let serving = match self.serving.as_ref().map(|e| e.pair) {
            None => {
                self.audit_move(&before, &before)?;
                None
            }
            Some(pair) => Some(self.serve(pair, tables)?),
        };

        let rec = StepRecord {
            step: self.step,
            time_s: self.world.time_s,
            position: self.pose.position,
            yaw: self.pose.yaw(),
            serving,
        };
        self.step += 1;
        sink.record(&rec);
        Ok(rec)
    }

    fn try_start_episode(&mut self) -> Result<(), SimError> {
        let cfg = &self.cfg;
        let candidates = self.world.candidates();
        let Some(id) = select_pair(
            self.pose.position,
            &candidates,
            &cfg.bounds,
            cfg.trajectory.objective,
            cfg.trajectory.pair_xy_threshold_m,
        ) else {
            return Ok(());
        };
        let (a, b) = self.world.pair_endpoints(id).expect("selected pair has endpoints");
        let kind = self.world.pair(id).expect("selected pair exists").kind;
        let pl_prev = self.ris_pl(&self.pose, a, b)?;
        self.serving = Some(Episode {
            index: self.next_episode,
            pair: id,
            kind,
            start_step: self.step,
            cycle: 0,
            pl_prev,
            cumulative_reward: 0.0,
            ris_pl_sum: 0.0,
            far_field_steps: 0,
        });
        self.next_episode += 1;
        Ok(())
    }

    fn direct_pl(&mut self, pair: PairId, a: Vec3, b: Vec3) -> PathLossDb {
        let p = *self.world.pair(pair).expect("served pair exists");
        match (p.kind, p.endpoint_a, p.endpoint_b) {
            (PairKind::V2V, NodeRef::Vehicle(ia), NodeRef::Vehicle(ib)) => {
                let lane = self.world.vehicle(ia).map_or(0, |v| v.lane);
                let blockers = self.world.lane_blockers(lane, &[ia, ib]);
                v2v_direct_pl(&self.direct, a, b, &blockers, &mut self.channel_rng)
            }
            _ => v2i_direct_pl(&self.direct, a, b),
        }
    }

    fn serve(&mut self, pair: PairId, tables: &mut QTables) -> Result<ServingStep, SimError> {
        let cfg = &self.cfg;
        let (a, b) = self.world.pair_endpoints(pair).expect("served pair has endpoints");
        let target = optimal_location(a, b, &cfg.bounds, cfg.trajectory.objective);
        let next_pos = cfg
            .bounds
            .clamp(step_towards(self.pose.position, target, cfg.drs.max_speed, cfg.time_step_s));

        let moved = self.pose.with_position(next_pos);
        let state = rl::quantize_state(&AngleSet::observe(&moved, a, b)?, &self.agent);
        if let Some(p) = self.pending.take() {
            rl::update(tables, p.s, p.a, p.r, Some(state), &self.agent, &mut self.agent_rng);
        }
        let action = self.choose(&state, tables);
        let after = match action {
            Some(act) => rl::apply_yaw_action(moved, act, &self.agent),
            None => moved,
        };
        self.audit_move(&self.pose.clone(), &after)?;
        self.pose = after;

        let ris = self.ris_pl(&after, a, b)?;
        let direct = self.direct_pl(pair, a, b);
        let combined = combine_links(direct, ris.unwrap_or(PathLossDb::CAP));
        let budget = &self.cfg.link;
        let rate_with = rate_bps(snr_db(combined, budget), budget);
        let rate_without = rate_bps(snr_db(direct, budget), budget);
        let learning = self.learning();

        let ep = self.serving.as_mut().expect("serving episode");
        let reward = match (ep.pl_prev, ris) {
            (Some(prev), Some(cur)) => rl::reward(prev, cur),
            _ => 0.0,
        };
        // Transitions that touch the near field have no defined reward.
        if learning && ep.pl_prev.is_some() && ris.is_some() {
            if let Some(act) = action {
                self.pending = Some(Pending { s: state, a: act, r: reward });
            }
        }
        ep.pl_prev = ris;
        ep.cumulative_reward += reward;
        if let Some(pl) = ris {
            ep.ris_pl_sum += pl.db();
            ep.far_field_steps += 1;
        }
        let cycle = ep.cycle;
        ep.cycle += 1;

        Ok(ServingStep {
            pair_id: pair,
            kind: ep.kind,
            episode: ep.index,
            cycle,
            endpoint_a: a,
            endpoint_b: b,
            pair_distance_m: a.distance_xy(b),
            target,
            state,
            action: action.map(|x| x.0),
            near_field: ris.is_none(),
            ris_pl_db: ris.unwrap_or(PathLossDb::CAP).db(),
            direct_pl_db: direct.db(),
            combined_pl_db: combined.db(),
            reward,
            rate_with_bps: rate_with,
            rate_without_bps: rate_without,
        })
    }

    /// Closes the open episode (if any) and returns the run summary.
    pub fn finish<S: StepSink + ?Sized>(mut self, tables: &mut QTables, sink: &mut S) -> RunOutput {
        self.end_episode(tables, false, sink);
        RunOutput {
            steps: self.step,
            episodes: self.episodes,
            audit: self.audit,
            final_pose: Some(self.pose),
        }
    }
}

/// Runs `cfg.steps` steps, streaming records into `sink`.
///
/// `tables` is read by the learned policy and updated when learning is on.
pub fn run<S: StepSink + ?Sized>(
    cfg: &ScenarioConfig,
    tables: &mut QTables,
    sink: &mut S,
) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..cfg.steps {
        sim.step(tables, sink)?;
    }
    Ok(sim.finish(tables, sink))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::traffic::PairKind;

    fn short_cfg(steps: u64) -> ScenarioConfig {
        ScenarioConfig {
            steps,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_steps_gives_empty_log() {
        let mut log = Vec::new();
        let out = run(&short_cfg(0), &mut QTables::new(), &mut log).unwrap();
        assert!(log.is_empty());
        assert!(out.episodes.is_empty());
    }

    #[test]
    fn static_pair_convergence() {
        let mut cfg = short_cfg(0);
        cfg.traffic.arrival_rate = 0.0;
        cfg.traffic.v2v_rate = 0.0;
        cfg.traffic.v2i_rate = 0.0;
        let mut rng = stream_rng(1, Stream::Traffic);
        let mut world = World::new(&cfg, &mut rng);
        let a = world.add_vehicle(0, Vec3::new(0.0, 1000.0, 1.5), 0.0);
        let b = world.add_vehicle(0, Vec3::new(0.0, 1400.0, 1.8), 0.0);
        world.add_pair(PairKind::V2V, a, NodeRef::Vehicle(b)).unwrap();

        let mut sim = Simulation::with_world(&cfg, world).unwrap();
        let mut tables = QTables::new();
        let target = optimal_location(
            Vec3::new(0.0, 1000.0, 1.5),
            Vec3::new(0.0, 1400.0, 1.8),
            &cfg.bounds,
            cfg.trajectory.objective,
        );
        let mut last = f64::INFINITY;
        for _ in 0..600 {
            let rec = sim.step(&mut tables, &mut ()).unwrap();
            let d = rec.position.distance(target);
            assert!(d <= last + 1e-12);
            last = d;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn identical_seeds_identical_logs() {
        let cfg = short_cfg(3000);
        let go = || {
            let mut log = Vec::new();
            let mut t = QTables::new();
            run(&cfg, &mut t, &mut log).unwrap();
            (log, t)
        };
        let (l1, t1) = go();
        let (l2, t2) = go();
        assert_eq!(l1, l2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn episodes_partition_serving_timeline() {
        let cfg = short_cfg(5000);
        let mut log = Vec::new();
        let out = run(&cfg, &mut QTables::new(), &mut log).unwrap();
        assert!(out.episodes.len() > 1);
        for (k, ep) in out.episodes.iter().enumerate() {
            assert_eq!(ep.index, k as u64);
            let recs: Vec<_> = log
                .iter()
                .filter(|r| r.serving.is_some_and(|s| s.episode == ep.index))
                .collect();
            assert_eq!(recs.len() as u64, ep.steps);
            for (c, r) in recs.iter().enumerate() {
                assert_eq!(r.step, ep.start_step + c as u64);
                let s = r.serving.unwrap();
                assert_eq!(s.cycle, c as u64);
                assert_eq!(s.pair_id, ep.pair_id);
            }
        }
        for w in out.episodes.windows(2) {
            assert!(w[0].start_step + w[0].steps <= w[1].start_step);
            assert!(w[0].completed);
        }
    }

    #[test]
    fn combined_rate_never_below_direct() {
        let cfg = short_cfg(4000);
        let mut log = Vec::new();
        run(&cfg, &mut QTables::new(), &mut log).unwrap();
        let served: Vec<_> = log.iter().filter_map(|r| r.serving).collect();
        assert!(!served.is_empty());
        for s in served {
            assert!(s.rate_with_bps >= s.rate_without_bps);
            assert!(s.combined_pl_db <= s.direct_pl_db.min(s.ris_pl_db) + 1e-9);
        }
    }

    #[test]
    fn fixed_policy_never_rotates() {
        let mut cfg = short_cfg(2000);
        cfg.agent.policy = YawPolicy::Fixed;
        cfg.drs.initial_yaw = 0.3;
        let mut log = Vec::new();
        let mut tables = QTables::new();
        run(&cfg, &mut tables, &mut log).unwrap();
        assert!(log.iter().all(|r| r.yaw == 0.3));
        assert!(tables.is_empty());
    }

    #[test]
    fn frozen_tables_stay_frozen() {
        let mut cfg = short_cfg(2000);
        let mut tables = QTables::new();
        run(&cfg, &mut tables, &mut ()).unwrap();
        let trained = tables.clone();
        cfg.agent.learning = false;
        cfg.agent.epsilon = 0.0;
        run(&cfg, &mut tables, &mut ()).unwrap();
        assert_eq!(tables, trained);
    }

    #[test]
    fn audit_stays_within_limits() {
        let cfg = short_cfg(5000);
        let out = run(&cfg, &mut QTables::new(), &mut ()).unwrap();
        let a = out.audit;
        assert_eq!(a.checks, 5000);
        assert_eq!(a.violations, 0);
        assert!(a.max_rotation_rad <= a.rotation_limit_rad + AUDIT_TOL);
        assert!(a.max_displacement_m <= a.displacement_limit_m + AUDIT_TOL);
        assert!(a.max_excursion_m <= AUDIT_TOL);
    }
}
