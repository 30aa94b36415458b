//! Highway world, the DRS control loop and its outputs.

pub mod config;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod surface;
pub mod traffic;

pub use config::{AgentParams, DrsConfig, MetricsParams, ScenarioConfig, TrafficConfig, TrajectoryParams, YawPolicy};
pub use metrics::{aggregate_metrics, BucketRow, CycleRow, MetricsAccumulator, MetricsTables};
pub use rng::{stream_rng, Stream};
pub use runner::{
    run, ConstraintAudit, EpisodeSummary, RunOutput, ServingStep, Simulation, StepRecord, StepSink, AUDIT_TOL,
};
pub use surface::{pathloss_surface, GridSpec, Surface, SurfaceMode};
pub use traffic::{spawn_traffic, NodeRef, PairKind, Rsu, V2xPair, Vehicle, VehicleId, World};
