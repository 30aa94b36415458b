//! Aggregate tables built from the step log.

use alloc::vec::Vec;

use super::config::MetricsParams;
use super::runner::{StepRecord, StepSink};

/// Mean reward and path loss at one cycle index, over episodes in one
/// length group.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleRow {
    /// Episode-length group `[group_min, group_max)`, in steps.
    pub group_min: u64,
    pub group_max: Option<u64>,
    pub cycle: u64,
    pub episodes: u64,
    pub mean_reward: f64,
    /// Over far-field samples only; `None` if there were none.
    pub mean_ris_pl_db: Option<f64>,
    pub mean_combined_pl_db: f64,
}

/// Rate with and without the reflected path, bucketed by the xy distance
/// between the pair endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BucketRow {
    pub distance_min_m: f64,
    pub distance_max_m: Option<f64>,
    pub samples: u64,
    pub mean_rate_with_bps: f64,
    pub mean_rate_without_bps: f64,
    pub mean_improvement_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTables {
    pub cycles: Vec<CycleRow>,
    pub buckets: Vec<BucketRow>,
}

#[derive(Debug, Clone, Copy, Default)]
struct CycleAcc {
    n: u64,
    reward: f64,
    combined: f64,
    ris_n: u64,
    ris: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct BucketAcc {
    n: u64,
    with: f64,
    without: f64,
}

/// One buffered step of the episode in progress.
#[derive(Debug, Clone, Copy)]
struct TraceStep {
    reward: f64,
    combined: f64,
    ris: Option<f64>,
}

/// Streaming builder for [`MetricsTables`].
///
/// Episodes are recognised from the records themselves: a change of episode
/// index or an idle step closes the current one.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    length_groups: Vec<u64>,
    distance_edges: Vec<f64>,
    groups: Vec<Vec<CycleAcc>>,
    buckets: Vec<BucketAcc>,
    current: Option<u64>,
    trace: Vec<TraceStep>,
}

impl MetricsAccumulator {
    pub fn new(params: &MetricsParams) -> Self {
        let mut length_groups = params.length_groups.clone();
        length_groups.sort_unstable();
        length_groups.dedup();
        let mut distance_edges = params.distance_buckets.clone();
        distance_edges.sort_by(f64::total_cmp);
        distance_edges.dedup();
        Self {
            groups: alloc::vec![Vec::new(); length_groups.len()],
            buckets: alloc::vec![BucketAcc::default(); distance_edges.len()],
            length_groups,
            distance_edges,
            current: None,
            trace: Vec::new(),
        }
    }

    fn close_episode(&mut self) {
        if self.current.take().is_none() {
            return;
        }
        let len = self.trace.len() as u64;
        let Some(g) = self.length_groups.iter().rposition(|&lo| len >= lo) else {
            self.trace.clear();
            return;
        };
        let group = &mut self.groups[g];
        if group.len() < self.trace.len() {
            group.resize(self.trace.len(), CycleAcc::default());
        }
        for (acc, t) in group.iter_mut().zip(&self.trace) {
            acc.n += 1;
            acc.reward += t.reward;
            acc.combined += t.combined;
            if let Some(pl) = t.ris {
                acc.ris_n += 1;
                acc.ris += pl;
            }
        }
        self.trace.clear();
    }

    pub fn push(&mut self, rec: &StepRecord) {
        let Some(s) = rec.serving else {
            self.close_episode();
            return;
        };
        if self.current != Some(s.episode) {
            self.close_episode();
            self.current = Some(s.episode);
        }
        self.trace.push(TraceStep {
            reward: s.reward,
            combined: s.combined_pl_db,
            ris: (!s.near_field).then_some(s.ris_pl_db),
        });
        if let Some(b) = self.distance_edges.iter().rposition(|&lo| s.pair_distance_m >= lo) {
            let acc = &mut self.buckets[b];
            acc.n += 1;
            acc.with += s.rate_with_bps;
            acc.without += s.rate_without_bps;
        }
    }

    /// Closes the open episode and builds the tables.
    pub fn finish(mut self) -> MetricsTables {
        self.close_episode();
        let mut cycles = Vec::new();
        for (g, accs) in self.groups.iter().enumerate() {
            let group_min = self.length_groups[g];
            let group_max = self.length_groups.get(g + 1).copied();
            for (cycle, a) in accs.iter().enumerate() {
                let n = a.n as f64;
                cycles.push(CycleRow {
                    group_min,
                    group_max,
                    cycle: cycle as u64,
                    episodes: a.n,
                    mean_reward: a.reward / n,
                    mean_ris_pl_db: (a.ris_n > 0).then(|| a.ris / a.ris_n as f64),
                    mean_combined_pl_db: a.combined / n,
                });
            }
        }
        let buckets = self
            .buckets
            .iter()
            .enumerate()
            .map(|(b, a)| {
                let n = a.n as f64;
                let (with, without) = if a.n > 0 {
                    (a.with / n, a.without / n)
                } else {
                    (0.0, 0.0)
                };
                BucketRow {
                    distance_min_m: self.distance_edges[b],
                    distance_max_m: self.distance_edges.get(b + 1).copied(),
                    samples: a.n,
                    mean_rate_with_bps: with,
                    mean_rate_without_bps: without,
                    mean_improvement_bps: with - without,
                }
            })
            .collect();
        MetricsTables { cycles, buckets }
    }
}

impl StepSink for MetricsAccumulator {
    fn record(&mut self, rec: &StepRecord) {
        self.push(rec);
    }
}

/// Builds the per-cycle and distance-bucket tables from a complete log.
pub fn aggregate_metrics(log: &[StepRecord], params: &MetricsParams) -> MetricsTables {
    if log.is_empty() {
        return MetricsTables::default();
    }
    let mut acc = MetricsAccumulator::new(params);
    for rec in log {
        acc.push(rec);
    }
    acc.finish()
}
