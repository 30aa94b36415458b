use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use drs_core::channel::{v2i_direct_pl, PathLossDb};
use drs_core::rl::QTables;
use drs_core::sim::{pathloss_surface, run, EpisodeSummary, MetricsAccumulator, RunOutput, ScenarioConfig, YawPolicy};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checkpoint;
use crate::cli::{CommonArgs, DirectArg, EvalArgs, EvalPolicy, SurfaceArgs, SweepArgs};
use crate::config::{load_config, Overrides};
use crate::error::CliError;
use crate::output::{self, JsonlLog, RunManifest};

/// Headline numbers of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub steps: u64,
    pub episodes: usize,
    pub mean_cumulative_reward: Option<f64>,
    /// Mean over all far-field serving steps.
    pub mean_ris_pl_db: Option<f64>,
    pub violations: u64,
}

fn mean_cumulative_reward(eps: &[EpisodeSummary]) -> Option<f64> {
    (!eps.is_empty()).then(|| eps.iter().map(|e| e.cumulative_reward).sum::<f64>() / eps.len() as f64)
}

fn mean_ris_pl(eps: &[EpisodeSummary]) -> Option<f64> {
    let (sum, n) = eps.iter().fold((0.0, 0u64), |(s, n), e| {
        (s + e.mean_ris_pl_db.unwrap_or(0.0) * e.far_field_steps as f64, n + e.far_field_steps)
    });
    (n > 0).then(|| sum / n as f64)
}

/// Runs `cfg` into `out_dir`, writing the log, metrics and manifest.
fn simulate(
    cfg: &ScenarioConfig,
    tables: &mut QTables,
    out_dir: &Path,
    mut manifest: RunManifest,
) -> Result<(RunOutput, RunManifest), CliError> {
    let started = Instant::now();
    output::create_dir(out_dir)?;
    let mut log = JsonlLog::create(&out_dir.join(output::LOG_FILE))?;
    let mut metrics = MetricsAccumulator::new(&cfg.metrics);
    let out = run(cfg, tables, &mut (&mut log, &mut metrics))?;
    log.finish()?;
    manifest.output("episode_log", output::LOG_FILE);
    let names = output::write_metrics(out_dir, &metrics.finish(), &out.episodes, &out.audit)?;
    for (role, name) in ["cycles", "buckets", "audit", "episodes"].into_iter().zip(names) {
        manifest.output(role, name);
    }
    manifest.wall_clock_s = started.elapsed().as_secs_f64();
    Ok((out, manifest))
}

fn report(out_dir: &Path, manifest: PathBuf, out: &RunOutput) -> RunReport {
    RunReport {
        out_dir: out_dir.to_owned(),
        manifest,
        steps: out.steps,
        episodes: out.episodes.len(),
        mean_cumulative_reward: mean_cumulative_reward(&out.episodes),
        mean_ris_pl_db: mean_ris_pl(&out.episodes),
        violations: out.audit.violations,
    }
}

/// Trains from scratch with an already resolved config.
pub fn train_with(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let mut tables = QTables::new();
    let (out, mut manifest) = simulate(cfg, &mut tables, out_dir, RunManifest::new("train", cfg))?;
    checkpoint::save(&out_dir.join(output::CHECKPOINT_FILE), &tables, &cfg.agent_config())?;
    manifest.output("checkpoint", output::CHECKPOINT_FILE);
    let path = manifest.write(out_dir)?;
    Ok(report(out_dir, path, &out))
}

pub fn train(args: &CommonArgs) -> Result<RunReport, CliError> {
    let cfg = load_config(args.config.as_deref(), &args.overrides())?;
    train_with(&cfg, &args.out_dir)
}

pub fn eval(args: &EvalArgs) -> Result<RunReport, CliError> {
    let mut cfg = load_config(args.common.config.as_deref(), &args.common.overrides())?;
    cfg.agent.epsilon = 0.0;
    cfg.agent.learning = false;
    cfg.agent.policy = match args.policy {
        EvalPolicy::Learned => YawPolicy::QLearning,
        EvalPolicy::Random => YawPolicy::Random,
    };
    let mut tables = match (&args.checkpoint, args.policy) {
        (Some(path), _) => checkpoint::load(path, &cfg.agent_config())?,
        (None, EvalPolicy::Random) => QTables::new(),
        (None, EvalPolicy::Learned) => {
            return Err(CliError::config("--checkpoint", "required for the learned policy"))
        }
    };
    let mut manifest = RunManifest::new("eval", &cfg);
    manifest.params.insert(
        "policy".into(),
        json!(match args.policy {
            EvalPolicy::Learned => "learned",
            EvalPolicy::Random => "random",
        }),
    );
    if let Some(p) = &args.checkpoint {
        manifest.params.insert("checkpoint".into(), json!(p.display().to_string()));
    }
    let out_dir = &args.common.out_dir;
    let (out, manifest) = simulate(&cfg, &mut tables, out_dir, manifest)?;
    let path = manifest.write(out_dir)?;
    Ok(report(out_dir, path, &out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceReport {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub min_db: f64,
    pub max_db: f64,
    pub range_db: f64,
    /// Grid indices of the smallest value.
    pub argmin: (usize, usize),
}

pub fn surface(args: &SurfaceArgs) -> Result<SurfaceReport, CliError> {
    let cfg = load_config(args.common.config.as_deref(), &args.common.overrides())?;
    let (tx, rx) = (args.tx.0, args.rx.0);
    if tx.distance(rx) == 0.0 {
        return Err(CliError::config("--rx", "must differ from --tx"));
    }
    let model = cfg.direct_model();
    let direct: Option<PathLossDb> = match args.direct {
        DirectArg::None => None,
        DirectArg::V2v => Some(model.v2v_los_pl(tx.distance(rx))),
        DirectArg::V2i => Some(v2i_direct_pl(&model, tx, rx)),
    };
    let grid = args.grid.0;
    let s = pathloss_surface(
        tx,
        rx,
        args.height,
        args.yaw,
        &grid,
        args.mode.into(),
        direct,
        &cfg.ris,
        &cfg.bounds,
    )?;

    let out_dir = &args.common.out_dir;
    output::create_dir(out_dir)?;
    let mode = match args.mode {
        crate::cli::ModeArg::Fixed => "fixed",
        crate::cli::ModeArg::Optimal => "optimal",
    };
    let direct_name = match args.direct {
        DirectArg::None => "none",
        DirectArg::V2v => "v2v",
        DirectArg::V2i => "v2i",
    };
    let header = [
        ("tx", format!("{},{},{}", tx.x, tx.y, tx.z)),
        ("rx", format!("{},{},{}", rx.x, rx.y, rx.z)),
        ("height_m", args.height.to_string()),
        ("yaw_rad", args.yaw.to_string()),
        ("mode", mode.to_owned()),
        ("direct", direct_name.to_owned()),
        ("carrier_hz", cfg.ris.carrier_hz.to_string()),
        ("ris_m_rows", cfg.ris.m_rows.to_string()),
        ("ris_n_cols", cfg.ris.n_cols.to_string()),
        ("nx", grid.nx.to_string()),
        ("ny", grid.ny.to_string()),
    ];
    let csv = out_dir.join(output::SURFACE_FILE);
    output::write_surface(&csv, &s, &header)?;

    let mut manifest = RunManifest::new("surface", &cfg);
    for (k, v) in &header {
        manifest.params.insert((*k).to_owned(), json!(v));
    }
    manifest.params.insert("grid".into(), serde_json::to_value(grid).expect("grid serializes"));
    manifest.output("surface", output::SURFACE_FILE);
    let path = manifest.write(out_dir)?;

    let (lo, hi) = s
        .values_db
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    Ok(SurfaceReport {
        csv,
        manifest: path,
        min_db: lo,
        max_db: hi,
        range_db: s.range_db(),
        argmin: s.argmin(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    /// This many seeds counting up from the base config's seed.
    Count(u64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted config key to the values it takes.
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
    pub seeds: Seeds,
}

impl SweepSpec {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(path.display().to_string(), e.to_string()))
    }

    /// Cartesian product of the grid, as `key=value` override lists.
    pub fn points(&self) -> Vec<Vec<String>> {
        let mut points = vec![Vec::new()];
        for (key, values) in &self.grid {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    let mut q = p.clone();
                    q.push(format!("{key}={v}"));
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub replica: usize,
    pub seed: u64,
    pub overrides: String,
    pub status: &'static str,
    pub episodes: Option<usize>,
    pub mean_cumulative_reward: Option<f64>,
    pub mean_ris_pl_db: Option<f64>,
    pub violations: Option<u64>,
    pub out_dir: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: PathBuf,
}

struct Replica {
    index: usize,
    seed: u64,
    set: Vec<String>,
    dir: PathBuf,
}

pub fn sweep(args: &SweepArgs) -> Result<SweepReport, CliError> {
    let spec = SweepSpec::read(&args.spec)?;
    let base = load_config(args.common.config.as_deref(), &args.common.overrides())?;
    let seeds: Vec<u64> = match &spec.seeds {
        Seeds::List(v) => v.clone(),
        Seeds::Count(n) => (0..*n).map(|k| base.seed + k).collect(),
    };
    if seeds.is_empty() {
        return Err(CliError::config("seeds", "sweep needs at least one seed"));
    }
    let out_dir = &args.common.out_dir;
    output::create_dir(out_dir)?;

    let mut replicas = Vec::new();
    for point in spec.points() {
        for &seed in &seeds {
            let index = replicas.len();
            let mut set = args.common.set.clone();
            set.extend(point.iter().cloned());
            replicas.push(Replica {
                index,
                seed,
                set,
                dir: out_dir.join(format!("replica-{index:03}")),
            });
        }
    }

    let jobs = args
        .jobs
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, replicas.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let (next, replicas, common) = (&next, &replicas, &args.common);
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(r) = replicas.get(k) else { break };
                let overrides = Overrides {
                    set: r.set.clone(),
                    seed: Some(r.seed),
                    steps: common.steps,
                };
                let res = load_config(common.config.as_deref(), &overrides).and_then(|cfg| train_with(&cfg, &r.dir));
                if tx.send((r.index, res)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut results: Vec<_> = rx.into_iter().collect();
    results.sort_by_key(|(i, _)| *i);
    let rows: Vec<SweepRow> = results
        .into_iter()
        .map(|(i, res)| {
            let r = &replicas[i];
            let overrides = r.set.join(";");
            let dir = r.dir.display().to_string();
            match res {
                Ok(rep) => SweepRow {
                    replica: i,
                    seed: r.seed,
                    overrides,
                    status: "ok",
                    episodes: Some(rep.episodes),
                    mean_cumulative_reward: rep.mean_cumulative_reward,
                    mean_ris_pl_db: rep.mean_ris_pl_db,
                    violations: Some(rep.violations),
                    out_dir: dir,
                    error: String::new(),
                },
                Err(e) => SweepRow {
                    replica: i,
                    seed: r.seed,
                    overrides,
                    status: "failed",
                    episodes: None,
                    mean_cumulative_reward: None,
                    mean_ris_pl_db: None,
                    violations: None,
                    out_dir: dir,
                    error: e.to_string(),
                },
            }
        })
        .collect();

    let summary = out_dir.join(output::SUMMARY_FILE);
    let mut w = csv::Writer::from_writer(output::create_file(&summary)?);
    for row in &rows {
        w.serialize(row)
            .map_err(|e| CliError::io(&summary, std::io::Error::other(e)))?;
    }
    w.flush().map_err(|e| CliError::io(&summary, e))?;

    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        return Err(CliError::Sweep {
            failed,
            total: rows.len(),
        });
    }
    Ok(SweepReport { rows, summary })
}
