use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drs_core::sim::{GridSpec, SurfaceMode};
use drs_core::Vec3;

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "drs", version, about = "RIS drone relay simulator for highway V2X links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the control loop with learning and save the Q-tables.
    Train(TrainArgs),
    /// Run a frozen greedy (or random) yaw policy and report rate gains.
    Eval(EvalArgs),
    /// Dump the reflected-link path loss over an xy grid.
    Surface(SurfaceArgs),
    /// Train many replicas over a parameter grid, in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file, or a manifest from a previous run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Override a config value, e.g. `--set agent.epsilon=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl CommonArgs {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config: None,
            seed: None,
            steps: None,
            out_dir: out_dir.into(),
            set: Vec::new(),
        }
    }

    pub fn overrides(&self) -> Overrides {
        Overrides {
            set: self.set.clone(),
            seed: self.seed,
            steps: self.steps,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalPolicy {
    /// Greedy over the loaded Q-tables.
    Learned,
    /// Uniformly random rotation each step.
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Q-table checkpoint written by `train`. Required for the learned policy.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "learned")]
    pub policy: EvalPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Optimal,
}

impl From<ModeArg> for SurfaceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fixed => SurfaceMode::FixedYaw,
            ModeArg::Optimal => SurfaceMode::OrientationOptimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectArg {
    /// Reflected link only.
    None,
    /// Combine with the line-of-sight V2V model.
    V2v,
    /// Combine with the V2I model.
    V2i,
}

/// `x,y,z` on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point(pub Vec3);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x, y, z] => Ok(Point(Vec3::new(x, y, z))),
            _ => Err(format!("expected x,y,z, got `{s}`")),
        }
    }
}

/// `x_min,x_max,nx,y_min,y_max,ny` on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid(pub GridSpec);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(format!("expected x_min,x_max,nx,y_min,y_max,ny, got `{s}`"));
        }
        let f = |i: usize| parts[i].parse::<f64>().map_err(|e| format!("`{}`: {e}", parts[i]));
        let n = |i: usize| parts[i].parse::<usize>().map_err(|e| format!("`{}`: {e}", parts[i]));
        Ok(Grid(GridSpec {
            x_min: f(0)?,
            x_max: f(1)?,
            nx: n(2)?,
            y_min: f(3)?,
            y_max: f(4)?,
            ny: n(5)?,
        }))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Transmitter position.
    #[arg(long, default_value = "0,2300,1.5", allow_hyphen_values = true)]
    pub tx: Point,
    /// Receiver position.
    #[arg(long, default_value = "500,2700,1.5", allow_hyphen_values = true)]
    pub rx: Point,
    /// DRS height, m.
    #[arg(long, default_value_t = 500.0)]
    pub height: f64,
    /// RIS yaw, rad.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub yaw: f64,
    #[arg(long, default_value = "0,500,51,2000,3000,101")]
    pub grid: Grid,
    #[arg(long, value_enum, default_value = "fixed")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "none")]
    pub direct: DirectArg,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// JSON sweep spec: `{"grid": {"agent.epsilon": [0.1, 0.2]}, "seeds": [1, 2, 3]}`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Concurrent replicas; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
}
