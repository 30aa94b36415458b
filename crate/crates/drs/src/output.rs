//! On-disk artifacts: the JSONL step log, metric CSVs, surface CSV and the
//! run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use drs_core::sim::{ConstraintAudit, EpisodeSummary, MetricsTables, ScenarioConfig, StepRecord, StepSink, Surface};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const LOG_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOG_FILE: &str = "episodes.jsonl";
pub const CYCLES_FILE: &str = "cycles.csv";
pub const BUCKETS_FILE: &str = "buckets.csv";
pub const AUDIT_FILE: &str = "audit.csv";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const CHECKPOINT_FILE: &str = "qtables.txt";
pub const SURFACE_FILE: &str = "surface.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct LogLine<'a> {
    schema_version: u32,
    #[serde(flatten)]
    record: &'a StepRecord,
}

/// Streams step records as JSON lines. The first write error is kept and
/// reported by [`JsonlLog::finish`].
pub struct JsonlLog<W: Write> {
    out: W,
    path: PathBuf,
    error: Option<io::Error>,
}

impl JsonlLog<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        Ok(Self::new(create_file(path)?, path))
    }
}

impl<W: Write> JsonlLog<W> {
    pub fn new(out: W, path: &Path) -> Self {
        Self {
            out,
            path: path.to_owned(),
            error: None,
        }
    }

    pub fn finish(mut self) -> Result<W, CliError> {
        if let Some(e) = self.error.take() {
            return Err(CliError::io(&self.path, e));
        }
        self.out.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.out)
    }
}

impl<W: Write> StepSink for JsonlLog<W> {
    fn record(&mut self, rec: &StepRecord) {
        if self.error.is_some() {
            return;
        }
        let line = LogLine {
            schema_version: LOG_SCHEMA_VERSION,
            record: rec,
        };
        let res = serde_json::to_writer(&mut self.out, &line)
            .map_err(io::Error::from)
            .and_then(|()| self.out.write_all(b"\n"));
        if let Err(e) = res {
            self.error = Some(e);
        }
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::io(path, io::Error::other(e));
    let mut w = csv::Writer::from_writer(create_file(path)?);
    let mut any = false;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
        any = true;
    }
    if !any {
        // Headers only come from the first row; keep empty tables parseable.
        w.write_record(std::iter::empty::<&str>()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes the four metric tables into `dir`; returns their file names.
pub fn write_metrics(
    dir: &Path,
    tables: &MetricsTables,
    episodes: &[EpisodeSummary],
    audit: &ConstraintAudit,
) -> Result<Vec<&'static str>, CliError> {
    write_csv(&dir.join(CYCLES_FILE), &tables.cycles)?;
    write_csv(&dir.join(BUCKETS_FILE), &tables.buckets)?;
    write_csv(&dir.join(AUDIT_FILE), [audit])?;
    write_csv(&dir.join(EPISODES_FILE), episodes)?;
    Ok(vec![CYCLES_FILE, BUCKETS_FILE, AUDIT_FILE, EPISODES_FILE])
}

/// Surface CSV: `#`-prefixed parameter lines, then `x,y,pl_db,near_field`.
pub fn write_surface(path: &Path, surface: &Surface, header: &[(&str, String)]) -> Result<(), CliError> {
    let mut w = create_file(path)?;
    let io_err = |e| CliError::io(path, e);
    for (k, v) in header {
        writeln!(w, "# {k}={v}").map_err(io_err)?;
    }
    writeln!(w, "x,y,pl_db,near_field").map_err(io_err)?;
    let g = &surface.grid;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = j * g.nx + i;
            writeln!(
                w,
                "{},{},{},{}",
                g.x(i),
                g.y(j),
                surface.values_db[k],
                u8::from(surface.near_field[k])
            )
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Everything needed to reproduce a run, plus wall-clock metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    /// Fully resolved config, defaults included.
    pub config: ScenarioConfig,
    /// Command-specific settings that are not part of the config.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    /// Role to file name, relative to the manifest's directory.
    pub outputs: BTreeMap<String, String>,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            command: command.to_owned(),
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: config.seed,
            config: config.clone(),
            params: BTreeMap::new(),
            outputs: BTreeMap::new(),
            started_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
            wall_clock_s: 0.0,
        }
    }

    pub fn output(&mut self, role: &str, file: &str) {
        self.outputs.insert(role.to_owned(), file.to_owned());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut w = create_file(&path)?;
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| CliError::io(&path, e.into()))?;
        writeln!(w).and_then(|()| w.flush()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(path.display().to_string(), e.to_string()))
    }
}
