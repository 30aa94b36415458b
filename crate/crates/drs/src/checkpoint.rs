//! Versioned text snapshot of the Q-tables.
//!
//! ```text
//! drs-qtables 1
//! algorithm double_q
//! c_theta 100
//! c_phi 100
//! n_actions 8
//! steps 12345
//! rows 2
//! # phi_r phi_t theta_r theta_t action q1 q2 visits
//! 50 49 12 13 3 1.25 -0.5 2
//! ...
//! ```
//!
//! Only touched cells are written. Floats use the shortest representation
//! that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use drs_core::rl::{AgentConfig, Algorithm, QTables, StateIndex, MAX_ACTIONS};

use crate::error::CliError;

pub const MAGIC: &str = "drs-qtables";
pub const VERSION: u32 = 1;

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::DoubleQ => "double_q",
        Algorithm::SingleQ => "single_q",
    }
}

pub fn to_string(tables: &QTables, cfg: &AgentConfig) -> String {
    let n = cfg.n_actions();
    let mut cells = String::new();
    let mut rows = 0usize;
    for (s, row) in tables.iter() {
        for a in 0..n {
            if row.visits[a] == 0 && row.q1[a] == 0.0 && row.q2[a] == 0.0 {
                continue;
            }
            rows += 1;
            let _ = writeln!(
                cells,
                "{} {} {} {} {} {} {} {}",
                s.phi_r, s.phi_t, s.theta_r, s.theta_t, a, row.q1[a], row.q2[a], row.visits[a]
            );
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "algorithm {}", algorithm_name(cfg.algorithm));
    let _ = writeln!(out, "c_theta {}", cfg.c_theta);
    let _ = writeln!(out, "c_phi {}", cfg.c_phi);
    let _ = writeln!(out, "n_actions {n}");
    let _ = writeln!(out, "steps {}", tables.steps());
    let _ = writeln!(out, "rows {rows}");
    out.push_str("# phi_r phi_t theta_r theta_t action q1 q2 visits\n");
    out.push_str(&cells);
    out
}

pub fn save(path: &Path, tables: &QTables, cfg: &AgentConfig) -> Result<(), CliError> {
    fs::write(path, to_string(tables, cfg)).map_err(|e| CliError::io(path, e))
}

/// Parses a snapshot and checks it against the agent settings it will be
/// used with.
pub fn parse(text: &str, cfg: &AgentConfig, path: &Path) -> Result<QTables, CliError> {
    let bad = |m: String| CliError::checkpoint(path, m);
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> Result<String, CliError> {
        let (i, line) = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) if k == key => Ok(v.to_owned()),
            _ => Err(bad(format!("line {}: expected `{key} <value>`", i + 1))),
        }
    };

    let version = header(MAGIC)?;
    if version != VERSION.to_string() {
        return Err(bad(format!("unsupported version {version}")));
    }
    let checks = [
        ("algorithm", algorithm_name(cfg.algorithm).to_owned()),
        ("c_theta", cfg.c_theta.to_string()),
        ("c_phi", cfg.c_phi.to_string()),
        ("n_actions", cfg.n_actions().to_string()),
    ];
    for (key, want) in checks {
        let got = header(key)?;
        if got != want {
            return Err(bad(format!("{key} is {got} but the config has {want}")));
        }
    }
    let steps: u64 = header("steps")?
        .parse()
        .map_err(|_| bad("steps is not an integer".into()))?;
    let rows: usize = header("rows")?
        .parse()
        .map_err(|_| bad("rows is not an integer".into()))?;

    let mut tables = QTables::new();
    tables.set_steps(steps);
    let mut seen = 0usize;
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let err = || bad(format!("line {}: malformed row", i + 1));
        if f.len() != 8 {
            return Err(err());
        }
        let bin = |k: usize, limit: u16| -> Result<u16, CliError> {
            let v: u16 = f[k].parse().map_err(|_| err())?;
            if v < limit {
                Ok(v)
            } else {
                Err(bad(format!("line {}: bin {v} out of range", i + 1)))
            }
        };
        let s = StateIndex {
            phi_r: bin(0, cfg.c_phi)?,
            phi_t: bin(1, cfg.c_phi)?,
            theta_r: bin(2, cfg.c_theta)?,
            theta_t: bin(3, cfg.c_theta)?,
        };
        let a: usize = f[4].parse().map_err(|_| err())?;
        if a >= cfg.n_actions() || a >= MAX_ACTIONS {
            return Err(bad(format!("line {}: action {a} out of range", i + 1)));
        }
        let q1: f64 = f[5].parse().map_err(|_| err())?;
        let q2: f64 = f[6].parse().map_err(|_| err())?;
        let visits: u32 = f[7].parse().map_err(|_| err())?;
        let row = tables.row_mut(s);
        row.q1[a] = q1;
        row.q2[a] = q2;
        row.visits[a] = visits;
        seen += 1;
    }
    if seen != rows {
        return Err(bad(format!("expected {rows} rows, found {seen}")));
    }
    Ok(tables)
}

pub fn load(path: &Path, cfg: &AgentConfig) -> Result<QTables, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, cfg, path)
}
