//! CSV tables and the JSON metadata sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use degenwave_core::model::{CHI_PROFILE_ID, ZETA_PROFILE_ID};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Full round-trip decimal: 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A CSV cell.
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}
impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(x as u64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => num(*x),
            Cell::U(x) => x.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// In-memory table with a fixed header.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// `<out>` with `suffix` appended to the file name (not replacing an extension).
pub fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Sidecar written next to every CSV.
#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub chi_profile: &'static str,
    pub zeta_profile: &'static str,
    pub seed: u64,
    pub threshold_time: f64,
    pub wall_clock_seconds: f64,
    pub results: serde_json::Value,
}

impl<'a> RunMetadata<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig, wall_clock_seconds: f64, results: serde_json::Value) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            chi_profile: CHI_PROFILE_ID,
            zeta_profile: ZETA_PROFILE_ID,
            seed: config.seed(),
            threshold_time: config.params.threshold_time(),
            wall_clock_seconds,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata is plain data");
        s.push('\n');
        s
    }
}
