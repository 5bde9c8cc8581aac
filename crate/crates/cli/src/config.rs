//! Run configuration: a JSON document with flat model keys and one optional
//! section per command. Command-line flags override file values; anything
//! left unset falls back to `ModelParams::default()` and the section defaults
//! below.

use std::path::{Path, PathBuf};

use degenwave_core::{Branch, ModelParams, QuasimodeSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Family used by `observe`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserveOptions {
    /// Number of lowest eigenmodes `(Phi_b, 0)`.
    pub eigenmodes: usize,
    /// Number of seeded random superpositions.
    pub random: usize,
    /// Append the zero datum, which is always excluded from `C_emp`.
    pub include_zero: bool,
}

impl Default for ObserveOptions {
    fn default() -> Self {
        Self { eigenmodes: 50, random: 20, include_zero: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasimodePair {
    pub n: u32,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasimodeOptions {
    pub pairs: Vec<QuasimodePair>,
}

impl Default for QuasimodeOptions {
    fn default() -> Self {
        Self { pairs: [4, 8, 16, 32].iter().map(|&n| QuasimodePair { n, eps: 1.0 / 16.0 }).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSelection {
    pub n: usize,
    pub k: usize,
}

/// One rung of the audit refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rung {
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditOptions {
    pub modes: Vec<ModeSelection>,
    pub branch: Branch,
    pub ladder: Vec<Rung>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        let modes = [2, 4, 8].iter().flat_map(|&n| [1, 2, 4].map(|k| ModeSelection { n, k })).collect();
        let ladder = [(128, 16), (256, 32), (512, 64)].map(|(n_r, n_theta)| Rung { n_r, n_theta }).to_vec();
        Self { modes, branch: Branch::Sin, ladder }
    }
}

/// Sample counts for the invariant suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Random vector pairs per angular mode in the symmetry check.
    pub pairs: usize,
    /// Band-limited fields for Parseval and initial data for energy.
    pub fields: usize,
    /// Random fields per exponent in the Hardy check.
    pub hardy_fields: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { pairs: 100, fields: 20, hardy_fields: 100 }
    }
}

/// Model keys as they appear in a config file; all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub delta0: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub n_theta: Option<usize>,
    pub n_r: Option<usize>,
    pub n_t: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
    pub observe: Option<ObserveOptions>,
    pub quasimode: Option<QuasimodeOptions>,
    pub audit: Option<AuditOptions>,
    pub verify: Option<VerifyOptions>,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub delta0: Option<f64>,
    pub t_final: Option<f64>,
    pub n_theta: Option<usize>,
    pub n_r: Option<usize>,
    pub n_t: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub observe: ObserveOptions,
    pub quasimode: QuasimodeOptions,
    pub audit: AuditOptions,
    pub verify: VerifyOptions,
    /// Config file path, or `"flags"` when none was given.
    pub config_source: String,
}

impl RunConfig {
    /// Reads `path` (if any), applies `overrides`, and validates the model.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|source| CliError::Io { path: p.display().to_string(), source })?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        Self::from_parts(file, overrides, path.map(Path::to_path_buf))
    }

    pub fn from_parts(file: FileConfig, o: &Overrides, source: Option<PathBuf>) -> CliResult<Self> {
        let d = ModelParams::default();
        let params = ModelParams {
            alpha: o.alpha.or(file.alpha).unwrap_or(d.alpha),
            delta0: o.delta0.or(file.delta0).unwrap_or(d.delta0),
            t_final: o.t_final.or(file.t_final).unwrap_or(d.t_final),
            n_theta: o.n_theta.or(file.n_theta).unwrap_or(d.n_theta),
            n_r: o.n_r.or(file.n_r).unwrap_or(d.n_r),
            n_t: o.n_t.or(file.n_t).unwrap_or(d.n_t),
            k_max: o.k_max.or(file.k_max).unwrap_or(d.k_max),
            seed: o.seed.or(file.seed).unwrap_or(d.seed),
        }
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
        let cfg = Self {
            params,
            observe: file.observe.unwrap_or_default(),
            quasimode: file.quasimode.unwrap_or_default(),
            audit: file.audit.unwrap_or_default(),
            verify: file.verify.unwrap_or_default(),
            config_source: source.map_or_else(|| "flags".to_string(), |p| p.display().to_string()),
        };
        cfg.check_sections()?;
        Ok(cfg)
    }

    /// Re-checks the command sections after flag edits.
    pub fn from_resolved(self) -> CliResult<Self> {
        self.check_sections()?;
        Ok(self)
    }

    fn check_sections(&self) -> CliResult<()> {
        for q in &self.quasimode.pairs {
            QuasimodeSpec::new(q.n, q.eps).map_err(|e| CliError::Config(e.to_string()))?;
        }
        let max_n = self.audit.modes.iter().map(|m| m.n).max().unwrap_or(0);
        if self.audit.modes.iter().any(|m| m.k == 0) {
            return Err(CliError::Config("audit modes need k >= 1".into()));
        }
        if self.audit.modes.iter().any(|m| m.n == 0 && self.audit.branch == Branch::Sin) {
            return Err(CliError::Config("the n = 0 mode has no sine branch".into()));
        }
        for r in &self.audit.ladder {
            if r.n_theta < max_n {
                return Err(CliError::Config(format!("ladder rung n_theta = {} cannot hold mode n = {max_n}", r.n_theta)));
            }
            let k = self.audit.modes.iter().map(|m| m.k).max().unwrap_or(1);
            if r.n_r < 4 || k > r.n_r {
                return Err(CliError::Config(format!("ladder rung n_r = {} is too coarse", r.n_r)));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.params.seed
    }
}

/// Parses `a:b` pairs given on the command line.
pub fn parse_pair<A: std::str::FromStr, B: std::str::FromStr>(s: &str) -> Result<(A, B), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad first component in `{s}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad second component in `{s}`"))?;
    Ok((a, b))
}
