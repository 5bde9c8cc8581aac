//! Command-line front end for degenwave-core: configuration, orchestration,
//! and CSV plus metadata output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use degenwave_core::{Branch, Fault};

pub use commands::{execute, Artifact, Command};
pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};
pub use output::RunMetadata;

/// Numerical lab for a degenerate wave equation on the cylinder.
#[derive(Debug, Parser)]
#[command(name = "degenwave", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output prefix: writes `<out>.csv` and `<out>.meta.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Final time.
    #[arg(long = "T", value_name = "T")]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub n_r: Option<usize>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub n_t: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            delta0: self.delta0,
            t_final: self.t_final,
            n_theta: self.n_theta,
            n_r: self.n_r,
            n_t: self.n_t,
            k_max: self.k_max,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    /// Flip the sign of the sub-diagonal flux coupling.
    FluxSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Cos,
    Sin,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Radial eigenvalues and boundary slopes per angular mode.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Observation reports over an initial-data family and the constant C_emp.
    Observe {
        #[command(flatten)]
        common: Common,
        /// Lowest eigenmodes in the family.
        #[arg(long)]
        eigenmodes: Option<usize>,
        /// Seeded random superpositions in the family.
        #[arg(long)]
        random: Option<usize>,
        /// Add the zero datum (excluded from C_emp).
        #[arg(long)]
        include_zero: bool,
    },
    /// Projected travelling quasimodes concentrating at the axis.
    Quasimode {
        #[command(flatten)]
        common: Common,
        /// `n:eps` pair; repeat to sweep. Replaces the configured list.
        #[arg(long = "pair", value_parser = config::parse_pair::<u32, f64>)]
        pairs: Vec<(u32, f64)>,
    },
    /// Multiplier-identity audit over a refinement ladder.
    Audit {
        #[command(flatten)]
        common: Common,
        /// `n:k` eigenmode; repeat to select several.
        #[arg(long = "mode", value_parser = config::parse_pair::<usize, usize>)]
        modes: Vec<(usize, usize)>,
        /// `M:n_theta` ladder rung; repeat for several.
        #[arg(long = "rung", value_parser = config::parse_pair::<usize, usize>)]
        rungs: Vec<(usize, usize)>,
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
    },
    /// Built-in invariant suite; exit code 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

impl Sub {
    fn common(&self) -> &Common {
        match self {
            Sub::Spectrum { common }
            | Sub::Observe { common, .. }
            | Sub::Quasimode { common, .. }
            | Sub::Audit { common, .. }
            | Sub::Verify { common, .. } => common,
        }
    }
}

/// Resolves the configuration for a parsed command line.
pub fn resolve(sub: &Sub) -> CliResult<(Command, RunConfig, PathBuf)> {
    let common = sub.common();
    let mut cfg = RunConfig::resolve(common.config.as_deref(), &common.overrides())?;
    let cmd = match sub {
        Sub::Spectrum { .. } => Command::Spectrum,
        Sub::Observe { eigenmodes, random, include_zero, .. } => {
            if let Some(e) = eigenmodes {
                cfg.observe.eigenmodes = *e;
            }
            if let Some(r) = random {
                cfg.observe.random = *r;
            }
            cfg.observe.include_zero |= include_zero;
            Command::Observe
        }
        Sub::Quasimode { pairs, .. } => {
            if !pairs.is_empty() {
                cfg.quasimode.pairs = pairs.iter().map(|&(n, eps)| config::QuasimodePair { n, eps }).collect();
            }
            Command::Quasimode
        }
        Sub::Audit { modes, rungs, branch, .. } => {
            if !modes.is_empty() {
                cfg.audit.modes = modes.iter().map(|&(n, k)| config::ModeSelection { n, k }).collect();
            }
            if !rungs.is_empty() {
                cfg.audit.ladder = rungs.iter().map(|&(n_r, n_theta)| config::Rung { n_r, n_theta }).collect();
            }
            if let Some(b) = branch {
                cfg.audit.branch = match b {
                    BranchArg::Cos => Branch::Cos,
                    BranchArg::Sin => Branch::Sin,
                };
            }
            Command::Audit
        }
        Sub::Verify { inject_fault, .. } => {
            Command::Verify { fault: inject_fault.map(|FaultArg::FluxSign| Fault::FluxSignFlip) }
        }
    };
    let cfg = RunConfig::from_resolved(cfg)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(cmd.name()));
    Ok((cmd, cfg, out))
}

/// Sizes the global rayon pool from `DEGENWAVE_THREADS` (0 or unset = auto).
pub fn init_threads() -> CliResult<()> {
    let n = match std::env::var("DEGENWAVE_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("DEGENWAVE_THREADS={v} is not a count")))?,
        Err(_) => 0,
    };
    // A second initialisation in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Full run for a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = init_threads().and_then(|_| resolve(&cli.command)).and_then(|(cmd, cfg, out)| execute(cmd, &cfg, &out));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("degenwave: {e}");
            e.exit_code()
        }
    }
}
