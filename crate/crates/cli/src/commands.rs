//! Experiment orchestration. Each command builds its tables in memory; rows
//! are assembled in a fixed order whatever the thread schedule.

use std::path::Path;
use std::time::Instant;

use degenwave_core::discretization::CylinderGrid;
use degenwave_core::evolution::sample_trajectory;
use degenwave_core::observables::{
    eigenmode_family, estimate_constant, integration_identity_audit, multiplier_audit, quasimode_sweep, FamilyMember,
};
use degenwave_core::{
    build_radial_grid, BasisElement, Fault, InitialData, ModelParams, ObservationReport, QuasimodeSpec, SpectralBasis,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{with_suffix, write_file, Cell, RunMetadata, Table};
use crate::verify;

pub const OBSERVE_HEADER: &[&str] = &[
    "alpha",
    "T",
    "delta0",
    "tag",
    "E0",
    "O_Gamma",
    "O_omega",
    "threshold_term",
    "ratio_mixed",
    "ratio_top_only",
    "below_threshold",
];
pub const AUDIT_HEADER: &[&str] = &["alpha", "n", "k", "n_theta", "M", "B1", "B2", "B3", "residual_rel"];
pub const IDENTITY_HEADER: &[&str] =
    &["alpha", "n", "k", "n_theta", "M", "identity", "lhs", "reference", "scale", "residual"];
pub const HARDY_HEADER: &[&str] = &["alpha", "lhs", "rhs", "paper_constant", "satisfied"];

/// Tables produced by a command, keyed by file suffix, plus metadata results.
pub struct Artifact {
    pub tables: Vec<(&'static str, Table)>,
    pub results: serde_json::Value,
    /// Lines printed on standard output.
    pub summary: Vec<String>,
    /// Names of failed invariants; non-empty means exit code 1.
    pub failures: Vec<String>,
}

impl Artifact {
    fn single(table: Table, results: serde_json::Value) -> Self {
        Self { tables: vec![(".csv", table)], results, summary: Vec::new(), failures: Vec::new() }
    }
}

fn basis_for(params: &ModelParams) -> CliResult<SpectralBasis> {
    Ok(SpectralBasis::new(params.alpha, params.n_theta, params.k_max, &build_radial_grid(params.n_r)?)?)
}

/// Radial eigenvalues and boundary slopes for `n = 0..=N`, `k = 1..=k_max`.
pub fn spectrum(cfg: &RunConfig) -> CliResult<Artifact> {
    let basis = basis_for(&cfg.params)?;
    let mut t = Table::new(&["n", "k", "lambda", "boundary_slope"]);
    for sys in basis.systems() {
        for (k, (&l, &s)) in sys.lambdas.iter().zip(&sys.boundary_slopes).enumerate() {
            t.push(vec![sys.n.into(), (k + 1).into(), l.into(), s.into()]);
        }
    }
    let results = json!({ "rows": t.len(), "eigenvalue_collisions": basis.eigenvalue_collisions().len() });
    Ok(Artifact::single(t, results))
}

fn observe_row(p: &ModelParams, tag: String, r: &ObservationReport) -> Vec<Cell> {
    vec![
        p.alpha.into(),
        p.t_final.into(),
        p.delta0.into(),
        tag.into(),
        r.e0.into(),
        r.o_gamma.into(),
        r.o_omega.into(),
        r.threshold_term.into(),
        r.ratio_mixed.into(),
        r.ratio_top_only.into(),
        r.below_threshold.into(),
    ]
}

/// The observe family: lowest eigenmodes, seeded random data, optional zero.
pub fn observe_family(cfg: &RunConfig, basis: &SpectralBasis) -> CliResult<Vec<FamilyMember>> {
    let o = &cfg.observe;
    if o.eigenmodes > basis.len() {
        return Err(CliError::Config(format!("{} eigenmodes requested but the basis has {}", o.eigenmodes, basis.len())));
    }
    let mut family = eigenmode_family(basis, o.eigenmodes);
    family.extend(degenwave_core::observables::random_family(basis, o.random, cfg.seed()));
    if o.include_zero {
        family.push(FamilyMember { tag: "zero".into(), init: InitialData::zeros(basis.len()) });
    }
    Ok(family)
}

/// One row per family member, then a `summary` row carrying `C_emp` in the
/// `ratio_mixed` column. Members excluded from `C_emp` get an `excluded:` tag.
pub fn observe(cfg: &RunConfig) -> CliResult<Artifact> {
    let p = &cfg.params;
    let basis = basis_for(p)?;
    let family = observe_family(cfg, &basis)?;
    let est = estimate_constant(&family, p, &basis).map_err(|e| match e {
        degenwave_core::Error::EmptyFamily => CliError::Config(e.to_string()),
        e => e.into(),
    })?;
    let mut t = Table::new(OBSERVE_HEADER);
    for (tag, r) in &est.reports {
        let tag = if est.excluded.contains(tag) { format!("excluded:{tag}") } else { tag.clone() };
        t.push(observe_row(p, tag, r));
    }
    let mut summary = vec![p.alpha.into(), p.t_final.into(), p.delta0.into(), "summary".into()];
    summary.extend((0..4).map(|_| Cell::Empty));
    summary.push(est.c_emp.unwrap_or(f64::NAN).into());
    summary.extend([Cell::Empty, (p.t_final <= p.threshold_time()).into()]);
    t.push(summary);
    let results = json!({
        "alpha": p.alpha,
        "T": p.t_final,
        "delta0": p.delta0,
        "C_emp": est.c_emp,
        "members": est.reports.len(),
        "excluded": est.excluded,
    });
    Ok(Artifact::single(t, results))
}

/// Projects, evolves and reports each configured quasimode.
pub fn quasimode(cfg: &RunConfig) -> CliResult<Artifact> {
    let basis = basis_for(&cfg.params)?;
    let specs = cfg
        .quasimode
        .pairs
        .iter()
        .map(|q| QuasimodeSpec::new(q.n, q.eps).map_err(|e| CliError::Config(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let rows = quasimode_sweep(&specs, &cfg.params, &basis)?;
    let mut t = Table::new(&[
        "n",
        "eps",
        "projection_mass",
        "flagged",
        "datum_boundary_slope",
        "E0",
        "O_Gamma",
        "O_omega",
        "threshold_term",
        "ratio_top_only",
        "ratio_mixed",
        "below_threshold",
    ]);
    for q in &rows {
        let r = &q.report;
        t.push(vec![
            q.n.into(),
            q.eps.into(),
            q.projection_mass.into(),
            q.flagged.into(),
            q.datum_boundary_slope.into(),
            r.e0.into(),
            r.o_gamma.into(),
            r.o_omega.into(),
            r.threshold_term.into(),
            r.ratio_top_only.into(),
            r.ratio_mixed.into(),
            r.below_threshold.into(),
        ]);
    }
    let flagged = rows.iter().filter(|q| q.flagged).count();
    Ok(Artifact::single(t, json!({ "rows": rows.len(), "flagged": flagged })))
}

/// Multiplier and integration-identity audits across the refinement ladder.
pub fn audit(cfg: &RunConfig) -> CliResult<Artifact> {
    let a = &cfg.audit;
    let mut main = Table::new(AUDIT_HEADER);
    let mut ids = Table::new(IDENTITY_HEADER);
    let k_max = a.modes.iter().map(|m| m.k).max().unwrap_or(0);
    // [mode][rung] -> (audit row, identity rows)
    let mut grid_rows = vec![Vec::new(); a.modes.len()];
    if k_max > 0 {
        for rung in &a.ladder {
            let p = ModelParams { n_r: rung.n_r, n_theta: rung.n_theta, k_max, ..cfg.params };
            let basis = basis_for(&p)?;
            let per_mode = a
                .modes
                .par_iter()
                .map(|m| {
                    let e = BasisElement { branch: a.branch, n: m.n, k: m.k };
                    let idx = basis.index_of(e).ok_or_else(|| CliError::Config(format!("{} not in basis", e.label())))?;
                    let tr = sample_trajectory(&InitialData::mode(basis.len(), idx), None, &basis, p.t_final, p.n_t)?;
                    Ok((multiplier_audit(&tr, &p, &basis)?, integration_identity_audit(&tr, &p, &basis)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            for (slot, r) in grid_rows.iter_mut().zip(per_mode) {
                slot.push((*rung, r));
            }
        }
    }
    let alpha = cfg.params.alpha;
    let mut worst_final = 0.0_f64;
    for (m, rungs) in a.modes.iter().zip(&grid_rows) {
        for (rung, (au, idr)) in rungs {
            let lead = || -> Vec<Cell> {
                vec![alpha.into(), m.n.into(), m.k.into(), rung.n_theta.into(), rung.n_r.into()]
            };
            let mut row = lead();
            row.extend([au.b1.into(), au.b2.into(), au.b3.into(), au.residual_rel.into()]);
            main.push(row);
            for r in idr {
                let mut row = lead();
                row.extend([r.name.into(), r.lhs.into(), r.reference.into(), r.scale.into(), r.residual.into()]);
                ids.push(row);
            }
        }
        if let Some((_, (au, _))) = rungs.last() {
            worst_final = worst_final.max(au.residual_rel);
        }
    }
    let results = json!({ "modes": a.modes.len(), "rungs": a.ladder.len(), "worst_final_residual_rel": worst_final });
    Ok(Artifact {
        tables: vec![(".csv", main), (".identities.csv", ids)],
        results,
        summary: Vec::new(),
        failures: Vec::new(),
    })
}

/// Runs the invariant suite; failures are collected, not raised.
pub fn verify_suite(cfg: &RunConfig, fault: Option<Fault>) -> CliResult<Artifact> {
    let p = &cfg.params;
    let v = &cfg.verify;
    let radial = build_radial_grid(p.n_r)?;
    let mut modes = vec![0, 1, p.n_theta];
    modes.dedup();
    let mut checks = vec![verify::operator_symmetry(&radial, p.alpha, &modes, v.pairs, p.seed, fault)?];
    let basis = basis_for(p)?;
    checks.push(verify::orthonormality(&basis)?);
    checks.push(verify::parseval(&basis, v.fields, p.seed)?);
    checks.push(verify::energy_conservation(&basis, p.t_final, p.n_t, v.fields, p.seed)?);
    let grid = CylinderGrid::for_modes(p.n_theta, radial);
    let hardy = verify::hardy_suite(&grid, p.alpha, v.hardy_fields, p.seed)?;
    checks.push(verify::hardy_outcome(p.alpha, &hardy));

    let mut t = Table::new(&["check", "worst", "bound", "samples", "passed"]);
    for c in &checks {
        t.push(vec![c.name.clone().into(), c.worst.into(), c.bound.into(), c.samples.into(), c.passed().into()]);
    }
    let mut h = Table::new(HARDY_HEADER);
    for r in &hardy {
        h.push(vec![r.alpha.into(), r.lhs.into(), r.rhs.into(), r.paper_constant.into(), r.satisfied.into()]);
    }
    let failures: Vec<String> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
    let results = json!({
        "checks": checks.iter().map(|c| json!({ "name": c.name, "worst": c.worst, "bound": c.bound, "passed": c.passed() })).collect::<Vec<_>>(),
        "fault_injected": fault.is_some(),
    });
    Ok(Artifact {
        tables: vec![(".csv", t), (".hardy.csv", h)],
        results,
        summary: checks.iter().map(|c| c.summary_line()).collect(),
        failures,
    })
}

/// Subcommands that share the execution path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Observe,
    Quasimode,
    Audit,
    Verify { fault: Option<Fault> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Observe => "observe",
            Command::Quasimode => "quasimode",
            Command::Audit => "audit",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Runs `cmd`, writes `<out>.csv` (plus extra tables) and `<out>.meta.json`,
/// prints the summary, and turns invariant failures into an error.
pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> CliResult<Artifact> {
    let start = Instant::now();
    let art = match cmd {
        Command::Spectrum => spectrum(cfg)?,
        Command::Observe => observe(cfg)?,
        Command::Quasimode => quasimode(cfg)?,
        Command::Audit => audit(cfg)?,
        Command::Verify { fault } => verify_suite(cfg, fault)?,
    };
    let elapsed = start.elapsed().as_secs_f64();
    for (suffix, table) in &art.tables {
        write_file(&with_suffix(out, suffix), &table.render())?;
    }
    let meta = RunMetadata::new(cmd.name(), cfg, elapsed, art.results.clone());
    write_file(&with_suffix(out, ".meta.json"), &meta.to_json())?;
    for line in &art.summary {
        println!("{line}");
    }
    if !art.failures.is_empty() {
        return Err(CliError::Invariant(art.failures));
    }
    Ok(art)
}
