//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use degenwave_cli::verify;
use degenwave_core::discretization::CylinderGrid;
use degenwave_core::model::{quasimode_forcing_profile, quasimode_radial_derivative, quasimode_residual};
use degenwave_core::observables::{observability_report, random_family};
use degenwave_core::{build_radial_grid, ModelParams, QuasimodeSpec, SpectralBasis};

const BIN: &str = env!("CARGO_BIN_EXE_degenwave");

/// First five zeros of J0 (Abramowitz and Stegun, table 9.5).
const J0_ZEROS: [f64; 5] = [2.404825557695773, 5.520078110286311, 8.653727912911013, 11.79153443901428, 14.93091770848779];

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("    [{}] {what}", if ok { "ok" } else { "violated" }));
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut lines = text.lines();
        let header = lines.next().expect("header row").split(',').map(str::to_string).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Self { header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn f(&self, row: &[String], name: &str) -> f64 {
        row[self.col(name)].parse().unwrap_or_else(|_| panic!("column {name} is not numeric"))
    }

    fn s<'a>(&self, row: &'a [String], name: &str) -> &'a str {
        &row[self.col(name)]
    }
}

fn run(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("DEGENWAVE_THREADS", t);
    }
    cmd.output().expect("spawn degenwave")
}

fn run_ok(args: &[&str]) {
    let out = run(args, None);
    assert!(out.status.success(), "degenwave {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn meta(prefix: &Path) -> serde_json::Value {
    let p = format!("{}.meta.json", prefix.display());
    serde_json::from_str(&std::fs::read_to_string(&p).expect("metadata sidecar")).expect("metadata json")
}

fn csv(prefix: &Path) -> Csv {
    Csv::read(Path::new(&format!("{}.csv", prefix.display())))
}

fn prefix(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

// 2 sqrt 2 with every digit needed to round-trip
fn two_root_two() -> String {
    format!("{:.17e}", 2.0 * SQRT_2)
}

fn eigenvalue_oracle(dir: &Path) -> Outcome {
    let mut o = Outcome::new();
    let out = prefix(dir, "c1");
    let t0 = Instant::now();
    run_ok(&["spectrum", "--alpha", "1", "--n-r", "1024", "--n-theta", "0", "--k-max", "5", "--out", s(&out)]);
    let secs = t0.elapsed().as_secs_f64();
    let table = csv(&out);
    o.check(table.rows.len() == 5, format!("{} rows for N = 0, k_max = 5", table.rows.len()));
    for (row, j) in table.rows.iter().zip(J0_ZEROS) {
        let lambda = table.f(row, "lambda");
        let exact = j * j / 4.0;
        let rel = (lambda - exact).abs() / exact;
        o.check(rel <= 1e-3, format!("k = {}: lambda {lambda:.7} vs j^2/4 = {exact:.7}, rel {rel:.2e}", table.s(row, "k")));
    }
    o.check(secs < 5.0, format!("runtime {secs:.2} s < 5 s"));
    o
}

fn operator_symmetry() -> Outcome {
    let mut o = Outcome::new();
    let grid = build_radial_grid(512).unwrap();
    for alpha in [1.0, 1.5, 1.99] {
        let c = verify::operator_symmetry(&grid, alpha, &[0, 1, 8], 100, 11, None).unwrap();
        o.check(c.passed() && c.samples == 300, format!("alpha {alpha}: worst {:.2e} over {} pairs", c.worst, c.samples));
    }
    o
}

fn orthonormality_parseval() -> Outcome {
    let mut o = Outcome::new();
    for alpha in [1.0, 1.5] {
        let p = ModelParams { alpha, ..Default::default() };
        let b = SpectralBasis::new(alpha, p.n_theta, p.k_max, &build_radial_grid(p.n_r).unwrap()).unwrap();
        let g = verify::orthonormality(&b).unwrap();
        o.check(g.worst <= 1e-10, format!("alpha {alpha}: max |G - I| = {:.2e} ({} elements)", g.worst, b.len()));
        let pv = verify::parseval(&b, 20, 5).unwrap();
        o.check(pv.worst <= 1e-8, format!("alpha {alpha}: H1_w Parseval rel {:.2e} on 20 fields", pv.worst));
    }
    o
}

fn energy_conservation() -> Outcome {
    let mut o = Outcome::new();
    for alpha in [1.0, 1.5, 1.9] {
        let p = ModelParams { alpha, ..Default::default() };
        let b = SpectralBasis::new(alpha, p.n_theta, p.k_max, &build_radial_grid(p.n_r).unwrap()).unwrap();
        let c = verify::energy_conservation(&b, p.t_final, 64, 20, 17).unwrap();
        o.check(c.worst <= 1e-12, format!("alpha {alpha}: max drift {:.2e} over 65 samples, 20 data", c.worst));
    }
    o
}

fn hardy_poincare() -> Outcome {
    let mut o = Outcome::new();
    let grid = CylinderGrid::for_modes(8, build_radial_grid(256).unwrap());
    for alpha in [1.0, 1.25, 1.5, 1.75] {
        let reps = verify::hardy_suite(&grid, alpha, 100, 23).unwrap();
        let c = verify::hardy_outcome(alpha, &reps);
        let all = reps.iter().all(|r| r.satisfied && r.lhs <= r.paper_constant * r.rhs * (1.0 + 1e-8));
        o.check(
            all && reps.len() == 100,
            format!("alpha {alpha}: constant {}, worst lhs/(C rhs) = {:.3}", reps[0].paper_constant, c.worst),
        );
    }
    o
}

fn multiplier_audit(dir: &Path) -> Outcome {
    let mut o = Outcome::new();
    let out = prefix(dir, "c6");
    let t0 = Instant::now();
    run_ok(&["audit", "--alpha", "1.5", "--T", "3", "--out", s(&out)]);
    let secs = t0.elapsed().as_secs_f64();
    let main = csv(&out);
    let ids = Csv::read(Path::new(&format!("{}.identities.csv", out.display())));
    let key = |t: &Csv, r: &[String]| (t.s(r, "n").to_string(), t.s(r, "k").to_string());

    let mut ladders: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &main.rows {
        ladders.entry(key(&main, r)).or_default().push((main.f(r, "M"), main.f(r, "residual_rel")));
    }
    o.check(ladders.len() == 9, format!("{} eigenmodes audited", ladders.len()));
    for ((n, k), lad) in &ladders {
        let fin = lad.last().unwrap();
        let dec = lad.windows(2).all(|w| w[1].1 < w[0].1);
        o.check(
            fin.0 == 512.0 && fin.1 <= 0.05 && dec && lad.len() == 3,
            format!("n={n} k={k}: residual_rel {} (strictly decreasing: {dec})", fmt_ladder(lad)),
        );
    }

    let mut worst = BTreeMap::<String, f64>::new();
    let mut traces: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &ids.rows {
        let name = ids.s(r, "identity").to_string();
        let res = ids.f(r, "residual");
        if name == "radial_derivative_weighted_trace_flux" {
            traces.entry(key(&ids, r)).or_default().push((ids.f(r, "M"), res));
        } else {
            let w = worst.entry(name).or_insert(0.0);
            *w = w.max(res);
        }
    }
    let first = worst.get("theta_derivative_psi_sq").copied().unwrap_or(f64::NAN);
    o.check(first <= 1e-14, format!("theta_derivative_psi_sq: max residual {first:.2e} <= 1e-14"));
    for name in [
        "radial_derivative_r_psi_sq",
        "theta_derivative_psi_theta_sq",
        "radial_derivative_r_psi_theta_sq",
        "theta_derivative_weighted_psi_r_sq",
    ] {
        let w = worst.get(name).copied().unwrap_or(f64::NAN);
        o.check(w <= 1e-8, format!("{name}: max residual {w:.2e} <= 1e-8"));
    }
    for ((n, k), lad) in &traces {
        let orders: Vec<f64> = lad.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln()).collect();
        let ok = lad.len() == 3 && orders.iter().all(|&q| q >= 1.0);
        o.check(
            ok,
            format!(
                "n={n} k={k}: trace-flux residual {} observed orders {:?}",
                fmt_ladder(lad),
                orders.iter().map(|q| format!("{q:.2}")).collect::<Vec<_>>()
            ),
        );
    }
    o.check(secs < 120.0, format!("runtime {secs:.1} s < 120 s"));
    o
}

fn fmt_ladder(l: &[(f64, f64)]) -> String {
    l.iter().map(|(m, r)| format!("M={m}:{r:.2e}")).collect::<Vec<_>>().join(" ")
}

const SEED: &str = "4242";

/// Runs the observability family at alpha = 1, T = 2 sqrt 2 and returns C_emp.
fn c_emp(dir: &Path) -> f64 {
    let out = prefix(dir, "c7");
    let t = two_root_two();
    run_ok(&["observe", "--alpha", "1", "--delta0", "0.02", "--T", &t, "--seed", SEED, "--out", s(&out)]);
    meta(&out)["results"]["C_emp"].as_f64().unwrap_or(f64::NAN)
}

fn observability(dir: &Path, c: f64) -> Outcome {
    let mut o = Outcome::new();
    let out = prefix(dir, "c7");
    let table = csv(&out);
    let members = table.rows.iter().filter(|r| table.s(r, "tag") != "summary").count();
    let eig = table.rows.iter().filter(|r| table.s(r, "tag").starts_with("mode_")).count();
    o.check(members == 70 && eig == 50, format!("{members} family members ({eig} eigenmodes)"));
    o.check(c.is_finite(), format!("C_emp = {c:.6} is finite"));

    let p = ModelParams { alpha: 1.0, delta0: 0.02, t_final: 2.0 * SQRT_2, seed: SEED.parse().unwrap(), ..Default::default() };
    let b = SpectralBasis::new(p.alpha, p.n_theta, p.k_max, &build_radial_grid(p.n_r).unwrap()).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for m in random_family(&b, 20, p.seed + 1) {
        let r = observability_report(&m.init, &p, &b).unwrap();
        worst = worst.max(r.threshold_term / (2.0 * c * (r.o_gamma + r.o_omega)));
    }
    o.check(worst <= 1.0, format!("20 fresh data: max threshold_term / (2 C_emp (O_Gamma + O_omega)) = {worst:.4}"));

    for (alpha, expect) in [("1", SQRT_2), ("1.5", 2.0 * SQRT_2)] {
        let out = prefix(dir, &format!("c7_threshold_{alpha}"));
        run_ok(&["spectrum", "--alpha", alpha, "--n-r", "32", "--n-theta", "0", "--k-max", "2", "--out", s(&out)]);
        let got = meta(&out)["threshold_time"].as_f64().unwrap_or(f64::NAN);
        o.check(got == expect, format!("alpha {alpha}: threshold_time {got:.17} == {expect:.17}"));
    }
    o
}

fn quasimodes(dir: &Path, c: f64) -> Outcome {
    let mut o = Outcome::new();
    // analytic family, unprojected
    let grid = CylinderGrid::new(128, build_radial_grid(512).unwrap()).unwrap();
    let mut slope_zero = true;
    let mut support_ok = true;
    for n in [1u32, 4, 8, 16, 32] {
        for eps in [1.0 / 16.0, 0.1, 0.2] {
            let spec = QuasimodeSpec::new(n, eps).unwrap();
            for i in 0..256 {
                let th = 2.0 * std::f64::consts::PI * i as f64 / 256.0;
                slope_zero &= quasimode_radial_derivative(&spec, th, 1.0, 0.0) == 0.0;
            }
            let f = quasimode_residual(&spec, 0.0, &grid, 1.5);
            for (j, &r) in grid.radial().centers().iter().enumerate() {
                if r >= 2.0 * eps {
                    support_ok &= f.values.column(j).iter().all(|&v| v == 0.0);
                }
            }
            for i in 0..=1000 {
                let r = 2.0 * eps + (1.0 - 2.0 * eps) * i as f64 / 1000.0;
                support_ok &= quasimode_forcing_profile(r, eps, 1.5) == 0.0;
            }
        }
    }
    o.check(slope_zero, "d_r u(theta, 1, 0) == 0 exactly for every sampled (n, eps, theta)".into());
    o.check(support_ok, "residual vanishes identically for r >= 2 eps".into());

    let out = prefix(dir, "c8");
    run_ok(&[
        "quasimode", "--alpha", "1", "--T", "1", "--n-theta", "32", "--n-r", "256", "--k-max", "32", "--out", s(&out),
    ]);
    let t = csv(&out);
    let ns: Vec<f64> = t.rows.iter().map(|r| t.f(r, "n")).collect();
    o.check(ns == [4.0, 8.0, 16.0, 32.0], format!("rows for n = {ns:?}"));
    let mass = t.rows.iter().map(|r| t.f(r, "projection_mass")).fold(f64::INFINITY, f64::min);
    o.check(mass >= 0.99, format!("min projection mass {mass:.5} >= 0.99"));
    let top: Vec<f64> = t.rows.iter().map(|r| t.f(r, "ratio_top_only")).collect();
    o.check(top.windows(2).all(|w| w[1] <= w[0]), format!("ratio_top_only nonincreasing: {top:.3?}"));
    let mixed: Vec<f64> = t.rows.iter().map(|r| t.f(r, "ratio_mixed")).collect();
    o.check(mixed.iter().all(|&m| m <= 10.0 * c), format!("ratio_mixed {mixed:.3?} <= 10 C_emp = {:.3}", 10.0 * c));
    o
}

fn determinism(dir: &Path) -> Outcome {
    let mut o = Outcome::new();
    let cfg = dir.join("c9.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": 1.3, "T": 3.5, "n_theta": 4, "n_r": 96, "k_max": 6, "seed": 99, "observe": {"eigenmodes": 12, "random": 8, "include_zero": true}}"#,
    )
    .unwrap();
    let a = prefix(dir, "c9a");
    let b = prefix(dir, "c9b");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let r = run(&["observe", "--config", s(&cfg), "--out", s(out)], Some(threads));
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let ca = std::fs::read(format!("{}.csv", a.display())).unwrap();
    let cb = std::fs::read(format!("{}.csv", b.display())).unwrap();
    o.check(!ca.is_empty() && ca == cb, format!("CSV byte-identical across runs ({} bytes, 1 vs 4 threads)", ca.len()));
    let strip = |mut v: serde_json::Value| {
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    o.check(strip(meta(&a)) == strip(meta(&b)), "metadata identical apart from wall-clock".into());
    o
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let c = c_emp(d);
    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("eigenvalue oracle", Box::new(|| eigenvalue_oracle(d))),
        ("operator symmetry", Box::new(operator_symmetry)),
        ("orthonormality and Parseval", Box::new(orthonormality_parseval)),
        ("energy conservation", Box::new(energy_conservation)),
        ("Hardy and Poincare inequalities", Box::new(hardy_poincare)),
        ("multiplier audit", Box::new(|| multiplier_audit(d))),
        ("observability inequality", Box::new(move || observability(d, c))),
        ("quasimode mechanism", Box::new(move || quasimodes(d, c))),
        ("determinism", Box::new(|| determinism(d))),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let out = f();
        println!(
            "criterion {}: {} - {name} ({:.1} s)",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        for l in &out.lines {
            println!("{l}");
        }
        if !out.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
