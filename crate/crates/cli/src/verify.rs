//! Built-in invariant suite behind `degenwave verify`.

use degenwave_core::discretization::{
    assemble_mode_operator, assemble_mode_operator_with_fault, inner_h1w, inner_l2, CylinderGrid,
};
use degenwave_core::evolution::{energy, sample_trajectory};
use degenwave_core::observables::{hardy_check, random_family};
use degenwave_core::{Fault, GridField, HardyReport, RadialGrid, SpectralBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliResult;

/// Outcome of one named check: the worst observed value against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub worst: f64,
    pub bound: f64,
    pub samples: usize,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.bound
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: worst {:.3e} (bound {:.1e}, {} samples)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.bound,
            self.samples
        )
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn uniform_vec(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|<Lu,v> - <u,Lv>| / (|u| |v| |L|_1)` over random pairs for each mode.
pub fn operator_symmetry(
    radial: &RadialGrid,
    alpha: f64,
    modes: &[usize],
    pairs: usize,
    seed: u64,
    fault: Option<Fault>,
) -> CliResult<CheckOutcome> {
    let mut worst = 0.0_f64;
    for &n in modes {
        let op = match fault {
            Some(f) => assemble_mode_operator_with_fault(radial, alpha, n, f),
            None => assemble_mode_operator(radial, alpha, n),
        };
        let scale = op.norm_l1();
        let mut r = rng(seed, 1 + n as u64);
        for _ in 0..pairs {
            let u = uniform_vec(&mut r, radial.len());
            let v = uniform_vec(&mut r, radial.len());
            let gap = (dot(&op.apply(&u)?, &v) - dot(&u, &op.apply(&v)?)).abs();
            worst = worst.max(gap / (norm(&u) * norm(&v) * scale));
        }
    }
    Ok(CheckOutcome { name: "operator_symmetry".into(), worst, bound: 1e-12, samples: pairs * modes.len() })
}

/// Largest entry of `G - I` for the discrete `L^2` Gram matrix of the basis.
pub fn orthonormality(basis: &SpectralBasis) -> CliResult<CheckOutcome> {
    let grid = basis.grid();
    let fields: Vec<GridField> = (0..basis.len()).map(|b| basis.element_field(b)).collect();
    let worst = (0..fields.len())
        .into_par_iter()
        .map(|i| {
            (i..fields.len()).try_fold(0.0_f64, |w, j| {
                let g = inner_l2(grid, &fields[i], &fields[j])?;
                Ok(w.max((g - if i == j { 1.0 } else { 0.0 }).abs()))
            })
        })
        .collect::<degenwave_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CheckOutcome { name: "orthonormality".into(), worst, bound: 1e-10, samples: basis.len() })
}

/// Weighted `H^1` norm of band-limited fields against `sum lambda_b c_b^2`.
pub fn parseval(basis: &SpectralBasis, count: usize, seed: u64) -> CliResult<CheckOutcome> {
    let mut worst = 0.0_f64;
    for m in random_family(basis, count, seed) {
        let c = &m.init.phi0;
        let u = basis.from_modal(c)?;
        let direct = inner_h1w(basis.grid(), &u, &u, basis.alpha())?;
        let spectral: f64 = c.as_slice().iter().zip(basis.lambdas()).map(|(x, l)| l * x * x).sum();
        worst = worst.max((direct - spectral).abs() / spectral);
    }
    Ok(CheckOutcome { name: "parseval_h1w".into(), worst, bound: 1e-8, samples: count })
}

/// Relative energy drift over `n_t + 1` samples of free trajectories.
pub fn energy_conservation(basis: &SpectralBasis, t_final: f64, n_t: usize, count: usize, seed: u64) -> CliResult<CheckOutcome> {
    let drifts = random_family(basis, count, seed)
        .par_iter()
        .map(|m| {
            let tr = sample_trajectory(&m.init, None, basis, t_final, n_t)?;
            let e0 = energy(tr.first(), basis);
            Ok(tr.states.iter().map(|s| (energy(s, basis) - e0).abs() / e0).fold(0.0, f64::max))
        })
        .collect::<degenwave_core::Result<Vec<f64>>>()?;
    Ok(CheckOutcome {
        name: "energy_conservation".into(),
        worst: drifts.into_iter().fold(0.0, f64::max),
        bound: 1e-12,
        samples: count,
    })
}

/// Random smooth field vanishing at `r = 1`: `(1 - r)` times a random
/// trigonometric polynomial in `theta` with polynomial radial coefficients.
pub fn random_vanishing_field(grid: &CylinderGrid, r: &mut ChaCha8Rng) -> GridField {
    const DEG: usize = 5;
    const FREQ: usize = 3;
    let a: Vec<[f64; 2]> = (0..DEG * (FREQ + 1)).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
    let shift: f64 = r.random_range(0.0..1.0);
    GridField::from_fn(grid, |theta, rad| {
        let mut s = 0.0;
        let mut rq = 1.0;
        for q in 0..DEG {
            for n in 0..=FREQ {
                let [c, d] = a[q * (FREQ + 1) + n];
                let arg = n as f64 * (theta + shift);
                s += rq * (c * arg.cos() + d * arg.sin());
            }
            rq *= rad;
        }
        (1.0 - rad) * s
    })
}

/// Hardy (or Poincare at `alpha = 1`) reports on `count` random fields.
pub fn hardy_suite(grid: &CylinderGrid, alpha: f64, count: usize, seed: u64) -> CliResult<Vec<HardyReport>> {
    let mut r = rng(seed, 0x4a);
    let fields: Vec<GridField> = (0..count).map(|_| random_vanishing_field(grid, &mut r)).collect();
    Ok(fields.par_iter().map(|u| hardy_check(grid, u, alpha)).collect::<degenwave_core::Result<Vec<_>>>()?)
}

/// Worst `lhs / (constant * rhs)` of a Hardy batch; passes at most `1 + 1e-8`.
pub fn hardy_outcome(alpha: f64, reports: &[HardyReport]) -> CheckOutcome {
    let worst = reports
        .iter()
        .map(|h| if h.rhs > 0.0 { h.lhs / (h.paper_constant * h.rhs) } else if h.lhs > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    let name = if alpha == 1.0 { "poincare_constant_8".to_string() } else { format!("hardy_alpha_{alpha}") };
    CheckOutcome { name, worst, bound: 1.0 + 1e-8, samples: reports.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use degenwave_core::build_radial_grid;

    #[test]
    fn fault_is_detected() {
        let g = build_radial_grid(32).unwrap();
        assert!(operator_symmetry(&g, 1.3, &[0, 2], 5, 1, None).unwrap().passed());
        let bad = operator_symmetry(&g, 1.3, &[0, 2], 5, 1, Some(Fault::FluxSignFlip)).unwrap();
        assert!(!bad.passed());
        assert!(bad.summary_line().starts_with("FAIL operator_symmetry"));
    }

    #[test]
    fn random_fields_vanish_at_the_boundary() {
        let grid = CylinderGrid::for_modes(4, build_radial_grid(64).unwrap());
        let mut r = rng(3, 0);
        let u = random_vanishing_field(&grid, &mut r);
        assert!(u.values.iter().any(|v| v.abs() > 1e-3));
        let reps = hardy_suite(&grid, 1.5, 4, 9).unwrap();
        assert_eq!(reps.len(), 4);
        assert!(hardy_outcome(1.5, &reps).passed());
        assert_eq!(hardy_outcome(1.0, &[]).name, "poincare_constant_8");
    }

    #[test]
    fn small_basis_passes() {
        let b = SpectralBasis::new(1.4, 2, 3, &build_radial_grid(40).unwrap()).unwrap();
        assert!(orthonormality(&b).unwrap().passed());
        assert!(parseval(&b, 3, 5).unwrap().passed());
        assert!(energy_conservation(&b, 2.0, 16, 3, 5).unwrap().passed());
    }
}
