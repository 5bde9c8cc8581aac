//! Observation functionals, observability-constant estimation, quasimode
//! sweeps, and the Hardy and multiplier audits.

mod hardy;
mod multiplier;

use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{boundary_derivative, inner_l2, radial_energy_form};
use crate::error::{Error, Result};
use crate::evolution::{energy, sample_trajectory, InitialData, Trajectory};
use crate::model::{quasimode_field, Geometry, ModelParams, QuasimodeSpec};
use crate::quadrature::simpson_weights;
use crate::spectral::{AngularComponent, SpectralBasis};

pub use hardy::{hardy_check, hardy_constant, HardyReport};
pub use multiplier::{
    cutoff_decompose, integration_identity_audit, multiplier_audit, CutoffDecomposition, IdentityResidual,
    MultiplierAudit, RESIDUAL_FLOOR,
};

/// Simpson intervals per component interval of the strip.
pub const STRIP_INTERVALS: usize = 64;

/// Energy, observations and the ratios that bound the observability constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservationReport {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "O_Gamma")]
    pub o_gamma: f64,
    #[serde(rename = "O_omega")]
    pub o_omega: f64,
    pub threshold_term: f64,
    pub ratio_mixed: f64,
    pub ratio_top_only: f64,
    pub below_threshold: bool,
}

/// `num / den` for `den >= 0`, with `+-inf` when only the denominator
/// vanishes and `0` for `0/0`.
pub fn safe_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else if num < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Components carrying a nonzero coefficient anywhere along the trajectory.
fn active_components(traj: &Trajectory, basis: &SpectralBasis) -> Vec<usize> {
    (0..basis.n_components())
        .filter(|&m| traj.states.iter().any(|s| basis.component_active(&[s.a.as_slice(), s.adot.as_slice()], m)))
        .collect()
}

/// `int_0^T int_T (d_r phi(theta, 1, t))^2 dtheta dt`.
///
/// The angular factors are orthonormal, so the inner integral is the sum of
/// squared per-component boundary slopes.
pub fn observe_boundary(traj: &Trajectory, basis: &SpectralBasis) -> f64 {
    let active = active_components(traj, basis);
    traj.integrate(|s| {
        active
            .iter()
            .map(|&m| {
                let sl = basis.profile_slope(s.a.as_slice(), m);
                sl * sl
            })
            .sum()
    })
}

/// Angular Gram matrices `int_I Theta_m Theta_m'` and `int_I Theta_m' Theta_m''`
/// over the strip, by composite Simpson on each component interval.
struct StripGram {
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl StripGram {
    fn new(basis: &SpectralBasis, geometry: &Geometry) -> Self {
        let nc = basis.n_components();
        let mut values = vec![vec![0.0; nc]; nc];
        let mut derivs = vec![vec![0.0; nc]; nc];
        let comps: Vec<AngularComponent> = (0..nc).map(AngularComponent::from_index).collect();
        for (lo, hi) in geometry.strip_intervals() {
            let w = simpson_weights(STRIP_INTERVALS, hi - lo);
            for (i, wi) in w.iter().enumerate() {
                let th = lo + (hi - lo) * i as f64 / STRIP_INTERVALS as f64;
                let ev: Vec<(f64, f64, f64)> = comps.iter().map(|c| c.eval(th)).collect();
                for a in 0..nc {
                    for b in 0..nc {
                        values[a][b] += wi * ev[a].0 * ev[b].0;
                        derivs[a][b] += wi * ev[a].1 * ev[b].1;
                    }
                }
            }
        }
        Self { values, derivs }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `int_0^T int_omega [phi^2 + phi_t^2 + A grad phi . grad phi]`.
pub fn observe_strip(traj: &Trajectory, basis: &SpectralBasis, geometry: &Geometry) -> f64 {
    let active = active_components(traj, basis);
    if active.is_empty() {
        return 0.0;
    }
    let gram = StripGram::new(basis, geometry);
    let rg = basis.radial_grid();
    let h = rg.h();
    let fw = rg.interior_face_weights(basis.alpha());
    traj.integrate(|s| {
        let p: Vec<Vec<f64>> = active.iter().map(|&m| basis.profile(s.a.as_slice(), m)).collect();
        let v: Vec<Vec<f64>> = active.iter().map(|&m| basis.profile(s.adot.as_slice(), m)).collect();
        let mut acc = 0.0;
        for (i, &m) in active.iter().enumerate() {
            for (j, &mm) in active.iter().enumerate() {
                let (ga, gd) = (gram.values[m][mm], gram.derivs[m][mm]);
                if ga == 0.0 && gd == 0.0 {
                    continue;
                }
                let pp = h * dot(&p[i], &p[j]);
                let vv = h * dot(&v[i], &v[j]);
                let rf = radial_energy_form(rg, &fw, &p[i], &p[j]);
                acc += ga * (pp + vv + rf) + gd * pp;
            }
        }
        acc
    })
}

/// Builds the report from already computed quantities.
pub fn report_from_parts(params: &ModelParams, e0: f64, o_gamma: f64, o_omega: f64) -> ObservationReport {
    let threshold_term = ((2.0 - params.alpha) * params.t_final - SQRT_2) * e0;
    ObservationReport {
        e0,
        o_gamma,
        o_omega,
        threshold_term,
        ratio_mixed: safe_ratio(threshold_term, o_gamma + o_omega),
        ratio_top_only: safe_ratio(threshold_term, o_gamma),
        below_threshold: params.t_final <= params.threshold_time(),
    }
}

/// Evolves `init` freely over `[0, T]` and evaluates the observation report.
pub fn observability_report(init: &InitialData, params: &ModelParams, basis: &SpectralBasis) -> Result<ObservationReport> {
    let traj = sample_trajectory(init, None, basis, params.t_final, params.n_t)?;
    Ok(report_for_trajectory(&traj, params, basis))
}

pub fn report_for_trajectory(traj: &Trajectory, params: &ModelParams, basis: &SpectralBasis) -> ObservationReport {
    let e0 = energy(traj.first(), basis);
    let o_gamma = observe_boundary(traj, basis);
    let o_omega = observe_strip(traj, basis, &params.geometry());
    report_from_parts(params, e0, o_gamma, o_omega)
}

/// `O_Gamma / (||phi0||^2_{H^1_w} + ||phi1||^2)`; zero data gives 0.
pub fn hidden_regularity_ratio(traj: &Trajectory, init: &InitialData, basis: &SpectralBasis) -> f64 {
    let norm = init.norm_sq(basis);
    if norm == 0.0 {
        return 0.0;
    }
    observe_boundary(traj, basis) / norm
}

/// A tagged initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub tag: String,
    pub init: InitialData,
}

/// `(Phi_b, 0)` for the `count` elements of smallest eigenvalue (ties by index).
pub fn eigenmode_family(basis: &SpectralBasis, count: usize) -> Vec<FamilyMember> {
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| basis.lambda(a).total_cmp(&basis.lambda(b)).then(a.cmp(&b)));
    order
        .into_iter()
        .take(count)
        .map(|b| FamilyMember { tag: basis.element(b).label(), init: InitialData::mode(basis.len(), b) })
        .collect()
}

/// Random superpositions with `phi0_b, phi1_b ~ N(0,1) / lambda_b`.
pub fn random_family(basis: &SpectralBasis, count: usize, seed: u64) -> Vec<FamilyMember> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut draw = || -> Vec<f64> {
                basis
                    .lambdas()
                    .iter()
                    .map(|l| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z / l
                    })
                    .collect()
            };
            let phi0 = draw();
            let phi1 = draw();
            FamilyMember {
                tag: format!("random_{i}"),
                init: InitialData { phi0: crate::spectral::ModalCoeffs(phi0), phi1: crate::spectral::ModalCoeffs(phi1) },
            }
        })
        .collect()
}

/// Per-member reports and the empirical constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    /// `max threshold_term / (O_Gamma + O_omega)` over included members;
    /// `None` when every member was excluded.
    pub c_emp: Option<f64>,
    pub reports: Vec<(String, ObservationReport)>,
    /// Members whose observation denominator vanished.
    pub excluded: Vec<String>,
}

/// Evaluates every family member and takes the largest mixed ratio.
pub fn estimate_constant(family: &[FamilyMember], params: &ModelParams, basis: &SpectralBasis) -> Result<ConstantEstimate> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let reports = family
        .par_iter()
        .map(|m| observability_report(&m.init, params, basis).map(|r| (m.tag.clone(), r)))
        .collect::<Result<Vec<_>>>()?;
    let mut c_emp: Option<f64> = None;
    let mut excluded = Vec::new();
    for (tag, r) in &reports {
        if r.o_gamma + r.o_omega > 0.0 {
            c_emp = Some(c_emp.map_or(r.ratio_mixed, |c| c.max(r.ratio_mixed)));
        } else {
            excluded.push(tag.clone());
        }
    }
    Ok(ConstantEstimate { c_emp, reports, excluded })
}

/// Result of projecting and evolving one quasimode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasimodeRow {
    pub n: u32,
    pub eps: f64,
    /// Share of the datum's discrete `L^2` mass retained by the projection.
    pub projection_mass: f64,
    /// Set when `projection_mass < 0.99`.
    pub flagged: bool,
    /// `max_theta |d_r (P u)(theta, 1)|` of the projected datum.
    pub datum_boundary_slope: f64,
    pub report: ObservationReport,
}

/// Minimal retained mass for an unflagged quasimode row.
pub const QUASIMODE_MASS_MIN: f64 = 0.99;

/// Projects each quasimode datum at `t = 0`, evolves it freely and reports.
pub fn quasimode_sweep(specs: &[QuasimodeSpec], params: &ModelParams, basis: &SpectralBasis) -> Result<Vec<QuasimodeRow>> {
    specs
        .par_iter()
        .map(|spec| {
            let grid = basis.grid();
            let (u, ut) = quasimode_field(spec, 0.0, grid);
            let init = InitialData::from_fields(&u, &ut, basis)?;
            let full = inner_l2(grid, &u, &u)?;
            let projection_mass = if full > 0.0 { init.phi0.norm_sq() / full } else { 0.0 };
            let pu = basis.from_modal(&init.phi0)?;
            let datum_boundary_slope = boundary_derivative(grid, &pu)?.into_iter().fold(0.0, |a: f64, x| a.max(x.abs()));
            let report = observability_report(&init, params, basis)?;
            Ok(QuasimodeRow {
                n: spec.n,
                eps: spec.eps,
                projection_mass,
                flagged: projection_mass < QUASIMODE_MASS_MIN,
                datum_boundary_slope,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_radial_grid;
    use crate::evolution::InitialData;
    use crate::spectral::{BasisElement, Branch};
    use std::f64::consts::PI;

    fn params(alpha: f64, t: f64) -> ModelParams {
        ModelParams { alpha, t_final: t, n_theta: 3, n_r: 64, n_t: 64, k_max: 4, ..Default::default() }
    }

    fn basis_for(p: &ModelParams) -> SpectralBasis {
        crate::spectral::assemble_basis(p, &build_radial_grid(p.n_r).unwrap()).unwrap()
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(safe_ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(safe_ratio(-1.0, 0.0), f64::NEG_INFINITY);
        assert_eq!(safe_ratio(0.0, 0.0), 0.0);
        assert_eq!(safe_ratio(3.0, 2.0), 1.5);
    }

    #[test]
    fn zero_data_report() {
        let p = params(1.0, 3.0);
        let b = basis_for(&p);
        let r = observability_report(&InitialData::zeros(b.len()), &p, &b).unwrap();
        assert_eq!((r.e0, r.o_gamma, r.o_omega, r.ratio_mixed, r.ratio_top_only), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(!r.below_threshold);
    }

    #[test]
    fn threshold_flags() {
        let p = params(1.0, 1.0);
        let b = basis_for(&p);
        let r = observability_report(&InitialData::mode(b.len(), 0), &p, &b).unwrap();
        assert!(r.below_threshold);
        assert!(r.threshold_term < 0.0);
        assert!((p.threshold_time() - SQRT_2).abs() < 1e-15);
        assert!((params(1.5, 1.0).threshold_time() - 2.0 * SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn single_mode_boundary_observation() {
        let mut p = params(1.2, 1.0);
        let b = basis_for(&p);
        let idx = b.index_of(BasisElement { branch: Branch::Cos, n: 0, k: 1 }).unwrap();
        // two full periods, where int cos^2 = T/2
        p.t_final = 4.0 * PI / b.lambda(idx).sqrt();
        let init = InitialData::mode(b.len(), idx);
        let tr = sample_trajectory(&init, None, &b, p.t_final, 256).unwrap();
        let expect = b.boundary_slope(idx).powi(2) * p.t_final / 2.0;
        assert!((observe_boundary(&tr, &b) - expect).abs() < 1e-8 * expect);
        let hr = hidden_regularity_ratio(&tr, &init, &b);
        assert!((hr - expect / b.lambda(idx)).abs() < 1e-8 * hr);
        // reversing the velocity leaves the boundary observation unchanged
        let rev = InitialData { phi0: init.phi0.clone(), phi1: init.phi1.scaled(-1.0) };
        let tr2 = sample_trajectory(&rev, None, &b, p.t_final, 256).unwrap();
        assert!((observe_boundary(&tr2, &b) - observe_boundary(&tr, &b)).abs() < 1e-12 * expect);
    }

    #[test]
    fn strip_fraction_for_radial_mode() {
        let p = params(1.5, 2.0);
        let b = basis_for(&p);
        let idx = b.index_of(BasisElement { branch: Branch::Cos, n: 0, k: 2 }).unwrap();
        let init = InitialData::mode(b.len(), idx).plus(&InitialData {
            phi0: crate::spectral::ModalCoeffs::zeros(b.len()),
            phi1: crate::spectral::ModalCoeffs::unit(b.len(), idx).scaled(0.4),
        });
        let tr = sample_trajectory(&init, None, &b, p.t_final, 64).unwrap();
        let strip = observe_strip(&tr, &b, &p.geometry());
        // the whole circle, with the mode's exact Parseval integrand
        let full = tr.integrate(|s| {
            let (a, v) = (s.a[idx], s.adot[idx]);
            a * a + v * v + (b.lambda(idx)) * a * a
        });
        let frac = 8.0 * p.delta0 / (2.0 * PI);
        assert!((strip - frac * full).abs() < 1e-9 * strip, "{strip} vs {}", frac * full);
    }

    #[test]
    fn mixed_ratio_below_top_only_and_scaling() {
        let p = params(1.0, 3.0);
        let b = basis_for(&p);
        for m in random_family(&b, 4, 7) {
            let r = observability_report(&m.init, &p, &b).unwrap();
            assert!(r.o_omega > 0.0 && r.threshold_term > 0.0);
            assert!(r.ratio_mixed < r.ratio_top_only);
            let s = observability_report(&m.init.scaled(3.0), &p, &b).unwrap();
            assert!((s.e0 - 9.0 * r.e0).abs() < 1e-10 * s.e0);
            assert!((s.ratio_mixed - r.ratio_mixed).abs() < 1e-10 * r.ratio_mixed.abs());
            assert!((s.ratio_top_only - r.ratio_top_only).abs() < 1e-10 * r.ratio_top_only.abs());
        }
    }

    #[test]
    fn constant_estimation() {
        let p = params(1.0, 2.0 * SQRT_2);
        let b = basis_for(&p);
        assert_eq!(estimate_constant(&[], &p, &b), Err(Error::EmptyFamily));
        let one = eigenmode_family(&b, 1);
        let single = estimate_constant(&one, &p, &b).unwrap();
        assert_eq!(single.c_emp, Some(single.reports[0].1.ratio_mixed));
        let small = estimate_constant(&eigenmode_family(&b, 5), &p, &b).unwrap();
        let mut fam = eigenmode_family(&b, 5);
        fam.extend(random_family(&b, 3, 1));
        let large = estimate_constant(&fam, &p, &b).unwrap();
        assert!(large.c_emp.unwrap() >= small.c_emp.unwrap());
        let zero = vec![FamilyMember { tag: "zero".into(), init: InitialData::zeros(b.len()) }];
        let z = estimate_constant(&zero, &p, &b).unwrap();
        assert_eq!(z.c_emp, None);
        assert_eq!(z.excluded, vec!["zero".to_string()]);
    }

    #[test]
    fn eigenmode_family_is_sorted() {
        let p = params(1.0, 1.0);
        let b = basis_for(&p);
        let fam = eigenmode_family(&b, 10);
        let lams: Vec<f64> = fam.iter().map(|m| b.lambda(m.init.phi0.0.iter().position(|&x| x == 1.0).unwrap())).collect();
        assert!(lams.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn random_family_is_seeded() {
        let p = params(1.0, 1.0);
        let b = basis_for(&p);
        assert_eq!(random_family(&b, 2, 5), random_family(&b, 2, 5));
        assert_ne!(random_family(&b, 2, 5), random_family(&b, 2, 6));
    }

    #[test]
    fn quasimode_projection_flag() {
        let p = params(1.0, 1.0);
        let b = basis_for(&p);
        let rows = quasimode_sweep(&[QuasimodeSpec::new(1, 0.125).unwrap()], &p, &b).unwrap();
        assert!(rows[0].flagged && rows[0].projection_mass < 0.99);
    }
}
