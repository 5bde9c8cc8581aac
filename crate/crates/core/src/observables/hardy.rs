//! Discrete weighted Hardy and Poincare inequalities.

use serde::Serialize;

use crate::discretization::{radial_energy_form, CylinderGrid, GridField};
use crate::error::{check_len, Error, Result};

/// Both sides of the inequality `lhs <= paper_constant * rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyReport {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub paper_constant: f64,
    pub satisfied: bool,
}

/// `4/(alpha-1)^2` for `alpha > 1`; the Poincare constant 8 at `alpha = 1`.
pub fn hardy_constant(alpha: f64) -> f64 {
    if alpha == 1.0 {
        8.0
    } else {
        4.0 / ((alpha - 1.0) * (alpha - 1.0))
    }
}

const TOL: f64 = 1e-8;

/// Evaluates `int r^(alpha-2) u^2` (or `int u^2` at `alpha = 1`) against
/// `int r^alpha (d_r u)^2`.
///
/// `u` must vanish at `r = 1`: the trace extrapolated from the last two
/// cells may not exceed `max(1e-8, h) * max|u|`.
pub fn hardy_check(grid: &CylinderGrid, u: &GridField, alpha: f64) -> Result<HardyReport> {
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::InvalidParams("alpha must lie in [1,2)".into()));
    }
    let (p, m) = u.shape();
    check_len(grid.n_angles(), p)?;
    let rg = grid.radial();
    check_len(rg.len(), m)?;
    let h = rg.h();
    let umax = u.values.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let trace = (0..p)
        .map(|i| (1.5 * u.values[[i, m - 1]] - 0.5 * u.values[[i, m - 2]]).abs())
        .fold(0.0_f64, f64::max);
    if trace > TOL.max(h) * umax {
        return Err(Error::Precondition(format!(
            "field does not vanish at r = 1: extrapolated trace {trace:.3e} vs max {umax:.3e}"
        )));
    }
    let weights: Vec<f64> = rg.centers().iter().map(|&r| if alpha == 1.0 { 1.0 } else { r.powf(alpha - 2.0) }).collect();
    let fw = rg.interior_face_weights(alpha);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..p {
        let row = u.values.row(i);
        let row = row.as_slice().expect("grid fields are row-major");
        lhs += row.iter().zip(&weights).map(|(v, w)| w * v * v).sum::<f64>() * h;
        rhs += radial_energy_form(rg, &fw, row, row);
    }
    let dtheta = grid.dtheta();
    let (lhs, rhs) = (lhs * dtheta, rhs * dtheta);
    let paper_constant = hardy_constant(alpha);
    Ok(HardyReport { alpha, lhs, rhs, paper_constant, satisfied: lhs <= paper_constant * rhs * (1.0 + TOL) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_radial_grid;
    use std::f64::consts::PI;

    fn grid(m: usize) -> CylinderGrid {
        CylinderGrid::new(8, build_radial_grid(m).unwrap()).unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(hardy_constant(1.0), 8.0);
        assert_eq!(hardy_constant(1.5), 16.0);
        assert!((hardy_constant(1.25) - 64.0).abs() < 1e-12);
    }

    #[test]
    fn linear_profile_alpha_three_halves() {
        let g = grid(4096);
        let u = GridField::from_fn(&g, |_, r| 1.0 - r);
        let rep = hardy_check(&g, &u, 1.5).unwrap();
        // int r^{-1/2}(1-r)^2 = 16/15 is singular at 0, so the midpoint sum converges like h^{1/2}
        assert!((rep.lhs / (2.0 * PI * 16.0 / 15.0) - 1.0).abs() < 2e-2);
        assert!((rep.rhs / (2.0 * PI * 0.4) - 1.0).abs() < 1e-5);
        assert!(rep.satisfied);
    }

    #[test]
    fn linear_profile_alpha_one() {
        let g = grid(1024);
        let u = GridField::from_fn(&g, |_, r| 1.0 - r);
        let rep = hardy_check(&g, &u, 1.0).unwrap();
        assert!((rep.lhs / (2.0 * PI / 3.0) - 1.0).abs() < 1e-5);
        assert!((rep.rhs / PI - 1.0).abs() < 1e-5);
        assert_eq!(rep.paper_constant, 8.0);
        assert!(rep.satisfied);
    }

    #[test]
    fn zero_field() {
        let g = grid(16);
        let rep = hardy_check(&g, &GridField::zeros(&g), 1.7).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
        assert!(rep.satisfied);
    }

    #[test]
    fn rejects_fields_not_vanishing_at_the_boundary() {
        let g = grid(64);
        let u = GridField::from_fn(&g, |_, r| 2.0 - r);
        assert!(matches!(hardy_check(&g, &u, 1.5), Err(Error::Precondition(_))));
    }
}
