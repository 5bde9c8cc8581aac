//! Cell-centred radial grid, flux-form mode operators, and discrete inner
//! products on the cylinder.
//!
//! Radial unknowns live at cell centres `r_j = (j - 1/2) h`. Fluxes
//! `F_{j+1/2} = r_{j+1/2}^alpha (R_{j+1} - R_j) / h` live on faces. The face at
//! `r = 0` carries weight `0^alpha = 0`, which is the weighted Neumann condition;
//! the Dirichlet condition at `r = 1` uses the ghost value `R_{M+1} = -R_M`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};

/// Uniform cell-centred grid on `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    m: usize,
    h: f64,
    centers: Vec<f64>,
    faces: Vec<f64>,
}

impl RadialGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidParams(format!("radial grid needs at least 4 cells, got {m}")));
        }
        let h = 1.0 / m as f64;
        let centers = (1..=m).map(|j| (j as f64 - 0.5) * h).collect();
        let mut faces: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
        faces[m] = 1.0;
        Ok(Self { m, h, centers, faces })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Faces `r_{j+1/2} = j h` for `j = 0..=M`.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Flux weights `r_{j+1/2}^alpha` on the interior faces `j = 1..M-1`.
    pub fn interior_face_weights(&self, alpha: f64) -> Vec<f64> {
        self.faces[1..self.m].iter().map(|r| r.powf(alpha)).collect()
    }
}

/// Builds the staggered radial grid with `m` cells.
pub fn build_radial_grid(m: usize) -> Result<RadialGrid> {
    RadialGrid::new(m)
}

/// Deliberate defects used to smoke-test the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the flux coupling on the sub-diagonal only.
    FluxSignFlip,
}

/// Symmetric tridiagonal discretization of `-(r^alpha R')' + n^2 R`.
///
/// The radial part and the `n^2` shift are stored separately so that every
/// angular mode shares bit-identical radial entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    n: usize,
    alpha: f64,
    radial_diag: Vec<f64>,
    offdiag: Vec<f64>,
    lower_sign: f64,
}

impl ModeOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.radial_diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radial_diag.is_empty()
    }

    /// `n^2`.
    pub fn shift(&self) -> f64 {
        (self.n * self.n) as f64
    }

    /// Diagonal without the `n^2` shift.
    pub fn radial_diag(&self) -> &[f64] {
        &self.radial_diag
    }

    pub fn diag(&self) -> Vec<f64> {
        let s = self.shift();
        self.radial_diag.iter().map(|d| d + s).collect()
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower_sign == 1.0
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), v.len())?;
        let m = self.len();
        let s = self.shift();
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let mut acc = (self.radial_diag[j] + s) * v[j];
            if j > 0 {
                acc += self.lower_sign * self.offdiag[j - 1] * v[j - 1];
            }
            if j + 1 < m {
                acc += self.offdiag[j] * v[j + 1];
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Maximum absolute column sum.
    pub fn norm_l1(&self) -> f64 {
        let m = self.len();
        let s = self.shift();
        (0..m)
            .map(|j| {
                let mut c = (self.radial_diag[j] + s).abs();
                if j > 0 {
                    c += self.offdiag[j - 1].abs();
                }
                if j + 1 < m {
                    c += self.offdiag[j].abs();
                }
                c
            })
            .fold(0.0, f64::max)
    }
}

/// Assembles the flux-form operator for angular mode `n`.
pub fn assemble_mode_operator(grid: &RadialGrid, alpha: f64, n: usize) -> ModeOperator {
    assemble_with(grid, alpha, n, None)
}

/// Same as [`assemble_mode_operator`] but with an injected defect.
pub fn assemble_mode_operator_with_fault(grid: &RadialGrid, alpha: f64, n: usize, fault: Fault) -> ModeOperator {
    assemble_with(grid, alpha, n, Some(fault))
}

fn assemble_with(grid: &RadialGrid, alpha: f64, n: usize, fault: Option<Fault>) -> ModeOperator {
    let m = grid.len();
    let h2 = grid.h() * grid.h();
    // face coefficients f_{j+1/2}, j = 0..=M; the r=1 face doubles through the ghost
    let mut f: Vec<f64> = grid.faces().iter().map(|r| r.powf(alpha)).collect();
    f[0] = 0.0;
    f[m] = 2.0;
    let radial_diag = (0..m).map(|j| (f[j] + f[j + 1]) / h2).collect();
    let offdiag = (1..m).map(|j| -f[j] / h2).collect();
    let lower_sign = match fault {
        Some(Fault::FluxSignFlip) => -1.0,
        None => 1.0,
    };
    ModeOperator { n, alpha, radial_diag, offdiag, lower_sign }
}

/// Applies the mode operator to `v`.
pub fn apply_mode_operator(op: &ModeOperator, v: &[f64]) -> Result<Vec<f64>> {
    op.apply(v)
}

/// `-(0 - p_M) / (h/2)`: the one-sided `d_r` at `r = 1` under the ghost convention.
pub fn boundary_slope(h: f64, last: f64) -> f64 {
    -last / (0.5 * h)
}

/// Discrete `int_0^1 r^alpha p' q' dr` including the Dirichlet face.
pub fn radial_energy_form(grid: &RadialGrid, face_weights: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let m = grid.len();
    let h = grid.h();
    let mut acc = 0.0;
    for j in 0..m - 1 {
        acc += face_weights[j] * (p[j + 1] - p[j]) * (q[j + 1] - q[j]);
    }
    acc / h + 2.0 * p[m - 1] * q[m - 1] / h
}

/// Face differences `(p_{j+1} - p_j)/h` on faces `j+1/2`, `j = 1..=M`, the
/// last one using the Dirichlet ghost.
pub fn face_gradient(h: f64, p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut g: Vec<f64> = (0..m - 1).map(|j| (p[j + 1] - p[j]) / h).collect();
    g.push(boundary_slope(h, p[m - 1]));
    g
}

/// Centred differences at cell centres; mirror at `r = 0`, ghost at `r = 1`.
pub fn center_gradient(h: f64, p: &[f64]) -> Vec<f64> {
    let m = p.len();
    (0..m)
        .map(|j| {
            let lo = if j == 0 { p[0] } else { p[j - 1] };
            let hi = if j + 1 == m { -p[m - 1] } else { p[j + 1] };
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

/// Second differences at cell centres with the same boundary closures.
pub fn center_second_derivative(h: f64, p: &[f64]) -> Vec<f64> {
    let m = p.len();
    (0..m)
        .map(|j| {
            let lo = if j == 0 { p[0] } else { p[j - 1] };
            let hi = if j + 1 == m { -p[m - 1] } else { p[j + 1] };
            (hi - 2.0 * p[j] + lo) / (h * h)
        })
        .collect()
}

/// Flux divergence `d_r (r^alpha d_r p)` at centres (the negated radial operator).
pub fn flux_divergence(grid: &RadialGrid, alpha: f64, p: &[f64]) -> Vec<f64> {
    let m = grid.len();
    let h = grid.h();
    let faces = grid.faces();
    let mut flux = vec![0.0; m + 1];
    for j in 1..m {
        flux[j] = faces[j].powf(alpha) * (p[j] - p[j - 1]) / h;
    }
    flux[m] = boundary_slope(h, p[m - 1]);
    (0..m).map(|j| (flux[j + 1] - flux[j]) / h).collect()
}

/// Tensor grid of `P` uniform angles `theta_i = 2 pi i / P` and the radial centres.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderGrid {
    n_angles: usize,
    radial: RadialGrid,
}

impl CylinderGrid {
    pub fn new(n_angles: usize, radial: RadialGrid) -> Result<Self> {
        if n_angles < 4 {
            return Err(Error::InvalidParams(format!("need at least 4 angular samples, got {n_angles}")));
        }
        Ok(Self { n_angles, radial })
    }

    /// The default angular resolution `P = 4 max(N, 1)` for modes `0..=N`.
    pub fn for_modes(n_theta: usize, radial: RadialGrid) -> Self {
        Self { n_angles: 4 * n_theta.max(1), radial }
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn radial(&self) -> &RadialGrid {
        &self.radial
    }

    pub fn theta(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n_angles as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_angles as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dtheta() * self.radial.h()
    }
}

/// Real samples `u(theta_i, r_j)` on a [`CylinderGrid`], shape `(P, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Array2<f64>,
}

impl GridField {
    pub fn zeros(grid: &CylinderGrid) -> Self {
        Self { values: Array2::zeros((grid.n_angles(), grid.radial().len())) }
    }

    pub fn from_fn(grid: &CylinderGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let rs = grid.radial().centers();
        let values = Array2::from_shape_fn((grid.n_angles(), rs.len()), |(i, j)| f(grid.theta(i), rs[j]));
        Self { values }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    fn check_grid(&self, grid: &CylinderGrid) -> Result<()> {
        let (p, m) = self.shape();
        check_len(grid.n_angles(), p)?;
        check_len(grid.radial().len(), m)
    }

    /// Exact Fourier differentiation in `theta` along every radial column.
    pub fn theta_derivative(&self) -> GridField {
        let (p, m) = self.shape();
        let d = PeriodicDerivative::new(p);
        let mut out = Array2::zeros((p, m));
        let mut col = vec![0.0; p];
        for j in 0..m {
            col.iter_mut().zip(self.values.column(j)).for_each(|(c, v)| *c = *v);
            let dc = d.apply(&col);
            out.column_mut(j).iter_mut().zip(dc).for_each(|(o, v)| *o = v);
        }
        GridField { values: out }
    }
}

/// Fourier differentiation of uniform samples of a `2 pi`-periodic function.
/// The Nyquist mode of even-length inputs is dropped.
pub struct PeriodicDerivative {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl PeriodicDerivative {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        Self { len, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let p = self.len;
        assert_eq!(values.len(), p, "sample count does not match the planned length");
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (i, c) in buf.iter_mut().enumerate() {
            let k = if i < p / 2 {
                i as f64
            } else if i == p / 2 && p.is_multiple_of(2) {
                0.0
            } else {
                i as f64 - p as f64
            };
            *c *= Complex::new(0.0, k);
        }
        self.inv.process(&mut buf);
        buf.iter().map(|c| c.re / p as f64).collect()
    }
}

/// Discrete `L^2(Omega)` inner product `sum u v (2 pi / P) h`.
pub fn inner_l2(grid: &CylinderGrid, u: &GridField, v: &GridField) -> Result<f64> {
    u.check_grid(grid)?;
    v.check_grid(grid)?;
    let s: f64 = u.values.iter().zip(v.values.iter()).map(|(a, b)| a * b).sum();
    Ok(s * grid.cell_area())
}

/// Discrete `int grad u . A grad v` with spectral `theta` derivatives and
/// face-weighted radial differences.
pub fn inner_h1w(grid: &CylinderGrid, u: &GridField, v: &GridField, alpha: f64) -> Result<f64> {
    u.check_grid(grid)?;
    v.check_grid(grid)?;
    let ut = u.theta_derivative();
    let vt = v.theta_derivative();
    let angular: f64 = ut.values.iter().zip(vt.values.iter()).map(|(a, b)| a * b).sum::<f64>() * grid.cell_area();
    let rg = grid.radial();
    let w = rg.interior_face_weights(alpha);
    let mut radial = 0.0;
    for i in 0..grid.n_angles() {
        let p = u.values.row(i);
        let q = v.values.row(i);
        let (p, q) = (p.as_slice().unwrap(), q.as_slice().unwrap());
        radial += radial_energy_form(rg, &w, p, q);
    }
    Ok(angular + radial * grid.dtheta())
}

/// Per-angle `d_r u(theta_i, 1)` under the ghost convention.
pub fn boundary_derivative(grid: &CylinderGrid, u: &GridField) -> Result<Vec<f64>> {
    u.check_grid(grid)?;
    let m = grid.radial().len();
    let h = grid.radial().h();
    Ok((0..grid.n_angles()).map(|i| boundary_slope(h, u.values[[i, m - 1]])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_layout() {
        let g = build_radial_grid(4).unwrap();
        assert_eq!(g.centers(), &[0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.faces(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(build_radial_grid(3).is_err());
    }

    #[test]
    fn interior_rows_annihilate_constants() {
        let g = build_radial_grid(32).unwrap();
        for &alpha in &[1.0, 1.3, 1.9] {
            let op = assemble_mode_operator(&g, alpha, 0);
            let out = op.apply(&vec![1.0; 32]).unwrap();
            for v in &out[..31] {
                assert!(v.abs() < 1e-9, "{v}");
            }
            assert!(out[31] > 0.0);
        }
    }

    #[test]
    fn shift_by_n_squared() {
        let g = build_radial_grid(16).unwrap();
        let a = assemble_mode_operator(&g, 1.5, 0);
        let b = assemble_mode_operator(&g, 1.5, 3);
        for (x, y) in a.diag().iter().zip(b.diag()) {
            assert_abs_diff_eq!(y - x, 9.0, epsilon = 1e-9);
        }
        assert_eq!(a.offdiag(), b.offdiag());
        assert_eq!(a.radial_diag(), b.radial_diag());
    }

    #[test]
    fn stieltjes_structure() {
        let g = build_radial_grid(64).unwrap();
        let op = assemble_mode_operator(&g, 1.2, 2);
        assert!(op.offdiag().iter().all(|&e| e <= 0.0));
        // the first row has no coupling to r = 0
        assert_abs_diff_eq!(op.radial_diag()[0], g.faces()[1].powf(1.2) / (g.h() * g.h()), epsilon = 1e-9);
    }

    #[test]
    fn zero_vector_and_dimension_mismatch() {
        let g = build_radial_grid(8).unwrap();
        let op = assemble_mode_operator(&g, 1.0, 1);
        assert!(op.apply(&[0.0; 8]).unwrap().iter().all(|&x| x == 0.0));
        assert!(matches!(op.apply(&[0.0; 7]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn operator_is_symmetric_under_random_pairs() {
        let g = build_radial_grid(100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [0usize, 1, 8] {
            let op = assemble_mode_operator(&g, 1.7, n);
            for _ in 0..10 {
                let u: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
                let v: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
                let lu = op.apply(&u).unwrap();
                let lv = op.apply(&v).unwrap();
                let a: f64 = lu.iter().zip(&v).map(|(a, b)| a * b).sum();
                let b: f64 = u.iter().zip(&lv).map(|(a, b)| a * b).sum();
                let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((a - b).abs() <= 1e-12 * nu * nv * op.norm_l1());
            }
        }
    }

    #[test]
    fn fault_breaks_symmetry() {
        let g = build_radial_grid(8).unwrap();
        let op = assemble_mode_operator_with_fault(&g, 1.0, 0, Fault::FluxSignFlip);
        assert!(!op.is_symmetric());
        let e0: Vec<f64> = (0..8).map(|j| (j == 3) as u8 as f64).collect();
        let e1: Vec<f64> = (0..8).map(|j| (j == 4) as u8 as f64).collect();
        let a: f64 = op.apply(&e0).unwrap().iter().zip(&e1).map(|(a, b)| a * b).sum();
        let b: f64 = op.apply(&e1).unwrap().iter().zip(&e0).map(|(a, b)| a * b).sum();
        assert!((a - b).abs() > 1.0);
    }

    #[test]
    fn energy_form_matches_operator() {
        let g = build_radial_grid(40).unwrap();
        let op = assemble_mode_operator(&g, 1.4, 0);
        let w = g.interior_face_weights(1.4);
        let p: Vec<f64> = g.centers().iter().map(|r| (3.0 * r).cos() + r).collect();
        let q: Vec<f64> = g.centers().iter().map(|r| r * r - 0.2).collect();
        let lp = op.apply(&p).unwrap();
        let lhs: f64 = lp.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>() * g.h();
        assert_abs_diff_eq!(lhs, radial_energy_form(&g, &w, &p, &q), epsilon = 1e-9);
        let fd = flux_divergence(&g, 1.4, &p);
        for (a, b) in fd.iter().zip(&lp) {
            assert_abs_diff_eq!(*a, -b, epsilon = 1e-7);
        }
    }

    #[test]
    fn l2_inner_product_basics() {
        let grid = CylinderGrid::new(16, build_radial_grid(8).unwrap()).unwrap();
        let one = GridField::from_fn(&grid, |_, _| 1.0);
        assert_abs_diff_eq!(inner_l2(&grid, &one, &one).unwrap(), 2.0 * PI, epsilon = 1e-13);
        let s = GridField::from_fn(&grid, |t, _| t.sin());
        let c = GridField::from_fn(&grid, |t, _| t.cos());
        assert_abs_diff_eq!(inner_l2(&grid, &s, &c).unwrap(), 0.0, epsilon = 1e-15);
        assert!(inner_l2(&grid, &s, &s).unwrap() > 0.0);
        let other = CylinderGrid::new(8, build_radial_grid(8).unwrap()).unwrap();
        assert!(inner_l2(&grid, &GridField::zeros(&other), &s).is_err());
    }

    #[test]
    fn theta_derivative_is_exact_for_band_limited_fields() {
        let grid = CylinderGrid::new(32, build_radial_grid(4).unwrap()).unwrap();
        let u = GridField::from_fn(&grid, |t, r| (3.0 * t).sin() * r + (7.0 * t).cos());
        let du = u.theta_derivative();
        let exact = GridField::from_fn(&grid, |t, r| 3.0 * (3.0 * t).cos() * r - 7.0 * (7.0 * t).sin());
        for (a, b) in du.values.iter().zip(exact.values.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn h1_form_is_bilinear() {
        let grid = CylinderGrid::new(16, build_radial_grid(12).unwrap()).unwrap();
        let u = GridField::from_fn(&grid, |t, r| (1.0 - r) * (2.0 * t).sin());
        let w = GridField::from_fn(&grid, |t, r| (1.0 - r * r) * t.cos());
        let v = GridField::from_fn(&grid, |t, r| (1.0 - r).powi(2) * (1.0 + t.sin()));
        let comb = GridField { values: &u.values * 2.0 - &w.values * 3.0 };
        let lhs = inner_h1w(&grid, &comb, &v, 1.5).unwrap();
        let rhs = 2.0 * inner_h1w(&grid, &u, &v, 1.5).unwrap() - 3.0 * inner_h1w(&grid, &w, &v, 1.5).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * lhs.abs().max(1.0));
        assert_eq!(inner_h1w(&grid, &GridField::zeros(&grid), &GridField::zeros(&grid), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn boundary_derivative_of_linear_profile() {
        let grid = CylinderGrid::new(8, build_radial_grid(10).unwrap()).unwrap();
        let u = GridField::from_fn(&grid, |_, r| 1.0 - r);
        for d in boundary_derivative(&grid, &u).unwrap() {
            assert_abs_diff_eq!(d, -1.0, epsilon = 1e-12);
        }
        let z = boundary_derivative(&grid, &GridField::zeros(&grid)).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }
}
