//! Per-mode radial eigenproblems, the separated orthonormal basis
//! `Phi_b(theta, r) = Theta_b(theta) R_{n,k}(r)`, and modal transforms.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{assemble_mode_operator, boundary_slope, CylinderGrid, GridField, ModeOperator, RadialGrid};
use crate::error::{check_len, Error, Result};
use crate::model::ModelParams;
use crate::tridiag;

/// Eigenpairs of one angular mode.
///
/// `vectors[k]` is orthonormal in `sum_j R_j^2 h` and signed so that the value
/// in the first cell is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialEigenSystem {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub vectors: Arc<Vec<Vec<f64>>>,
    pub boundary_slopes: Vec<f64>,
}

impl RadialEigenSystem {
    /// The same radial vectors under the mode-`n` shift `+ n^2`.
    fn with_mode(base: &RadialEigenSystem, base_lambdas: &[f64], n: usize) -> Self {
        let s = (n * n) as f64;
        Self {
            n,
            lambdas: base_lambdas.iter().map(|l| l + s).collect(),
            vectors: Arc::clone(&base.vectors),
            boundary_slopes: base.boundary_slopes.clone(),
        }
    }

    pub fn k_max(&self) -> usize {
        self.lambdas.len()
    }
}

/// Solves for the `k_max` smallest eigenpairs of `op`.
///
/// Uses bisection with inverse iteration when `k_max <= M/8` and the full QL
/// sweep otherwise. The radial part is solved unshifted and `n^2` is added
/// afterwards, so different modes differ by exactly `n^2` up to rounding.
pub fn solve_mode_spectrum(op: &ModeOperator, grid: &RadialGrid, k_max: usize) -> Result<RadialEigenSystem> {
    let (system, _) = solve_radial(op, grid, k_max)?;
    Ok(system)
}

fn solve_radial(op: &ModeOperator, grid: &RadialGrid, k_max: usize) -> Result<(RadialEigenSystem, Vec<f64>)> {
    if !op.is_symmetric() {
        return Err(Error::Precondition("mode operator is not symmetric".into()));
    }
    let m = op.len();
    check_len(grid.len(), m)?;
    if k_max == 0 || k_max > m {
        return Err(Error::InvalidParams(format!("k_max must lie in 1..={m}, got {k_max}")));
    }
    let diag = op.radial_diag();
    let off = op.offdiag();
    let (values, mut vectors) = if k_max <= m / 8 {
        tridiag::lowest_eigenpairs_bisection(diag, off, k_max)?
    } else {
        let (v, mut z) = tridiag::full_eigensystem_ql(diag, off)?;
        z.truncate(k_max);
        (v[..k_max].to_vec(), z)
    };
    for w in values.windows(2) {
        if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::NonConvergence(format!(
                "radial spectrum not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    if values[0].partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NonConvergence(format!("ground eigenvalue {} is not positive", values[0])));
    }
    let scale = 1.0 / grid.h().sqrt();
    for v in vectors.iter_mut() {
        let sign = if v[0] < 0.0 { -scale } else { scale };
        v.iter_mut().for_each(|x| *x *= sign);
    }
    let boundary_slopes = vectors.iter().map(|v| boundary_slope(grid.h(), v[m - 1])).collect();
    let base = RadialEigenSystem { n: 0, lambdas: values.clone(), vectors: Arc::new(vectors), boundary_slopes };
    let shifted = RadialEigenSystem::with_mode(&base, &values, op.n());
    Ok((shifted, values))
}

/// Angular branch of a basis element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Cos,
    Sin,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Cos => "cos",
            Branch::Sin => "sin",
        }
    }
}

/// Angular component `(n, branch)`; `n = 0` only carries the cosine branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularComponent {
    pub n: usize,
    pub branch: Branch,
}

impl AngularComponent {
    /// Position in the component enumeration `(0,cos), (1,cos), (1,sin), ...`.
    pub fn index(&self) -> usize {
        match (self.n, self.branch) {
            (0, _) => 0,
            (n, Branch::Cos) => 2 * n - 1,
            (n, Branch::Sin) => 2 * n,
        }
    }

    pub fn from_index(m: usize) -> Self {
        if m == 0 {
            Self { n: 0, branch: Branch::Cos }
        } else if m % 2 == 1 {
            Self { n: m.div_ceil(2), branch: Branch::Cos }
        } else {
            Self { n: m / 2, branch: Branch::Sin }
        }
    }

    fn norm(&self) -> f64 {
        if self.n == 0 {
            1.0 / (2.0 * PI).sqrt()
        } else {
            1.0 / PI.sqrt()
        }
    }

    /// `Theta(theta)` with its first and second derivatives, normalised in `L^2(T)`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let c = self.norm();
        let n = self.n as f64;
        let (s, co) = (n * theta).sin_cos();
        match self.branch {
            Branch::Cos => (c * co, -c * n * s, -c * n * n * co),
            Branch::Sin => (c * s, c * n * co, -c * n * n * s),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }
}

/// One element `(branch, n, k)` of the separated basis; `k` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisElement {
    pub branch: Branch,
    pub n: usize,
    pub k: usize,
}

impl BasisElement {
    pub fn component(&self) -> AngularComponent {
        AngularComponent { n: self.n, branch: self.branch }
    }

    pub fn label(&self) -> String {
        format!("mode_{}_n{}_k{}", self.branch.as_str(), self.n, self.k)
    }
}

/// Coefficients on a [`SpectralBasis`], in basis enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalCoeffs(pub Vec<f64>);

impl ModalCoeffs {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut c = Self::zeros(len);
        c.0[index] = 1.0;
        c
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

impl Index<usize> for ModalCoeffs {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ModalCoeffs {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Truncated orthonormal basis over angular modes `0..=N` and `k_max` radial
/// eigenpairs per mode.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    alpha: f64,
    n_theta: usize,
    k_max: usize,
    grid: CylinderGrid,
    systems: Vec<RadialEigenSystem>,
    elements: Vec<BasisElement>,
    lambdas: Vec<f64>,
    // angular factors sampled on the grid, [component][i]
    angular: Vec<Vec<f64>>,
}

/// Builds the basis for `params` on the radial grid.
pub fn assemble_basis(params: &ModelParams, grid: &RadialGrid) -> Result<SpectralBasis> {
    SpectralBasis::new(params.alpha, params.n_theta, params.k_max, grid)
}

impl SpectralBasis {
    pub fn new(alpha: f64, n_theta: usize, k_max: usize, grid: &RadialGrid) -> Result<Self> {
        // L_n = L_0 + n^2 I: one radial solve serves every mode.
        let op = assemble_mode_operator(grid, alpha, 0);
        let (base, base_lambdas) = solve_radial(&op, grid, k_max)?;
        let systems: Vec<RadialEigenSystem> =
            (0..=n_theta).map(|n| RadialEigenSystem::with_mode(&base, &base_lambdas, n)).collect();
        let n_comp = 2 * n_theta + 1;
        let mut elements = Vec::with_capacity(n_comp * k_max);
        let mut lambdas = Vec::with_capacity(n_comp * k_max);
        for m in 0..n_comp {
            let c = AngularComponent::from_index(m);
            for k in 1..=k_max {
                elements.push(BasisElement { branch: c.branch, n: c.n, k });
                lambdas.push(systems[c.n].lambdas[k - 1]);
            }
        }
        let cyl = CylinderGrid::for_modes(n_theta, grid.clone());
        let angular = (0..n_comp)
            .map(|m| {
                let c = AngularComponent::from_index(m);
                (0..cyl.n_angles()).map(|i| c.value(cyl.theta(i))).collect()
            })
            .collect();
        Ok(Self { alpha, n_theta, k_max, grid: cyl, systems, elements, lambdas, angular })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    pub fn radial_grid(&self) -> &RadialGrid {
        self.grid.radial()
    }

    pub fn systems(&self) -> &[RadialEigenSystem] {
        &self.systems
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn element(&self, b: usize) -> BasisElement {
        self.elements[b]
    }

    pub fn lambda(&self, b: usize) -> f64 {
        self.lambdas[b]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n_components(&self) -> usize {
        2 * self.n_theta + 1
    }

    pub fn index_of(&self, e: BasisElement) -> Option<usize> {
        if e.n > self.n_theta || e.k == 0 || e.k > self.k_max || (e.n == 0 && e.branch == Branch::Sin) {
            return None;
        }
        Some(e.component().index() * self.k_max + e.k - 1)
    }

    /// Radial eigenvector `R_{n,k}` (0-based `k`).
    pub fn radial_vector(&self, n: usize, k: usize) -> &[f64] {
        &self.systems[n].vectors[k]
    }

    pub fn boundary_slope(&self, b: usize) -> f64 {
        let e = self.elements[b];
        self.systems[e.n].boundary_slopes[e.k - 1]
    }

    /// Radial profile `sum_k c_{m,k} R_{n(m),k}` of angular component `m`.
    pub fn profile(&self, c: &[f64], m: usize) -> Vec<f64> {
        let n = AngularComponent::from_index(m).n;
        let mut out = vec![0.0; self.grid.radial().len()];
        for k in 0..self.k_max {
            let a = c[m * self.k_max + k];
            if a != 0.0 {
                out.iter_mut().zip(&self.systems[n].vectors[k]).for_each(|(o, r)| *o += a * r);
            }
        }
        out
    }

    /// Boundary slope of the profile of component `m`.
    pub fn profile_slope(&self, c: &[f64], m: usize) -> f64 {
        let n = AngularComponent::from_index(m).n;
        (0..self.k_max).map(|k| c[m * self.k_max + k] * self.systems[n].boundary_slopes[k]).sum()
    }

    /// Whether any coefficient of component `m` is nonzero in any of `sets`.
    pub fn component_active(&self, sets: &[&[f64]], m: usize) -> bool {
        let r = m * self.k_max..(m + 1) * self.k_max;
        sets.iter().any(|c| c[r.clone()].iter().any(|&x| x != 0.0))
    }

    /// Cross-mode eigenvalue coincidences within `1e-9` (sin/cos pairs excluded).
    pub fn eigenvalue_collisions(&self) -> Vec<(BasisElement, BasisElement)> {
        let mut out = Vec::new();
        for n1 in 0..=self.n_theta {
            for n2 in n1 + 1..=self.n_theta {
                for (k1, l1) in self.systems[n1].lambdas.iter().enumerate() {
                    for (k2, l2) in self.systems[n2].lambdas.iter().enumerate() {
                        if (l1 - l2).abs() < 1e-9 {
                            out.push((
                                BasisElement { branch: Branch::Cos, n: n1, k: k1 + 1 },
                                BasisElement { branch: Branch::Cos, n: n2, k: k2 + 1 },
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    /// Coefficients `c_b = (u, Phi_b)` in the discrete `L^2(Omega)` product.
    pub fn to_modal(&self, u: &GridField) -> Result<ModalCoeffs> {
        let (p, m) = u.shape();
        check_len(self.grid.n_angles(), p)?;
        check_len(self.grid.radial().len(), m)?;
        let dtheta = self.grid.dtheta();
        let h = self.grid.radial().h();
        let mut out = ModalCoeffs::zeros(self.len());
        let mut col = vec![0.0; m];
        for comp in 0..self.n_components() {
            col.iter_mut().for_each(|x| *x = 0.0);
            for (i, a) in self.angular[comp].iter().enumerate() {
                let row = u.values.row(i);
                col.iter_mut().zip(row.iter()).for_each(|(c, v)| *c += a * v);
            }
            let n = AngularComponent::from_index(comp).n;
            for k in 0..self.k_max {
                let r = &self.systems[n].vectors[k];
                let s: f64 = col.iter().zip(r).map(|(a, b)| a * b).sum();
                out[comp * self.k_max + k] = s * dtheta * h;
            }
        }
        Ok(out)
    }

    /// Pointwise synthesis `sum_b c_b Phi_b` on the grid.
    pub fn from_modal(&self, c: &ModalCoeffs) -> Result<GridField> {
        check_len(self.len(), c.len())?;
        let mut u = GridField::zeros(&self.grid);
        for comp in 0..self.n_components() {
            if !self.component_active(&[c.as_slice()], comp) {
                continue;
            }
            let prof = self.profile(c.as_slice(), comp);
            for (i, a) in self.angular[comp].iter().enumerate() {
                let mut row = u.values.row_mut(i);
                row.iter_mut().zip(&prof).for_each(|(v, p)| *v += a * p);
            }
        }
        Ok(u)
    }

    /// `Phi_b` sampled on the grid.
    pub fn element_field(&self, b: usize) -> GridField {
        self.from_modal(&ModalCoeffs::unit(self.len(), b)).expect("unit coefficient has basis length")
    }
}

/// See [`SpectralBasis::to_modal`].
pub fn to_modal(u: &GridField, basis: &SpectralBasis) -> Result<ModalCoeffs> {
    basis.to_modal(u)
}

/// See [`SpectralBasis::from_modal`].
pub fn from_modal(c: &ModalCoeffs, basis: &SpectralBasis) -> Result<GridField> {
    basis.from_modal(c)
}
