//! Cut-off decomposition `phi = zeta phi + (1 - zeta) phi` and the discrete
//! multiplier audit with `H = (theta - pi, r)`.
//!
//! With `psi = sum_m Z_m(theta) p_m(r, t)` every space-time integral splits
//! into angular integrals of products of `Z_m` and its relatives, times
//! radial grid sums of the profiles. Angular integrals use the trapezoid rule
//! on a fine periodic grid resolving the cut-off transition; radial sums use
//! the operator's own face differences.

use std::f64::consts::PI;

use serde::Serialize;

use crate::discretization::{center_gradient, center_second_derivative, flux_divergence, radial_energy_form, GridField};
use crate::error::Result;
use crate::evolution::{ModalState, Trajectory};
use crate::model::{cutoff_zeta_derivs, ModelParams};
use crate::spectral::{AngularComponent, ModalCoeffs, SpectralBasis};

/// Denominator floor for relative residuals, so empty audits report 0.
pub const RESIDUAL_FLOOR: f64 = 1e-30;

/// `psi = zeta phi`, `xi = (1 - zeta) phi` and `g = -2 zeta' phi_theta - zeta'' phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffDecomposition {
    pub psi: GridField,
    pub xi: GridField,
    pub g: GridField,
}

/// Pointwise decomposition on the field's own uniform angular grid.
pub fn cutoff_decompose(phi: &GridField, params: &ModelParams) -> CutoffDecomposition {
    let (p, _) = phi.shape();
    let phi_t = phi.theta_derivative();
    let mut psi = phi.clone();
    let mut xi = phi.clone();
    let mut g = phi.clone();
    for i in 0..p {
        let theta = 2.0 * PI * i as f64 / p as f64;
        let (z, z1, z2) = cutoff_zeta_derivs(theta, params.delta0);
        psi.values.row_mut(i).iter_mut().for_each(|v| *v *= z);
        xi.values.row_mut(i).iter_mut().for_each(|v| *v *= 1.0 - z);
        g.values
            .row_mut(i)
            .iter_mut()
            .zip(phi_t.values.row(i))
            .for_each(|(v, d)| *v = -2.0 * z1 * d - z2 * *v);
    }
    CutoffDecomposition { psi, xi, g }
}

/// The multiplier identity evaluated three ways, plus the energy identity for `psi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierAudit {
    pub b1: f64,
    /// Green form: trace term plus volume term.
    pub b2: f64,
    pub b3: f64,
    /// `|b1 + b2 - b3| / max(|b1|, |b2|, |b3|, floor)`.
    pub residual_rel: f64,
    /// `-int div_h(A grad psi) (H . grad psi)` with the discrete operator.
    pub b2_strong: f64,
    pub strong_residual_rel: f64,
    /// Right side of the reduced identity: `[X]_0^T + int psi_t^2 - trace/2 - (alpha/2) int r^alpha psi_r^2`.
    pub reduced_rhs: f64,
    pub reduced_residual_rel: f64,
    pub energy_change: f64,
    pub forcing_work: f64,
    pub energy_residual_rel: f64,
    /// Largest `|zeta Theta_m|` on the bands `theta < 2 delta0` and `theta > 2 pi - 2 delta0`.
    pub psi_outside_chart: f64,
    /// Named parts: four of `b1` and three of `b2`.
    pub term_breakdown: Vec<(String, f64)>,
}

/// One integration identity: `lhs` should equal `reference`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub lhs: f64,
    pub reference: f64,
    /// Volume quantity the residual is measured against.
    pub scale: f64,
    /// `|lhs - reference| / max(scale, floor)`.
    pub residual: f64,
}

/// Angular samples of one component multiplied by the cut-off.
struct AngularParts {
    z: Vec<f64>,
    z1: Vec<f64>,
    z2: Vec<f64>,
    w: Vec<f64>,
    w1: Vec<f64>,
    g: Vec<f64>,
}

fn node_count(delta0: f64, n_max: usize) -> usize {
    let per_band = (128.0 * 2.0 * PI / delta0).ceil() as usize;
    per_band.max(64 * (n_max + 1)).max(1024).next_power_of_two()
}

impl AngularParts {
    fn new(c: AngularComponent, delta0: f64, q: usize) -> Self {
        let mut s = Self {
            z: Vec::with_capacity(q),
            z1: Vec::with_capacity(q),
            z2: Vec::with_capacity(q),
            w: Vec::with_capacity(q),
            w1: Vec::with_capacity(q),
            g: Vec::with_capacity(q),
        };
        for i in 0..q {
            let th = 2.0 * PI * i as f64 / q as f64;
            let (a, a1, a2) = c.eval(th);
            let (zt, zt1, zt2) = cutoff_zeta_derivs(th, delta0);
            let z = zt * a;
            let z1 = zt1 * a + zt * a1;
            let z2 = zt2 * a + 2.0 * zt1 * a1 + zt * a2;
            s.z.push(z);
            s.z1.push(z1);
            s.z2.push(z2);
            s.w.push((th - PI) * z1);
            s.w1.push(z1 + (th - PI) * z2);
            s.g.push(-2.0 * zt1 * a1 - zt2 * a);
        }
        s
    }
}

/// Angular integrals for an ordered component pair `(m, m')`.
#[derive(Default, Clone, Copy)]
struct PairAngular {
    zw: f64,
    zz: f64,
    gw: f64,
    gz: f64,
    z2w: f64,
    z2z: f64,
    d1w: f64,
    d1d1: f64,
    dzz: f64,
    dz1z1: f64,
}

fn pair_angular(a: &AngularParts, b: &AngularParts, dth: f64) -> PairAngular {
    let mut s = PairAngular::default();
    for i in 0..a.z.len() {
        s.zw += a.z[i] * b.w[i];
        s.zz += a.z[i] * b.z[i];
        s.gw += a.g[i] * b.w[i];
        s.gz += a.g[i] * b.z[i];
        s.z2w += a.z2[i] * b.w[i];
        s.z2z += a.z2[i] * b.z[i];
        s.d1w += a.z1[i] * b.w1[i];
        s.d1d1 += a.z1[i] * b.z1[i];
        s.dzz += a.z1[i] * b.z[i] + a.z[i] * b.z1[i];
        s.dz1z1 += a.z2[i] * b.z1[i] + a.z1[i] * b.z2[i];
    }
    PairAngular {
        zw: s.zw * dth,
        zz: s.zz * dth,
        gw: s.gw * dth,
        gz: s.gz * dth,
        z2w: s.z2w * dth,
        z2z: s.z2z * dth,
        d1w: s.d1w * dth,
        d1d1: s.d1d1 * dth,
        dzz: s.dzz * dth,
        dz1z1: s.dz1z1 * dth,
    }
}

/// Radial profiles of one component at one instant.
struct RadialParts {
    p: Vec<f64>,
    v: Vec<f64>,
    acc: Vec<f64>,
    // r d_r p and r d_r p_t at centres
    q: Vec<f64>,
    qv: Vec<f64>,
    div: Vec<f64>,
    // interior face differences of p and q
    dfp: Vec<f64>,
    dfq: Vec<f64>,
    // face averages of p, the last one from the Dirichlet ghost
    face: Vec<f64>,
    dc: Vec<f64>,
    d2: Vec<f64>,
    slope: f64,
}

struct RadialCtx<'a> {
    basis: &'a SpectralBasis,
    alpha: f64,
    h: f64,
    centers: &'a [f64],
    faces: &'a [f64],
    face_w: Vec<f64>,
    // (alpha+1) r^alpha and r^(alpha+1) at centres
    tr_a: Vec<f64>,
    tr_b: Vec<f64>,
}

impl<'a> RadialCtx<'a> {
    fn new(basis: &'a SpectralBasis) -> Self {
        let rg = basis.radial_grid();
        let alpha = basis.alpha();
        Self {
            basis,
            alpha,
            h: rg.h(),
            centers: rg.centers(),
            faces: rg.faces(),
            face_w: rg.interior_face_weights(alpha),
            tr_a: rg.centers().iter().map(|r| (alpha + 1.0) * r.powf(alpha)).collect(),
            tr_b: rg.centers().iter().map(|r| r.powf(alpha + 1.0)).collect(),
        }
    }

    fn parts(&self, s: &ModalState, acc: &ModalCoeffs, m: usize) -> RadialParts {
        let b = self.basis;
        let h = self.h;
        let p = b.profile(s.a.as_slice(), m);
        let v = b.profile(s.adot.as_slice(), m);
        let acc = b.profile(acc.as_slice(), m);
        let dc = center_gradient(h, &p);
        let q: Vec<f64> = dc.iter().zip(self.centers).map(|(d, r)| r * d).collect();
        let qv: Vec<f64> = center_gradient(h, &v).iter().zip(self.centers).map(|(d, r)| r * d).collect();
        let n = p.len();
        let dfp: Vec<f64> = (0..n - 1).map(|j| (p[j + 1] - p[j]) / h).collect();
        let dfq: Vec<f64> = (0..n - 1).map(|j| (q[j + 1] - q[j]) / h).collect();
        let mut face = Vec::with_capacity(n + 1);
        face.push(p[0]);
        face.extend((0..n - 1).map(|j| 0.5 * (p[j] + p[j + 1])));
        // the odd ghost cancels the last cell on the boundary face
        face.push(0.0);
        RadialParts {
            div: flux_divergence(b.radial_grid(), self.alpha, &p),
            d2: center_second_derivative(h, &p),
            slope: b.profile_slope(s.a.as_slice(), m),
            p,
            v,
            acc,
            q,
            qv,
            dfp,
            dfq,
            face,
            dc,
        }
    }
}

fn hdot(h: f64, a: &[f64], b: &[f64]) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Per-instant integrands, all already integrated in space.
#[derive(Default, Clone, Copy)]
struct Slice {
    b1: f64,
    b3: f64,
    b2_strong: f64,
    volume: f64,
    trace: f64,
    x: f64,
    transport: f64,
    velocity_sq: f64,
    weighted_grad: f64,
    energy: f64,
    g_psi_t: f64,
    psi_sq: f64,
    psi_theta_sq: f64,
    id_theta_psi: f64,
    id_r_psi: f64,
    id_theta_psi_theta: f64,
    id_r_psi_theta: f64,
    id_theta_weighted: f64,
    id_trace_flux: f64,
}

impl Slice {
    fn axpy(&mut self, w: f64, o: &Slice) {
        self.b1 += w * o.b1;
        self.b3 += w * o.b3;
        self.b2_strong += w * o.b2_strong;
        self.volume += w * o.volume;
        self.trace += w * o.trace;
        self.x += w * o.x;
        self.transport += w * o.transport;
        self.velocity_sq += w * o.velocity_sq;
        self.weighted_grad += w * o.weighted_grad;
        self.energy += w * o.energy;
        self.g_psi_t += w * o.g_psi_t;
        self.psi_sq += w * o.psi_sq;
        self.psi_theta_sq += w * o.psi_theta_sq;
        self.id_theta_psi += w * o.id_theta_psi;
        self.id_r_psi += w * o.id_r_psi;
        self.id_theta_psi_theta += w * o.id_theta_psi_theta;
        self.id_r_psi_theta += w * o.id_r_psi_theta;
        self.id_theta_weighted += w * o.id_theta_weighted;
        self.id_trace_flux += w * o.id_trace_flux;
    }
}

struct Accumulated {
    total: Slice,
    first: Slice,
    last: Slice,
    psi_outside_chart: f64,
}

fn accumulate(traj: &Trajectory, params: &ModelParams, basis: &SpectralBasis) -> Accumulated {
    let active: Vec<usize> = (0..basis.n_components())
        .filter(|&m| traj.states.iter().any(|s| basis.component_active(&[s.a.as_slice(), s.adot.as_slice()], m)))
        .collect();
    let n_max = active.iter().map(|&m| AngularComponent::from_index(m).n).max().unwrap_or(0);
    let q = node_count(params.delta0, n_max);
    let dth = 2.0 * PI / q as f64;
    let ang: Vec<AngularParts> =
        active.iter().map(|&m| AngularParts::new(AngularComponent::from_index(m), params.delta0, q)).collect();
    let pairs: Vec<Vec<PairAngular>> = ang.iter().map(|a| ang.iter().map(|b| pair_angular(a, b, dth)).collect()).collect();

    let mut psi_outside_chart = 0.0_f64;
    for a in &ang {
        for i in 0..q {
            let th = i as f64 * dth;
            if th < 2.0 * params.delta0 || th > 2.0 * PI - 2.0 * params.delta0 {
                psi_outside_chart = psi_outside_chart.max(a.z[i].abs());
            }
        }
    }

    let ctx = RadialCtx::new(basis);
    let h = ctx.h;
    let slice_at = |s: &ModalState| -> Slice {
        let acc = s.accel(basis, None);
        let rad: Vec<RadialParts> = active.iter().map(|&m| ctx.parts(s, &acc, m)).collect();
        let mut out = Slice::default();
        for (i, ri) in rad.iter().enumerate() {
            for (j, rj) in rad.iter().enumerate() {
                let a = pairs[i][j];
                let pp = hdot(h, &ri.p, &rj.p);
                let pq = hdot(h, &ri.p, &rj.q);
                let vv = hdot(h, &ri.v, &rj.v);
                let rf = radial_energy_form(basis.radial_grid(), &ctx.face_w, &ri.p, &rj.p);
                let fpp: f64 = h * ctx.face_w.iter().zip(ri.dfp.iter().zip(&rj.dfp)).map(|(f, (x, y))| f * x * y).sum::<f64>();
                let fpq: f64 = h * ctx.face_w.iter().zip(ri.dfp.iter().zip(&rj.dfq)).map(|(f, (x, y))| f * x * y).sum::<f64>();
                // sum_j [r P P']_{j-1/2}^{j+1/2}, literally telescoped
                let tel: f64 = (0..ri.p.len())
                    .map(|k| {
                        ctx.faces[k + 1] * ri.face[k + 1] * rj.face[k + 1] - ctx.faces[k] * ri.face[k] * rj.face[k]
                    })
                    .sum();
                let tr: f64 = h * (0..ri.p.len())
                    .map(|k| ctx.tr_a[k] * ri.dc[k] * rj.dc[k] + ctx.tr_b[k] * (ri.dc[k] * rj.d2[k] + ri.d2[k] * rj.dc[k]))
                    .sum::<f64>();

                out.b1 += a.zw * hdot(h, &ri.acc, &rj.p) + a.zz * hdot(h, &ri.acc, &rj.q);
                out.b3 += a.gw * pp + a.gz * pq;
                out.b2_strong -= a.z2w * pp + a.z2z * pq + a.zw * hdot(h, &ri.div, &rj.p) + a.zz * hdot(h, &ri.div, &rj.q);
                out.volume += a.d1w * pp + a.d1d1 * pq + a.zw * fpp + a.zz * fpq;
                out.trace += a.zz * ri.slope * rj.slope;
                out.x += a.zw * hdot(h, &ri.v, &rj.p) + a.zz * hdot(h, &ri.v, &rj.q);
                out.transport -= a.zw * vv + a.zz * hdot(h, &ri.v, &rj.qv);
                out.velocity_sq += a.zz * vv;
                out.weighted_grad += a.zz * rf;
                out.energy += 0.5 * (a.zz * (vv + rf) + a.d1d1 * pp);
                out.g_psi_t += a.gz * hdot(h, &ri.p, &rj.v);
                out.psi_sq += a.zz * pp;
                out.psi_theta_sq += a.d1d1 * pp;
                out.id_theta_psi += a.dzz * pp;
                out.id_r_psi += a.zz * tel;
                out.id_theta_psi_theta += a.dz1z1 * pp;
                out.id_r_psi_theta += a.d1d1 * tel;
                out.id_theta_weighted += a.dzz * rf;
                out.id_trace_flux += a.zz * tr;
            }
        }
        out
    };

    let slices: Vec<Slice> = traj.states.iter().map(slice_at).collect();
    let mut total = Slice::default();
    for (s, w) in slices.iter().zip(traj.time_weights()) {
        total.axpy(w, s);
    }
    Accumulated { total, first: slices[0], last: slices[slices.len() - 1], psi_outside_chart }
}

fn rel(diff: f64, scales: &[f64]) -> f64 {
    diff.abs() / scales.iter().fold(RESIDUAL_FLOOR, |a, s| a.max(s.abs()))
}

/// Multiplier audit of a free trajectory of `phi`.
pub fn multiplier_audit(traj: &Trajectory, params: &ModelParams, basis: &SpectralBasis) -> Result<MultiplierAudit> {
    let acc = accumulate(traj, params, basis);
    let t = acc.total;
    let b1 = t.b1;
    let b2 = -t.trace + t.volume;
    let b3 = t.b3;
    let reduced_trace = -0.5 * t.trace;
    let reduced_weighted = -0.5 * params.alpha * t.weighted_grad;
    let reduced_rhs = acc.last.x - acc.first.x + t.velocity_sq + reduced_trace + reduced_weighted;
    let energy_change = acc.last.energy - acc.first.energy;
    Ok(MultiplierAudit {
        b1,
        b2,
        b3,
        residual_rel: rel(b1 + b2 - b3, &[b1, b2, b3]),
        b2_strong: t.b2_strong,
        strong_residual_rel: rel(b1 + t.b2_strong - b3, &[b1, t.b2_strong, b3]),
        reduced_rhs,
        reduced_residual_rel: rel(b1 + b2 - reduced_rhs, &[b1, b2, reduced_rhs]),
        energy_change,
        forcing_work: t.g_psi_t,
        energy_residual_rel: rel(energy_change - t.g_psi_t, &[acc.first.energy, acc.last.energy]),
        psi_outside_chart: acc.psi_outside_chart,
        term_breakdown: vec![
            ("b1_x_final".into(), acc.last.x),
            ("b1_x_initial".into(), acc.first.x),
            ("b1_transport".into(), t.transport),
            ("b1_velocity_square".into(), t.velocity_sq),
            ("b2_trace".into(), -t.trace),
            ("b2_volume".into(), t.volume),
            ("b2_reduced".into(), reduced_trace + reduced_weighted),
        ],
    })
}

/// The six integration identities for `psi = zeta phi`: five vanishing
/// integrals of exact derivatives, then the weighted radial flux against the
/// boundary observation of `psi`.
pub fn integration_identity_audit(
    traj: &Trajectory,
    params: &ModelParams,
    basis: &SpectralBasis,
) -> Result<Vec<IdentityResidual>> {
    let t = accumulate(traj, params, basis).total;
    let row = |name, lhs: f64, reference: f64, scale: f64| IdentityResidual {
        name,
        lhs,
        reference,
        scale,
        residual: rel(lhs - reference, &[scale]),
    };
    Ok(vec![
        row("theta_derivative_psi_sq", t.id_theta_psi, 0.0, t.psi_sq),
        row("radial_derivative_r_psi_sq", t.id_r_psi, 0.0, t.psi_sq),
        row("theta_derivative_psi_theta_sq", t.id_theta_psi_theta, 0.0, t.psi_theta_sq),
        row("radial_derivative_r_psi_theta_sq", t.id_r_psi_theta, 0.0, t.psi_theta_sq),
        row("theta_derivative_weighted_psi_r_sq", t.id_theta_weighted, 0.0, t.weighted_grad),
        row("radial_derivative_weighted_trace_flux", t.id_trace_flux, t.trace, t.trace),
    ])
}
