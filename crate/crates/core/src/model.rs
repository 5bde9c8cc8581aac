//! Physical parameters, geometry, and the analytic profiles used by the
//! experiments: the weight `r^alpha`, the angular cut-off, the radial bump, and
//! the travelling quasimode `eta_eps(r) sin n(theta - t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discretization::{CylinderGrid, GridField};
use crate::error::{Error, Result};

/// Identifier of the radial bump profile, echoed in run metadata.
pub const CHI_PROFILE_ID: &str = "chi(x)=exp(-1/(x(2-x))) on (0,2)";
/// Identifier of the angular cut-off profile, echoed in run metadata.
pub const ZETA_PROFILE_ID: &str =
    "zeta(theta)=S((theta-2d0)/d0)*S((2pi-2d0-theta)/d0), S(x)=s(x)/(s(x)+s(1-x)), s(x)=exp(-1/x)";

/// Physical and discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub delta0: f64,
    /// Final time.
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Highest angular frequency retained.
    pub n_theta: usize,
    /// Radial cell count.
    pub n_r: usize,
    /// Time samples (even).
    pub n_t: usize,
    /// Radial eigenpairs kept per angular mode.
    pub k_max: usize,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            delta0: 0.02,
            t_final: 3.0,
            n_theta: 8,
            n_r: 256,
            n_t: 128,
            k_max: 8,
            seed: 20240601,
        }
    }
}

impl ModelParams {
    /// Returns the parameters unchanged if every invariant holds, otherwise the
    /// first violated one.
    pub fn validate(self) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.alpha >= 1.0 && self.alpha < 2.0) {
            return bad("alpha must lie in [1,2)");
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0 / 32.0) {
            return bad("delta0 must lie in (0,1/32)");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("T must be positive");
        }
        if self.n_r < 4 {
            return bad("n_r must be at least 4");
        }
        if self.n_t == 0 || !self.n_t.is_multiple_of(2) {
            return bad("n_t must be a positive even integer");
        }
        if self.k_max == 0 {
            return bad("k_max must be positive");
        }
        if self.k_max > self.n_r {
            return bad("k_max must not exceed n_r");
        }
        Ok(self)
    }

    /// Observability threshold time `sqrt(2) / (2 - alpha)`.
    pub fn threshold_time(&self) -> f64 {
        threshold_time(self.alpha)
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::new(self.delta0)
    }
}

/// Validates raw parameters.
pub fn validate_params(raw: ModelParams) -> Result<ModelParams> {
    raw.validate()
}

/// Minimal observation time for the mixed inequality.
pub fn threshold_time(alpha: f64) -> f64 {
    std::f64::consts::SQRT_2 / (2.0 - alpha)
}

/// The observation strip `I_omega x (0,1)` with `I_omega = [0,4d0) u (2pi-4d0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub delta0: f64,
}

impl Geometry {
    pub fn new(delta0: f64) -> Self {
        Self { delta0 }
    }

    /// The two component intervals of `I_omega` as closed `[a, b]` pairs.
    pub fn strip_intervals(&self) -> [(f64, f64); 2] {
        let w = 4.0 * self.delta0;
        [(0.0, w), (2.0 * PI - w, 2.0 * PI)]
    }

    pub fn strip_measure(&self) -> f64 {
        8.0 * self.delta0
    }

    /// Whether `theta` (reduced to `[0, 2pi)`) lies in `I_omega`.
    pub fn in_strip(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(2.0 * PI);
        t < 4.0 * self.delta0 || t > 2.0 * PI - 4.0 * self.delta0
    }

    /// Angular support of the cut-off derivative: `[2d0,3d0] u [2pi-3d0, 2pi-2d0]`.
    pub fn in_transition(&self, theta: f64) -> bool {
        let d = self.delta0;
        let t = theta.rem_euclid(2.0 * PI);
        (2.0 * d..=3.0 * d).contains(&t) || (2.0 * PI - 3.0 * d..=2.0 * PI - 2.0 * d).contains(&t)
    }
}

/// Travelling quasimode `eta_eps(r) sin n(theta - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeSpec {
    pub n: u32,
    pub eps: f64,
}

impl QuasimodeSpec {
    pub fn new(n: u32, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("quasimode frequency n must be >= 1".into()));
        }
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::InvalidParams("eps must lie in (0,1/4)".into()));
        }
        Ok(Self { n, eps })
    }
}

/// `r^alpha`.
pub fn weight(r: f64, alpha: f64) -> f64 {
    r.powf(alpha)
}

// exp(-1/x) vanishes below this in f64, and its derivative factors would overflow.
const FLAT_CUTOFF: f64 = 1.0 / 700.0;

/// `s(x) = exp(-1/x)` for `x > 0`, with first and second derivatives.
fn sigma(x: f64) -> (f64, f64, f64) {
    if x <= FLAT_CUTOFF {
        return (0.0, 0.0, 0.0);
    }
    let s = (-1.0 / x).exp();
    let x2 = x * x;
    (s, s / x2, s * (1.0 / (x2 * x2) - 2.0 / (x2 * x)))
}

/// Smoothstep `S(x) = s(x) / (s(x) + s(1-x))` and its first two derivatives.
pub fn smoothstep(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = sigma(x);
    let (b, b1m, b2m) = sigma(1.0 - x);
    // d/dx s(1-x) = -s'(1-x), d2/dx2 s(1-x) = s''(1-x)
    let (b1, b2) = (-b1m, b2m);
    let d = a + b;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    let d1 = a1 + b1;
    let s = a / d;
    let s1 = num / (d * d);
    let s2 = (num1 * d - 2.0 * num * d1) / (d * d * d);
    (s, s1, s2)
}

/// The angular cut-off with its first and second derivatives at `theta`.
///
/// Zero on `[0, 2d0] u [2pi-2d0, 2pi)`, one on `[3d0, 2pi-3d0]`.
pub fn cutoff_zeta_derivs(theta: f64, delta0: f64) -> (f64, f64, f64) {
    let x = (theta - 2.0 * delta0) / delta0;
    let y = (2.0 * PI - 2.0 * delta0 - theta) / delta0;
    let (sx, sx1, sx2) = smoothstep(x);
    let (sy, sy1, sy2) = smoothstep(y);
    let inv = 1.0 / delta0;
    let z = sx * sy;
    let z1 = inv * (sx1 * sy - sx * sy1);
    let z2 = inv * inv * (sx2 * sy - 2.0 * sx1 * sy1 + sx * sy2);
    (z, z1, z2)
}

/// The angular cut-off `zeta(theta)`.
pub fn cutoff_zeta(theta: f64, delta0: f64) -> f64 {
    cutoff_zeta_derivs(theta, delta0).0
}

/// `chi(x) = exp(-1/(x(2-x)))` on `(0,2)`, zero elsewhere, with two derivatives.
pub fn chi_derivs(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 || x >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = x * (2.0 - x);
    if q <= FLAT_CUTOFF {
        return (0.0, 0.0, 0.0);
    }
    let c = (-1.0 / q).exp();
    let q1 = 2.0 - 2.0 * x;
    let q2 = -2.0;
    let qq = q * q;
    let c1 = c * q1 / qq;
    let c2 = c * (q1 * q1 / (qq * qq) + q2 / qq - 2.0 * q1 * q1 / (qq * q));
    (c, c1, c2)
}

/// `eta_eps(r) = chi(r/eps)` with its first two radial derivatives.
pub fn bump_eta_derivs(r: f64, eps: f64) -> (f64, f64, f64) {
    let (c, c1, c2) = chi_derivs(r / eps);
    (c, c1 / eps, c2 / (eps * eps))
}

/// `eta_eps(r) = chi(r/eps)`, supported in `(0, 2 eps)`.
pub fn bump_eta(r: f64, eps: f64) -> f64 {
    bump_eta_derivs(r, eps).0
}

/// Samples `(u, du/dt)` of the quasimode at time `t` on the cylinder grid.
pub fn quasimode_field(spec: &QuasimodeSpec, t: f64, grid: &CylinderGrid) -> (GridField, GridField) {
    let n = spec.n as f64;
    let u = GridField::from_fn(grid, |theta, r| {
        bump_eta(r, spec.eps) * (n * (theta - t)).sin()
    });
    let ut = GridField::from_fn(grid, |theta, r| {
        -n * bump_eta(r, spec.eps) * (n * (theta - t)).cos()
    });
    (u, ut)
}

/// Radial profile `-d/dr (r^alpha eta_eps'(r))` of the quasimode forcing.
pub fn quasimode_forcing_profile(r: f64, eps: f64, alpha: f64) -> f64 {
    let (_, e1, e2) = bump_eta_derivs(r, eps);
    if e1 == 0.0 && e2 == 0.0 {
        return 0.0;
    }
    -(alpha * r.powf(alpha - 1.0) * e1 + r.powf(alpha) * e2)
}

/// Forcing `d_tt u - div(A grad u)` of the quasimode at time `t`, from the
/// analytic derivatives of the bump. Vanishes for `r >= 2 eps`.
pub fn quasimode_residual(spec: &QuasimodeSpec, t: f64, grid: &CylinderGrid, alpha: f64) -> GridField {
    let n = spec.n as f64;
    GridField::from_fn(grid, |theta, r| {
        quasimode_forcing_profile(r, spec.eps, alpha) * (n * (theta - t)).sin()
    })
}

/// Analytic `d_r u(theta, r, t)` of the quasimode.
pub fn quasimode_radial_derivative(spec: &QuasimodeSpec, theta: f64, r: f64, t: f64) -> f64 {
    bump_eta_derivs(r, spec.eps).1 * (spec.n as f64 * (theta - t)).sin()
}
