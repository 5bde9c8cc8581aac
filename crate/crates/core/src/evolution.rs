//! Exact modal time propagation of the decoupled oscillators
//! `a_b'' + lambda_b a_b = f_b`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::discretization::GridField;
use crate::error::{check_len, Error, Result};
use crate::quadrature::simpson_weights;
use crate::spectral::{ModalCoeffs, SpectralBasis};

/// Position and velocity coefficients at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi0: ModalCoeffs,
    pub phi1: ModalCoeffs,
}

impl InitialData {
    pub fn new(phi0: ModalCoeffs, phi1: ModalCoeffs) -> Result<Self> {
        check_len(phi0.len(), phi1.len())?;
        Ok(Self { phi0, phi1 })
    }

    pub fn zeros(len: usize) -> Self {
        Self { phi0: ModalCoeffs::zeros(len), phi1: ModalCoeffs::zeros(len) }
    }

    /// `(Phi_b, 0)`.
    pub fn mode(len: usize, b: usize) -> Self {
        Self { phi0: ModalCoeffs::unit(len, b), phi1: ModalCoeffs::zeros(len) }
    }

    /// Projects sampled `(u, u_t)` onto the basis.
    pub fn from_fields(u: &GridField, ut: &GridField, basis: &SpectralBasis) -> Result<Self> {
        Ok(Self { phi0: basis.to_modal(u)?, phi1: basis.to_modal(ut)? })
    }

    pub fn len(&self) -> usize {
        self.phi0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.phi0.0.iter().chain(&self.phi1.0).all(|&x| x == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { phi0: self.phi0.scaled(s), phi1: self.phi1.scaled(s) }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self { phi0: self.phi0.plus(&other.phi0), phi1: self.phi1.plus(&other.phi1) }
    }

    /// `||phi0||^2_{H^1_w} + ||phi1||^2_{L^2}` by modal Parseval.
    pub fn norm_sq(&self, basis: &SpectralBasis) -> f64 {
        self.phi0.0.iter().zip(&self.phi1.0).zip(basis.lambdas()).map(|((a, v), l)| l * a * a + v * v).sum()
    }
}

/// Modal solution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub t: f64,
    pub a: ModalCoeffs,
    pub adot: ModalCoeffs,
}

impl ModalState {
    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.adot.is_finite()
    }

    /// Second time derivative `-lambda_b a_b + f_b(t)`.
    pub fn accel(&self, basis: &SpectralBasis, forcing: Option<&ModalForcing>) -> ModalCoeffs {
        let mut out = ModalCoeffs(self.a.0.iter().zip(basis.lambdas()).map(|(a, l)| -l * a).collect());
        if let Some(f) = forcing {
            let fv = f.eval(self.t);
            out.0.iter_mut().zip(&fv.0).for_each(|(o, f)| *o += f);
        }
        out
    }
}

type ForcingFn = Arc<dyn Fn(f64) -> ModalCoeffs + Send + Sync>;

/// Modal right-hand side `f_b(t)`.
#[derive(Clone)]
pub enum ModalForcing {
    /// `f_b(t) = cos_b cos(nu t) + sin_b sin(nu t)`, integrated in closed form.
    Harmonic { nu: f64, cos: ModalCoeffs, sin: ModalCoeffs },
    /// Arbitrary forcing, Duhamel integral by composite Simpson on `n_t` subintervals.
    General { f: ForcingFn, n_t: usize },
}

impl fmt::Debug for ModalForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModalForcing::Harmonic { nu, cos, sin } => {
                f.debug_struct("Harmonic").field("nu", nu).field("cos", cos).field("sin", sin).finish()
            }
            ModalForcing::General { n_t, .. } => f.debug_struct("General").field("n_t", n_t).finish_non_exhaustive(),
        }
    }
}

impl ModalForcing {
    pub fn harmonic(nu: f64, cos: ModalCoeffs, sin: ModalCoeffs) -> Result<Self> {
        check_len(cos.len(), sin.len())?;
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParams(format!("forcing frequency must be finite and >= 0, got {nu}")));
        }
        Ok(Self::Harmonic { nu, cos, sin })
    }

    pub fn general(n_t: usize, f: impl Fn(f64) -> ModalCoeffs + Send + Sync + 'static) -> Result<Self> {
        if n_t < 2 || !n_t.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("n_t must be even and positive, got {n_t}")));
        }
        Ok(Self::General { f: Arc::new(f), n_t })
    }

    pub fn eval(&self, t: f64) -> ModalCoeffs {
        match self {
            ModalForcing::Harmonic { nu, cos, sin } => {
                let (s, c) = (nu * t).sin_cos();
                ModalCoeffs(cos.0.iter().zip(&sin.0).map(|(a, b)| a * c + b * s).collect())
            }
            ModalForcing::General { f, .. } => f(t),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Duhamel response `x(t) = (1/w) int_0^t sin(w(t-s)) g(s) ds` and `x'(t)` for
/// `g = cos(nu s)` and `g = sin(nu s)`. Written with `sigma = (w+nu)/2` and
/// `delta = (w-nu)/2` so the resonant limit `w -> nu` needs no special case.
fn harmonic_response(omega: f64, nu: f64, t: f64) -> ((f64, f64), (f64, f64)) {
    let sigma = 0.5 * (omega + nu);
    let delta = 0.5 * (omega - nu);
    let sd = t * sinc(delta * t);
    let (ss, cs) = (sigma * t).sin_cos();
    let sw = (omega * t).sin();
    let xc = ss * sd / (2.0 * sigma);
    let xc_dot = (sw + nu * cs * sd) / (2.0 * sigma);
    let xs = (sw / omega - cs * sd) / (2.0 * sigma);
    let xs_dot = nu * xc;
    ((xc, xc_dot), (xs, xs_dot))
}

fn check_basis(init: &InitialData, basis: &SpectralBasis) -> Result<()> {
    check_len(basis.len(), init.phi0.len())?;
    check_len(basis.len(), init.phi1.len())
}

/// Free evolution to time `t`, exact in time.
pub fn propagate_homogeneous(init: &InitialData, basis: &SpectralBasis, t: f64) -> Result<ModalState> {
    check_basis(init, basis)?;
    let n = basis.len();
    let mut a = Vec::with_capacity(n);
    let mut adot = Vec::with_capacity(n);
    for b in 0..n {
        let w = basis.lambda(b).sqrt();
        let (s, c) = (w * t).sin_cos();
        let (p, v) = (init.phi0[b], init.phi1[b]);
        a.push(p * c + v * s / w);
        adot.push(-p * w * s + v * c);
    }
    Ok(ModalState { t, a: ModalCoeffs(a), adot: ModalCoeffs(adot) })
}

/// Forced evolution to time `t`: the free part plus the Duhamel integral.
pub fn propagate_forced(
    init: &InitialData,
    forcing: &ModalForcing,
    basis: &SpectralBasis,
    t: f64,
) -> Result<ModalState> {
    let mut st = propagate_homogeneous(init, basis, t)?;
    match forcing {
        ModalForcing::Harmonic { nu, cos, sin } => {
            check_len(basis.len(), cos.len())?;
            for b in 0..basis.len() {
                if cos[b] == 0.0 && sin[b] == 0.0 {
                    continue;
                }
                let w = basis.lambda(b).sqrt();
                let ((xc, xcd), (xs, xsd)) = harmonic_response(w, *nu, t);
                st.a[b] += cos[b] * xc + sin[b] * xs;
                st.adot[b] += cos[b] * xcd + sin[b] * xsd;
            }
        }
        ModalForcing::General { f, n_t } => {
            if t > 0.0 {
                let w = simpson_weights(*n_t, t);
                let ds = t / *n_t as f64;
                let samples: Vec<ModalCoeffs> = (0..=*n_t).map(|i| f(i as f64 * ds)).collect();
                for s in &samples {
                    check_len(basis.len(), s.len())?;
                }
                for b in 0..basis.len() {
                    let om = basis.lambda(b).sqrt();
                    let (mut x, mut xd) = (0.0, 0.0);
                    for (i, (fs, wi)) in samples.iter().zip(&w).enumerate() {
                        let (sn, cs) = (om * (t - i as f64 * ds)).sin_cos();
                        x += wi * sn * fs[b];
                        xd += wi * cs * fs[b];
                    }
                    st.a[b] += x / om;
                    st.adot[b] += xd;
                }
            }
        }
    }
    Ok(st)
}

/// `E = 1/2 sum_b (adot_b^2 + lambda_b a_b^2)`.
pub fn energy(state: &ModalState, basis: &SpectralBasis) -> f64 {
    0.5 * state.a.0.iter().zip(&state.adot.0).zip(basis.lambdas()).map(|((a, v), l)| v * v + l * a * a).sum::<f64>()
}

/// States at `t_m = m T / n_t`, `m = 0..=n_t`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_final: f64,
    pub states: Vec<ModalState>,
}

impl Trajectory {
    pub fn n_t(&self) -> usize {
        self.states.len() - 1
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    /// Simpson weights matching the samples.
    pub fn time_weights(&self) -> Vec<f64> {
        simpson_weights(self.n_t(), self.t_final)
    }

    /// Simpson integral of `g(state)` over `[0, T]`.
    pub fn integrate(&self, g: impl Fn(&ModalState) -> f64) -> f64 {
        self.states.iter().zip(self.time_weights()).map(|(s, w)| w * g(s)).sum()
    }

    pub fn first(&self) -> &ModalState {
        &self.states[0]
    }

    pub fn last(&self) -> &ModalState {
        &self.states[self.states.len() - 1]
    }
}

/// Samples the (optionally forced) solution uniformly on `[0, t_final]`.
pub fn sample_trajectory(
    init: &InitialData,
    forcing: Option<&ModalForcing>,
    basis: &SpectralBasis,
    t_final: f64,
    n_t: usize,
) -> Result<Trajectory> {
    if n_t < 16 || !n_t.is_multiple_of(2) {
        return Err(Error::Precondition(format!("trajectory needs even n_t >= 16, got {n_t}")));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Precondition(format!("final time must be positive, got {t_final}")));
    }
    check_basis(init, basis)?;
    let states = (0..=n_t)
        .into_par_iter()
        .map(|m| {
            let t = t_final * m as f64 / n_t as f64;
            match forcing {
                None => propagate_homogeneous(init, basis, t),
                Some(f) => propagate_forced(init, f, basis, t),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { t_final, states })
}

/// `int_0^T sum_b f_b(s) adot_b(s) ds` by Simpson on the trajectory samples.
pub fn forcing_work(traj: &Trajectory, forcing: &ModalForcing) -> f64 {
    traj.integrate(|s| forcing.eval(s.t).0.iter().zip(&s.adot.0).map(|(f, v)| f * v).sum())
}
