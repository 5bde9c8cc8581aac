//! Symmetric tridiagonal eigensolvers: Sturm bisection with inverse iteration
//! for a few low eigenpairs, implicit-shift QL for the full spectrum.

use crate::error::{Error, Result};

const MAX_BISECTION_STEPS: usize = 400;
const MAX_INVERSE_STEPS: usize = 12;

/// Number of eigenvalues strictly below `x` (Sturm sequence via LDL^T pivots).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.sqrt() * gershgorin_radius(diag, off).max(1.0);
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin_radius(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut r = diag[i].abs();
            if i > 0 {
                r += off[i - 1].abs();
            }
            if i + 1 < n {
                r += off[i].abs();
            }
            r
        })
        .fold(0.0, f64::max)
}

fn gershgorin_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i + 1 < n {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    (lo - pad, hi + pad)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection.
pub fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> Result<f64> {
    let (mut lo, mut hi) = gershgorin_bounds(diag, off);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(mid);
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence(format!("bisection for eigenvalue {k} exceeded {MAX_BISECTION_STEPS} steps")))
}

/// Solves `(T - mu I) x = b` by Gaussian elimination with partial pivoting.
fn shifted_solve(diag: &[f64], off: &[f64], mu: f64, b: &mut [f64], tiny: f64) {
    let n = diag.len();
    // rows hold (sub, main, sup, sup2) after pivoting
    let mut main: Vec<f64> = diag.iter().map(|d| d - mu).collect();
    let mut sup: Vec<f64> = off.to_vec();
    sup.push(0.0);
    let mut sup2 = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    let mut mult = vec![0.0; n];
    for i in 0..n - 1 {
        if sub[i].abs() > main[i].abs() {
            // swap rows i and i+1
            let (a, b_, c) = (main[i], sup[i], sup2[i]);
            main[i] = sub[i];
            sup[i] = main[i + 1];
            sup2[i] = sup[i + 1];
            let m = a / main[i];
            mult[i] = m;
            main[i + 1] = b_ - m * sup[i];
            sup[i + 1] = c - m * sup2[i];
            b.swap(i, i + 1);
        } else {
            if main[i] == 0.0 {
                main[i] = tiny;
            }
            let m = sub[i] / main[i];
            mult[i] = m;
            main[i + 1] -= m * sup[i];
        }
        sub[i] = 0.0;
        let m = mult[i];
        b[i + 1] -= m * b[i];
    }
    if main[n - 1] == 0.0 {
        main[n - 1] = tiny;
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= sup[i] * b[i + 1];
        }
        if i + 2 < n {
            acc -= sup2[i] * b[i + 2];
        }
        b[i] = acc / main[i];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Eigenvector for the eigenvalue `mu` by inverse iteration, Euclidean-unit,
/// reorthogonalised against `previous` (assumed orthonormal).
pub fn inverse_iteration(diag: &[f64], off: &[f64], mu: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = diag.len();
    let norm = gershgorin_radius(diag, off).max(1.0);
    let tiny = f64::EPSILON * norm;
    let mut x: Vec<f64> = (0..n).map(|j| 1.0 + 0.37 * ((j as f64) * 1.618).sin()).collect();
    normalize(&mut x);
    let tol = 64.0 * f64::EPSILON * norm * (n as f64).sqrt();
    for step in 0..MAX_INVERSE_STEPS {
        shifted_solve(diag, off, mu, &mut x, tiny);
        for _ in 0..2 {
            for p in previous {
                let c = dot(&x, p);
                x.iter_mut().zip(p).for_each(|(a, b)| *a -= c * b);
            }
        }
        if normalize(&mut x) == 0.0 {
            return Err(Error::NonConvergence("inverse iteration collapsed to zero".into()));
        }
        if step >= 1 {
            let r = residual_norm(diag, off, mu, &x);
            if r <= tol {
                return Ok(x);
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "inverse iteration for eigenvalue {mu} exceeded {MAX_INVERSE_STEPS} steps"
    )))
}

fn residual_norm(diag: &[f64], off: &[f64], mu: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - mu) * x[i];
        if i > 0 {
            r += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            r += off[i] * x[i + 1];
        }
        s += r * r;
    }
    s.sqrt()
}

/// The `count` smallest eigenpairs by bisection plus inverse iteration.
pub fn lowest_eigenpairs_bisection(diag: &[f64], off: &[f64], count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut values = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let mu = bisect_eigenvalue(diag, off, k)?;
        let v = inverse_iteration(diag, off, mu, &vectors)?;
        values.push(mu);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Full spectrum by implicit-shift QL; returns eigenvalues ascending with
/// Euclidean-unit eigenvectors.
pub fn full_eigensystem_ql(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    // z[k][i]: component i of eigenvector k
    let mut z: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|i| (i == k) as u8 as f64).collect()).collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence(format!("QL iteration for index {l} exceeded 60 sweeps")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (zi, zi1) = {
                    let (a, b2) = z.split_at_mut(i + 1);
                    (&mut a[i], &mut b2[0])
                };
                for k in 0..n {
                    let t = zi1[k];
                    zi1[k] = s * zi[k] + c * t;
                    zi[k] = c * zi[k] - s * t;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order.into_iter().map(|k| std::mem::take(&mut z[k])).collect();
    Ok((values, vectors))
}
