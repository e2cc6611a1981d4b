//! Approximate fixed point of the discrete operator and its certified residuals.

use crate::discretization::{IntervalSparseMatrix, SchemeKind};
use crate::error::{Error, Result};
use crate::interval::round::{add_up, div_up};
use crate::interval::Ival;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Solver knobs. Soundness never depends on them, only tightness does.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Relative floating residual `|q(u) - u|_inf / |u|_inf` to aim for.
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub max_power_steps: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-13,
            krylov_dim: 30,
            max_restarts: 60,
            max_power_steps: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxFixedPoint {
    pub u_tilde: Vec<f64>,
    /// Certified bound on `|Q_h u - u|` in the weak norm of the scheme.
    pub eps1: f64,
    /// Certified bound on `|i*(u) - 1|`.
    pub eps2: f64,
    /// Floating residual reached by the solver, for diagnostics.
    pub float_residual: f64,
    pub method: SolverMethod,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Arnoldi,
    Power,
}

/// Floating action of `Q_h`: `M v`, plus `e * i*(v - M v)` for hat functions.
/// Residual checks, 16 steps apart, without a 10% improvement before power
/// iteration gives up.
const POWER_PATIENCE: usize = 32;

fn q_apply(mat: &IntervalSparseMatrix, v: &[f64], out: &mut [f64]) {
    mat.mid_matvec(v, out);
    if mat.scheme() == SchemeKind::Hat {
        let n = v.len() as f64;
        let s: f64 = v.iter().zip(out.iter()).map(|(a, b)| a - b).sum::<f64>() / n;
        out.iter_mut().for_each(|o| *o += s);
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales so that the floating `i*(v) = mean(v)` is 1. False if impossible.
fn normalize(v: &mut [f64]) -> bool {
    let n = v.len() as f64;
    for _ in 0..3 {
        let m = v.iter().sum::<f64>() / n;
        if !m.is_finite() || m == 0.0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= m);
    }
    true
}

fn relative_residual(mat: &IntervalSparseMatrix, v: &[f64], scratch: &mut [f64]) -> f64 {
    q_apply(mat, v, scratch);
    let r = v.iter().zip(scratch.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    r / norm_inf(v).max(f64::MIN_POSITIVE)
}

/// One Arnoldi cycle started at `x`. Returns the Ritz vector for the Ritz
/// value closest to 1.
fn arnoldi_cycle(mat: &IntervalSparseMatrix, x: &[f64], dim: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let dim = dim.min(n).max(1);
    let beta = norm2(x);
    if beta == 0.0 || !beta.is_finite() {
        return None;
    }
    let mut basis: Vec<Vec<f64>> = vec![x.iter().map(|a| a / beta).collect()];
    let mut h = DMatrix::<f64>::zeros(dim + 1, dim);
    let mut w = vec![0.0; n];
    let mut m = dim;
    for j in 0..dim {
        q_apply(mat, &basis[j], &mut w);
        // Two passes of modified Gram-Schmidt keep the basis orthogonal.
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = dot(&w, b);
                h[(i, j)] += c;
                w.iter_mut().zip(b).for_each(|(a, bb)| *a -= c * bb);
            }
        }
        let nw = norm2(&w);
        h[(j + 1, j)] = nw;
        if nw <= 1e-14 * h.column(j).norm().max(1.0) {
            m = j + 1;
            break;
        }
        basis.push(w.iter().map(|a| a / nw).collect());
    }
    let hm = h.view((0, 0), (m, m)).into_owned();
    let ritz = hm.complex_eigenvalues();
    let lambda = ritz
        .iter()
        .min_by(|a, b| {
            let da = (a.re - 1.0).hypot(a.im);
            let db = (b.re - 1.0).hypot(b.im);
            da.total_cmp(&db)
        })?
        .re;
    let shifted = &hm - DMatrix::<f64>::identity(m, m) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    let y = vt.row(k);
    let mut out = vec![0.0; n];
    for (i, b) in basis.iter().take(m).enumerate() {
        let c = y[i];
        out.iter_mut().zip(b).for_each(|(o, bb)| *o += c * bb);
    }
    out.iter().all(|a| a.is_finite()).then_some(out)
}

/// Finds `u` with `Q_h u ≈ u`, `i*(u) ≈ 1` and certifies both residuals.
///
/// Deterministic: starts from the constant density and uses sequential
/// floating point only.
pub fn approximate_fixed_point(mat: &IntervalSparseMatrix, opts: &EigenOptions) -> Result<ApproxFixedPoint> {
    let n = mat.n();
    let mut scratch = vec![0.0; n];
    let mut x = vec![1.0; n];
    let mut best = x.clone();
    let mut best_res = relative_residual(mat, &x, &mut scratch);
    let mut method = SolverMethod::Arnoldi;
    let mut iterations = 0;
    let mut stalls = 0;
    while best_res > opts.tol && iterations < opts.max_restarts {
        iterations += 1;
        let Some(mut y) = arnoldi_cycle(mat, &x, opts.krylov_dim) else { break };
        if !normalize(&mut y) {
            break;
        }
        let r = relative_residual(mat, &y, &mut scratch);
        if r < best_res * 0.9 {
            stalls = 0;
        } else {
            stalls += 1;
        }
        if r < best_res {
            best_res = r;
            best = y.clone();
        }
        if stalls >= 3 {
            break;
        }
        x = y;
    }
    if best_res > opts.tol {
        // Arnoldi stagnated; plain power iteration on Q_h from the best iterate.
        let mut v = best.clone();
        let mut w = vec![0.0; n];
        let mut steps = 0;
        // Checks since the residual last dropped by 10%; rounding puts a
        // floor under it that may sit above the tolerance.
        let mut flat = 0;
        let mut last_drop = best_res;
        while steps < opts.max_power_steps && flat < POWER_PATIENCE {
            steps += 1;
            q_apply(mat, &v, &mut w);
            std::mem::swap(&mut v, &mut w);
            if !normalize(&mut v) {
                break;
            }
            if steps % 16 == 0 {
                let r = relative_residual(mat, &v, &mut scratch);
                if r < last_drop * 0.9 {
                    last_drop = r;
                    flat = 0;
                } else {
                    flat += 1;
                }
                if r < best_res {
                    best_res = r;
                    best.clone_from(&v);
                    method = SolverMethod::Power;
                }
                if r <= opts.tol {
                    break;
                }
            }
        }
        iterations += steps;
    }
    let (eps1, eps2) = residuals(mat, &best)?;
    Ok(ApproxFixedPoint {
        u_tilde: best,
        eps1,
        eps2,
        float_residual: best_res,
        method,
        iterations,
    })
}

/// Rigorous `(eps1, eps2)` for a candidate `u`: the product with the full
/// interval matrix, the integral correction in interval arithmetic, norms
/// rounded up.
pub fn residuals(mat: &IntervalSparseMatrix, u: &[f64]) -> Result<(f64, f64)> {
    let n = mat.n();
    if u.len() != n || u.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("candidate density must be finite with matching length".into()));
    }
    let h = Ival::ratio(1, n as i64);
    let lu = mat.enclose_matvec(u);
    let mut total = Ival::ZERO;
    for &x in u {
        total = total + x;
    }
    let mass = total * h;
    let eps2 = (mass - 1.0).mag();
    if eps2 >= 1.0 {
        return Err(Error::NormalizationFailure { eps2 });
    }
    let correction = match mat.scheme() {
        SchemeKind::Ulam => Ival::ZERO,
        SchemeKind::Hat => {
            let mut s = Ival::ZERO;
            for (&x, y) in u.iter().zip(&lu) {
                s = s + (Ival::point(x) - *y);
            }
            s * h
        }
    };
    let r = lu.iter().zip(u).map(|(y, &x)| (*y + correction - x).mag());
    let eps1 = match mat.scheme() {
        SchemeKind::Ulam => div_up(r.fold(0.0, add_up), n as f64),
        SchemeKind::Hat => r.fold(0.0, f64::max),
    };
    Ok((eps1, eps2))
}

/// Upper bound on `|u|` in the weak norm of the scheme.
pub fn weak_norm_up(u: &[f64], scheme: SchemeKind) -> f64 {
    match scheme {
        SchemeKind::Ulam => div_up(u.iter().map(|x| x.abs()).fold(0.0, add_up), u.len() as f64),
        SchemeKind::Hat => norm_inf(u),
    }
}

/// Sample points of the discrete density: cell midpoints for Ulam, nodes for hats.
pub fn sample_points(n: usize, scheme: SchemeKind) -> impl Iterator<Item = f64> {
    let shift = match scheme {
        SchemeKind::Ulam => 0.5,
        SchemeKind::Hat => 0.0,
    };
    (0..n).map(move |j| (j as f64 + shift) / n as f64)
}

/// Writes `x, value` rows.
pub fn write_density_csv(path: &Path, u: &[f64], scheme: SchemeKind) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    writeln!(w, "x, value").map_err(|e| Error::io(path, e))?;
    for (x, v) in sample_points(u.len(), scheme).zip(u) {
        writeln!(w, "{x:?}, {v:?}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
