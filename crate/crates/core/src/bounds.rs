//! Bound arithmetic: a-priori power bounds, submultiplicativity, transfer of
//! coarse contraction to a finer grid, and the final error estimate.
//!
//! Everything here rounds up. Grids are given by their number of cells, so
//! `h = 1/n` never has to be rounded before it is used.

use crate::discretization::SchemeConstants;
use crate::dynamics::LyCoefficients;
use crate::error::{Error, Result};
use crate::interval::round::{add_up, div_up, mul_up, sub_down};
use crate::norms::{BoundSource, NormBounds};
use serde::{Deserialize, Serialize};

/// `R1[k]` bounds the strong norm and `R2[k]` the weak norm of `Q_h^k f`
/// for `|f| = 1` in the discrete space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RkhTable {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

fn h_up(n: usize) -> f64 {
    div_up(1.0, n as f64)
}

/// `h^-alpha` rounded up, exact for the schemes here (`alpha = 1`).
fn inv_h_pow(n: usize, alpha: f64) -> f64 {
    if alpha == 1.0 {
        n as f64
    } else {
        // Upward nudge of a libm power; two ulps cover its error.
        (n as f64).powf(alpha).next_up().next_up()
    }
}

/// Componentwise powers of `[1 0; E h 1] [A B; 0 1]` applied to `[M/h^alpha; 1]`.
pub fn rkh(ly: &LyCoefficients, sc: &SchemeConstants, n: usize, k_max: usize) -> RkhTable {
    let (a, b) = (ly.a.hi(), ly.b.hi());
    let eh = mul_up(sc.e, h_up(n));
    let mut r1 = vec![mul_up(sc.m, inv_h_pow(n, sc.alpha))];
    let mut r2 = vec![1.0];
    for k in 0..k_max {
        let s = add_up(mul_up(a, r1[k]), mul_up(b, r2[k]));
        let t = add_up(mul_up(eh, s), r2[k]);
        r1.push(s);
        r2.push(t);
    }
    RkhTable { r1, r2 }
}

/// Per-`k` minimum of `|Q_h|^k` and `S1 R1 + S2 R2`, with the winning source.
pub fn apriori_norm_bounds(
    ly: &LyCoefficients,
    sc: &SchemeConstants,
    norm_q: f64,
    n: usize,
    k_max: usize,
) -> (Vec<f64>, Vec<BoundSource>) {
    let r = rkh(ly, sc, n, k_max);
    let mut pw = 1.0;
    let mut c = Vec::with_capacity(k_max + 1);
    let mut src = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            pw = mul_up(pw, norm_q);
        }
        let ly_bound = add_up(mul_up(sc.s1, r.r1[k]), mul_up(sc.s2, r.r2[k]));
        if ly_bound < pw {
            c.push(ly_bound);
            src.push(BoundSource::AprioriLy);
        } else {
            c.push(pw);
            src.push(BoundSource::AprioriPower);
        }
    }
    (c, src)
}

/// `C[k] <- min(C[k], min_{0<i<k} C[i] C[k-i])`, in increasing `k`, which
/// reaches the fixed point in one sweep. Returns the indices that improved.
pub fn refine_submultiplicative(c: &mut [f64]) -> Vec<usize> {
    let mut improved = Vec::new();
    for k in 2..c.len() {
        let best = (1..k).map(|i| mul_up(c[i], c[k - i])).fold(f64::INFINITY, f64::min);
        if best < c[k] {
            c[k] = best;
            improved.push(k);
        }
    }
    improved
}

/// Extends `c` to length `len` by submultiplicativity.
pub fn extend_submultiplicative(c: &[f64], len: usize) -> Vec<f64> {
    let mut out = c.to_vec();
    for k in c.len()..len {
        let best = (1..k).map(|i| mul_up(out[i], out[k - i])).fold(f64::INFINITY, f64::min);
        out.push(best);
    }
    out.truncate(len.max(c.len()));
    out
}

/// Norm bounds on the `n_fine` grid from those on the `n_coarse` grid:
/// `C_m + 2 K h sum_{k<m} C_{m-1-k} (|Q_F| R1[k] + R1[k+1])`, with `h` the
/// coarse mesh and `R` taken on the fine grid. `c_coarse` must already hold
/// `k_max + 1` entries.
pub fn coarse_to_fine(
    c_coarse: &[f64],
    ly: &LyCoefficients,
    sc: &SchemeConstants,
    n_coarse: usize,
    n_fine: usize,
    norm_q_fine: f64,
    k_max: usize,
) -> Result<Vec<f64>> {
    if n_coarse == 0 || n_fine < n_coarse || n_fine % n_coarse != 0 {
        return Err(Error::Precondition(format!(
            "the fine grid ({n_fine}) must refine the coarse grid ({n_coarse})"
        )));
    }
    if c_coarse.len() <= k_max {
        return Err(Error::Precondition(format!(
            "need {} coarse bounds, got {}",
            k_max + 1,
            c_coarse.len()
        )));
    }
    let r = rkh(ly, sc, n_fine, k_max + 1);
    let two_kh = mul_up(2.0 * sc.k, h_up(n_coarse));
    let g: Vec<f64> = (0..=k_max).map(|k| add_up(mul_up(norm_q_fine, r.r1[k]), r.r1[k + 1])).collect();
    let mut out = Vec::with_capacity(k_max + 1);
    for m in 0..=k_max {
        let s = (0..m).fold(0.0, |acc, k| add_up(acc, mul_up(c_coarse[m - 1 - k], g[k])));
        out.push(add_up(c_coarse[m], mul_up(two_kh, s)));
    }
    Ok(out)
}

/// `(C_0 + ... + C_{m-1}) / (1 - C_m)`, which bounds `sum_k C_k`.
pub fn tail_sum(c: &[f64], m: usize) -> Result<f64> {
    match c.get(m) {
        Some(&cm) if cm < 1.0 => {
            let s = c[..m].iter().fold(0.0, |a, &x| add_up(a, x));
            Ok(div_up(s, sub_down(1.0, cm)))
        }
        _ => Err(Error::NoContraction { k_max: c.len().saturating_sub(1) }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorComponents {
    pub tail_sum: f64,
    /// `tail * 2 K h (1 + |L|) |u|_s`
    pub discretization: f64,
    /// `tail * eps1 / (1 - eps2)`
    pub eps1_term: f64,
    /// `eps2 / (1 - eps2) |u~|`
    pub eps2_term: f64,
}

/// Certified weak-norm distance between the true density and `u~`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedError {
    pub bound: f64,
    pub m_used: usize,
    pub components: ErrorComponents,
}

/// Inputs of the final estimate that do not depend on the norm bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInputs {
    pub n: usize,
    pub norm_l: f64,
    pub u_strong: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub norm_u_tilde: f64,
}

pub fn error_bound(tail: f64, sc: &SchemeConstants, inp: &ErrorInputs) -> Result<CertifiedError> {
    if inp.eps2 >= 1.0 {
        return Err(Error::NormalizationFailure { eps2: inp.eps2 });
    }
    if !tail.is_finite() {
        return Err(Error::Precondition("tail sum must be finite".into()));
    }
    let one_minus = sub_down(1.0, inp.eps2);
    let disc = mul_up(
        mul_up(mul_up(2.0 * sc.k, h_up(inp.n)), add_up(1.0, inp.norm_l)),
        inp.u_strong,
    );
    let eps1_rel = div_up(inp.eps1, one_minus);
    let discretization = mul_up(tail, disc);
    let eps1_term = mul_up(tail, eps1_rel);
    let eps2_term = mul_up(div_up(inp.eps2, one_minus), inp.norm_u_tilde);
    let bound = add_up(mul_up(tail, add_up(disc, eps1_rel)), eps2_term);
    Ok(CertifiedError {
        bound,
        m_used: 0,
        components: ErrorComponents {
            tail_sum: tail,
            discretization,
            eps1_term,
            eps2_term,
        },
    })
}

/// The smallest error bound over every `m` with `C_m < 1`.
pub fn best_error_bound(c: &[f64], sc: &SchemeConstants, inp: &ErrorInputs) -> Result<CertifiedError> {
    let mut best: Option<CertifiedError> = None;
    for m in 1..c.len() {
        if c[m] >= 1.0 {
            continue;
        }
        let tail = tail_sum(c, m)?;
        let mut e = error_bound(tail, sc, inp)?;
        e.m_used = m;
        if best.as_ref().is_none_or(|b| e.bound < b.bound) {
            best = Some(e);
        }
    }
    best.ok_or(Error::NoContraction { k_max: c.len().saturating_sub(1) })
}

/// Per-`k` minimum over all sources, `C_0 = 1`, then submultiplicative
/// refinement. Sources shorter than `apriori` count as missing beyond their end.
pub fn aggregate_bounds(
    computed: Option<&[f64]>,
    coarse_fine: Option<&[f64]>,
    apriori: (&[f64], &[BoundSource]),
) -> NormBounds {
    let (ap, ap_src) = apriori;
    let mut c = ap.to_vec();
    let mut src = ap_src.to_vec();
    for (list, tag) in [(computed, BoundSource::Computed), (coarse_fine, BoundSource::CoarseFine)] {
        let Some(list) = list else { continue };
        for (k, &x) in list.iter().enumerate().take(c.len()) {
            if x < c[k] {
                c[k] = x;
                src[k] = tag;
            }
        }
    }
    if !c.is_empty() {
        c[0] = 1.0;
        src[0] = BoundSource::AprioriPower;
    }
    for k in refine_submultiplicative(&mut c) {
        src[k] = BoundSource::Submult;
    }
    NormBounds::new(c, src)
}
