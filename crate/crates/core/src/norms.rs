//! Certified upper bounds on norms of powers of the discrete operator,
//! restricted to zero-mean vectors.
//!
//! Each basis column `e_0 - e_j` of the zero-mean space is pushed through the
//! floating midpoint matrix. Every step adds a rigorous bound on the distance
//! between the floating iterate and the exact one, so the sum of the computed
//! norm and that bound dominates the true norm.

use crate::discretization::{IntervalSparseMatrix, SchemeKind};
use crate::error::{Error, Result};
use crate::interval::round::{add_up, div_up, mul_up, sub_down};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Unit roundoff of binary64.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Number of column blocks for the sup-norm accumulators. Fixed so that the
/// reduction order, and hence every bit of the result, does not depend on
/// the thread count.
const HAT_BLOCKS: usize = 8;

/// Smallest positive subnormal: the absolute error floor of one operation.
const ETA: f64 = 4.9406564584124654e-324;

/// `z u / (1 - z u)` rounded up.
pub fn gamma(z: usize) -> Result<f64> {
    let zu = mul_up(z as f64, UNIT_ROUNDOFF);
    if zu >= 1.0 {
        return Err(Error::GammaOverflow { zu });
    }
    Ok(div_up(zu, sub_down(1.0, zu)))
}

/// Bound on `|Q_h|`: `|M| + delta + |i* - i* L|`. For Ulam the last term is
/// zero in exact arithmetic and whatever the enclosure allows otherwise.
pub fn operator_norm_bound(mat: &IntervalSparseMatrix) -> f64 {
    let base = add_up(mat.norm_mid(), mat.delta());
    match mat.scheme() {
        SchemeKind::Ulam => base,
        SchemeKind::Hat => add_up(base, mat.i_residual()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    AprioriPower,
    #[serde(rename = "apriori_ly")]
    AprioriLy,
    Submult,
    Computed,
    CoarseFine,
}

impl BoundSource {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundSource::AprioriPower => "apriori_power",
            BoundSource::AprioriLy => "apriori_ly",
            BoundSource::Submult => "submult",
            BoundSource::Computed => "computed",
            BoundSource::CoarseFine => "coarse_fine",
        }
    }
}

/// `c[k] >= |Q_h^k restricted to zero-mean vectors|`, with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub c: Vec<f64>,
    pub source: Vec<BoundSource>,
    /// First `k` with `c[k] < 1`.
    pub m_star: Option<usize>,
}

impl NormBounds {
    pub fn new(c: Vec<f64>, source: Vec<BoundSource>) -> Self {
        let m_star = c.iter().position(|&x| x < 1.0);
        NormBounds { c, source, m_star }
    }

    pub fn k_max(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    /// Rows `k, C_k, source`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        writeln!(w, "k, C_k, source").map_err(|e| Error::io(path, e))?;
        for (k, (c, s)) in self.c.iter().zip(&self.source).enumerate() {
            writeln!(w, "{k}, {c:?}, {}", s.as_str()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Rounding error bookkeeping of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecursion {
    pub gamma_z: f64,
    /// Largest per-column error bound at each power (summed over columns
    /// for hat functions, as it enters the row sums).
    pub eps: Vec<f64>,
}

/// Output of [`norms_of_powers`] before aggregation with other sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputedNorms {
    pub c: Vec<f64>,
    /// Floating part of each bound, without the rounding error term.
    pub floating_part: Vec<f64>,
    pub errors: ErrorRecursion,
    /// `true` where the rounding term is at least as large as the floating part.
    pub error_dominated: Vec<bool>,
}

/// Upper bound on a sum of `len` nonnegative terms from its floating value.
fn sum_up_from(s: f64, g: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        div_up(s, sub_down(1.0, g))
    }
}

struct Ctx {
    n: usize,
    k_max: usize,
    gamma_z: f64,
    gamma_n: f64,
    gamma_n2: f64,
    /// `gamma_z |M| + delta`
    local: f64,
    norm_q: f64,
    slack: f64,
}

pub fn norms_of_powers(mat: &IntervalSparseMatrix, k_max: usize) -> Result<ComputedNorms> {
    if k_max == 0 {
        return Err(Error::Precondition("k_max must be positive".into()));
    }
    let n = mat.n();
    let gamma_z = gamma(mat.z())?;
    let ctx = Ctx {
        n,
        k_max,
        gamma_z,
        gamma_n: gamma(n)?,
        gamma_n2: gamma(n + 2)?,
        local: add_up(mul_up(gamma_z, mat.norm_mid()), mat.delta()),
        norm_q: operator_norm_bound(mat),
        slack: mul_up(ETA, ((n + 2) * (mat.z() + 2)) as f64),
    };
    let mut out = match mat.scheme() {
        SchemeKind::Ulam => ulam_norms(mat, &ctx),
        SchemeKind::Hat => hat_norms(mat, &ctx),
    };
    // Q^0 is the identity, whose norm on zero-mean vectors is exactly 1. The
    // basis route would give 2 (l1) or n - 1 (sup norm).
    out.c[0] = 1.0;
    out.floating_part[0] = 1.0;
    out.errors.eps[0] = 0.0;
    out.error_dominated[0] = false;
    Ok(out)
}

/// l1 route: `C_k = max_j (|v_k^j|_1 + eps_k^j)`. The exact Ulam operator is
/// Markov, so errors carried over from earlier steps do not grow.
fn ulam_norms(mat: &IntervalSparseMatrix, ctx: &Ctx) -> ComputedNorms {
    let n = ctx.n;
    let k_max = ctx.k_max;
    // (c, floating part, eps) for each column, reduced with max.
    let per_col = |j: usize| -> Vec<(f64, f64, f64)> {
        let mut v = vec![0.0; n];
        let mut w = vec![0.0; n];
        v[0] = 1.0;
        v[j] = -1.0;
        let mut out = Vec::with_capacity(k_max + 1);
        out.push((2.0, 2.0, 0.0));
        let mut eps = 0.0;
        let mut norm_v = 2.0;
        for _ in 0..k_max {
            mat.mid_matvec(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
            eps = add_up(eps, add_up(mul_up(ctx.local, norm_v), ctx.slack));
            let s: f64 = v.iter().map(|x| x.abs()).sum();
            norm_v = add_up(sum_up_from(s, ctx.gamma_n), ctx.slack);
            out.push((add_up(norm_v, eps), norm_v, eps));
        }
        out
    };
    let identity = || vec![(0.0f64, 0.0f64, 0.0f64); k_max + 1];
    let merged = (1..n)
        .into_par_iter()
        .map(per_col)
        .reduce(identity, |a, b| {
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x.0.max(y.0), x.1.max(y.1), x.2.max(y.2)))
                .collect()
        });
    let c: Vec<f64> = merged.iter().map(|t| t.0).collect();
    let floating_part: Vec<f64> = merged.iter().map(|t| t.1).collect();
    let eps: Vec<f64> = merged.iter().map(|t| t.2).collect();
    let error_dominated = floating_part.iter().zip(&eps).map(|(f, e)| e >= f).collect();
    ComputedNorms {
        c,
        floating_part,
        errors: ErrorRecursion {
            gamma_z: ctx.gamma_z,
            eps,
        },
        error_dominated,
    }
}

/// l-infinity route: `S_ik = sum_j (|v_k^j|_i + eps_k^j)`, `C_k = max_i S_ik`.
fn hat_norms(mat: &IntervalSparseMatrix, ctx: &Ctx) -> ComputedNorms {
    let n = ctx.n;
    let k_max = ctx.k_max;
    let cols = n - 1;
    let per_block = cols.div_ceil(HAT_BLOCKS).max(1);
    let u = UNIT_ROUNDOFF;
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..HAT_BLOCKS)
        .into_par_iter()
        .map(|b| {
            let start = 1 + b * per_block;
            let end = (start + per_block).min(n);
            // Row sums of |v| per power, and the column error sums per power.
            let mut s = vec![0.0; (k_max + 1) * n];
            let mut eps_sum = vec![0.0; k_max + 1];
            let mut v = vec![0.0; n];
            let mut w = vec![0.0; n];
            for j in start..end {
                v.iter_mut().for_each(|x| *x = 0.0);
                v[0] = 1.0;
                v[j] = -1.0;
                s[0] += 1.0;
                s[j] += 1.0;
                let mut eps = 0.0;
                for k in 1..=k_max {
                    mat.mid_matvec(&v, &mut w);
                    let norm_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    let norm_w = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    let sigma = v.iter().zip(&w).map(|(a, b)| a - b).sum::<f64>() / n as f64;
                    for (vi, wi) in v.iter_mut().zip(&w) {
                        *vi = wi + sigma;
                    }
                    // Error of this step: product and its radius twice (once
                    // directly, once through the mean), the mean itself, and
                    // the final addition.
                    let eta = add_up(
                        add_up(
                            mul_up(2.0, mul_up(ctx.local, norm_v)),
                            mul_up(ctx.gamma_n2, add_up(norm_v, norm_w)),
                        ),
                        add_up(mul_up(u, add_up(norm_w, sigma.abs())), ctx.slack),
                    );
                    eps = add_up(mul_up(ctx.norm_q, eps), eta);
                    eps_sum[k] = add_up(eps_sum[k], eps);
                    let row = &mut s[k * n..(k + 1) * n];
                    row.iter_mut().zip(&v).for_each(|(acc, x)| *acc += x.abs());
                }
            }
            (s, eps_sum)
        })
        .collect();
    let mut s = vec![0.0; (k_max + 1) * n];
    let mut eps_sum = vec![0.0; k_max + 1];
    for (bs, be) in &blocks {
        s.iter_mut().zip(bs).for_each(|(a, b)| *a = add_up(*a, *b));
        eps_sum.iter_mut().zip(be).for_each(|(a, b)| *a = add_up(*a, *b));
    }
    let mut c = Vec::with_capacity(k_max + 1);
    let mut floating_part = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let row = &s[k * n..(k + 1) * n];
        let m = row.iter().fold(0.0f64, |m, &x| m.max(x));
        // Each row sum has at most n - 1 terms plus the block merge.
        let m = add_up(sum_up_from(m, ctx.gamma_n), ctx.slack);
        floating_part.push(m);
        c.push(add_up(m, eps_sum[k]));
    }
    let error_dominated = floating_part.iter().zip(&eps_sum).map(|(f, e)| e >= f).collect();
    ComputedNorms {
        c,
        floating_part,
        errors: ErrorRecursion {
            gamma_z: ctx.gamma_z,
            eps: eps_sum,
        },
        error_dominated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble, Partition};
    use crate::dynamics::{build_map, MapDescriptor};
    use crate::interval::Ival;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(0).unwrap(), 0.0);
        let g1 = gamma(1).unwrap();
        assert!(g1 >= UNIT_ROUNDOFF && (g1 - 1.11e-16).abs() < 1e-18);
        assert!((gamma(4).unwrap() - 4.44e-16).abs() < 1e-18);
        assert!(gamma(1 << 53).is_err());
    }

    #[test]
    fn doubling_annihilates_zero_mean_vectors() {
        let map = build_map(&MapDescriptor::named("doubling")).unwrap();
        let m = assemble(&map, &Partition::new(2).unwrap(), SchemeKind::Ulam).unwrap();
        assert!(operator_norm_bound(&m) <= 1.0 + 1e-12);
        let c = norms_of_powers(&m, 1).unwrap();
        assert!(c.c[1] <= 1e-14);
    }

    #[test]
    fn identity_has_the_factor_two_slack() {
        let t = (0..4).map(|i| (i, i, Ival::ONE)).collect();
        let m = IntervalSparseMatrix::from_triples(4, SchemeKind::Ulam, t).unwrap();
        let c = norms_of_powers(&m, 3).unwrap();
        assert_eq!(c.c[0], 1.0);
        for k in 1..=3 {
            assert!(c.c[k] >= 2.0 && c.c[k] <= 2.0 + 1e-13, "{:?}", c.c);
        }
    }

    #[test]
    fn zero_operator_leaves_only_rounding_terms() {
        let t = vec![(0, 0, Ival::ZERO)];
        for scheme in [SchemeKind::Ulam, SchemeKind::Hat] {
            let m = IntervalSparseMatrix::from_triples(4, scheme, t.clone()).unwrap();
            let c = norms_of_powers(&m, 2).unwrap();
            assert!(c.c[1] < 1e-14 && c.c[2] < 1e-14, "{:?}", c.c);
            assert!(c.floating_part[1] < 1e-300);
        }
    }

    #[test]
    fn hat_errors_grow_at_least_like_the_operator_norm() {
        let map = build_map(&MapDescriptor::named("lanford")).unwrap();
        let m = assemble(&map, &Partition::new(32).unwrap(), SchemeKind::Hat).unwrap();
        let c = norms_of_powers(&m, 8).unwrap();
        let q = operator_norm_bound(&m);
        assert!(q >= 1.0);
        for k in 1..8 {
            assert!(c.errors.eps[k + 1] >= c.errors.eps[k] * q);
        }
    }
}
