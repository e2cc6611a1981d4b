//! Oracles shared by the integration tests: exact rationals for the
//! interval core and dense rational powers for the norm bounds.

#![allow(dead_code)]

use certimeasure::{IntervalSparseMatrix, Ival, IvalOp, SchemeKind};
use num::{BigRational, Signed, Zero};
use rand::Rng;

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn contains_rat(i: Ival, q: &BigRational) -> bool {
    let lo_ok = i.lo() == f64::NEG_INFINITY || rat(i.lo()) <= *q;
    let hi_ok = i.hi() == f64::INFINITY || *q <= rat(i.hi());
    lo_ok && hi_ok
}

/// A finite double spread over many binades, sometimes exactly an integer.
pub fn wild(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-8i32..=8) as f64,
        1 => rng.gen_range(-1.0..1.0),
        _ => {
            let m: f64 = rng.gen_range(-1.0..1.0);
            m * 2f64.powi(rng.gen_range(-60..60))
        }
    }
}

pub fn wild_ival(rng: &mut impl Rng) -> Ival {
    let (a, b) = (wild(rng), wild(rng));
    Ival::new(a.min(b), a.max(b)).unwrap()
}

/// A point of `x`, endpoints included with some probability.
pub fn point_in(rng: &mut impl Rng, x: Ival) -> f64 {
    match rng.gen_range(0..5) {
        0 => x.lo(),
        1 => x.hi(),
        _ => {
            let t: f64 = rng.gen();
            (x.lo() + t * (x.hi() - x.lo())).clamp(x.lo(), x.hi())
        }
    }
}

pub const BINARY: [IvalOp; 4] = [IvalOp::Add, IvalOp::Sub, IvalOp::Mul, IvalOp::Div];
pub const UNARY: [IvalOp; 8] = [
    IvalOp::Neg,
    IvalOp::Abs,
    IvalOp::Sqr,
    IvalOp::Sqrt,
    IvalOp::Exp,
    IvalOp::Log,
    IvalOp::Sin,
    IvalOp::Cos,
];

/// Pointwise result: exact for the rational operations, the libm value
/// otherwise. `None` when the point is outside the domain of `op`.
pub enum Exact {
    Rational(BigRational),
    Float(f64),
}

pub fn pointwise(op: IvalOp, x: f64, y: f64) -> Option<Exact> {
    let (qx, qy) = (rat(x), rat(y));
    Some(match op {
        IvalOp::Add => Exact::Rational(qx + qy),
        IvalOp::Sub => Exact::Rational(qx - qy),
        IvalOp::Mul => Exact::Rational(qx * qy),
        IvalOp::Div if y == 0.0 => return None,
        IvalOp::Div => Exact::Rational(qx / qy),
        IvalOp::Neg => Exact::Rational(-qx),
        IvalOp::Abs => Exact::Rational(qx.abs()),
        IvalOp::Sqr => Exact::Rational(qx.clone() * qx),
        IvalOp::Sqrt if x < 0.0 => return None,
        IvalOp::Sqrt => Exact::Float(x.sqrt()),
        IvalOp::Exp => Exact::Float(x.exp()),
        IvalOp::Log if x <= 0.0 => return None,
        IvalOp::Log => Exact::Float(x.ln()),
        IvalOp::Sin => Exact::Float(x.sin()),
        IvalOp::Cos => Exact::Float(x.cos()),
    })
}

pub fn encloses(i: Ival, e: &Exact) -> bool {
    match e {
        Exact::Rational(q) => contains_rat(i, q),
        Exact::Float(f) if f.is_finite() => i.contains(*f),
        // overflowed pointwise value: the enclosure must reach infinity
        Exact::Float(f) if f.is_infinite() => i.hi() == f64::INFINITY,
        Exact::Float(_) => true,
    }
}

/// One containment trial and one inclusion-monotonicity trial for `op`.
/// Returns a description of the failure, if any.
pub fn trial(rng: &mut impl Rng, op: IvalOp) -> Result<(), String> {
    let binary = BINARY.contains(&op);
    let a = wild_ival(rng);
    let b = wild_ival(rng);
    let Ok(r) = certimeasure::ival_arith(op, a, binary.then_some(b)) else {
        // domain errors are allowed only where the op is undefined somewhere
        let undefined = match op {
            IvalOp::Div => b.contains_zero(),
            IvalOp::Sqrt => a.lo() < 0.0,
            IvalOp::Log => a.lo() <= 0.0,
            _ => false,
        };
        return if undefined { Ok(()) } else { Err(format!("{op:?} rejected {a:?} {b:?}")) };
    };
    let (x, y) = (point_in(rng, a), point_in(rng, b));
    if let Some(e) = pointwise(op, x, y) {
        if !encloses(r, &e) {
            return Err(format!("{op:?}({a:?}, {b:?}) = {r:?} misses the value at ({x:e}, {y:e})"));
        }
    }
    // A sub-interval must map inside the original result.
    let (p, q) = (point_in(rng, a), point_in(rng, a));
    let sub_a = Ival::new(p.min(q), p.max(q)).unwrap();
    let (p, q) = (point_in(rng, b), point_in(rng, b));
    let sub_b = Ival::new(p.min(q), p.max(q)).unwrap();
    if let Ok(rs) = certimeasure::ival_arith(op, sub_a, binary.then_some(sub_b)) {
        if !rs.subset_of(r) {
            return Err(format!("{op:?}: {sub_a:?} {sub_b:?} -> {rs:?} not inside {r:?}"));
        }
    }
    Ok(())
}

pub fn all_ops() -> impl Iterator<Item = IvalOp> {
    BINARY.into_iter().chain(UNARY)
}

/// Exact `max_j |Q^k (e_0 - e_j)|` for `k = 0..=k_max`, with `Q` the
/// midpoint matrix (plus the mean correction for hat functions), in the
/// norm the scheme uses.
pub fn dense_power_norms(mat: &IntervalSparseMatrix, k_max: usize) -> Vec<BigRational> {
    let n = mat.n();
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        let (cols, vals) = mat.mid_row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            m[i][j as usize] += rat(v);
        }
    }
    let nq = BigRational::from_integer((n as i64).into());
    let apply = |v: &[BigRational]| -> Vec<BigRational> {
        let mut out: Vec<BigRational> = m
            .iter()
            .map(|row| row.iter().zip(v).filter(|(a, _)| !a.is_zero()).map(|(a, b)| a * b).sum())
            .collect();
        if mat.scheme() == SchemeKind::Hat {
            let s: BigRational = v.iter().zip(&out).map(|(a, b)| a - b).sum::<BigRational>() / &nq;
            out.iter_mut().for_each(|o| *o += &s);
        }
        out
    };
    let norm = |v: &[BigRational]| -> BigRational {
        match mat.scheme() {
            SchemeKind::Ulam => v.iter().map(|x| x.abs()).sum(),
            SchemeKind::Hat => v.iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero),
        }
    };
    let mut best = vec![BigRational::zero(); k_max + 1];
    for j in 1..n {
        let mut v = vec![BigRational::zero(); n];
        v[0] = BigRational::from_integer(1.into());
        v[j] = BigRational::from_integer((-1).into());
        for (k, slot) in best.iter_mut().enumerate() {
            if k > 0 {
                v = apply(&v);
            }
            let nv = norm(&v);
            if nv > *slot {
                *slot = nv;
            }
        }
    }
    best
}

/// Exact `|Q^k restricted to zero-mean vectors|` for the midpoint matrix,
/// `k = 0..=k_max`. In l1 the extreme points of the unit ball of the
/// subspace are `(e_i - e_j) / 2`; in sup norm each row is an LP whose
/// optimum puts `+1` on the larger half of the entries and `-1` on the rest
/// (`n` even).
pub fn restricted_power_norms(mat: &IntervalSparseMatrix, k_max: usize) -> Vec<BigRational> {
    let n = mat.n();
    let zero = BigRational::zero();
    let mut m = vec![vec![zero.clone(); n]; n];
    for i in 0..n {
        let (cols, vals) = mat.mid_row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            m[i][j as usize] += rat(v);
        }
    }
    if mat.scheme() == SchemeKind::Hat {
        // Q = M + 1 (1 - 1^T M) / n, folded into the matrix
        let nq = BigRational::from_integer((n as i64).into());
        for j in 0..n {
            let col: BigRational = (0..n).map(|i| m[i][j].clone()).sum();
            let one = BigRational::from_integer(1.into());
            let s = (one - col) / &nq;
            (0..n).for_each(|i| m[i][j] += &s);
        }
    }
    let mul = |a: &[Vec<BigRational>], b: &[Vec<BigRational>]| -> Vec<Vec<BigRational>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .filter(|&l| !a[i][l].is_zero() && !b[l][j].is_zero())
                            .map(|l| &a[i][l] * &b[l][j])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    };
    let half = BigRational::new(1.into(), 2.into());
    let norm = |p: &[Vec<BigRational>]| -> BigRational {
        match mat.scheme() {
            SchemeKind::Ulam => {
                let mut best = zero.clone();
                for i in 0..n {
                    for j in i + 1..n {
                        let s: BigRational = (0..n).map(|r| (&p[r][i] - &p[r][j]).abs()).sum();
                        if s > best {
                            best = s;
                        }
                    }
                }
                best * &half
            }
            SchemeKind::Hat => {
                let mut best = zero.clone();
                for row in p {
                    let mut r = row.clone();
                    r.sort();
                    let (lo, hi) = r.split_at(n / 2);
                    let v: BigRational = hi.iter().sum::<BigRational>() - lo.iter().sum::<BigRational>();
                    if v > best {
                        best = v;
                    }
                }
                best
            }
        }
    };
    let mut p: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from_integer(((i == j) as i64).into())).collect())
        .collect();
    let mut out = vec![norm(&p)];
    for _ in 0..k_max {
        p = mul(&m, &p);
        out.push(norm(&p));
    }
    out
}
