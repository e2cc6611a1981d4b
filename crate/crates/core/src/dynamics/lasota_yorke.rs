use super::{Branch, PiecewiseMap, PowerSingularity};
use crate::discretization::SchemeKind;
use crate::error::{Error, Result};
use crate::interval::round::{div_up, sub_down};
use crate::interval::{bound_range, Ival, RangeBound};
use serde::{Deserialize, Serialize};

const RANGE_TOL: f64 = 1e-9;

/// Which strong norm the inequality controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongSpace {
    Var,
    Lip,
}

/// The flavours of Lasota-Yorke inequality we know how to certify.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LyVariant {
    /// Variation, any branch structure; needs `|T'| > 2`.
    VarGeneral,
    /// Variation, full branches; needs `|T'| > 1`.
    VarFullbranch,
    /// Lipschitz seminorm for C2 circle maps (hat scheme).
    Lip,
    /// Variation with an integrable distortion. `l = None` searches for a
    /// threshold that minimises `B / (1 - A)`.
    VarIntegral { l: Option<f64> },
}

impl LyVariant {
    /// A sensible default for the map and scheme.
    pub fn auto(map: &PiecewiseMap, scheme: SchemeKind) -> LyVariant {
        if scheme == SchemeKind::Hat {
            return LyVariant::Lip;
        }
        let bounded = distortion_bound(map).is_ok();
        if bounded && map.is_full_branch() && map.min_expansion() > 1.0 {
            LyVariant::VarFullbranch
        } else if bounded {
            LyVariant::VarGeneral
        } else {
            LyVariant::VarIntegral { l: None }
        }
    }

    fn name(self) -> &'static str {
        match self {
            LyVariant::VarGeneral => "var_general",
            LyVariant::VarFullbranch => "var_fullbranch",
            LyVariant::Lip => "lip",
            LyVariant::VarIntegral { .. } => "var_integral",
        }
    }
}

/// Certified constants of `|Lf|_s <= A |Lf|_s + B |f|_w` and friends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyCoefficients {
    pub a: Ival,
    pub b: Ival,
    /// Bound on the transfer operator in the weak norm.
    pub norm_l: Ival,
    /// Bound on all its powers in the weak norm.
    pub w: Ival,
    pub strong_space: StrongSpace,
    pub variant: LyVariant,
    pub distortion: Option<Ival>,
    /// Enclosure of `inf |T'|`.
    pub min_expansion: Ival,
}

struct BranchBounds {
    slope: RangeBound,
    curvature: RangeBound,
}

fn branch_bounds(b: &Branch) -> Result<BranchBounds> {
    let dom = b.domain();
    Ok(BranchBounds {
        slope: bound_range(|x| Ok(b.deriv(x)?.abs()), dom, RANGE_TOL)?,
        curvature: bound_range(|x| Ok(b.deriv2(x)?.abs()), dom, RANGE_TOL)?,
    })
}

fn distortion_of(k: usize, bb: &BranchBounds) -> Result<Ival> {
    let sup = bb.curvature.sup;
    let inf = bb.slope.inf;
    if !sup.is_bounded() || inf.lo() <= 0.0 {
        return Err(Error::UnboundedDistortion { branch: k });
    }
    sup.div(inf.sqr())
}

/// Enclosure of `max_k sup|T''| / (inf|T'|)^2` over the branches.
pub fn distortion_bound(map: &PiecewiseMap) -> Result<Ival> {
    let mut d = Ival::ZERO;
    for (k, b) in map.branches().iter().enumerate() {
        d = d.max(distortion_of(k, &branch_bounds(b)?)?);
    }
    Ok(d)
}

/// `B / (1 - A)`, the a-priori strong norm of the invariant density.
pub fn strong_norm_bound(ly: &LyCoefficients) -> Result<Ival> {
    if ly.a.hi() >= 1.0 {
        return Err(Error::ContractionNotCertified {
            a: ly.a.hi(),
            hint: "no strong-norm bound without contraction".into(),
        });
    }
    ly.b.div(Ival::ONE - ly.a)
}

pub fn dfly_coefficients(
    map: &PiecewiseMap,
    scheme: SchemeKind,
    variant: LyVariant,
) -> Result<LyCoefficients> {
    let expected = match variant {
        LyVariant::Lip => SchemeKind::Hat,
        _ => SchemeKind::Ulam,
    };
    if scheme != expected {
        return Err(Error::VariantNotApplicable {
            variant: variant.name(),
            reason: format!("it does not control the strong norm of the {scheme:?} scheme"),
        });
    }
    let not_applicable = |reason: String| Error::VariantNotApplicable {
        variant: variant.name(),
        reason,
    };

    let bounds = map.branches().iter().map(branch_bounds).collect::<Result<Vec<_>>>()?;
    let min_slope = bounds
        .iter()
        .map(|bb| bb.slope.inf)
        .reduce(|a, b| a.min(b))
        .expect("maps have branches");
    if min_slope.lo() <= 0.0 {
        return Err(not_applicable(format!("inf |T'| = {min_slope} is not bounded away from 0")));
    }
    let inv_slope = min_slope.recip()?;
    let min_len = map
        .branches()
        .iter()
        .map(|b| b.right() - b.left())
        .reduce(|a, b| a.min(b))
        .expect("maps have branches");
    let partition_term = || -> Result<Ival> { Ival::point(2.0).div(min_len) };
    let distortion = || -> Result<Ival> {
        bounds
            .iter()
            .enumerate()
            .try_fold(Ival::ZERO, |acc, (k, bb)| Ok(acc.max(distortion_of(k, bb)?)))
    };
    let one = Ival::ONE;

    let ly = match variant {
        LyVariant::VarGeneral => {
            if min_slope.lo() <= 2.0 {
                return Err(not_applicable(format!("needs inf |T'| > 2, have {min_slope}")));
            }
            let d = distortion()?;
            LyCoefficients {
                a: inv_slope * 2.0,
                b: partition_term()? + d,
                norm_l: one,
                w: one,
                strong_space: StrongSpace::Var,
                variant,
                distortion: Some(d),
                min_expansion: min_slope,
            }
        }
        LyVariant::VarFullbranch => {
            if !map.is_full_branch() {
                return Err(not_applicable("the map is not full-branch".into()));
            }
            if min_slope.lo() <= 1.0 {
                return Err(not_applicable(format!("needs inf |T'| > 1, have {min_slope}")));
            }
            let d = distortion()?;
            LyCoefficients {
                a: inv_slope,
                b: d,
                norm_l: one,
                w: one,
                strong_space: StrongSpace::Var,
                variant,
                distortion: Some(d),
                min_expansion: min_slope,
            }
        }
        LyVariant::Lip => {
            if !map.is_full_branch() {
                return Err(not_applicable("the map is not full-branch".into()));
            }
            if min_slope.lo() <= 1.0 {
                return Err(not_applicable(format!("needs inf |T'| > 1, have {min_slope}")));
            }
            check_circle_c2(map)?;
            let d = distortion()?;
            LyCoefficients {
                a: (d * 2.0 + one) * inv_slope,
                b: d * (d + one),
                norm_l: d + one,
                w: d + one,
                strong_space: StrongSpace::Lip,
                variant,
                distortion: Some(d),
                min_expansion: min_slope,
            }
        }
        LyVariant::VarIntegral { l } => {
            if min_slope.lo() <= 2.0 {
                return Err(not_applicable(format!("needs inf |T'| > 2, have {min_slope}")));
            }
            let base = inv_slope * 2.0;
            let p = partition_term()?;
            let coeffs = |l: f64| -> Result<(Ival, Ival)> {
                let integral = distortion_integral_above(map, l)?;
                Ok((Ival::point(integral) * 0.5 + base, p + Ival::point(l)))
            };
            let l = match l {
                Some(l) => l,
                None => search_threshold(&coeffs)?,
            };
            let (a, b) = coeffs(l)?;
            LyCoefficients {
                a,
                b,
                norm_l: one,
                w: one,
                strong_space: StrongSpace::Var,
                variant: LyVariant::VarIntegral { l: Some(l) },
                distortion: None,
                min_expansion: min_slope,
            }
        }
    };
    if ly.a.hi() >= 1.0 {
        return Err(Error::ContractionNotCertified {
            a: ly.a.hi(),
            hint: format!(
                "{} gives A >= 1; try an iterate of the map",
                variant.name()
            ),
        });
    }
    Ok(ly)
}

/// `T'` and `T''` must agree across every break point, including the wrap
/// from 1 back to 0. Overlapping enclosures are the best we can certify;
/// disjoint ones prove the map is not C2 on the circle.
fn check_circle_c2(map: &PiecewiseMap) -> Result<()> {
    let br = map.branches();
    for k in 0..br.len() {
        let (a, b) = (&br[k], &br[(k + 1) % br.len()]);
        let (ra, lb) = (a.right(), b.left());
        let d = (a.deriv(ra)?, b.deriv(lb)?);
        let d2 = (a.deriv2(ra)?, b.deriv2(lb)?);
        if !d.0.overlaps(d.1) || !d2.0.overlaps(d2.1) {
            return Err(Error::VariantNotApplicable {
                variant: "lip",
                reason: format!(
                    "the map is not C2 on the circle at the break after branch {k}: \
                     T' jumps from {} to {}, T'' from {} to {}",
                    d.0, d.1, d2.0, d2.1
                ),
            });
        }
    }
    Ok(())
}

/// Search for the threshold on the grid `l = 2^(k/4)`, `k <= 56`: every
/// fourth point first, then the neighbours of the best one. `A` falls and
/// `B` grows with `l`, so the objective `B / (1 - A)` is close to unimodal.
fn search_threshold(coeffs: &dyn Fn(f64) -> Result<(Ival, Ival)>) -> Result<f64> {
    let mut best: Option<(usize, f64)> = None;
    let mut smallest_a = f64::INFINITY;
    let mut visit = |k: usize, best: &mut Option<(usize, f64)>| -> Result<()> {
        let (a, b) = coeffs(2f64.powf(k as f64 / 4.0))?;
        smallest_a = smallest_a.min(a.hi());
        if a.hi() < 1.0 {
            let ratio = div_up(b.hi(), sub_down(1.0, a.hi()));
            if best.is_none_or(|(_, r)| ratio < r) {
                *best = Some((k, ratio));
            }
        }
        Ok(())
    };
    for k in (0..=56).step_by(4) {
        visit(k, &mut best)?;
    }
    if let Some((k0, _)) = best {
        for k in k0.saturating_sub(3)..=(k0 + 3).min(56) {
            if k % 4 != 0 {
                visit(k, &mut best)?;
            }
        }
    }
    best.map(|(k, _)| 2f64.powf(k as f64 / 4.0)).ok_or_else(|| Error::ContractionNotCertified {
        a: smallest_a,
        hint: "no threshold l gives A < 1; try a higher iterate".into(),
    })
}

const QUAD_MIN_WIDTH: f64 = 1e-13;
const QUAD_MAX_DEPTH: usize = 64;
const QUAD_MIN_DEPTH: usize = 6;
const QUAD_TOL: f64 = 1e-9;

/// Upper bound on `sum over branches of the integral of |T''/T'^2|` over
/// the set where it is at least `l`.
pub(crate) fn distortion_integral_above(map: &PiecewiseMap, l: f64) -> Result<f64> {
    let mut total = 0.0;
    for b in map.branches() {
        let dom = b.domain();
        let root = cell_bound(b, dom)?;
        total = crate::interval::round::add_up(total, integrate(b, dom, root, l, 0)?);
    }
    Ok(total)
}

fn integrate(b: &Branch, x: Ival, here: (Ival, f64), l: f64, depth: usize) -> Result<f64> {
    let (dabs, ub) = here;
    if dabs.hi() < l {
        return Ok(0.0);
    }
    let (xl, xr) = x.split();
    if depth >= QUAD_MAX_DEPTH || x.width() < QUAD_MIN_WIDTH || xl.width() == 0.0 || xr.width() == 0.0 {
        return Ok(ub);
    }
    let left = cell_bound(b, xl)?;
    let right = cell_bound(b, xr)?;
    let kept = |c: (Ival, f64)| if c.0.hi() < l { 0.0 } else { c.1 };
    let split = crate::interval::round::add_up(kept(left), kept(right));
    if depth >= QUAD_MIN_DEPTH && ub - split <= QUAD_TOL {
        return Ok(split.min(ub));
    }
    let total = crate::interval::round::add_up(
        integrate(b, xl, left, l, depth + 1)?,
        integrate(b, xr, right, l, depth + 1)?,
    );
    Ok(total.min(ub))
}

/// Enclosure of `|distortion|` on the cell and an upper bound on its integral.
///
/// The distortion of a composition is a sum of stage terms
/// `dist_j(y_j) / prod_{i>j} T_i'(y_i)`. A term whose stage has a power
/// singularity is integrated in closed form after substituting `y = y_j(x)`;
/// the other terms are bounded by width times supremum.
fn cell_bound(b: &Branch, x: Ival) -> Result<(Ival, f64)> {
    let t = b.trajectory(x)?;
    let stages = b.stages();
    let s = stages.len();
    let mut head = vec![Ival::ONE; s + 1];
    for j in 0..s {
        head[j + 1] = head[j] * t.d[j];
    }
    let mut tail = Ival::ONE;
    let mut sum = Ival::ZERO;
    let mut integral = 0.0;
    for j in (0..s).rev() {
        let term = stages[j].distortion(t.y[j])?.div(tail)?;
        sum = sum + term;
        let piece = match stages[j].singularity() {
            Some(sing) => {
                let w = tail.recip()?.abs().hi();
                let jac = head[j].recip()?.abs().hi();
                let inner = singular_integral(&sing, t.y[j])?;
                crate::interval::round::mul_up(crate::interval::round::mul_up(w, jac), inner)
            }
            None => crate::interval::round::mul_up(x.width(), term.abs().hi()),
        };
        integral = crate::interval::round::add_up(integral, piece);
        tail = tail * t.d[j];
    }
    let dabs = sum.abs();
    let direct = crate::interval::round::mul_up(x.width(), dabs.hi());
    Ok((dabs, integral.min(direct)))
}

/// Upper bound on the integral of `c |y - center|^(-a)` over the hull of `y`.
fn singular_integral(s: &PowerSingularity, y: Ival) -> Result<f64> {
    let e = Ival::ONE - s.exponent;
    let scale = s.coeff.div(e)?;
    let u0 = Ival::point(y.lo()) - s.center;
    let u1 = Ival::point(y.hi()) - s.center;
    let g = |u: Ival| u.abs().powf(e);
    let body = if u0.hi() < 0.0 && u1.lo() > 0.0 || u0.contains_zero() || u1.contains_zero() {
        g(u0)? + g(u1)?
    } else {
        (g(u1)? - g(u0)?).abs()
    };
    Ok((scale * body).hi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::catalog::{lanford, linear, lorenz, nonlinear_nonmarkov, perturbed_4x, Rational};
    use crate::dynamics::iterate;

    #[test]
    fn doubling_has_no_distortion() {
        let d = distortion_bound(&linear(2).unwrap()).unwrap();
        assert_eq!(d, Ival::ZERO);
        let ly = dfly_coefficients(&linear(3).unwrap(), SchemeKind::Ulam, LyVariant::VarGeneral).unwrap();
        assert!(ly.a.contains(2.0 / 3.0));
        assert_eq!(ly.distortion, Some(Ival::ZERO));
    }

    #[test]
    fn lanford_constants() {
        let m = lanford().unwrap();
        let d = distortion_bound(&m).unwrap();
        assert!(d.contains(4.0 / 9.0) && d.width() <= 1e-6, "{d}");
        let ly = dfly_coefficients(&m, SchemeKind::Ulam, LyVariant::VarFullbranch).unwrap();
        assert!(ly.a.contains(2.0 / 3.0), "{}", ly.a);
        assert!(ly.b.contains(4.0 / 9.0));
        assert!(strong_norm_bound(&ly).unwrap().contains(4.0 / 3.0));
        // not C1 on the circle: T'(0) = 2.5 but T'(1) = 1.5
        assert!(dfly_coefficients(&m, SchemeKind::Hat, LyVariant::Lip).is_err());
    }

    #[test]
    fn perturbed_lip_constants() {
        let m = perturbed_4x(Rational::new(1, 100).unwrap()).unwrap();
        let pi = std::f64::consts::PI;
        let slope = 4.0 - 0.08 * pi;
        let d_ref = 0.64 * pi * pi / (slope * slope);
        let ly = dfly_coefficients(&m, SchemeKind::Hat, LyVariant::Lip).unwrap();
        let d = ly.distortion.unwrap();
        assert!((d.mid() - d_ref).abs() < 1e-6, "{d} vs {d_ref}");
        let a_ref = (2.0 * d_ref + 1.0) / slope;
        assert!((ly.a.mid() - a_ref).abs() < 1e-6);
        assert!(ly.w.contains(d.mid() + 1.0));
    }

    #[test]
    fn variant_preconditions() {
        let m = lanford().unwrap();
        assert!(matches!(
            dfly_coefficients(&m, SchemeKind::Ulam, LyVariant::VarGeneral),
            Err(Error::VariantNotApplicable { .. })
        ));
        let nm = nonlinear_nonmarkov().unwrap();
        assert!(dfly_coefficients(&nm, SchemeKind::Ulam, LyVariant::VarFullbranch).is_err());
        let ly = dfly_coefficients(&nm, SchemeKind::Ulam, LyVariant::VarGeneral).unwrap();
        assert!(ly.b.contains(17.0 + 68.0 / 225.0), "{}", ly.b);
    }

    #[test]
    fn lorenz_distortion_is_unbounded() {
        let m = lorenz(Rational::new(109, 64).unwrap(), Rational::new(51, 64).unwrap()).unwrap();
        assert!(matches!(distortion_bound(&m), Err(Error::UnboundedDistortion { .. })));
        let m3 = iterate(&m, 3).unwrap();
        assert_eq!(m3.branches().len(), 8);
    }

    #[test]
    fn lorenz_third_iterate_integral_variant() {
        let m = lorenz(Rational::new(109, 64).unwrap(), Rational::new(51, 64).unwrap()).unwrap();
        let m3 = iterate(&m, 3).unwrap();
        let ly = dfly_coefficients(&m3, SchemeKind::Ulam, LyVariant::VarIntegral { l: Some(29.6) }).unwrap();
        // within 5% of A = 0.922, B = 48.43
        assert!((ly.a.hi() - 0.922).abs() <= 0.05 * 0.922, "{}", ly.a);
        assert!((ly.b.hi() - 48.43).abs() <= 0.05 * 48.43, "{}", ly.b);
        assert_eq!(ly.strong_space, StrongSpace::Var);
    }

    #[test]
    fn singular_integral_closed_form() {
        // c |y - 1/2|^(-1/2) over [0, 1] integrates to 4 c / sqrt 2
        let s = PowerSingularity {
            center: Ival::point(0.5),
            coeff: Ival::ONE,
            exponent: Ival::point(0.5),
        };
        let v = singular_integral(&s, Ival::UNIT).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-12, "{v}");
        let w = singular_integral(&s, Ival::new(0.75, 1.0).unwrap()).unwrap();
        assert!((w - 2.0 * (0.5f64.sqrt() - 0.5)).abs() < 1e-12, "{w}");
    }
}
