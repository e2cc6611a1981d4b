//! Lyapunov exponent enclosures from a certified density.

use crate::discretization::SchemeKind;
use crate::dynamics::{Branch, PiecewiseMap};
use crate::error::{Error, Result};
use crate::interval::round::{add_up, mul_up};
use crate::interval::{bound_range, Ival};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const RANGE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEnclosure {
    pub value: Ival,
    /// Enclosure of `∫ log|T'| u~`, divided by the iterate power.
    pub integral_part: Ival,
    /// Contribution of the density error, divided by the iterate power.
    pub error_part: f64,
}

fn log_slope(b: &Branch, x: Ival) -> Result<Ival> {
    b.deriv(x)?.abs().ln()
}

/// `(log|T'|)' = T''/T'`.
fn log_slope_deriv(b: &Branch, x: Ival) -> Result<Ival> {
    Ok(b.distortion(x)? * b.deriv(x)?)
}

/// Per-branch sup of `|log|T'||`; an infinite or failed bound means the
/// observable is not bounded on that branch.
fn sup_abs_log_slope(b: &Branch) -> Result<f64> {
    let r = bound_range(|x| Ok(log_slope(b, x)?.abs()), b.domain(), RANGE_TOL)
        .map_err(|_| Error::UnboundedObservable)?;
    let s = r.sup.hi();
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::UnboundedObservable)
    }
}

/// Integral of `log|T'| u~` over the piece `[a, c]` of a cell, where `u~`
/// is linear between `ua` at the cell start `y0` and `ub` at `y0 + h`.
fn piece_integral(b: &Branch, a: Ival, c: Ival, y0: f64, n: usize, ua: f64, ub: f64) -> Result<Ival> {
    let w = (c - a).max(Ival::ZERO);
    if w.hi() <= 0.0 {
        return Ok(Ival::ZERO);
    }
    let hull = Ival::raw(a.lo(), c.hi().max(a.lo()));
    let mid = (a + c) * 0.5;
    let f_mid = log_slope(b, mid)?;
    // Density values at the piece ends and its mean over the piece.
    let slope = (Ival::point(ub) - Ival::point(ua)) * (n as f64);
    let at = |x: Ival| slope * (x - y0) + ua;
    let mean_u = (at(a) + at(c)) * 0.5;
    let sup_u = at(a).mag().max(at(c).mag());
    // ∫ f u = f(m) ∫ u + ∫ f'(ξ)(x - m) u(x), the latter bounded by
    // sup|f'| sup|u| w²/4.
    let df = log_slope_deriv(b, hull)?.mag();
    let rem = mul_up(mul_up(df, sup_u), mul_up(mul_up(w.hi(), w.hi()), 0.25));
    if !rem.is_finite() {
        return Err(Error::UnboundedObservable);
    }
    Ok(f_mid * mean_u * w + Ival::raw(-rem, rem))
}

/// `(1/k) ∫ log|(T^k)'| u dm` for the base map of a `k`-th iterate, given
/// `u~` and a certified bound `err` on `|u - u~|` in the weak norm.
pub fn lyapunov_enclosure(
    map: &PiecewiseMap,
    u_tilde: &[f64],
    err: f64,
    scheme: SchemeKind,
) -> Result<LyapunovEnclosure> {
    let n = u_tilde.len();
    if n < 2 || !err.is_finite() {
        return Err(Error::Precondition("need a density on at least two cells and a finite error".into()));
    }
    let sups: Vec<f64> = map.branches().iter().map(sup_abs_log_slope).collect::<Result<_>>()?;
    let value_at = |j: usize| -> (f64, f64) {
        match scheme {
            SchemeKind::Ulam => (u_tilde[j], u_tilde[j]),
            SchemeKind::Hat => (u_tilde[j], u_tilde[(j + 1) % n]),
        }
    };
    let nf = n as f64;
    let pieces: Vec<Ival> = map
        .branches()
        .par_iter()
        .map(|b| -> Result<Ival> {
            let (l, r) = (b.left(), b.right());
            let first = ((l.lo() * nf).floor().max(0.0) as usize).min(n - 1);
            let last = ((r.hi() * nf).ceil() as usize).clamp(first + 1, n);
            let mut acc = Ival::ZERO;
            for j in first..last {
                let y0 = Ival::ratio(j as i64, n as i64);
                let y1 = Ival::ratio(j as i64 + 1, n as i64);
                let a = y0.max(l);
                let c = y1.min(r);
                if c.hi() <= a.lo() {
                    continue;
                }
                let (ua, ub) = value_at(j);
                acc = acc + piece_integral(b, a, c, j as f64 / nf, n, ua, ub)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let integral = pieces.into_iter().fold(Ival::ZERO, |s, p| s + p);
    let obs_norm = match scheme {
        // L1 error against the sup of the observable.
        SchemeKind::Ulam => sups.iter().fold(0.0, |m: f64, &s| m.max(s)),
        // L-infinity error against its L1 norm.
        SchemeKind::Hat => map
            .branches()
            .iter()
            .zip(&sups)
            .fold(0.0, |acc, (b, &s)| add_up(acc, mul_up((b.right() - b.left()).hi(), s))),
    };
    let k = map.power() as f64;
    let error_part = mul_up(obs_norm, err) / k;
    let error_part = error_part.next_up();
    let integral_part = integral * (1.0 / k);
    let value = integral_part + Ival::raw(-error_part, error_part);
    Ok(LyapunovEnclosure {
        value,
        integral_part,
        error_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_map, iterate, MapDescriptor};

    #[test]
    fn doubling_gives_log_two() {
        let map = build_map(&MapDescriptor::named("doubling")).unwrap();
        for scheme in [SchemeKind::Ulam, SchemeKind::Hat] {
            let e = lyapunov_enclosure(&map, &[1.0; 64], 0.0, scheme).unwrap();
            assert!(e.value.contains(std::f64::consts::LN_2));
            assert!(e.value.width() <= 1e-10, "{:?}", e.value);
        }
        let map2 = iterate(&map, 2).unwrap();
        let e = lyapunov_enclosure(&map2, &[1.0; 64], 1e-3, SchemeKind::Ulam).unwrap();
        assert!(e.value.contains(std::f64::consts::LN_2));
        assert!((e.error_part - 1e-3 * 4f64.ln() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn width_grows_with_error() {
        let map = build_map(&MapDescriptor::named("lanford")).unwrap();
        let a = lyapunov_enclosure(&map, &[1.0; 32], 1e-4, SchemeKind::Ulam).unwrap();
        let b = lyapunov_enclosure(&map, &[1.0; 32], 1e-3, SchemeKind::Ulam).unwrap();
        assert!(a.value.subset_of(b.value));
    }

    #[test]
    fn lorenz_observable_is_unbounded() {
        let map = build_map(&MapDescriptor::named("lorenz")).unwrap();
        assert!(matches!(
            lyapunov_enclosure(&map, &[1.0; 16], 0.0, SchemeKind::Ulam),
            Err(Error::UnboundedObservable)
        ));
    }
}
