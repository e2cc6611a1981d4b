use super::Ival;
use crate::error::{Error, Result};

const MAX_STEPS: usize = 200;

/// Encloses every `x` in `x0` with `f(x)` in `target`, for monotone `f`.
///
/// Fails with [`Error::NonMonotone`] when `df(x0)` contains zero and with
/// [`Error::NoRoot`] when the Newton operator proves there is no solution.
/// Iterates until the enclosure is narrower than `tol` or stops shrinking;
/// `tol = 0` asks for the tightest enclosure the arithmetic can deliver.
/// When a Newton step contracts by less than half, the interval is bisected
/// using the certified sign of `f(mid) - target`.
pub fn interval_newton<F, D>(f: F, df: D, target: Ival, x0: Ival, tol: f64) -> Result<Ival>
where
    F: Fn(Ival) -> Result<Ival>,
    D: Fn(Ival) -> Result<Ival>,
{
    let d0 = df(x0)?;
    if d0.contains_zero() {
        return Err(Error::NonMonotone {
            lo: x0.lo(),
            hi: x0.hi(),
        });
    }
    let increasing = d0.lo() > 0.0;
    let mut x = x0;
    for _ in 0..MAX_STEPS {
        if x.width() <= tol {
            return Ok(x);
        }
        let m = x.mid();
        let resid = f(Ival::point(m))? - target;
        let dx = df(x)?;
        let dx = dx.intersect(d0).unwrap_or(dx);
        let step = Ival::point(m) - resid.div(dx)?;
        let mut next = x.intersect(step).ok_or(Error::NoRoot)?;

        if next.width() > 0.5 * x.width() {
            // weak contraction: bisect on the sign of the residual
            let below = if increasing { resid.lo() > 0.0 } else { resid.hi() < 0.0 };
            let above = if increasing { resid.hi() < 0.0 } else { resid.lo() > 0.0 };
            if below {
                next = next.intersect(Ival::raw(x.lo(), m)).ok_or(Error::NoRoot)?;
            } else if above {
                next = next.intersect(Ival::raw(m, x.hi())).ok_or(Error::NoRoot)?;
            }
        }
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let r = interval_newton(
            |x| Ok(x.sqr()),
            |x| Ok(x * 2.0),
            Ival::point(2.0),
            Ival::new(1.0, 2.0).unwrap(),
            0.0,
        )
        .unwrap();
        assert!(r.contains(std::f64::consts::SQRT_2));
        assert!(r.width() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn flat_derivative_is_rejected() {
        let e = interval_newton(
            |x| Ok(x.sqr()),
            |x| Ok(x * 2.0),
            Ival::point(0.5),
            Ival::new(-1.0, 1.0).unwrap(),
            0.0,
        );
        assert!(matches!(e, Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn missing_root_is_detected() {
        let e = interval_newton(
            |x| Ok(x * 3.0),
            |_| Ok(Ival::point(3.0)),
            Ival::point(5.0),
            Ival::UNIT,
            0.0,
        );
        assert!(matches!(e, Err(Error::NoRoot)));
    }
}
