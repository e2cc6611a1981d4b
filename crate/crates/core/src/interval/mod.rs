//! Closed intervals of doubles with outward rounding.
//!
//! An [`Ival`] always encloses the real quantity it stands for. Endpoints may
//! be infinite (derivatives of the Lorenz-like maps blow up at the cusp), but
//! never NaN, and `lo <= hi` always holds.

mod newton;
mod range;
pub mod round;

pub use newton::interval_newton;
pub use range::{bound_range, RangeBound, RANGE_BOX_BUDGET};

use crate::error::{Error, Result};
use round::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[JsonF64; 2]", into = "[JsonF64; 2]")]
pub struct Ival {
    lo: f64,
    hi: f64,
}

impl Ival {
    pub const ZERO: Ival = Ival { lo: 0.0, hi: 0.0 };
    pub const ONE: Ival = Ival { lo: 1.0, hi: 1.0 };
    pub const UNIT: Ival = Ival { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Ival { lo, hi })
    }

    /// Caller guarantees `lo <= hi`, neither NaN.
    #[inline]
    pub(crate) fn raw(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "bad interval [{lo}, {hi}]");
        Ival { lo, hi }
    }

    #[inline]
    pub const fn point(x: f64) -> Self {
        Ival { lo: x, hi: x }
    }

    /// Enclosure of `p / q`.
    pub fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        let (pf, qf) = (p as f64, q as f64);
        assert!(
            pf as i64 == p && qf as i64 == q,
            "ratio operands must be exactly representable"
        );
        Ival::raw(div_down(pf, qf), div_up(pf, qf))
    }

    pub fn pi() -> Self {
        Ival::raw(std::f64::consts::PI, std::f64::consts::PI.next_up())
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    /// Midpoint, always finite for bounded intervals.
    pub fn mid(self) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    /// Upper bound on the distance from the midpoint to either endpoint.
    pub fn rad(self) -> f64 {
        let m = self.mid();
        sub_up(self.hi, m).max(sub_up(m, self.lo))
    }

    /// Largest absolute value.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn is_bounded(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn subset_of(self, other: Ival) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn overlaps(self, other: Ival) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Strictly below every point of `other`.
    pub fn precedes(self, other: Ival) -> bool {
        self.hi < other.lo
    }

    pub fn hull(self, other: Ival) -> Ival {
        Ival::raw(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn intersect(self, other: Ival) -> Option<Ival> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Ival { lo, hi })
    }

    pub fn split(self) -> (Ival, Ival) {
        let m = self.mid();
        (Ival::raw(self.lo, m), Ival::raw(m, self.hi))
    }

    pub fn abs(self) -> Ival {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Ival::raw(0.0, self.mag())
        }
    }

    /// Pointwise maximum.
    pub fn max(self, other: Ival) -> Ival {
        Ival::raw(self.lo.max(other.lo), self.hi.max(other.hi))
    }

    /// Pointwise minimum.
    pub fn min(self, other: Ival) -> Ival {
        Ival::raw(self.lo.min(other.lo), self.hi.min(other.hi))
    }

    pub fn recip(self) -> Result<Ival> {
        if self.contains_zero() {
            return Err(Error::domain("division", format!("divisor {self} contains zero")));
        }
        Ok(Ival::raw(div_down(1.0, self.hi), div_up(1.0, self.lo)))
    }

    pub fn div(self, rhs: Ival) -> Result<Ival> {
        if rhs.contains_zero() {
            return Err(Error::domain("division", format!("divisor {rhs} contains zero")));
        }
        if rhs.is_bounded() && self.is_bounded() {
            let c = [
                (self.lo, rhs.lo),
                (self.lo, rhs.hi),
                (self.hi, rhs.lo),
                (self.hi, rhs.hi),
            ];
            let lo = c.iter().map(|&(a, b)| div_down(a, b)).fold(f64::INFINITY, f64::min);
            let hi = c.iter().map(|&(a, b)| div_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
            return Ok(Ival::raw(lo, hi));
        }
        Ok(self * rhs.recip()?)
    }

    pub fn sqr(self) -> Ival {
        let (a, b) = (self.mig(), self.mag());
        Ival::raw(mul_down(a, a), mul_up(b, b))
    }

    pub fn powi(self, n: u32) -> Ival {
        fn up(x: f64, n: u32) -> f64 {
            (0..n).fold(1.0, |acc, _| mul_up(acc, x))
        }
        fn down(x: f64, n: u32) -> f64 {
            (0..n).fold(1.0, |acc, _| mul_down(acc, x))
        }
        match n {
            0 => Ival::ONE,
            1 => self,
            _ if n % 2 == 0 => Ival::raw(down(self.mig(), n), up(self.mag(), n)),
            _ => {
                let lo = if self.lo >= 0.0 { down(self.lo, n) } else { -up(-self.lo, n) };
                let hi = if self.hi >= 0.0 { up(self.hi, n) } else { -down(-self.hi, n) };
                Ival::raw(lo, hi)
            }
        }
    }

    pub fn sqrt(self) -> Result<Ival> {
        if self.lo < 0.0 {
            return Err(Error::domain("sqrt", format!("{self} has negative part")));
        }
        Ok(Ival::raw(sqrt_down(self.lo), sqrt_up(self.hi)))
    }

    pub fn exp(self) -> Ival {
        Ival::raw(exp_down(self.lo), exp_up(self.hi))
    }

    pub fn ln(self) -> Result<Ival> {
        if self.lo <= 0.0 {
            return Err(Error::domain("log", format!("{self} touches or crosses zero")));
        }
        Ok(Ival::raw(ln_down(self.lo), ln_up(self.hi)))
    }

    pub fn sin(self) -> Ival {
        self.trig(round::sin_down, round::sin_up, std::f64::consts::FRAC_PI_2)
    }

    pub fn cos(self) -> Ival {
        self.trig(round::cos_down, round::cos_up, 0.0)
    }

    /// `peak` is the phase of the maximum; the minimum sits half a period on.
    fn trig(self, down: fn(f64) -> f64, up: fn(f64) -> f64, peak: f64) -> Ival {
        use std::f64::consts::{PI, TAU};
        if !self.is_bounded() || self.width() >= TAU {
            return Ival::raw(-1.0, 1.0);
        }
        // Slack keeps the extremum test conservative: when in doubt, the
        // extremum is assumed to be inside, which only widens the result.
        let slack = 1e-9;
        let hits = |phase: f64| {
            let a = (self.lo - phase) / TAU;
            let b = (self.hi - phase) / TAU;
            (b + slack).floor() >= (a - slack).ceil()
        };
        let at_lo = (down(self.lo), up(self.lo));
        let at_hi = (down(self.hi), up(self.hi));
        let lo = if hits(peak + PI) { -1.0 } else { at_lo.0.min(at_hi.0) };
        let hi = if hits(peak) { 1.0 } else { at_lo.1.max(at_hi.1) };
        Ival::raw(lo, hi)
    }

    /// `self^e` for `self >= 0` and an exponent of definite sign.
    pub fn powf(self, e: Ival) -> Result<Ival> {
        if self.lo < 0.0 {
            return Err(Error::domain("pow", format!("base {self} has negative part")));
        }
        if e.contains_zero() && !e.is_point() {
            return Err(Error::domain("pow", format!("exponent {e} straddles zero")));
        }
        if e == Ival::ZERO {
            return Ok(Ival::ONE);
        }
        if self.lo > 0.0 {
            return Ok((e * self.ln()?).exp());
        }
        // base touches zero
        if e.lo > 0.0 {
            let hi = if self.hi == 0.0 {
                0.0
            } else {
                (e * Ival::point(self.hi).ln()?).exp().hi
            };
            Ok(Ival::raw(0.0, hi))
        } else {
            if self.hi == 0.0 {
                return Err(Error::domain("pow", "zero to a negative power"));
            }
            let lo = (e * Ival::point(self.hi).ln()?).exp().lo;
            Ok(Ival::raw(lo, f64::INFINITY))
        }
    }

    /// `self^(p/q)` with `q > 0`. Negative bases are accepted when `q` is odd.
    pub fn pow_rational(self, p: i64, q: i64) -> Result<Ival> {
        if q <= 0 {
            return Err(Error::domain("pow", format!("denominator {q} must be positive")));
        }
        let e = Ival::ratio(p, q);
        if self.lo >= 0.0 {
            return self.powf(e);
        }
        if q % 2 == 0 {
            return Err(Error::domain(
                "pow",
                format!("even root of {self}, which has a negative part"),
            ));
        }
        let neg = Ival::raw(0.0f64.max(-self.hi), -self.lo).powf(e)?;
        let neg = if p % 2 == 0 { neg } else { -neg };
        if self.hi <= 0.0 {
            return Ok(neg);
        }
        Ok(neg.hull(Ival::raw(0.0, self.hi).powf(e)?))
    }
}

impl From<f64> for Ival {
    fn from(x: f64) -> Self {
        Ival::point(x)
    }
}

impl Add for Ival {
    type Output = Ival;
    #[inline]
    fn add(self, rhs: Ival) -> Ival {
        Ival::raw(add_down(self.lo, rhs.lo), add_up(self.hi, rhs.hi))
    }
}

impl Sub for Ival {
    type Output = Ival;
    #[inline]
    fn sub(self, rhs: Ival) -> Ival {
        Ival::raw(sub_down(self.lo, rhs.hi), sub_up(self.hi, rhs.lo))
    }
}

impl Neg for Ival {
    type Output = Ival;
    #[inline]
    fn neg(self) -> Ival {
        Ival::raw(-self.hi, -self.lo)
    }
}

impl Mul for Ival {
    type Output = Ival;
    fn mul(self, rhs: Ival) -> Ival {
        let (a, b) = (self, rhs);
        if a.lo >= 0.0 && b.lo >= 0.0 {
            return Ival::raw(mul_down(a.lo, b.lo), mul_up(a.hi, b.hi));
        }
        let c = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
        let lo = c.iter().map(|&(x, y)| mul_down(x, y)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(x, y)| mul_up(x, y)).fold(f64::NEG_INFINITY, f64::max);
        Ival::raw(lo, hi)
    }
}

impl Add<f64> for Ival {
    type Output = Ival;
    fn add(self, rhs: f64) -> Ival {
        self + Ival::point(rhs)
    }
}

impl Sub<f64> for Ival {
    type Output = Ival;
    fn sub(self, rhs: f64) -> Ival {
        self - Ival::point(rhs)
    }
}

impl Mul<f64> for Ival {
    type Output = Ival;
    fn mul(self, rhs: f64) -> Ival {
        self * Ival::point(rhs)
    }
}

impl fmt::Display for Ival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Debug for Ival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

/// Operations accepted by [`ival_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IvalOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Abs,
    Sqr,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

/// Uniform entry point over the interval operations; `b` is ignored by the
/// unary ones and required by the binary ones.
pub fn ival_arith(op: IvalOp, a: Ival, b: Option<Ival>) -> Result<Ival> {
    let rhs = || b.ok_or_else(|| Error::domain("ival_arith", format!("{op:?} needs two operands")));
    Ok(match op {
        IvalOp::Add => a + rhs()?,
        IvalOp::Sub => a - rhs()?,
        IvalOp::Mul => a * rhs()?,
        IvalOp::Div => a.div(rhs()?)?,
        IvalOp::Neg => -a,
        IvalOp::Abs => a.abs(),
        IvalOp::Sqr => a.sqr(),
        IvalOp::Sqrt => a.sqrt()?,
        IvalOp::Exp => a.exp(),
        IvalOp::Log => a.ln()?,
        IvalOp::Sin => a.sin(),
        IvalOp::Cos => a.cos(),
    })
}

/// JSON has no infinities; they travel as the strings `"inf"` / `"-inf"`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonF64 {
    Num(f64),
    Text(String),
}

impl From<f64> for JsonF64 {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            JsonF64::Text("inf".into())
        } else if x == f64::NEG_INFINITY {
            JsonF64::Text("-inf".into())
        } else {
            JsonF64::Num(x)
        }
    }
}

impl TryFrom<JsonF64> for f64 {
    type Error = String;
    fn try_from(v: JsonF64) -> std::result::Result<f64, String> {
        match v {
            JsonF64::Num(x) => Ok(x),
            JsonF64::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(format!("not a number: {s}")),
            },
        }
    }
}

impl From<Ival> for [JsonF64; 2] {
    fn from(x: Ival) -> Self {
        [x.lo.into(), x.hi.into()]
    }
}

impl TryFrom<[JsonF64; 2]> for Ival {
    type Error = String;
    fn try_from([lo, hi]: [JsonF64; 2]) -> std::result::Result<Ival, String> {
        let (lo, hi) = (f64::try_from(lo)?, f64::try_from(hi)?);
        Ival::new(lo, hi).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sum_is_not_widened() {
        let s = Ival::new(1.0, 2.0).unwrap() + Ival::new(3.0, 4.0).unwrap();
        assert_eq!((s.lo(), s.hi()), (4.0, 6.0));
    }

    #[test]
    fn third_encloses_one_third() {
        let t = Ival::ratio(1, 3);
        assert!(t.contains(1.0 / 3.0) && t.lo() < t.hi());
        assert!(t.width() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn log_of_unit_to_e() {
        let r = Ival::new(1.0, std::f64::consts::E).unwrap().ln().unwrap();
        assert!(r.lo() <= 0.0 && r.hi() >= 1.0);
        assert!(Ival::new(-1.0, 1.0).unwrap().ln().is_err());
        assert!(Ival::new(0.0, 1.0).unwrap().ln().is_err());
    }

    #[test]
    fn division_by_zero_interval_is_an_error() {
        assert!(Ival::ONE.div(Ival::new(-1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn sine_extrema() {
        let s = Ival::new(0.0, 2.0).unwrap().sin();
        assert_eq!(s.hi(), 1.0);
        assert!(s.lo() <= 0.0 && s.lo() > -1e-15);
        let c = Ival::new(3.0, 3.5).unwrap().cos();
        assert_eq!(c.lo(), -1.0);
    }

    #[test]
    fn fractional_power_at_zero() {
        let x = Ival::new(0.0, 0.25).unwrap();
        let p = x.pow_rational(1, 2).unwrap();
        assert_eq!(p.lo(), 0.0);
        assert!(p.hi() >= 0.5 && p.hi() < 0.5 + 1e-14);
        let q = x.pow_rational(-13, 64).unwrap();
        assert_eq!(q.hi(), f64::INFINITY);
        assert!(Ival::new(-1.0, 1.0).unwrap().pow_rational(1, 2).is_err());
        let c = Ival::new(-8.0, -8.0).unwrap().pow_rational(1, 3).unwrap();
        assert!(c.contains(-2.0) && c.width() < 1e-14);
    }

    #[test]
    fn infinite_endpoints_behave() {
        let big = Ival::new(2.0, f64::INFINITY).unwrap();
        let r = big.recip().unwrap();
        assert_eq!((r.lo(), r.hi()), (0.0, 0.5));
        let z = Ival::ZERO * big;
        assert_eq!(z, Ival::ZERO);
    }

    #[test]
    fn json_round_trip_with_infinity() {
        let x = Ival::new(1.0, f64::INFINITY).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"[1.0,"inf"]"#);
        let y: Ival = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }
}
