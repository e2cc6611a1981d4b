//! Directed rounding without touching the FPU control word.
//!
//! Each operation takes the round-to-nearest result, recovers the rounding
//! error exactly (TwoSum, or an fma residual), and steps one ulp outward only
//! when the nearest result landed on the wrong side. Exact operations therefore
//! stay exact: `add_up(1.0, 3.0) == 4.0`.
//!
//! Below `TINY` the fma residual is no longer exact, so there we step
//! unconditionally. Infinite operands are allowed; `0 * inf` is taken as 0,
//! which is the right convention for interval endpoint products.

const TINY: f64 = 1e-290;

/// Transcendental results are pushed this many ulps outward. The platform
/// libm is accurate to well under one ulp for exp, ln, sin and cos.
const LIBM_ULPS: u32 = 2;

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    let e = (a - (s - bp)) + (b - bp);
    (s, e)
}

#[inline]
fn overflow_up(s: f64, exact: bool) -> f64 {
    if s == f64::NEG_INFINITY && !exact {
        -f64::MAX
    } else {
        s
    }
}

#[inline]
fn overflow_down(s: f64, exact: bool) -> f64 {
    if s == f64::INFINITY && !exact {
        f64::MAX
    } else {
        s
    }
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return overflow_up(s, a.is_infinite() || b.is_infinite());
    }
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return overflow_down(s, a.is_infinite() || b.is_infinite());
    }
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return overflow_up(p, a.is_infinite() || b.is_infinite());
    }
    if p.abs() < TINY {
        return p.next_up();
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    -mul_up(-a, b)
}

/// Upper bound on `a / b`; `b` must be nonzero.
#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    debug_assert!(b != 0.0);
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() {
        return overflow_up(q, a.is_infinite());
    }
    if b.is_infinite() {
        // a finite: the quotient is exactly a signed zero in the limit
        return if (a > 0.0) == (b > 0.0) { 0.0 } else { -0.0 };
    }
    if q.abs() < TINY {
        return q.next_up();
    }
    let r = (-q).mul_add(b, a);
    if r != 0.0 && (r > 0.0) == (b > 0.0) {
        q.next_up()
    } else {
        q
    }
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    -div_up(-a, b)
}

#[inline]
pub fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    if !s.is_finite() || x == 0.0 {
        return s;
    }
    if x < TINY {
        return s.next_up();
    }
    if (-s).mul_add(s, x) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    if !s.is_finite() || x == 0.0 {
        return s;
    }
    if x < TINY {
        return s.next_down().max(0.0);
    }
    if (-s).mul_add(s, x) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn nudge_up(mut y: f64) -> f64 {
    for _ in 0..LIBM_ULPS {
        y = y.next_up();
    }
    y
}

fn nudge_down(mut y: f64) -> f64 {
    for _ in 0..LIBM_ULPS {
        y = y.next_down();
    }
    y
}

pub fn exp_up(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let y = x.exp();
    if y.is_infinite() {
        return y;
    }
    // exp(x) <= 1 for x <= 0; keeps the bound monotone across zero
    if x < 0.0 {
        nudge_up(y).min(1.0)
    } else {
        nudge_up(y)
    }
}

pub fn exp_down(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let y = x.exp();
    if y.is_infinite() {
        return f64::MAX;
    }
    let floor = if x > 0.0 { 1.0 } else { 0.0 };
    nudge_down(y).max(floor)
}

/// Caller guarantees `x >= 0`.
pub fn ln_up(x: f64) -> f64 {
    if x == 1.0 || x.is_infinite() || x == 0.0 {
        return x.ln();
    }
    let y = nudge_up(x.ln());
    if x < 1.0 {
        y.min(0.0)
    } else {
        y
    }
}

pub fn ln_down(x: f64) -> f64 {
    if x == 1.0 || x.is_infinite() || x == 0.0 {
        return x.ln();
    }
    let y = nudge_down(x.ln());
    if x > 1.0 {
        y.max(0.0)
    } else {
        y
    }
}

pub fn sin_up(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let y = nudge_up(x.sin()).min(1.0);
    // sin has the sign of x on (-pi, pi)
    if (-3.0..0.0).contains(&x) {
        y.min(0.0)
    } else {
        y
    }
}

pub fn sin_down(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let y = nudge_down(x.sin()).max(-1.0);
    if x > 0.0 && x <= 3.0 {
        y.max(0.0)
    } else {
        y
    }
}

pub fn cos_up(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    nudge_up(x.cos()).min(1.0)
}

pub fn cos_down(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    nudge_down(x.cos()).max(-1.0)
}

/// `sum` of nonnegative terms, rounded up.
pub fn sum_up(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, add_up)
}
