//! The built-in maps, plus the declarative record used to request them.

use super::{iterate, Branch, BranchFn, PiecewiseMap, PowerSingularity};
use crate::error::{Error, Result};
use crate::interval::Ival;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// `slope * x + offset`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub slope: Ival,
    pub offset: Ival,
}

impl BranchFn for Affine {
    fn eval(&self, x: Ival) -> Result<Ival> {
        Ok(self.slope * x + self.offset)
    }
    fn deriv(&self, _: Ival) -> Result<Ival> {
        Ok(self.slope)
    }
    fn deriv2(&self, _: Ival) -> Result<Ival> {
        Ok(Ival::ZERO)
    }
    fn distortion(&self, _: Ival) -> Result<Ival> {
        Ok(Ival::ZERO)
    }
}

/// `c0 + c1 u + c2 u^2` with `u = x - center`.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic {
    pub center: Ival,
    pub c0: Ival,
    pub c1: Ival,
    pub c2: Ival,
}

impl BranchFn for Quadratic {
    fn eval(&self, x: Ival) -> Result<Ival> {
        let u = x - self.center;
        Ok(self.c0 + u * (self.c1 + self.c2 * u))
    }
    fn deriv(&self, x: Ival) -> Result<Ival> {
        Ok(self.c1 + self.c2 * (x - self.center) * 2.0)
    }
    fn deriv2(&self, _: Ival) -> Result<Ival> {
        Ok(self.c2 * 2.0)
    }
}

/// `slope * x + amp * sin(freq * x) - shift`.
#[derive(Debug, Clone, Copy)]
pub struct SinePerturbed {
    pub slope: Ival,
    pub amp: Ival,
    pub freq: Ival,
    pub shift: Ival,
}

impl BranchFn for SinePerturbed {
    fn eval(&self, x: Ival) -> Result<Ival> {
        Ok(self.slope * x + self.amp * (self.freq * x).sin() - self.shift)
    }
    fn deriv(&self, x: Ival) -> Result<Ival> {
        Ok(self.slope + self.amp * self.freq * (self.freq * x).cos())
    }
    fn deriv2(&self, x: Ival) -> Result<Ival> {
        Ok(-(self.amp * self.freq.sqr() * (self.freq * x).sin()))
    }
}

/// One side of the Lorenz-like map: `theta |x - 1/2|^alpha` on the left,
/// `1 - theta |x - 1/2|^alpha` on the right. Both sides are decreasing.
#[derive(Debug, Clone, Copy)]
pub struct LorenzSide {
    pub theta: Ival,
    pub alpha: Rational,
    pub right: bool,
}

impl LorenzSide {
    fn u(&self, x: Ival) -> Ival {
        (x - 0.5).abs()
    }
    fn alpha(&self) -> Ival {
        self.alpha.to_ival()
    }
    fn pow(&self, u: Ival, shift: i64) -> Result<Ival> {
        let (p, q) = (self.alpha.num, self.alpha.den);
        u.pow_rational(p + shift * q, q)
    }
}

impl BranchFn for LorenzSide {
    fn eval(&self, x: Ival) -> Result<Ival> {
        let v = self.theta * self.pow(self.u(x), 0)?;
        Ok(if self.right { Ival::ONE - v } else { v })
    }
    fn deriv(&self, x: Ival) -> Result<Ival> {
        Ok(-(self.alpha() * self.theta * self.pow(self.u(x), -1)?))
    }
    fn deriv2(&self, x: Ival) -> Result<Ival> {
        let a = self.alpha();
        let mag = a * (Ival::ONE - a) * self.theta * self.pow(self.u(x), -2)?;
        Ok(if self.right { mag } else { -mag })
    }
    fn distortion(&self, x: Ival) -> Result<Ival> {
        let s = self.singularity().expect("lorenz side is singular");
        let mag = s.coeff * self.u(x).powf(-s.exponent)?;
        Ok(if self.right { mag } else { -mag })
    }
    fn singularity(&self) -> Option<PowerSingularity> {
        let a = self.alpha();
        Some(PowerSingularity {
            center: Ival::point(0.5),
            coeff: (Ival::ONE - a).div(a * self.theta).ok()?,
            exponent: a,
        })
    }
}

/// A small exact rational used for map parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::BadParameter {
                name: "rational".into(),
                detail: format!("denominator {den} must be positive"),
            });
        }
        let g = gcd(num.unsigned_abs(), den as u64) as i64;
        Ok(Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn to_ival(self) -> Ival {
        Ival::ratio(self.num, self.den)
    }

    /// Accepts `p/q`, integers and plain decimals such as `0.01`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |detail: &str| Error::BadParameter {
            name: s.to_string(),
            detail: detail.to_string(),
        };
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<i64>().map_err(|_| bad("numerator is not an integer"))?;
            let q = q.trim().parse::<i64>().map_err(|_| bad("denominator is not an integer"))?;
            return Rational::new(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 15 || frac.chars().any(|c| !c.is_ascii_digit()) {
                return Err(bad("unsupported decimal"));
            }
            let den = 10i64.pow(frac.len() as u32);
            let neg = int.starts_with('-');
            let ip = if int.is_empty() || int == "-" {
                0
            } else {
                int.parse::<i64>().map_err(|_| bad("bad integer part"))?
            };
            let fp = if frac.is_empty() { 0 } else { frac.parse::<i64>().map_err(|_| bad("bad fraction"))? };
            let num = ip.abs() * den + fp;
            return Rational::new(if neg { -num } else { num }, den);
        }
        Rational::new(s.parse::<i64>().map_err(|_| bad("not a number"))?, 1)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Declarative request for a catalog map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDescriptor {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default = "one")]
    pub iterate: usize,
}

fn one() -> usize {
    1
}

impl MapDescriptor {
    pub fn named(name: &str) -> Self {
        MapDescriptor {
            name: name.to_string(),
            params: BTreeMap::new(),
            iterate: 1,
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_iterate(mut self, k: usize) -> Self {
        self.iterate = k;
        self
    }

    fn rational(&self, key: &str, default: Option<&str>) -> Result<Rational> {
        match self.params.get(key).map(String::as_str).or(default) {
            Some(v) => Rational::parse(v),
            None => Err(Error::BadParameter {
                name: key.to_string(),
                detail: format!("map `{}` needs it", self.name),
            }),
        }
    }
}

pub const CATALOG: &[&str] = &[
    "doubling",
    "linear",
    "lanford",
    "nonlinear_nonmarkov",
    "perturbed_4x",
    "lorenz",
];

pub fn build_map(desc: &MapDescriptor) -> Result<PiecewiseMap> {
    let base = match desc.name.as_str() {
        "doubling" => linear(2)?,
        "linear" => {
            let k = desc.rational("k", None)?;
            if k.den != 1 || k.num < 2 {
                return Err(Error::BadParameter {
                    name: "k".into(),
                    detail: format!("must be an integer >= 2, got {k}"),
                });
            }
            linear(k.num as u32)?
        }
        "lanford" => lanford()?,
        "nonlinear_nonmarkov" => nonlinear_nonmarkov()?,
        "perturbed_4x" => perturbed_4x(desc.rational("eps", Some("1/100"))?)?,
        "lorenz" => lorenz(
            desc.rational("theta", Some("109/64"))?,
            desc.rational("alpha", Some("51/64"))?,
        )?,
        other => return Err(Error::UnknownMap(other.to_string())),
    };
    match desc.iterate {
        0 => Err(Error::BadParameter {
            name: "iterate".into(),
            detail: "must be at least 1".into(),
        }),
        1 => Ok(base),
        k => iterate(&base, k),
    }
}

fn affine(slope: Ival, offset: Ival) -> Arc<dyn BranchFn> {
    Arc::new(Affine { slope, offset })
}

/// `k x mod 1`.
pub fn linear(k: u32) -> Result<PiecewiseMap> {
    if k < 2 {
        return Err(Error::BadParameter {
            name: "k".into(),
            detail: format!("must be >= 2, got {k}"),
        });
    }
    let k = k as i64;
    let branches = (0..k)
        .map(|j| {
            Branch::new(
                affine(Ival::point(k as f64), Ival::point(-(j as f64))),
                Ival::ratio(j, k),
                Ival::ratio(j + 1, k),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let name = if k == 2 { "doubling".to_string() } else { format!("linear{k}") };
    PiecewiseMap::new(name, branches)
}

/// `2x + x(1 - x)/2 mod 1`; the branch break is `(5 - sqrt 17) / 2`.
pub fn lanford() -> Result<PiecewiseMap> {
    let c = (Ival::point(5.0) - Ival::point(17.0).sqrt()?) * 0.5;
    let quad = |shift: f64| -> Arc<dyn BranchFn> {
        Arc::new(Quadratic {
            center: Ival::ZERO,
            c0: Ival::point(-shift),
            c1: Ival::point(2.5),
            c2: Ival::point(-0.5),
        })
    };
    PiecewiseMap::new(
        "lanford",
        vec![
            Branch::new(quad(0.0), Ival::ZERO, c)?,
            Branch::new(quad(1.0), c, Ival::ONE)?,
        ],
    )
}

/// Two linear outer pieces of slope 17/5 around two quadratic full branches;
/// the last branch only reaches 2/5.
pub fn nonlinear_nonmarkov() -> Result<PiecewiseMap> {
    let s = Ival::ratio(17, 5);
    let quad = |c: Ival| -> Arc<dyn BranchFn> {
        Arc::new(Quadratic {
            center: c,
            c0: Ival::ZERO,
            c1: Ival::point(3.0),
            c2: Ival::ratio(34, 25),
        })
    };
    let p = |k: i64| Ival::ratio(k, 17);
    PiecewiseMap::new(
        "nonlinear_nonmarkov",
        vec![
            Branch::new(affine(s, Ival::ZERO), Ival::ZERO, p(5))?,
            Branch::new(quad(p(5)), p(5), p(10))?,
            Branch::new(quad(p(10)), p(10), p(15))?,
            Branch::new(affine(s, Ival::point(-3.0)), p(15), Ival::ONE)?,
        ],
    )
}

/// `4x + eps sin(8 pi x) mod 1`, whose breaks stay at k/4.
pub fn perturbed_4x(eps: Rational) -> Result<PiecewiseMap> {
    let freq = Ival::pi() * 8.0;
    let amp = eps.to_ival();
    if !(amp * freq).precedes(Ival::point(3.0)) {
        return Err(Error::BadParameter {
            name: "eps".into(),
            detail: format!("{eps} is too large for the map to stay expanding"),
        });
    }
    let branches = (0..4)
        .map(|j| {
            let f = SinePerturbed {
                slope: Ival::point(4.0),
                amp,
                freq,
                shift: Ival::point(j as f64),
            };
            Branch::new(Arc::new(f), Ival::ratio(j, 4), Ival::ratio(j + 1, 4))
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseMap::new("perturbed_4x", branches)
}

/// `theta |x - 1/2|^alpha` left of 1/2, `1 - theta |x - 1/2|^alpha` right of it.
pub fn lorenz(theta: Rational, alpha: Rational) -> Result<PiecewiseMap> {
    if !(alpha.num > 0 && alpha.num < alpha.den) {
        return Err(Error::BadParameter {
            name: "alpha".into(),
            detail: format!("must lie in (0, 1), got {alpha}"),
        });
    }
    let side = |right: bool| -> Arc<dyn BranchFn> {
        Arc::new(LorenzSide {
            theta: theta.to_ival(),
            alpha,
            right,
        })
    };
    let half = Ival::point(0.5);
    PiecewiseMap::new(
        "lorenz",
        vec![
            Branch::new(side(false), Ival::ZERO, half)?,
            Branch::new(side(true), half, Ival::ONE)?,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing() {
        assert_eq!(Rational::parse("109/64").unwrap(), Rational { num: 109, den: 64 });
        assert_eq!(Rational::parse("0.01").unwrap(), Rational { num: 1, den: 100 });
        assert_eq!(Rational::parse("-2").unwrap(), Rational { num: -2, den: 1 });
        assert_eq!(Rational::parse("6/4").unwrap(), Rational { num: 3, den: 2 });
        assert!(Rational::parse("1/0").is_err());
        assert!(Rational::parse("abc").is_err());
    }

    #[test]
    fn catalog_maps_build() {
        for name in CATALOG {
            let d = if *name == "linear" {
                MapDescriptor::named(name).with_param("k", "3")
            } else {
                MapDescriptor::named(name)
            };
            let m = build_map(&d).unwrap();
            assert!(!m.branches().is_empty(), "{name}");
        }
        assert!(build_map(&MapDescriptor::named("tent")).is_err());
    }

    #[test]
    fn full_branch_flags() {
        assert!(lanford().unwrap().is_full_branch());
        assert!(!nonlinear_nonmarkov().unwrap().is_full_branch());
        assert!(perturbed_4x(Rational::new(1, 100).unwrap()).unwrap().is_full_branch());
    }

    #[test]
    fn lorenz_sides_are_decreasing() {
        let m = lorenz(Rational::new(109, 64).unwrap(), Rational::new(51, 64).unwrap()).unwrap();
        assert!(m.branches().iter().all(|b| !b.increasing()));
        assert!(m.min_expansion() > 1.5);
    }
}
