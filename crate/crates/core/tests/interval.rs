mod common;

use certimeasure::{bound_range, interval_newton, ival_arith, Ival, IvalOp};
use common::{all_ops, contains_rat, rat, trial};
use num::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn iv(lo: f64, hi: f64) -> Ival {
    Ival::new(lo, hi).unwrap()
}

#[test]
fn endpoint_examples() {
    let s = ival_arith(IvalOp::Add, iv(1.0, 2.0), Some(iv(3.0, 4.0))).unwrap();
    assert_eq!((s.lo(), s.hi()), (4.0, 6.0));
    let p = ival_arith(IvalOp::Mul, iv(-1.0, 1.0), Some(iv(-1.0, 1.0))).unwrap();
    assert_eq!((p.lo(), p.hi()), (-1.0, 1.0));
    let l = ival_arith(IvalOp::Log, iv(1.0, std::f64::consts::E), None).unwrap();
    assert!(l.lo() <= 0.0 && l.hi() >= 1.0, "{l:?}");
}

#[test]
fn range_examples() {
    let r = bound_range(|x| Ok(Ival::point(2.5) - x), iv(0.0, 1.0), 1e-9).unwrap();
    assert!(r.inf.lo() >= 1.5 - 1e-9 && r.inf.hi() >= 1.5 && r.inf.lo() <= 1.5);
    assert!(r.sup.contains(2.5) && r.sup.hi() <= 2.5 + 1e-9);
    let c = bound_range(|_| Ok(Ival::point(0.75)), iv(0.0, 1.0), 1e-9).unwrap();
    assert_eq!((c.inf.lo(), c.sup.hi()), (0.75, 0.75));
    let s = bound_range(|x| Ok(x.sin()), Ival::pi() * iv(0.0, 1.0), 1e-9).unwrap();
    assert!(s.sup.contains(1.0));
}

#[test]
fn newton_examples() {
    let sq = interval_newton(|x| Ok(x.sqr()), |x| Ok(x * 2.0), Ival::point(2.0), iv(1.0, 2.0), 1e-12).unwrap();
    assert!(sq.contains(std::f64::consts::SQRT_2) && sq.width() <= 1e-12);
    // the exact root squared to 2 must sit in the enclosure squared
    assert!(contains_rat(sq.sqr(), &rat(2.0)));

    let q = interval_newton(|x| Ok(x * 2.0), |_| Ok(Ival::point(2.0)), Ival::point(0.5), iv(0.0, 0.5), 0.0).unwrap();
    assert!(q.contains(0.25));

    let third = BigRational::new(1.into(), 3.into());
    let x0 = iv(0.0, 1.0 / 3.0 + 1e-3);
    let t = interval_newton(|x| Ok(x * 3.0), |_| Ok(Ival::point(3.0)), Ival::point(1.0), x0, 0.0).unwrap();
    assert!(contains_rat(t, &third), "{t:?}");
    let ulp = (1.0f64 / 3.0).next_up() - 1.0 / 3.0;
    assert!(t.width() <= 4.0 * ulp, "{t:?}");
}

#[test]
fn seeded_containment_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for op in all_ops() {
        for _ in 0..5_000 {
            trial(&mut rng, op).unwrap();
        }
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        -1.0f64..1.0,
        (-1.0f64..1.0, -300i32..300).prop_map(|(m, e)| m * 2f64.powi(e)),
    ]
}

fn interval() -> impl Strategy<Value = Ival> {
    (finite(), finite()).prop_map(|(a, b)| iv(a.min(b), a.max(b)))
}

proptest! {
    #[test]
    fn sums_and_products_hold_exact_results(a in interval(), b in interval(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let x = (a.lo() + s * (a.hi() - a.lo())).clamp(a.lo(), a.hi());
        let y = (b.lo() + t * (b.hi() - b.lo())).clamp(b.lo(), b.hi());
        prop_assert!(contains_rat(a + b, &(rat(x) + rat(y))));
        prop_assert!(contains_rat(a - b, &(rat(x) - rat(y))));
        prop_assert!(contains_rat(a * b, &(rat(x) * rat(y))));
        if !b.contains_zero() {
            prop_assert!(contains_rat(a.div(b).unwrap(), &(rat(x) / rat(y))));
        }
    }

    #[test]
    fn hull_and_split_cover(a in interval()) {
        let (l, r) = a.split();
        prop_assert!(l.subset_of(a) && r.subset_of(a));
        prop_assert_eq!(l.hull(r), a);
    }

    #[test]
    fn newton_encloses_rational_preimages(p in 1i64..1000, q in 2i64..1000, k in 2i64..9) {
        // x -> k x - j on [j/k, (j+1)/k] hits p/q at (p/q + j)/k
        prop_assume!(p < q);
        let j = p % k;
        let target = Ival::ratio(p, q);
        let x0 = Ival::ratio(j, k).hull(Ival::ratio(j + 1, k));
        let kk = Ival::point(k as f64);
        let x = interval_newton(|x| Ok(kk * x - j as f64), |_| Ok(kk), target, x0, 0.0).unwrap();
        let exact = (BigRational::new(p.into(), q.into()) + BigRational::from_integer(j.into()))
            / BigRational::from_integer(k.into());
        prop_assert!(contains_rat(x, &exact));
    }
}
