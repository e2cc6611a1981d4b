use super::Ival;
use crate::error::Result;

/// Default cap on the number of boxes examined by [`bound_range`].
pub const RANGE_BOX_BUDGET: usize = 1 << 16;

/// Two-sided enclosures of `inf f` and `sup f` over a domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeBound {
    pub inf: Ival,
    pub sup: Ival,
}

impl RangeBound {
    /// Certified enclosure of the whole range.
    pub fn hull(&self) -> Ival {
        Ival::raw(self.inf.lo(), self.sup.hi())
    }
}

struct Box1 {
    x: Ival,
    fx: Ival,
}

/// Encloses the infimum and supremum of `f` over `dom` by adaptive bisection.
///
/// Boxes whose enclosure cannot contain an extremum are dropped; the rest are
/// split until both enclosures are narrower than `tol`, the boxes get too
/// small to split, or [`RANGE_BOX_BUDGET`] evaluations have been spent. The
/// result is valid in every case, only its width depends on the stopping
/// reason.
pub fn bound_range<F>(f: F, dom: Ival, tol: f64) -> Result<RangeBound>
where
    F: Fn(Ival) -> Result<Ival>,
{
    let mut inf_hi = f64::INFINITY;
    let mut sup_lo = f64::NEG_INFINITY;
    // Point samples only tighten the inner bounds, so a sample that fails
    // (say, exactly on a singularity) is simply skipped.
    let sample = |x: f64, inf_hi: &mut f64, sup_lo: &mut f64| -> Result<()> {
        if let Ok(v) = f(Ival::point(x)) {
            *inf_hi = inf_hi.min(v.hi());
            *sup_lo = sup_lo.max(v.lo());
        }
        Ok(())
    };
    sample(dom.lo(), &mut inf_hi, &mut sup_lo)?;
    sample(dom.hi(), &mut inf_hi, &mut sup_lo)?;
    sample(dom.mid(), &mut inf_hi, &mut sup_lo)?;

    let mut boxes = vec![Box1 { x: dom, fx: f(dom)? }];
    let mut spent = 4usize;
    loop {
        let inf_lo = boxes.iter().map(|b| b.fx.lo()).fold(f64::INFINITY, f64::min);
        let sup_hi = boxes.iter().map(|b| b.fx.hi()).fold(f64::NEG_INFINITY, f64::max);
        let inf_done = inf_hi - inf_lo <= tol;
        let sup_done = sup_hi - sup_lo <= tol;
        if (inf_done && sup_done) || spent >= RANGE_BOX_BUDGET {
            return Ok(finish(inf_lo, inf_hi, sup_lo, sup_hi));
        }
        let mut next = Vec::with_capacity(boxes.len() * 2);
        let mut split_any = false;
        for b in boxes {
            let for_inf = b.fx.lo() <= inf_hi;
            let for_sup = b.fx.hi() >= sup_lo;
            if !for_inf && !for_sup {
                continue;
            }
            let wants = (for_inf && !inf_done && inf_hi - b.fx.lo() > tol)
                || (for_sup && !sup_done && b.fx.hi() - sup_lo > tol);
            let m = b.x.mid();
            let splittable = m > b.x.lo() && m < b.x.hi();
            if !wants || !splittable || spent >= RANGE_BOX_BUDGET {
                next.push(b);
                continue;
            }
            split_any = true;
            let (l, r) = b.x.split();
            sample(m, &mut inf_hi, &mut sup_lo)?;
            next.push(Box1 { x: l, fx: f(l)? });
            next.push(Box1 { x: r, fx: f(r)? });
            spent += 3;
        }
        boxes = next;
        if !split_any {
            let inf_lo = boxes.iter().map(|b| b.fx.lo()).fold(f64::INFINITY, f64::min);
            let sup_hi = boxes.iter().map(|b| b.fx.hi()).fold(f64::NEG_INFINITY, f64::max);
            return Ok(finish(inf_lo, inf_hi, sup_lo, sup_hi));
        }
    }
}

fn finish(inf_lo: f64, inf_hi: f64, sup_lo: f64, sup_hi: f64) -> RangeBound {
    RangeBound {
        inf: Ival::raw(inf_lo, inf_hi.max(inf_lo)),
        sup: Ival::raw(sup_lo.min(sup_hi), sup_hi),
    }
}
