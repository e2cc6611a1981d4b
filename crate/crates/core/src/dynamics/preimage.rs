//! Preimages of a sorted list of points under one monotone branch.
//!
//! Points strictly inside the branch image are located by interval Newton,
//! seeded by bisection: the middle point is solved first and brackets the
//! searches for its neighbours. Points whose enclosure touches the image of a
//! branch endpoint cannot be told apart from the endpoint itself; their
//! preimage is the endpoint widened inward by `diam / min|T'|`, which keeps
//! every derived cell measure rigorous.

use super::Branch;
use crate::error::{Error, Result};
use crate::interval::round::{add_up, div_up, sub_down};
use crate::interval::{interval_newton, Ival};

#[derive(Clone, Copy, Debug)]
pub(crate) struct PreimagePoint {
    pub x: Ival,
    /// Index of the node this point maps to, `None` for a bare endpoint.
    pub node: Option<usize>,
    /// The point sits at the right end of the branch domain.
    pub at_right: bool,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    pub left: Ival,
    pub right: Ival,
    /// `T(cell)` lies in `[nodes[target], nodes[target + 1]]`.
    pub target: usize,
}

pub(crate) struct BranchPullback {
    pub points: Vec<PreimagePoint>,
    pub cells: Vec<Cell>,
}

pub(crate) fn pullback_nodes(b: &Branch, nodes: &[Ival]) -> Result<BranchPullback> {
    let inc = b.increasing();
    let (img_l, img_r) = b.image();
    let (low, high) = if inc { (img_l, img_r) } else { (img_r, img_l) };

    let first = nodes.partition_point(|y| y.hi() < low.lo());
    let last = nodes.partition_point(|y| y.lo() <= high.hi());
    let mut at_low = None;
    let mut at_high = None;
    let mut inside = Vec::new();
    for (m, y) in nodes.iter().enumerate().take(last).skip(first) {
        let (tl, th) = (y.overlaps(low), y.overlaps(high));
        if tl && th {
            return Err(Error::InvalidMap(format!(
                "branch on {} has an image too narrow to resolve",
                b.domain()
            )));
        }
        if tl {
            if at_low.replace(m).is_some() {
                return Err(Error::InvalidMap("several nodes at one branch end".into()));
            }
        } else if th {
            if at_high.replace(m).is_some() {
                return Err(Error::InvalidMap("several nodes at one branch end".into()));
            }
        } else if low.hi() < y.lo() && y.hi() < high.lo() {
            inside.push(m);
        }
    }
    if !inc {
        inside.reverse();
        std::mem::swap(&mut at_low, &mut at_high);
    }
    // now `at_low` is the node at the left end of the domain, `at_high` at the right

    let (l, r) = (b.left(), b.right());
    let slope = b.min_slope();
    let widen = |y: Ival, img: Ival| -> Result<f64> {
        if slope <= 0.0 {
            return Err(Error::NonMonotone {
                lo: l.lo(),
                hi: r.hi(),
            });
        }
        Ok(div_up(y.hull(img).width(), slope))
    };

    let mut xs = vec![Ival::ZERO; inside.len()];
    solve_range(b, nodes, &inside, &mut xs, l.hull(r))?;

    let mut points = Vec::with_capacity(inside.len() + 4);
    points.push(PreimagePoint {
        x: l,
        node: None,
        at_right: false,
    });
    if let Some(m) = at_low {
        let dx = widen(nodes[m], img_l)?;
        let hi = add_up(l.hi(), dx).min(r.hi());
        points.push(PreimagePoint {
            x: Ival::raw(l.lo(), hi),
            node: Some(m),
            at_right: false,
        });
    }
    for (&m, &x) in inside.iter().zip(&xs) {
        points.push(PreimagePoint {
            x,
            node: Some(m),
            at_right: false,
        });
    }
    if let Some(m) = at_high {
        let dx = widen(nodes[m], img_r)?;
        let lo = sub_down(r.lo(), dx).max(l.lo());
        points.push(PreimagePoint {
            x: Ival::raw(lo, r.hi()),
            node: Some(m),
            at_right: true,
        });
    }
    points.push(PreimagePoint {
        x: r,
        node: None,
        at_right: true,
    });

    let cells = cells_of(&points, nodes, inc, low, high);
    Ok(BranchPullback { points, cells })
}

fn solve_range(b: &Branch, nodes: &[Ival], idx: &[usize], out: &mut [Ival], bracket: Ival) -> Result<()> {
    if idx.is_empty() {
        return Ok(());
    }
    let mid = idx.len() / 2;
    let x = interval_newton(|x| b.eval(x), |x| b.deriv(x), nodes[idx[mid]], bracket, 0.0)?;
    out[mid] = x;
    let (lo_out, rest) = out.split_at_mut(mid);
    solve_range(b, nodes, &idx[..mid], lo_out, Ival::raw(bracket.lo(), x.hi()))?;
    solve_range(b, nodes, &idx[mid + 1..], &mut rest[1..], Ival::raw(x.lo(), bracket.hi()))
}

fn cells_of(points: &[PreimagePoint], nodes: &[Ival], inc: bool, low: Ival, high: Ival) -> Vec<Cell> {
    let intervals = nodes.len().saturating_sub(1);
    // a branch whose whole image avoids every node lands in a single interval
    let enclosing = || -> Option<usize> {
        let k = nodes.partition_point(|y| y.hi() < low.lo());
        (k >= 1 && k < nodes.len() && high.hi() < nodes[k].lo()).then(|| k - 1)
    };
    let mut cells = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.x.is_point() && p.x == q.x {
            // a node hit exactly at the branch end: the cell is empty
            continue;
        }
        let (first, second) = if inc { (p.node, q.node) } else { (q.node, p.node) };
        let target = match (first, second) {
            (Some(m), _) => Some(m as isize),
            (None, Some(m)) => Some(m as isize - 1),
            (None, None) => enclosing().map(|k| k as isize),
        };
        if let Some(t) = target {
            if t >= 0 && (t as usize) < intervals {
                cells.push(Cell {
                    left: p.x,
                    right: q.x,
                    target: t as usize,
                });
            }
        }
    }
    cells
}
