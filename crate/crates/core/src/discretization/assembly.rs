use super::{IntervalSparseMatrix, Partition, SchemeKind};
use crate::dynamics::{pullback_nodes, PiecewiseMap};
use crate::error::Result;
use crate::interval::round::{mul_down, mul_up, sub_down, sub_up};
use crate::interval::Ival;
use rayon::prelude::*;

/// One piece of `T^{-1}(I_target)` inside a single branch.
#[derive(Clone, Copy, Debug)]
pub struct PullbackCell {
    pub left: Ival,
    pub right: Ival,
    pub branch: usize,
    pub target: usize,
}

/// Preimage of a sorted point set: the cells between consecutive preimages,
/// and the merged increasing sequence of preimage and branch-end points.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub cells: Vec<PullbackCell>,
    points: Vec<Ival>,
}

impl Pullback {
    /// Enclosures `x_0 <= ... <= x_N`, branch ends included, exact repeats
    /// merged.
    pub fn points(&self) -> &[Ival] {
        &self.points
    }
}

pub fn pullback(map: &PiecewiseMap, part: &Partition) -> Result<Pullback> {
    pullback_points(map, &part.nodes())
}

/// Pull-back of an arbitrary increasing sequence of enclosures in `[0, 1]`.
pub fn pullback_points(map: &PiecewiseMap, nodes: &[Ival]) -> Result<Pullback> {
    let mut cells = Vec::new();
    let mut points: Vec<Ival> = Vec::new();
    for (k, b) in map.branches().iter().enumerate() {
        let pb = pullback_nodes(b, nodes)?;
        for p in pb.points {
            if points.last() != Some(&p.x) {
                points.push(p.x);
            }
        }
        cells.extend(pb.cells.into_iter().map(|c| PullbackCell {
            left: c.left,
            right: c.right,
            branch: k,
            target: c.target,
        }));
    }
    Ok(Pullback { cells, points })
}

/// Interval enclosure of the discretized transfer operator.
///
/// Ulam: entry `(i, j)` encloses `|T^{-1}(I_i) ∩ I_j| / |I_j|`.
/// Hat: entry `(i, j)` encloses `sum over x in T^{-1}(a_i) of phi_j(x) / |T'(x)|`,
/// with node indices taken on the circle.
pub fn assemble(map: &PiecewiseMap, part: &Partition, scheme: SchemeKind) -> Result<IntervalSparseMatrix> {
    let nodes = part.nodes();
    let per_branch: Vec<Result<Vec<(u32, u32, Ival)>>> = map
        .branches()
        .par_iter()
        .map(|b| {
            let pb = pullback_nodes(b, &nodes)?;
            Ok(match scheme {
                SchemeKind::Ulam => ulam_entries(&pb.cells, part, &nodes),
                SchemeKind::Hat => {
                    let mut out = Vec::new();
                    for p in pb.points.iter().filter(|p| !p.at_right) {
                        let Some(m) = p.node else { continue };
                        let weight = b.deriv(p.x)?.abs().recip()?;
                        hat_entries(m % part.n(), p.x, weight, part, &mut out);
                    }
                    out
                }
            })
        })
        .collect();
    let mut triples = Vec::new();
    for t in per_branch {
        triples.extend(t?);
    }
    IntervalSparseMatrix::from_triples(part.n(), scheme, triples)
}

fn ulam_entries(cells: &[crate::dynamics::Cell], part: &Partition, nodes: &[Ival]) -> Vec<(u32, u32, Ival)> {
    let n = part.n();
    let nf = n as f64;
    let h_up = part.h().hi();
    let mut out = Vec::with_capacity(cells.len() * 2);
    for c in cells {
        let j0 = ((c.left.lo() * nf).floor().max(0.0) as usize).min(n - 1);
        let j1 = ((c.right.hi() * nf).ceil().max(1.0) as usize).min(n);
        for j in j0..j1 {
            let (a, b) = (nodes[j], nodes[j + 1]);
            let upper = sub_up(c.right.hi().min(b.hi()), c.left.lo().max(a.lo())).max(0.0);
            if upper == 0.0 {
                continue;
            }
            let lower = sub_down(c.right.lo().min(b.lo()), c.left.hi().max(a.hi())).max(0.0);
            let hi = mul_up(upper.min(h_up), nf).min(1.0);
            let lo = mul_down(lower, nf).min(hi);
            out.push((c.target as u32, j as u32, Ival::raw(lo, hi)));
        }
    }
    out
}

fn hat_entries(row: usize, x: Ival, weight: Ival, part: &Partition, out: &mut Vec<(u32, u32, Ival)>) {
    let n = part.n() as i64;
    let nf = n as f64;
    let j0 = (x.lo() * nf).floor() as i64;
    let j1 = (x.hi() * nf).ceil() as i64;
    for jj in j0..=j1 {
        let a = Ival::ratio(jj, n);
        let t = (x - a) * nf;
        let phi = (Ival::ONE - t.abs()).max(Ival::ZERO);
        if phi.hi() <= 0.0 {
            continue;
        }
        let col = jj.rem_euclid(n) as u32;
        out.push((row as u32, col, phi * weight));
    }
}

