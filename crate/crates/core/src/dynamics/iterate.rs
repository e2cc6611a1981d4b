use super::{pullback_nodes, Branch, PiecewiseMap};
use crate::error::{Error, Result};
use std::sync::Arc;

/// The `k`-th iterate of `map`, with branches formed by composition.
///
/// Branch domains of `T^k` are pulled back from the break points of `T`
/// through the branches of `T^(k-1)`; values and derivatives are then
/// evaluated stage by stage, so no closed form of the iterate is ever needed.
pub fn iterate(map: &PiecewiseMap, k: usize) -> Result<PiecewiseMap> {
    if k == 0 {
        return Err(Error::Precondition("iterate needs k >= 1".into()));
    }
    if k == 1 {
        return Ok(map.clone());
    }
    let base = map.branches();
    let mut breaks = Vec::with_capacity(base.len() + 1);
    breaks.push(base[0].left());
    for w in base.windows(2) {
        breaks.push(w[0].right().hull(w[1].left()));
    }
    breaks.push(base[base.len() - 1].right());

    let mut current: Vec<Branch> = base.to_vec();
    for _ in 1..k {
        let mut next = Vec::new();
        for b in &current {
            let pb = pullback_nodes(b, &breaks)?;
            for cell in pb.cells {
                let mut stages = b.stages().to_vec();
                stages.extend(base[cell.target].stages().iter().cloned());
                next.push(Branch::composed(stages, cell.left, cell.right)?);
            }
        }
        current = next;
    }
    let mut out = PiecewiseMap::new(format!("{}^{k}", map.name()), current)?;
    out.iterate_of = Some((Arc::new(map.clone()), k));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::catalog::{lanford, linear};

    #[test]
    fn first_iterate_is_the_map() {
        let m = linear(2).unwrap();
        let i = iterate(&m, 1).unwrap();
        assert_eq!(i.branches().len(), 2);
        assert!(i.iterate_of().is_none());
    }

    #[test]
    fn doubling_squared_has_slope_four() {
        let m = iterate(&linear(2).unwrap(), 2).unwrap();
        assert_eq!(m.branches().len(), 4);
        for b in m.branches() {
            let d = b.deriv(b.domain()).unwrap();
            assert!(d.contains(4.0) && d.width() == 0.0);
        }
        let edges: Vec<f64> = m.branches().iter().map(|b| b.left().mid()).collect();
        assert_eq!(edges, vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn lanford_squared_is_full_branch() {
        let m = iterate(&lanford().unwrap(), 2).unwrap();
        assert_eq!(m.branches().len(), 4);
        assert!(m.is_full_branch());
        assert_eq!(m.power(), 2);
    }

    #[test]
    fn zero_iterate_is_rejected() {
        assert!(iterate(&linear(2).unwrap(), 0).is_err());
    }
}
