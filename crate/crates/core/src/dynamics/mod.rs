//! Piecewise monotone maps of the circle, their iterates, and the
//! Lasota-Yorke constants that feed the error bounds.

pub mod catalog;
mod iterate;
mod lasota_yorke;
mod preimage;

pub use catalog::{build_map, MapDescriptor, CATALOG};
pub use iterate::iterate;
pub use lasota_yorke::{
    dfly_coefficients, distortion_bound, strong_norm_bound, LyCoefficients, LyVariant,
    StrongSpace,
};
pub(crate) use preimage::{pullback_nodes, Cell};

use crate::error::{Error, Result};
use crate::interval::{bound_range, Ival};
use std::fmt;
use std::sync::Arc;

/// One monotone piece of a map, already including its mod-1 shift.
pub trait BranchFn: Send + Sync + fmt::Debug {
    fn eval(&self, x: Ival) -> Result<Ival>;
    fn deriv(&self, x: Ival) -> Result<Ival>;
    fn deriv2(&self, x: Ival) -> Result<Ival>;

    /// Signed distortion `T'' / T'^2`.
    fn distortion(&self, x: Ival) -> Result<Ival> {
        self.deriv2(x)?.div(self.deriv(x)?.sqr())
    }

    /// Closed form of `|T''/T'^2|` when it blows up like a power, which lets
    /// integrals of the distortion be bounded across the singularity.
    fn singularity(&self) -> Option<PowerSingularity> {
        None
    }
}

/// `|T''(y) / T'(y)^2| = coeff * |y - center|^(-exponent)` on the branch.
#[derive(Clone, Copy, Debug)]
pub struct PowerSingularity {
    pub center: Ival,
    pub coeff: Ival,
    pub exponent: Ival,
}

/// Values and derivatives along the stages of a composed branch.
pub(crate) struct Trajectory {
    /// `y[j]` is the input to stage `j`; `y[0] = x`.
    pub y: Vec<Ival>,
    pub d: Vec<Ival>,
}

/// A monotone branch on the domain `[left, right]`, possibly the
/// composition of several base branches (applied first to last).
#[derive(Clone)]
pub struct Branch {
    stages: Vec<Arc<dyn BranchFn>>,
    left: Ival,
    right: Ival,
    increasing: bool,
    image: (Ival, Ival),
    min_slope: f64,
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("left", &self.left)
            .field("right", &self.right)
            .field("increasing", &self.increasing)
            .field("image", &self.image)
            .field("stages", &self.stages.len())
            .finish()
    }
}

impl Branch {
    pub fn new(func: Arc<dyn BranchFn>, left: Ival, right: Ival) -> Result<Self> {
        Self::composed(vec![func], left, right)
    }

    pub(crate) fn composed(stages: Vec<Arc<dyn BranchFn>>, left: Ival, right: Ival) -> Result<Self> {
        if !(left.lo() < right.hi()) {
            return Err(Error::InvalidMap(format!("empty branch domain {left}..{right}")));
        }
        let mut b = Branch {
            stages,
            left,
            right,
            increasing: true,
            image: (Ival::ZERO, Ival::ZERO),
            min_slope: 0.0,
        };
        let dom = b.domain();
        let signed = bound_range(|x| b.deriv(x), dom, 1e-9)?;
        if signed.inf.lo() > 0.0 {
            b.increasing = true;
            b.min_slope = signed.inf.lo();
        } else if signed.sup.hi() < 0.0 {
            b.increasing = false;
            b.min_slope = -signed.sup.hi();
        } else {
            return Err(Error::NonMonotone {
                lo: dom.lo(),
                hi: dom.hi(),
            });
        }
        b.image = (b.eval(left)?, b.eval(right)?);
        Ok(b)
    }

    pub fn left(&self) -> Ival {
        self.left
    }

    pub fn right(&self) -> Ival {
        self.right
    }

    pub fn domain(&self) -> Ival {
        self.left.hull(self.right)
    }

    /// Certified lower bound on the branch length.
    pub fn min_length(&self) -> f64 {
        crate::interval::round::sub_down(self.right.lo(), self.left.hi()).max(0.0)
    }

    pub fn increasing(&self) -> bool {
        self.increasing
    }

    /// Enclosures of `T(left)` and `T(right)`.
    pub fn image(&self) -> (Ival, Ival) {
        self.image
    }

    /// Certified lower bound on `|T'|` over the domain.
    pub fn min_slope(&self) -> f64 {
        self.min_slope
    }

    pub fn stages(&self) -> &[Arc<dyn BranchFn>] {
        &self.stages
    }

    pub fn eval(&self, x: Ival) -> Result<Ival> {
        self.stages.iter().try_fold(x, |y, s| s.eval(y))
    }

    pub(crate) fn trajectory(&self, x: Ival) -> Result<Trajectory> {
        let mut y = Vec::with_capacity(self.stages.len() + 1);
        let mut d = Vec::with_capacity(self.stages.len());
        y.push(x);
        for s in &self.stages {
            let cur = *y.last().unwrap();
            d.push(s.deriv(cur)?);
            y.push(s.eval(cur)?);
        }
        Ok(Trajectory { y, d })
    }

    pub fn deriv(&self, x: Ival) -> Result<Ival> {
        if self.stages.len() == 1 {
            return self.stages[0].deriv(x);
        }
        let t = self.trajectory(x)?;
        Ok(t.d.iter().fold(Ival::ONE, |acc, &d| acc * d))
    }

    /// Signed distortion of the composition:
    /// `sum_j dist_j(y_j) / prod_{i > j} T_i'(y_i)`.
    pub fn distortion(&self, x: Ival) -> Result<Ival> {
        if self.stages.len() == 1 {
            return self.stages[0].distortion(x);
        }
        let t = self.trajectory(x)?;
        let mut total = Ival::ZERO;
        let mut tail = Ival::ONE;
        for j in (0..self.stages.len()).rev() {
            total = total + self.stages[j].distortion(t.y[j])?.div(tail)?;
            tail = tail * t.d[j];
        }
        Ok(total)
    }

    pub fn deriv2(&self, x: Ival) -> Result<Ival> {
        if self.stages.len() == 1 {
            return self.stages[0].deriv2(x);
        }
        Ok(self.distortion(x)? * self.deriv(x)?.sqr())
    }
}

/// A map of `[0, 1)` given by an ordered list of monotone branches.
#[derive(Clone, Debug)]
pub struct PiecewiseMap {
    name: String,
    branches: Vec<Branch>,
    full_branch: bool,
    iterate_of: Option<(Arc<PiecewiseMap>, usize)>,
}

impl PiecewiseMap {
    /// Checks that the branch domains tile `[0, 1]`.
    pub fn new(name: impl Into<String>, branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidMap("no branches".into()));
        }
        if !branches[0].left.contains(0.0) || !branches.last().unwrap().right.contains(1.0) {
            return Err(Error::InvalidMap("branches do not cover [0, 1]".into()));
        }
        for (k, w) in branches.windows(2).enumerate() {
            if !w[0].right.overlaps(w[1].left) {
                return Err(Error::InvalidMap(format!(
                    "gap between branch {k} (ends at {}) and branch {} (starts at {})",
                    w[0].right,
                    k + 1,
                    w[1].left
                )));
            }
        }
        let full_branch = branches.iter().all(|b| {
            let (a, c) = b.image;
            (a.contains(0.0) && c.contains(1.0)) || (a.contains(1.0) && c.contains(0.0))
        });
        Ok(PiecewiseMap {
            name: name.into(),
            branches,
            full_branch,
            iterate_of: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_full_branch(&self) -> bool {
        self.full_branch
    }

    pub fn iterate_of(&self) -> Option<(&PiecewiseMap, usize)> {
        self.iterate_of.as_ref().map(|(m, k)| (m.as_ref(), *k))
    }

    /// How many base steps one application of this map stands for.
    pub fn power(&self) -> usize {
        self.iterate_of.as_ref().map_or(1, |(_, k)| *k)
    }

    /// Certified lower bound on `|T'|` over all branches.
    pub fn min_expansion(&self) -> f64 {
        self.branches.iter().map(|b| b.min_slope).fold(f64::INFINITY, f64::min)
    }

    /// Index of a branch whose domain contains `x` (the right one at junctions).
    pub fn branch_at(&self, x: f64) -> usize {
        self.branches
            .iter()
            .rposition(|b| b.left.lo() <= x)
            .unwrap_or(0)
    }

    /// Evaluates the map at a point, reduced to `[0, 1)` in floating point.
    /// Meant for diagnostics and plots, not for certified work.
    pub fn eval_approx(&self, x: f64) -> f64 {
        let b = &self.branches[self.branch_at(x)];
        match b.eval(Ival::point(x)) {
            Ok(y) => y.mid().rem_euclid(1.0),
            Err(_) => f64::NAN,
        }
    }
}
