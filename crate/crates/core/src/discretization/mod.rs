//! Ulam and hat-function discretizations of the transfer operator.

mod assembly;
mod matrix;

pub use assembly::{assemble, pullback, pullback_points, Pullback, PullbackCell};
pub use matrix::{IntervalSparseMatrix, MatrixSidecar};

use crate::error::{Error, Result};
use crate::interval::Ival;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Piecewise constant densities, errors measured in L1.
    Ulam,
    /// Piecewise linear densities on the circle, errors measured in L-infinity.
    Hat,
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ulam" => Ok(SchemeKind::Ulam),
            "hat" => Ok(SchemeKind::Hat),
            other => Err(Error::BadParameter {
                name: "scheme".into(),
                detail: format!("unknown scheme `{other}` (expected ulam or hat)"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakNorm {
    L1,
    Linf,
}

/// Approximation constants of a scheme:
/// `|P_h f - f| <= K h |f|_s`, `|P_h f|_s <= |f|_s + E h ...`,
/// `|f|_s <= M / h^alpha |f|` on the discrete space, and the split
/// `S1 R1 + S2 R2` of the a-priori power bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    pub k: f64,
    pub e: f64,
    pub m: f64,
    pub alpha: f64,
    pub s1: f64,
    pub s2: f64,
    pub weak_norm: WeakNorm,
}

pub fn scheme_constants(scheme: SchemeKind) -> SchemeConstants {
    match scheme {
        SchemeKind::Ulam => SchemeConstants {
            k: 0.5,
            e: 0.0,
            m: 2.0,
            alpha: 1.0,
            s1: 0.0,
            s2: 1.0,
            weak_norm: WeakNorm::L1,
        },
        SchemeKind::Hat => SchemeConstants {
            k: 0.5,
            e: 0.5,
            m: 2.0,
            alpha: 1.0,
            s1: 1.0,
            s2: 1.0,
            weak_norm: WeakNorm::Linf,
        },
    }
}

/// `n` equal cells of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
}

impl Partition {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("a partition needs n >= 2, got {n}")));
        }
        if n > (1 << 30) {
            return Err(Error::Precondition(format!("n = {n} is too large")));
        }
        Ok(Partition { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Enclosure of the mesh size.
    pub fn h(&self) -> Ival {
        Ival::ratio(1, self.n as i64)
    }

    /// Enclosure of the node `j / n`, exact when `n` is a power of two.
    pub fn node(&self, j: usize) -> Ival {
        Ival::ratio(j as i64, self.n as i64)
    }

    /// All `n + 1` nodes, `0` and `1` included.
    pub fn nodes(&self) -> Vec<Ival> {
        (0..=self.n).map(|j| self.node(j)).collect()
    }
}
