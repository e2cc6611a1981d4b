use super::SchemeKind;
use crate::error::{Error, Result};
use crate::interval::round::{add_down, add_up, div_up, mul_down, mul_up, sub_up};
use crate::interval::Ival;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Sparse enclosure of the discretized operator, stored by rows.
///
/// Row `i` is the target cell (or node), column `j` the source. Besides the
/// enclosures we keep the floating midpoint matrix `M` used by all the
/// fast arithmetic, and the norms that bound how far it is from the truth.
#[derive(Clone, Debug)]
pub struct IntervalSparseMatrix {
    n: usize,
    scheme: SchemeKind,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    mid_ptr: Vec<usize>,
    mid_col: Vec<u32>,
    mid_val: Vec<f64>,
    delta: f64,
    z: usize,
    i_residual: f64,
    norm_mid: f64,
}

/// The JSON companion of an exported matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub n: usize,
    pub z: usize,
    pub delta: f64,
    pub i_residual: f64,
}

impl IntervalSparseMatrix {
    /// Builds the matrix from `(row, col, enclosure)` triples. Duplicates are
    /// summed in the order given, so the result only depends on that order.
    pub(crate) fn from_triples(
        n: usize,
        scheme: SchemeKind,
        mut triples: Vec<(u32, u32, Ival)>,
    ) -> Result<Self> {
        triples.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(triples.len());
        let mut lo = Vec::with_capacity(triples.len());
        let mut hi = Vec::with_capacity(triples.len());
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in triples {
            if i as usize >= n || j as usize >= n {
                return Err(Error::Precondition(format!("entry ({i}, {j}) outside an {n}x{n} matrix")));
            }
            if last == Some((i, j)) {
                let k = lo.len() - 1;
                lo[k] = add_down(lo[k], v.lo());
                hi[k] = add_up(hi[k], v.hi());
            } else {
                col.push(j);
                lo.push(v.lo());
                hi.push(v.hi());
                row_ptr[i as usize + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }

        // Midpoints. Entries whose enclosure reaches zero get midpoint zero
        // and are carried entirely by the radius.
        let mut mid_ptr = vec![0usize; n + 1];
        let mut mid_col = Vec::with_capacity(col.len());
        let mut mid_val = Vec::with_capacity(col.len());
        let mut rad = vec![0.0; col.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let e = Ival::raw(lo[k], hi[k]);
                if e.contains_zero() {
                    rad[k] = e.mag();
                } else {
                    let m = e.mid();
                    rad[k] = e.rad();
                    mid_col.push(col[k]);
                    mid_val.push(m);
                }
            }
            mid_ptr[i + 1] = mid_val.len();
        }
        let z = (0..n).map(|i| mid_ptr[i + 1] - mid_ptr[i]).max().unwrap_or(0);

        let mut out = IntervalSparseMatrix {
            n,
            scheme,
            row_ptr,
            col,
            lo,
            hi,
            mid_ptr,
            mid_col,
            mid_val,
            delta: 0.0,
            z,
            i_residual: 0.0,
            norm_mid: 0.0,
        };
        out.delta = out.scheme_norm(|k| rad[k]);
        let mids: Vec<f64> = {
            // absolute midpoint per enclosure slot, zero for dropped entries
            let mut v = vec![0.0; out.col.len()];
            for i in 0..n {
                let mut p = out.mid_ptr[i];
                for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                    if p < out.mid_ptr[i + 1] && out.mid_col[p] == out.col[k] {
                        v[k] = out.mid_val[p].abs();
                        p += 1;
                    }
                }
            }
            v
        };
        out.norm_mid = out.scheme_norm(|k| mids[k]);
        out.i_residual = out.integral_residual();
        Ok(out)
    }

    /// Operator norm bound of a nonnegative matrix given slot by slot:
    /// max column sum for the L1 scheme, max row sum for L-infinity.
    fn scheme_norm(&self, val: impl Fn(usize) -> f64) -> f64 {
        match self.scheme {
            SchemeKind::Ulam => {
                let mut sums = vec![0.0; self.n];
                for k in 0..self.col.len() {
                    let j = self.col[k] as usize;
                    sums[j] = add_up(sums[j], val(k));
                }
                sums.into_iter().fold(0.0, f64::max)
            }
            SchemeKind::Hat => (0..self.n)
                .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).fold(0.0, |s, k| add_up(s, val(k))))
                .fold(0.0, f64::max),
        }
    }

    /// Norm of the functional `f -> integral(f - L f)` on the discrete space.
    fn integral_residual(&self) -> f64 {
        let mut lo = vec![0.0; self.n];
        let mut hi = vec![0.0; self.n];
        for k in 0..self.col.len() {
            let j = self.col[k] as usize;
            lo[j] = add_down(lo[j], self.lo[k]);
            hi[j] = add_up(hi[j], self.hi[k]);
        }
        let dev = lo.iter().zip(&hi).map(|(&l, &h)| sub_up(1.0, l).max(sub_up(h, 1.0)).max(0.0));
        match self.scheme {
            SchemeKind::Ulam => dev.fold(0.0, f64::max),
            SchemeKind::Hat => div_up(dev.fold(0.0, add_up), self.n as f64),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    /// Bound on the scheme norm of the radius matrix.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Most nonzeros in a row of the midpoint matrix.
    pub fn z(&self) -> usize {
        self.z
    }

    pub fn i_residual(&self) -> f64 {
        self.i_residual
    }

    /// Upper bound on the scheme norm of the midpoint matrix.
    pub fn norm_mid(&self) -> f64 {
        self.norm_mid
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<Ival> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let k = self.col[r.clone()].binary_search(&(j as u32)).ok()?;
        let k = r.start + k;
        Some(Ival::raw(self.lo[k], self.hi[k]))
    }

    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, Ival)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col[k] as usize, Ival::raw(self.lo[k], self.hi[k])))
        })
    }

    /// Rows of the midpoint matrix as `(columns, values)`.
    pub fn mid_row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.mid_ptr[i]..self.mid_ptr[i + 1];
        (&self.mid_col[r.clone()], &self.mid_val[r])
    }

    /// `out = M v` in plain floating point.
    pub fn mid_matvec(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.mid_ptr[i]..self.mid_ptr[i + 1] {
                s += self.mid_val[k] * v[self.mid_col[k] as usize];
            }
            *o = s;
        }
    }

    /// Rigorous enclosure of `L v` for every `L` inside the matrix enclosure.
    pub fn enclose_matvec(&self, v: &[f64]) -> Vec<Ival> {
        (0..self.n)
            .map(|i| {
                let (mut lo, mut hi) = (0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let x = v[self.col[k] as usize];
                    let (a, b) = (self.lo[k], self.hi[k]);
                    let (l, h) = if x >= 0.0 {
                        (mul_down(a, x), mul_up(b, x))
                    } else {
                        (mul_down(b, x), mul_up(a, x))
                    };
                    lo = add_down(lo, l);
                    hi = add_up(hi, h);
                }
                Ival::raw(lo, hi)
            })
            .collect()
    }

    pub fn sidecar(&self) -> MatrixSidecar {
        MatrixSidecar {
            n: self.n,
            z: self.z,
            delta: self.delta,
            i_residual: self.i_residual,
        }
    }

    /// Writes `i j lo hi` lines to `coo` and the sidecar JSON next to it.
    pub fn export(&self, coo: &Path, sidecar: &Path) -> Result<()> {
        let f = std::fs::File::create(coo).map_err(|e| Error::io(coo, e))?;
        let mut w = std::io::BufWriter::new(f);
        for (i, j, v) in self.triples() {
            writeln!(w, "{i} {j} {:?} {:?}", v.lo(), v.hi()).map_err(|e| Error::io(coo, e))?;
        }
        w.flush().map_err(|e| Error::io(coo, e))?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(sidecar, json).map_err(|e| Error::io(sidecar, e))
    }
}
