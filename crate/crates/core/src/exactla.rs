//! Exact sparse linear algebra over the rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lin::{fmt_q, parse_q, Q};

type Row = BTreeMap<usize, Q>;

/// Sparse matrix with exact rational entries. No zero is ever stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Row>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, data: vec![Row::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].insert(i, Q::one());
        }
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets. Zero values are
    /// dropped; duplicates and out-of-range indices are rejected.
    pub fn from_triplets(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize, Q)>) -> Result<Self> {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in entries {
            if r >= rows || c >= cols {
                return Err(Error::Dimension(format!("entry ({r}, {c}) outside {rows}x{cols}")));
            }
            if m.data[r].contains_key(&c) {
                return Err(Error::InvalidInput(format!("duplicate entry ({r}, {c})")));
            }
            if !v.is_zero() {
                m.data[r].insert(c, v);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> Q {
        self.data[r].get(&c).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `v` to entry `(r, c)`.
    pub fn add_to(&mut self, r: usize, c: usize, v: Q) {
        let e = self.data[r].entry(c).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            self.data[r].remove(&c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.data.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, c, v) in self.entries() {
            t.data[c].insert(r, v.clone());
        }
        t
    }

    pub fn mul_vec(&self, x: &[Q]) -> Result<Vec<Q>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("vector of length {} against {} columns", x.len(), self.cols)));
        }
        Ok(self
            .data
            .iter()
            .map(|row| {
                let mut s = Q::zero();
                for (c, v) in row {
                    if !x[*c].is_zero() {
                        s += v * &x[*c];
                    }
                }
                s
            })
            .collect())
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            for (k, a) in row {
                for (c, b) in &other.data[*k] {
                    out.add_to(r, *c, a * b);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("shape mismatch in subtraction".into()));
        }
        let mut out = self.clone();
        for (r, c, v) in other.entries() {
            out.add_to(r, c, -v.clone());
        }
        Ok(out)
    }

    /// Returns the matrix with rows and columns permuted: entry `(r, c)` moves
    /// to `(row_perm[r], col_perm[c])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> SparseMatrix {
        let mut out = Self::zeros(self.rows, self.cols);
        for (r, c, v) in self.entries() {
            out.data[row_perm[r]].insert(col_perm[c], v.clone());
        }
        out
    }

    /// Column `c` as a dense vector.
    pub fn column(&self, c: usize) -> Vec<Q> {
        self.data.iter().map(|row| row.get(&c).cloned().unwrap_or_else(Q::zero)).collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension("row counts differ in hcat".into()));
        }
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for (r, c, v) in self.entries() {
            out.data[r].insert(c, v.clone());
        }
        for (r, c, v) in other.entries() {
            out.data[r].insert(self.cols + c, v.clone());
        }
        Ok(out)
    }

    /// Builds a matrix whose columns are the given dense vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<Q>]) -> Result<SparseMatrix> {
        let mut out = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::Dimension("column length".into()));
            }
            for (r, v) in col.iter().enumerate() {
                if !v.is_zero() {
                    out.data[r].insert(c, v.clone());
                }
            }
        }
        Ok(out)
    }

    /// Exact rank by sparse elimination with Markowitz pivoting. Ties are
    /// broken by lowest column, then lowest row.
    pub fn rank(&self) -> usize {
        let mut rows: Vec<Row> = self.data.clone();
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.cols];
        for (r, row) in rows.iter().enumerate() {
            for c in row.keys() {
                col_rows[*c].insert(r);
            }
        }
        let mut rank = 0;
        loop {
            let mut best: Option<(usize, usize, usize)> = None;
            for (c, rs) in col_rows.iter().enumerate() {
                if rs.is_empty() {
                    continue;
                }
                let cc = rs.len() - 1;
                for &r in rs {
                    let cost = (rows[r].len() - 1) * cc;
                    let better = match best {
                        None => true,
                        Some((bc, _, _)) => cost < bc,
                    };
                    if better {
                        best = Some((cost, c, r));
                    }
                }
                if let Some((0, _, _)) = best {
                    break;
                }
            }
            let Some((_, pc, pr)) = best else { break };
            rank += 1;
            let pivot_row = std::mem::take(&mut rows[pr]);
            for c in pivot_row.keys() {
                col_rows[*c].remove(&pr);
            }
            let pv = pivot_row[&pc].clone();
            let targets: Vec<usize> = col_rows[pc].iter().copied().collect();
            for t in targets {
                let factor = &rows[t][&pc] / &pv;
                for (c, v) in &pivot_row {
                    let e = rows[t].entry(*c).or_insert_with(Q::zero);
                    let was_zero = e.is_zero();
                    *e -= &factor * v;
                    if e.is_zero() {
                        rows[t].remove(c);
                        col_rows[*c].remove(&t);
                    } else if was_zero {
                        col_rows[*c].insert(t);
                    }
                }
            }
        }
        rank
    }

    /// Reduced row echelon form, optionally carrying a right-hand side.
    fn rref(&self, rhs: Option<&[Q]>) -> Rref {
        let mut rows: Vec<Row> = self.data.clone();
        let mut b: Vec<Q> = match rhs {
            Some(v) => v.to_vec(),
            None => vec![Q::zero(); self.rows],
        };
        let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.cols];
        for (r, row) in rows.iter().enumerate() {
            for c in row.keys() {
                col_rows[*c].insert(r);
            }
        }
        let mut used = vec![false; self.rows];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for c in 0..self.cols {
            let pr = col_rows[c]
                .iter()
                .copied()
                .filter(|r| !used[*r])
                .min_by_key(|r| (rows[*r].len(), *r));
            let Some(pr) = pr else { continue };
            used[pr] = true;
            let inv = Q::one() / &rows[pr][&c];
            for v in rows[pr].values_mut() {
                *v *= &inv;
            }
            b[pr] *= &inv;
            let pivot_row = rows[pr].clone();
            let pb = b[pr].clone();
            let targets: Vec<usize> = col_rows[c].iter().copied().filter(|t| *t != pr).collect();
            for t in targets {
                let factor = rows[t][&c].clone();
                for (cc, v) in &pivot_row {
                    let e = rows[t].entry(*cc).or_insert_with(Q::zero);
                    let was_zero = e.is_zero();
                    *e -= &factor * v;
                    if e.is_zero() {
                        rows[t].remove(cc);
                        col_rows[*cc].remove(&t);
                    } else if was_zero {
                        col_rows[*cc].insert(t);
                    }
                }
                let delta = &factor * &pb;
                b[t] -= delta;
            }
            pivots.push((c, pr));
        }
        let inconsistent = (0..self.rows).any(|r| !used[r] && rows[r].is_empty() && !b[r].is_zero());
        Rref { pivots, rows, b, inconsistent }
    }

    /// Basis of the right kernel, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<Q>> {
        let rr = self.rref(None);
        let pivot_cols: BTreeSet<usize> = rr.pivots.iter().map(|(c, _)| *c).collect();
        let mut out = Vec::new();
        for f in 0..self.cols {
            if pivot_cols.contains(&f) {
                continue;
            }
            let mut v = vec![Q::zero(); self.cols];
            v[f] = Q::one();
            for (pc, pr) in &rr.pivots {
                if let Some(x) = rr.rows[*pr].get(&f) {
                    v[*pc] = -x.clone();
                }
            }
            out.push(v);
        }
        out
    }

    /// Some `x` with `M x = b`, or `None` when `b` is not in the image.
    pub fn solve_in_image(&self, b: &[Q]) -> Result<Option<Vec<Q>>> {
        if b.len() != self.rows {
            return Err(Error::Dimension(format!("right-hand side of length {} against {} rows", b.len(), self.rows)));
        }
        let rr = self.rref(Some(b));
        if rr.inconsistent {
            return Ok(None);
        }
        let mut x = vec![Q::zero(); self.cols];
        for (pc, pr) in &rr.pivots {
            x[*pc] = rr.b[*pr].clone();
        }
        Ok(Some(x))
    }

    /// Text dump: `matrix <rows> <cols>` then one `<row> <col> <num>/<den>` line per entry.
    pub fn dump(&self) -> String {
        let mut s = format!("matrix {} {}\n", self.rows, self.cols);
        for (r, c, v) in self.entries() {
            let _ = writeln!(s, "{} {} {}", r, c, fmt_q(v));
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<SparseMatrix> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Syntax { line: 1, col: 1, msg: "empty matrix dump".into() })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "matrix" {
            return Err(Error::Syntax { line: 1, col: 1, msg: "expected `matrix <rows> <cols>`".into() });
        }
        let bad = |i: usize, msg: &str| Error::Syntax { line: i + 1, col: 1, msg: msg.into() };
        let rows: usize = h[1].parse().map_err(|_| bad(0, "bad row count"))?;
        let cols: usize = h[2].parse().map_err(|_| bad(0, "bad column count"))?;
        let mut trip = Vec::new();
        for (i, l) in lines {
            let p: Vec<&str> = l.split_whitespace().collect();
            if p.len() != 3 {
                return Err(bad(i, "expected `<row> <col> <num>/<den>`"));
            }
            let r: usize = p[0].parse().map_err(|_| bad(i, "bad row"))?;
            let c: usize = p[1].parse().map_err(|_| bad(i, "bad col"))?;
            let v = parse_q(p[2]).ok_or_else(|| bad(i, "bad rational"))?;
            trip.push((r, c, v));
        }
        SparseMatrix::from_triplets(rows, cols, trip)
    }
}

struct Rref {
    pivots: Vec<(usize, usize)>,
    rows: Vec<Row>,
    b: Vec<Q>,
    inconsistent: bool,
}
