//! Compressed sparse row storage, reverse Cuthill-McKee ordering and an
//! envelope (skyline) Cholesky factorization for the shift-invert solves.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row `(column, value)` lists; columns must be strictly
    /// increasing within a row.
    pub fn from_rows(n: usize, rows: &[Vec<(usize, f64)>]) -> Result<CsrMatrix> {
        if rows.len() != n {
            return Err(Error::validation(format!("{} rows given for dimension {n}", rows.len())));
        }
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            for (i, &(c, v)) in row.iter().enumerate() {
                if c >= n || (i > 0 && row[i - 1].0 >= c) {
                    return Err(Error::validation(format!("row {r}: columns must be increasing and < {n}")));
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { n, row_ptr, col_idx, values })
    }

    pub fn from_diagonal(diag: &[f64]) -> CsrMatrix {
        let rows: Vec<Vec<(usize, f64)>> = diag.iter().enumerate().map(|(i, &d)| vec![(i, d)]).collect();
        CsrMatrix::from_rows(diag.len(), &rows).expect("diagonal is well formed")
    }

    pub fn from_dense(a: &DMatrix<f64>) -> CsrMatrix {
        let n = a.nrows();
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| (0..n).filter(|&j| a[(i, j)] != 0.0).map(|j| (j, a[(i, j)])).collect())
            .collect();
        CsrMatrix::from_rows(n, &rows).expect("dense rows are ordered")
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y, exec);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64], exec: Execution) {
        assert_eq!(x.len(), self.n);
        par::fill(exec, y, |i| self.row(i).map(|(j, v)| v * x[j]).sum());
    }

    /// `D A D` for the diagonal `D = diag(scale)`; symmetric when `A` is.
    pub fn scaled_symmetric(&self, scale: &[f64], exec: Execution) -> CsrMatrix {
        let mut values = self.values.clone();
        let row_ptr = &self.row_ptr;
        let col_idx = &self.col_idx;
        let mut rows: Vec<&mut [f64]> = Vec::with_capacity(self.n);
        let mut rest = values.as_mut_slice();
        for i in 0..self.n {
            let (head, tail) = rest.split_at_mut(row_ptr[i + 1] - row_ptr[i]);
            rows.push(head);
            rest = tail;
        }
        par::for_each_mut(exec, &mut rows, |i, row| {
            for (p, v) in row.iter_mut().enumerate() {
                *v *= scale[i] * scale[col_idx[row_ptr[i] + p]];
            }
        });
        CsrMatrix { n: self.n, row_ptr: self.row_ptr.clone(), col_idx: self.col_idx.clone(), values }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// Matrix Market `coordinate real symmetric` text (lower triangle).
    pub fn to_matrix_market(&self) -> String {
        let lower: Vec<(usize, usize, f64)> =
            (0..self.n).flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v))).collect();
        let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        writeln!(out, "{} {} {}", self.n, self.n, lower.len()).unwrap();
        for (i, j, v) in lower {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v).unwrap();
        }
        out
    }

    pub fn from_matrix_market(text: &str) -> Result<CsrMatrix> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let banner = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
        let banner = banner.to_ascii_lowercase();
        if !banner.starts_with("%%matrixmarket matrix coordinate real") {
            return Err(Error::Parse(format!("unsupported banner {banner:?}")));
        }
        let symmetric = banner.ends_with("symmetric");
        let mut lines = lines.filter(|l| !l.starts_with('%'));
        let size: Vec<usize> = lines
            .next()
            .ok_or_else(|| Error::Parse("missing size line".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size token {t:?}"))))
            .collect::<Result<_>>()?;
        let [n, cols, _nnz] = size[..] else {
            return Err(Error::Parse("size line needs three integers".into()));
        };
        if n != cols {
            return Err(Error::Parse("matrix is not square".into()));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("bad entry {line:?}"));
            if f.len() != 3 {
                return Err(bad());
            }
            let i: usize = f[0].parse().map_err(|_| bad())?;
            let j: usize = f[1].parse().map_err(|_| bad())?;
            let v: f64 = f[2].parse().map_err(|_| bad())?;
            if i == 0 || j == 0 || i > n || j > n {
                return Err(bad());
            }
            rows[i - 1].push((j - 1, v));
            if symmetric && i != j {
                rows[j - 1].push((i - 1, v));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
        }
        CsrMatrix::from_rows(n, &rows)
    }
}

/// Reverse Cuthill-McKee ordering: `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dimension();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nb = Vec::new();
    while order.len() < n {
        // Start each component from a vertex of minimum degree.
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).unwrap();
        let start = pseudo_peripheral(a, start, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            nb.clear();
            nb.extend(a.row(x).map(|(j, _)| j).filter(|&j| !visited[j]));
            nb.sort_by_key(|&j| (degree[j], j));
            for &j in &nb {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// A vertex of (approximately) maximal eccentricity in the component of `start`.
fn pseudo_peripheral(a: &CsrMatrix, start: usize, degree: &[usize]) -> usize {
    let mut current = start;
    let mut depth = 0;
    for _ in 0..8 {
        let levels = bfs_levels(a, current);
        let max = *levels.iter().flatten().max().unwrap();
        if max <= depth && depth > 0 {
            break;
        }
        depth = max;
        current = (0..levels.len())
            .filter(|&i| levels[i] == Some(max))
            .min_by_key(|&i| degree[i])
            .unwrap();
    }
    current
}

fn bfs_levels(a: &CsrMatrix, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.dimension()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        let d = level[x].unwrap();
        for (j, _) in a.row(x) {
            if level[j].is_none() {
                level[j] = Some(d + 1);
                queue.push_back(j);
            }
        }
    }
    level
}

/// `P (A + shift I) Pᵀ = L Lᵀ` with `L` stored row-wise over its envelope.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each row of `L`.
    first: Vec<usize>,
    /// Offset of each row's values in `data`; the row runs `first..=i`.
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix, shift: f64) -> Result<EnvelopeCholesky> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_ordering(a, shift, perm)
    }

    pub fn factor_with_ordering(a: &CsrMatrix, shift: f64, perm: Vec<usize>) -> Result<EnvelopeCholesky> {
        let n = a.dimension();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = a.row(perm[i]).map(|(j, _)| inv[j]).filter(|&j| j <= i).min().unwrap_or(i).min(i);
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(perm[i]) {
                let jn = inv[j];
                if jn <= i {
                    data[start[i] + jn - first[i]] = v + if jn == i { shift } else { 0.0 };
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[start[i] + j - fi];
                let ri = &data[start[i] + k0 - fi..start[i] + j - fi];
                let rj = &data[start[j] + k0 - fj..start[j] + j - fj];
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    data[start[i] + j - fi] = s / data[start[j] + j - fj];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    data[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { n, perm, first, start, data })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Stored entries of `L`.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Solve `(A + shift I) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (l, x) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *x -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
