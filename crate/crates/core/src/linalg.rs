//! Dense and banded matrices with LU factorization by partial pivoting.

use std::ops::{Index, IndexMut};

use thiserror::Error;

const PIVOT_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (column {column})")]
    Singular { column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("LU factorization needs a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            *o = dot(row, x);
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a != 0.0 {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `I - k A`.
    pub fn shifted_identity(&self, k: f64) -> DenseMatrix {
        assert_eq!(self.rows, self.cols);
        let mut m = self.scaled(-k);
        for i in 0..self.rows {
            m[(i, i)] += 1.0;
        }
        m
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `PA = LU` with unit-diagonal `L` stored below the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors, LinalgError> {
    lu_factor_owned(a.clone())
}

pub fn lu_factor_owned(mut a: DenseMatrix) -> Result<LuFactors, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if !(pmax > PIVOT_FLOOR) {
            return Err(LinalgError::Singular { column: k });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
        }
        let (head, tail) = a.data.split_at_mut((k + 1) * n);
        let pivot_row = &head[k * n..(k + 1) * n];
        let pivot = pivot_row[k];
        for row in tail.chunks_exact_mut(n) {
            let l = row[k] / pivot;
            row[k] = l;
            if l != 0.0 {
                axpy(-l, &pivot_row[k + 1..], &mut row[k + 1..]);
            }
        }
    }
    Ok(LuFactors { lu: a, perm })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        })
    }

    pub fn upper(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| if i <= j { self.lu[(i, j)] } else { 0.0 })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), LinalgError> {
        let n = self.dim();
        if x.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let b: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        x.copy_from_slice(&b);
        for i in 0..n {
            let row = self.lu.row(i);
            x[i] -= dot(&row[..i], &x[..i]);
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        Ok(())
    }
}

pub fn lu_solve(factors: &LuFactors, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    factors.solve(b)
}

/// Square matrix with `kl` sub- and `ku` superdiagonals. Rows are stored
/// over the window `[i - kl, i + ku + kl]` so pivoting fill stays in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// Band of `a` with the smallest `kl`, `ku` covering its nonzeros.
    pub fn from_dense(a: &DenseMatrix) -> Self {
        assert_eq!(a.rows, a.cols, "banded matrices are square");
        let n = a.rows;
        let (mut kl, mut ku) = (0, 0);
        for i in 0..n {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    if j < i {
                        kl = kl.max(i - j);
                    } else {
                        ku = ku.max(j - i);
                    }
                }
            }
        }
        let mut b = Self::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                b.set(i, j, a[(i, j)]);
            }
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// Zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "({i}, {j}) outside the band"
        );
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            let row = &self.data[self.slot(i, lo)..self.slot(i, lo) + (hi - lo)];
            *o = dot(row, &x[lo..hi]);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    /// `I - k A`.
    pub fn shifted_identity(&self, k: f64) -> BandedMatrix {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= -k;
        }
        for i in 0..self.n {
            let s = m.slot(i, i);
            m.data[s] += 1.0;
        }
        m
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Banded `PA = LU`; row interchanges are applied in sequence, as in LAPACK `gbtrf`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLu {
    u: BandedMatrix,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

pub fn banded_lu_factor(mut a: BandedMatrix) -> Result<BandedLu, LinalgError> {
    let (n, kl, ku) = (a.n, a.kl, a.ku);
    let mut multipliers = vec![0.0; n * kl.max(1)];
    let mut pivots = vec![0; n];
    for j in 0..n {
        let last_row = (j + kl).min(n - 1);
        let last_col = (j + kl + ku).min(n - 1);
        let (p, pmax) = (j..=last_row)
            .map(|i| (i, a.data[a.slot(i, j)].abs()))
            .fold(
                (j, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if !(pmax > PIVOT_FLOOR) {
            return Err(LinalgError::Singular { column: j });
        }
        pivots[j] = p;
        if p != j {
            for c in j..=last_col {
                let (sj, sp) = (a.slot(j, c), a.slot(p, c));
                a.data.swap(sj, sp);
            }
        }
        let pivot = a.data[a.slot(j, j)];
        for i in j + 1..=last_row {
            let si = a.slot(i, j);
            let m = a.data[si] / pivot;
            a.data[si] = 0.0;
            multipliers[j * kl + (i - j - 1)] = m;
            if m != 0.0 {
                let (rj, ri) = (a.slot(j, j + 1), a.slot(i, j + 1));
                let len = last_col - j;
                for t in 0..len {
                    a.data[ri + t] -= m * a.data[rj + t];
                }
            }
        }
    }
    Ok(BandedLu {
        u: a,
        multipliers,
        pivots,
    })
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.u.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), LinalgError> {
        let (n, kl, ku) = (self.u.n, self.u.kl, self.u.ku);
        if x.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        for j in 0..n {
            x.swap(j, self.pivots[j]);
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..=(j + kl).min(n - 1) {
                    x[i] -= self.multipliers[j * kl + (i - j - 1)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let hi = (j + kl + ku).min(n - 1);
            let start = self.u.slot(j, j);
            let row = &self.u.data[start..start + (hi - j + 1)];
            let s = dot(&row[1..], &x[j + 1..=hi]);
            x[j] = (x[j] - s) / row[0];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}
