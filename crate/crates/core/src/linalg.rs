//! Small dense linear algebra over a [`Scalar`]: determinants, inverses and
//! minimum-norm solutions of consistent systems.
//!
//! Exact scalars pivot on the first nonzero entry; floating scalars use
//! partial pivoting and a relative zero threshold.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<S>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone());
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

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j).clone() + a.clone() * other.get(k, j).clone();
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(S::zero(), |acc, j| {
                    acc + self.get(i, j).clone() * v[j].clone()
                })
            })
            .collect()
    }

    /// Largest absolute entry as a double.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn pivot_row(&self, col: usize, from: usize, scale: f64) -> Option<usize> {
        if S::EXACT {
            (from..self.rows).find(|&i| !self.get(i, col).is_zero())
        } else {
            let best = (from..self.rows).max_by(|&a, &b| {
                self.get(a, col)
                    .to_f64()
                    .abs()
                    .partial_cmp(&self.get(b, col).to_f64().abs())
                    .unwrap()
            })?;
            if self.get(best, col).is_negligible(scale) {
                None
            } else {
                Some(best)
            }
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Determinant of a square matrix.
    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot = if S::EXACT {
                (col..n).find(|&i| !a.get(i, col).is_zero())
            } else {
                (col..n).max_by(|&x, &y| {
                    a.get(x, col)
                        .to_f64()
                        .abs()
                        .partial_cmp(&a.get(y, col).to_f64().abs())
                        .unwrap()
                })
            };
            let Some(p) = pivot else { return S::zero() };
            if a.get(p, col).is_zero() {
                return S::zero();
            }
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pv = a.get(col, col).clone();
            det = det * pv.clone();
            for i in (col + 1)..n {
                let f = a.get(i, col).clone() / pv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a.get(i, j).clone() - f.clone() * a.get(col, j).clone();
                    a.set(i, j, v);
                }
            }
        }
        det
    }

    /// Inverse, or `None` when singular (numerically singular for floats).
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let scale = self.max_abs();
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = a.pivot_row(col, col, scale)?;
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            let pv = a.get(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.get(col, j).clone() / pv.clone());
                inv.set(col, j, inv.get(col, j).clone() / pv.clone());
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.get(i, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(i, j).clone() - f.clone() * a.get(col, j).clone();
                    a.set(i, j, v);
                    let w = inv.get(i, j).clone() - f.clone() * inv.get(col, j).clone();
                    inv.set(i, j, w);
                }
            }
        }
        Some(inv)
    }

    /// Reduced row echelon form of `[self | rhs]`; returns the reduced
    /// augmented matrix and pivot columns.
    fn rref_augmented(&self, rhs: &[S]) -> (Matrix<S>, Vec<usize>) {
        let mut a = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                a.set(i, j, self.get(i, j).clone());
            }
            a.set(i, self.cols, rhs[i].clone());
        }
        let scale = self.max_abs();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let Some(p) = a.pivot_row(col, row, scale) else {
                continue;
            };
            a.swap_rows(p, row);
            let pv = a.get(row, col).clone();
            for j in col..=self.cols {
                a.set(row, j, a.get(row, j).clone() / pv.clone());
            }
            for i in 0..self.rows {
                if i == row {
                    continue;
                }
                let f = a.get(i, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in col..=self.cols {
                    let v = a.get(i, j).clone() - f.clone() * a.get(row, j).clone();
                    a.set(i, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }

    /// Minimum-norm solution of `self · x = rhs`, or `None` when inconsistent.
    ///
    /// The system is reduced to independent rows `R x = c`; the solution is
    /// `x = Rᵀ (R Rᵀ)^{-1} c`.
    pub fn solve_min_norm(&self, rhs: &[S]) -> Option<Vec<S>> {
        let (reduced, pivots) = self.rref_augmented(rhs);
        let rank = pivots.len();
        let rhs_scale = rhs
            .iter()
            .map(|v| v.to_f64().abs())
            .fold(self.max_abs(), f64::max);
        for i in rank..self.rows {
            if !reduced.get(i, self.cols).is_negligible(rhs_scale) {
                return None;
            }
        }
        if rank == 0 {
            return Some(vec![S::zero(); self.cols]);
        }
        let mut r = Self::zeros(rank, self.cols);
        let mut c = Vec::with_capacity(rank);
        for i in 0..rank {
            for j in 0..self.cols {
                r.set(i, j, reduced.get(i, j).clone());
            }
            c.push(reduced.get(i, self.cols).clone());
        }
        if rank == self.cols {
            let mut x = vec![S::zero(); self.cols];
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = c[i].clone();
            }
            return Some(x);
        }
        let rt = r.transpose();
        let gram = r.mul(&rt);
        let y = gram.inverse()?.mul_vec(&c);
        Some(rt.mul_vec(&y))
    }

    /// Solves a square nonsingular system.
    pub fn solve(&self, rhs: &[S]) -> Option<Vec<S>> {
        Some(self.inverse()?.mul_vec(rhs))
    }
}
