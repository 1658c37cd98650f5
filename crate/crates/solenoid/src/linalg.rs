//! Dense matrices over a [`Scalar`], with the few exact kernels the cone
//! pipeline needs: products, rank and nonnegative-combination tests.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::scalar::{int_to_field, Field, Scalar};

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from nested rows. Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.as_ref()
                        .iter()
                        .map(|&x| T::from_i64(x).expect("small integer"))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j].clone())
            .collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    /// All entries strictly positive (and the matrix is nonempty).
    pub fn is_positive(&self) -> bool {
        !self.data.is_empty() && self.data.iter().all(|x| *x > T::zero())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|x| *x >= T::zero())
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().cloned().fold(T::zero(), |a, b| a + b))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<T> {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |a, i| a + self[(i, j)].clone()))
            .collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(
            v.len(),
            self.cols,
            "dimension mismatch in matrix-vector product"
        );
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64().unwrap_or(f64::NAN))
    }

    /// Reorder rows and columns: entry `(i, j)` of the result is entry
    /// `(row_order[i], col_order[j])` of `self`.
    pub fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> Self {
        let mut out = Self::zeros(row_order.len(), col_order.len());
        for (i, &ri) in row_order.iter().enumerate() {
            for (j, &cj) in col_order.iter().enumerate() {
                out[(i, j)] = self[(ri, cj)].clone();
            }
        }
        out
    }
}

impl Matrix<BigInt> {
    pub fn to_rational(&self) -> Matrix<BigRational> {
        self.map(|x| BigRational::from_integer(x.clone()))
    }

    /// Exact rank, computed over the rationals.
    pub fn rank(&self) -> usize {
        rank(&self.to_rational())
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out: Matrix<T> = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a.clone() * rhs[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        out
    }
}

impl<T: Scalar + fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Row echelon form by Gaussian elimination. Returns the reduced matrix and
/// the pivot columns. Zero tests are exact, so float input only gets an
/// honest answer when it happens to be exactly representable.
pub fn row_echelon<F: Field>(m: &Matrix<F>) -> (Matrix<F>, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(p) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..a.cols {
                let tmp = a[(r, j)].clone();
                a[(r, j)] = a[(p, j)].clone();
                a[(p, j)] = tmp;
            }
        }
        let pivot = a[(r, c)].clone();
        for j in 0..a.cols {
            a[(r, j)] = a[(r, j)].clone() / pivot.clone();
        }
        for i in 0..a.rows {
            if i == r || a[(i, c)].is_zero() {
                continue;
            }
            let factor = a[(i, c)].clone();
            for j in 0..a.cols {
                let delta = factor.clone() * a[(r, j)].clone();
                a[(i, j)] = a[(i, j)].clone() - delta;
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank<F: Field>(m: &Matrix<F>) -> usize {
    row_echelon(m).1.len()
}

/// Rank of a family of integer vectors (as columns).
pub fn rank_of_vectors(vectors: &[Vec<BigInt>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<Vec<BigRational>> = vectors
        .iter()
        .map(|v| v.iter().map(int_to_field).collect())
        .collect();
    rank(&Matrix::from_rows(cols).transpose())
}

/// Solve `A x = b` exactly when the columns of `A` are linearly independent.
/// Returns `None` when `b` is outside the column span.
pub fn solve_independent<F: Field>(a: &Matrix<F>, b: &[F]) -> Option<Vec<F>> {
    let n = a.cols;
    let mut aug = Matrix::zeros(a.rows, n + 1);
    for i in 0..a.rows {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)].clone();
        }
        aug[(i, n)] = b[i].clone();
    }
    let (red, pivots) = row_echelon(&aug);
    if pivots.contains(&n) {
        return None;
    }
    let mut x = vec![F::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = red[(r, n)].clone();
    }
    Some(x)
}

/// Decide whether `target` is a nonnegative combination of `generators`.
///
/// By Carathéodory it suffices to look at linearly independent subfamilies,
/// which is affordable at the dimensions we meet (at most `3(n-1)` edges).
pub fn nonnegative_combination<F: Field>(target: &[F], generators: &[Vec<F>]) -> Option<Vec<F>> {
    if target.iter().all(Zero::is_zero) {
        return Some(vec![F::zero(); generators.len()]);
    }
    let k = generators.len();
    assert!(k < 24, "too many generators for exhaustive search");
    let dim = target.len();
    for mask in 1u32..(1u32 << k) {
        let chosen: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if chosen.len() > dim {
            continue;
        }
        let cols: Vec<Vec<F>> = chosen.iter().map(|&i| generators[i].clone()).collect();
        let a = Matrix::from_rows(cols).transpose();
        if rank(&a) != chosen.len() {
            continue;
        }
        if let Some(x) = solve_independent(&a, target) {
            if x.iter().all(|c| *c >= F::zero()) {
                let mut full = vec![F::zero(); k];
                for (slot, c) in chosen.iter().zip(x) {
                    full[*slot] = c;
                }
                return Some(full);
            }
        }
    }
    None
}
