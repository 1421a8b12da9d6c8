//! Small dense matrices over any [`Field`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Field;

/// Row-major square or rectangular matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> Matrix<T> {
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

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: bad.len(),
            });
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
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

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| crate::numeric::dot(self.row(i), v))
            .collect()
    }

    /// Maximum absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).abs())
            .fold(T::zero(), T::max_of)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn map<S: Field>(&self, f: impl Fn(&T) -> S) -> Matrix<S> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// LU factorization with partial pivoting. Fails when a pivot is zero
    /// (exact types) or below `1e-14` times the largest entry (floats).
    pub fn lu(&self) -> Result<Lu<T>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.data.iter().map(Field::abs).fold(T::zero(), T::max_of);
        let floor = if T::EXACT {
            T::zero()
        } else {
            scale * T::from_f64(1e-14)
        };
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].abs().total_cmp(&a[(y, k)].abs()))
                .expect("nonempty range");
            if a[(p, k)].abs() <= floor {
                return Err(Error::RankDeficient {
                    pivot: a[(p, k)].to_f64(),
                });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            for i in k + 1..n {
                let factor = a[(i, k)].clone() / a[(k, k)].clone();
                if factor.is_zero_value() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a[(i, j)].clone() - factor.clone() * a[(k, j)].clone();
                    a[(i, j)] = v;
                }
                a[(i, k)] = factor;
            }
        }
        Ok(Lu { a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Ok(self.lu()?.solve(b))
    }
}

/// Packed LU factors and the row permutation.
pub struct Lu<T> {
    a: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Field> Lu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for k in 0..i {
                let v = y[i].clone() - self.a[(i, k)].clone() * y[k].clone();
                y[i] = v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = y[i].clone() - self.a[(i, k)].clone() * y[k].clone();
                y[i] = v;
            }
            y[i] = y[i].clone() / self.a[(i, i)].clone();
        }
        y
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols.max(1))).finish()
    }
}

/// JSON shape of a matrix: list of rows of textual scalars.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: Vec<Vec<String>>,
}

impl<T: Field> From<&Matrix<T>> for MatrixRecord {
    fn from(m: &Matrix<T>) -> Self {
        MatrixRecord {
            rows: m
                .to_rows()
                .iter()
                .map(|r| r.iter().map(Field::to_repr).collect())
                .collect(),
        }
    }
}

impl MatrixRecord {
    pub fn to_matrix<T: Field>(&self) -> Result<Matrix<T>> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| {
                        T::parse_repr(s)
                            .ok_or_else(|| Error::InvalidArgument(format!("bad scalar {s:?}")))
                    })
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    #[test]
    fn solve_exact() {
        let m = Matrix::from_rows(vec![
            vec![Rational::from_i64(2), Rational::from_i64(1)],
            vec![Rational::from_i64(1), Rational::from_i64(3)],
        ])
        .unwrap();
        let x = m.solve(&[Rational::from_i64(3), Rational::from_i64(5)]).unwrap();
        assert_eq!(x, vec![Rational::from_ratio(4, 5), Rational::from_ratio(7, 5)]);
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(m.lu(), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let m = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = m.solve(&[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }
}
