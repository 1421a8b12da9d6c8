use std::collections::BTreeSet;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numeric::Field;

/// The edge set `E_m`: pairs `(i, j)` with `j = i + 1`, or `i` odd and
/// `j = i + 2`, in 1-based numbering. Stored 0-based, so "odd" becomes
/// "even index".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    m: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs in 1-based numbering.
    pub fn one_based(&self) -> Vec<(usize, usize)> {
        self.iter().map(|(i, j)| (i + 1, j + 1)).collect()
    }
}

/// Membership test for the infinite edge set, 0-based.
pub fn in_edge_set(i: usize, j: usize) -> bool {
    j == i + 1 || (i.is_multiple_of(2) && j == i + 2)
}

pub fn edge_set(m: usize) -> EdgeSet {
    let pairs = (0..m)
        .flat_map(|i| [(i, i + 1), (i, i + 2)])
        .filter(|&(i, j)| j < m && in_edge_set(i, j))
        .collect();
    EdgeSet { m, pairs }
}

/// Square matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleMatrix<T>(Matrix<T>);

impl<T: Field> AdmissibleMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        if let Some(i) = (0..m.rows()).find(|&i| m[(i, i)] != T::one()) {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry {} is {}, not 1",
                i + 1,
                m[(i, i)]
            )));
        }
        Ok(AdmissibleMatrix(m))
    }

    /// Gram matrix of unit normals, with the diagonal snapped to exactly 1.
    pub fn from_gram(g: &Matrix<T>) -> Result<Self> {
        if g.rows() != g.cols() {
            return Err(Error::DimensionMismatch {
                expected: g.rows(),
                got: g.cols(),
            });
        }
        let mut out = g.clone();
        for i in 0..out.rows() {
            out[(i, i)] = T::one();
        }
        Ok(AdmissibleMatrix(out))
    }

    pub fn order(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    /// Max-entry distance `||self - other||`.
    pub fn distance(&self, other: &Self) -> T {
        self.0.max_abs_diff(&other.0)
    }

    /// Entrywise conversion; the diagonal stays exactly one.
    pub fn convert<S: Field>(&self, f: impl Fn(&T) -> S) -> AdmissibleMatrix<S> {
        let mut out = self.0.map(f);
        for i in 0..out.rows() {
            out[(i, i)] = S::one();
        }
        AdmissibleMatrix(out)
    }
}

impl<T> Deref for AdmissibleMatrix<T> {
    type Target = Matrix<T>;
    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}

/// The upper-triangular matrix `A_m`: 1 on the diagonal, -1 on `E_m`.
pub fn build_am<T: Field>(m: usize) -> AdmissibleMatrix<T> {
    let mut a = Matrix::identity(m);
    for (i, j) in edge_set(m).iter() {
        a[(i, j)] = -T::one();
    }
    AdmissibleMatrix(a)
}

fn check_weights<T: Field>(m: usize, lambda: &[T]) -> Result<()> {
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: lambda.len(),
        });
    }
    if let Some(k) = lambda.iter().position(|l| *l <= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "weight {} must be positive",
            k + 1
        )));
    }
    Ok(())
}

/// `A_m` with the transposed edge positions filled by `-lambda_i^2/lambda_j^2`
/// (row `i > j`). Returns the matrix and its distance to `A_m`.
pub fn build_atilde<T: Field>(m: usize, lambda: &[T]) -> Result<(AdmissibleMatrix<T>, T)> {
    check_weights(m, lambda)?;
    let mut a = build_am::<T>(m).into_matrix();
    let mut gap = T::zero();
    for (j, i) in edge_set(m).iter() {
        let ratio = lambda[i].clone() * lambda[i].clone() / (lambda[j].clone() * lambda[j].clone());
        gap = T::max_of(gap, ratio.clone());
        a[(i, j)] = -ratio;
    }
    Ok((AdmissibleMatrix(a), gap))
}

/// `a_ij -> lambda_j / lambda_i * a_ij`. Maps `A`-trajectories `f` to
/// `A^lambda`-trajectories `lambda_i f_i`.
pub fn rescale<T: Field>(a: &AdmissibleMatrix<T>, lambda: &[T]) -> Result<AdmissibleMatrix<T>> {
    let m = a.order();
    check_weights(m, lambda)?;
    let mut out = a.0.clone();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                out[(i, j)] = lambda[j].clone() / lambda[i].clone() * a[(i, j)].clone();
            }
        }
    }
    Ok(AdmissibleMatrix(out))
}

/// Geometric weights `lambda_i = ratio^(i-1)`.
pub fn geometric_weights<T: Field>(m: usize, ratio: &T) -> Vec<T> {
    let mut out = Vec::with_capacity(m);
    let mut cur = T::one();
    for _ in 0..m {
        out.push(cur.clone());
        cur = cur * ratio.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn edge_sets_small() {
        assert!(edge_set(1).is_empty());
        assert_eq!(edge_set(3).one_based(), vec![(1, 2), (1, 3), (2, 3)]);
        assert_eq!(
            edge_set(5).one_based(),
            vec![(1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)]
        );
    }

    #[test]
    fn am_is_nested() {
        let a3 = build_am::<Rational>(3);
        let expect = Matrix::from_rows(vec![
            vec![r(1, 1), r(-1, 1), r(-1, 1)],
            vec![r(0, 1), r(1, 1), r(-1, 1)],
            vec![r(0, 1), r(0, 1), r(1, 1)],
        ])
        .unwrap();
        assert_eq!(*a3.as_matrix(), expect);
        for m in 1..10 {
            let small = build_am::<Rational>(m);
            let big = build_am::<Rational>(m + 1);
            for i in 0..m {
                for j in 0..m {
                    assert_eq!(small[(i, j)], big[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn atilde_and_rescale() {
        let lam = vec![r(1, 1), r(1, 10)];
        let (at, gap) = build_atilde(2, &lam).unwrap();
        assert_eq!(at.to_rows(), vec![vec![r(1, 1), r(-1, 1)], vec![r(-1, 100), r(1, 1)]]);
        assert_eq!(gap, r(1, 100));
        let b = rescale(&at, &lam).unwrap();
        assert_eq!(b.to_rows(), vec![vec![r(1, 1), r(-1, 10)], vec![r(-1, 10), r(1, 1)]]);
        assert!(b.is_symmetric());

        let ones = vec![r(1, 1); 2];
        assert_eq!(rescale(&at, &ones).unwrap(), at);
        let (eq, _) = build_atilde(3, &vec![r(1, 1); 3]).unwrap();
        assert_eq!(eq[(1, 0)], r(-1, 1));
        assert_eq!(eq[(2, 0)], r(-1, 1));
        assert_eq!(eq[(2, 1)], r(-1, 1));
    }

    #[test]
    fn atilde_zero_pattern() {
        let lam = geometric_weights(6, &r(1, 3));
        let (at, _) = build_atilde(6, &lam).unwrap();
        let e = edge_set(6);
        for i in 0..6 {
            for j in 0..6 {
                if i != j && !e.contains(i, j) && !e.contains(j, i) {
                    assert_eq!(at[(i, j)], r(0, 1));
                }
            }
        }
    }

    #[test]
    fn bad_weights() {
        assert!(build_atilde(2, &[r(1, 1), r(0, 1)]).is_err());
        assert!(rescale(&build_am::<Rational>(2), &[r(1, 1)]).is_err());
        let bad = Matrix::from_rows(vec![vec![r(2, 1)]]).unwrap();
        assert!(AdmissibleMatrix::new(bad).is_err());
    }
}
