//! Configuration space of `n` unit-diameter balls in `R^d`.
//!
//! A configuration is a point of `R^{dn}` stored as `n` blocks of length `d`.
//! Each touching pair `(i, j)` contributes one wall of the configuration
//! space, with unit normal
//!
//! ```text
//! nu = (0, .., (q_i - q_j)/sqrt2, .., (q_j - q_i)/sqrt2, .., 0)
//! ```
//!
//! and the tangent cone at the configuration is `{v : <v, nu_k> >= 0}`.
//!
//! Ball indices are 0-based in this API; exported files use 1-based numbering.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numeric::{dot, Field, Real};

/// Default contact tolerance in double precision.
pub const CONTACT_TOL: f64 = 1e-9;

/// Tolerance for the Gram cross-check between the closed form and brute-force
/// inner products.
pub const GRAM_CHECK_TOL: f64 = 1e-12;

/// Contact tolerance rescaled for the scalar type.
pub fn contact_tol<T: Field>() -> T {
    T::scaled_tol(CONTACT_TOL)
}

/// Centers of `n` balls of radius 1/2 in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallConfiguration<T> {
    dim: usize,
    centers: Vec<Vec<T>>,
}

/// A pair of ball indices with `i < j`.
pub type Pair = (usize, usize);

fn ordered(i: usize, j: usize) -> Pair {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl<T: Field> BallConfiguration<T> {
    /// Builds a configuration without checking the overlap constraint.
    pub fn from_centers(dim: usize, centers: Vec<Vec<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if let Some(c) = centers.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.len(),
            });
        }
        Ok(BallConfiguration { dim, centers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, i: usize) -> &[T] {
        &self.centers[i]
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    /// The configuration as a flat point of `R^{dn}`.
    pub fn flat(&self) -> Vec<T> {
        self.centers.iter().flatten().cloned().collect()
    }

    pub fn from_flat(dim: usize, flat: &[T]) -> Result<Self> {
        if dim == 0 || !flat.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: flat.len(),
            });
        }
        Ok(BallConfiguration {
            dim,
            centers: flat.chunks(dim).map(<[T]>::to_vec).collect(),
        })
    }

    pub fn diff(&self, i: usize, j: usize) -> Vec<T> {
        self.centers[i]
            .iter()
            .zip(&self.centers[j])
            .map(|(a, b)| a.clone() - b.clone())
            .collect()
    }

    pub fn dist_sq(&self, i: usize, j: usize) -> T {
        let d = self.diff(i, j);
        dot(&d, &d)
    }

    /// `self + scale * v` for a flat direction `v` in `R^{dn}`.
    pub fn displaced(&self, v: &[T], scale: T) -> Result<Self> {
        let flat = self.flat();
        if v.len() != flat.len() {
            return Err(Error::DimensionMismatch {
                expected: flat.len(),
                got: v.len(),
            });
        }
        let moved: Vec<T> = flat
            .into_iter()
            .zip(v)
            .map(|(a, b)| a + scale.clone() * b.clone())
            .collect();
        Self::from_flat(self.dim, &moved)
    }

    pub fn map<S: Field>(&self, f: impl Fn(&T) -> S) -> BallConfiguration<S> {
        BallConfiguration {
            dim: self.dim,
            centers: self
                .centers
                .iter()
                .map(|c| c.iter().map(&f).collect())
                .collect(),
        }
    }
}

impl<T: Real> BallConfiguration<T> {
    pub fn dist(&self, i: usize, j: usize) -> T {
        self.dist_sq(i, j).sqrt()
    }

    /// Checks membership in the configuration space: no pair closer than
    /// `1 - tol`.
    pub fn check_valid(&self, tol: &T) -> Result<()> {
        let floor = T::one() - tol.clone();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = self.dist(i, j);
                if d < floor {
                    return Err(Error::Overlap {
                        i,
                        j,
                        distance: d.to_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Smallest distance over pairs that are not listed in `contacts`.
    pub fn min_noncontact_distance(&self, contacts: &[Pair]) -> Option<T> {
        let mut best: Option<T> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if contacts.contains(&(i, j)) {
                    continue;
                }
                let d = self.dist(i, j);
                best = Some(match best {
                    Some(b) => T::min_of(b, d),
                    None => d,
                });
            }
        }
        best
    }
}

/// All pairs at distance 1 within `tol`, sorted lexicographically.
pub fn contact_pairs<T: Real>(config: &BallConfiguration<T>, tol: &T) -> Result<Vec<Pair>> {
    let one = T::one();
    let mut out = Vec::new();
    for i in 0..config.len() {
        for j in i + 1..config.len() {
            let d = config.dist(i, j);
            if d < one.clone() - tol.clone() {
                return Err(Error::Overlap {
                    i,
                    j,
                    distance: d.to_f64(),
                });
            }
            if (d - one.clone()).abs() <= *tol {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Unit normal in `R^{dn}` of the wall of balls `i` and `j` at a contact
/// configuration. The `i`-th block is `(q_i - q_j)/sqrt2` regardless of the
/// order of `i` and `j`.
pub fn wall_normal<T: Real>(
    config: &BallConfiguration<T>,
    i: usize,
    j: usize,
    tol: &T,
) -> Result<Vec<T>> {
    let n = config.len();
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidArgument(format!(
            "pair ({i}, {j}) is not a pair of distinct balls among {n}"
        )));
    }
    let dist = config.dist(i, j);
    if (dist.clone() - T::one()).abs() > *tol {
        return Err(Error::NotInContact {
            i,
            j,
            distance: dist.to_f64(),
        });
    }
    let d = config.dim();
    let inv_sqrt2 = T::one() / T::from_i64(2).sqrt();
    let mut nu = vec![T::zero(); d * n];
    for (k, delta) in config.diff(i, j).into_iter().enumerate() {
        nu[i * d + k] = delta.clone() * inv_sqrt2.clone();
        nu[j * d + k] = -delta * inv_sqrt2.clone();
    }
    Ok(nu)
}

/// Closed-form inner product of the normals of two contact pairs.
fn normal_product<T: Field>(config: &BallConfiguration<T>, a: Pair, b: Pair) -> T {
    let half = T::from_ratio(1, 2);
    if a == b {
        return config.dist_sq(a.0, a.1);
    }
    let shared = [a.0, a.1].into_iter().find(|s| *s == b.0 || *s == b.1);
    match shared {
        None => T::zero(),
        Some(s) => {
            let other_a = if a.0 == s { a.1 } else { a.0 };
            let other_b = if b.0 == s { b.1 } else { b.0 };
            half * dot(&config.diff(other_a, s), &config.diff(other_b, s))
        }
    }
}

/// Gram matrix of the normals of `pairs` from the closed form, without the
/// cross-check.
pub fn gram_closed_form<T: Field>(config: &BallConfiguration<T>, pairs: &[Pair]) -> Matrix<T> {
    let m = pairs.len();
    let mut g = Matrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            g[(a, b)] = normal_product(config, ordered(pairs[a].0, pairs[a].1), ordered(pairs[b].0, pairs[b].1));
        }
    }
    g
}

/// Gram matrix by explicit inner products in `R^{dn}`.
pub fn gram_brute_force<T: Field>(normals: &[Vec<T>]) -> Matrix<T> {
    let m = normals.len();
    let mut g = Matrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            g[(a, b)] = dot(&normals[a], &normals[b]);
        }
    }
    g
}

/// Gram matrix of the contact normals of `config`, ordered as
/// [`contact_pairs`]. The closed form is compared entrywise against brute
/// force inner products; a discrepancy above the scaled `1e-12` is an error.
pub fn gram_of_normals<T: Real>(config: &BallConfiguration<T>, tol: &T) -> Result<Matrix<T>> {
    let pairs = contact_pairs(config, tol)?;
    gram_for_pairs(config, &pairs, tol)
}

pub fn gram_for_pairs<T: Real>(
    config: &BallConfiguration<T>,
    pairs: &[Pair],
    tol: &T,
) -> Result<Matrix<T>> {
    let closed = gram_closed_form(config, pairs);
    let normals = pairs
        .iter()
        .map(|&(i, j)| wall_normal(config, i, j, tol))
        .collect::<Result<Vec<_>>>()?;
    let brute = gram_brute_force(&normals);
    let gap = closed.max_abs_diff(&brute);
    if gap > T::scaled_tol(GRAM_CHECK_TOL) {
        return Err(Error::Numeric(format!(
            "Gram closed form disagrees with brute force by {:e}",
            gap.to_f64()
        )));
    }
    Ok(closed)
}

/// Polyhedral cone `{x : <x, nu_k> >= 0 for all k}` given by unit inner
/// normals.
#[derive(Clone, Debug)]
pub struct PolyhedralCone<T> {
    ambient: usize,
    normals: Vec<Vec<T>>,
    gram: Matrix<T>,
    /// Ball pair behind each face, when the cone is a tangent cone.
    labels: Option<Vec<Pair>>,
}

impl<T: Real> PolyhedralCone<T> {
    /// Builds a cone from unit normals; norms are checked against `tol`.
    pub fn new(ambient: usize, normals: Vec<Vec<T>>, tol: &T) -> Result<Self> {
        for (k, nu) in normals.iter().enumerate() {
            if nu.len() != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    got: nu.len(),
                });
            }
            let len_sq = dot(nu, nu);
            if (len_sq.clone() - T::one()).abs() > *tol {
                return Err(Error::InvalidArgument(format!(
                    "normal {k} has squared norm {}",
                    len_sq.to_f64()
                )));
            }
        }
        let gram = gram_brute_force(&normals);
        Ok(PolyhedralCone {
            ambient,
            normals,
            gram,
            labels: None,
        })
    }

    /// Orthant `R_+^m` with the coordinate normals.
    pub fn orthant(m: usize) -> Self {
        let normals = (0..m)
            .map(|i| {
                let mut e = vec![T::zero(); m];
                e[i] = T::one();
                e
            })
            .collect();
        PolyhedralCone {
            ambient: m,
            normals,
            gram: Matrix::identity(m),
            labels: None,
        }
    }
}

impl<T: Field> PolyhedralCone<T> {
    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Number of faces.
    pub fn faces(&self) -> usize {
        self.normals.len()
    }

    pub fn normals(&self) -> &[Vec<T>] {
        &self.normals
    }

    pub fn normal(&self, k: usize) -> &[T] {
        &self.normals[k]
    }

    pub fn gram(&self) -> &Matrix<T> {
        &self.gram
    }

    pub fn labels(&self) -> Option<&[Pair]> {
        self.labels.as_deref()
    }

    /// Face-distance vector `(<x, nu_k>)_k`.
    pub fn face_values(&self, x: &[T]) -> Vec<T> {
        self.normals.iter().map(|nu| dot(x, nu)).collect()
    }

    pub fn map<S: Field>(&self, f: impl Fn(&T) -> S) -> PolyhedralCone<S> {
        PolyhedralCone {
            ambient: self.ambient,
            normals: self
                .normals
                .iter()
                .map(|n| n.iter().map(&f).collect())
                .collect(),
            gram: self.gram.map(&f),
            labels: self.labels.clone(),
        }
    }
}

/// Tangent cone of the configuration space at `config`: one face per contact
/// pair, with the Gram matrix from [`gram_of_normals`].
pub fn tangent_cone<T: Real>(config: &BallConfiguration<T>, tol: &T) -> Result<PolyhedralCone<T>> {
    let pairs = contact_pairs(config, tol)?;
    tangent_cone_for_pairs(config, &pairs, tol)
}

/// Tangent cone with faces in a caller-chosen order (e.g. chain order).
pub fn tangent_cone_for_pairs<T: Real>(
    config: &BallConfiguration<T>,
    pairs: &[Pair],
    tol: &T,
) -> Result<PolyhedralCone<T>> {
    let normals = pairs
        .iter()
        .map(|&(i, j)| wall_normal(config, i, j, tol))
        .collect::<Result<Vec<_>>>()?;
    let gram = gram_for_pairs(config, pairs, tol)?;
    Ok(PolyhedralCone {
        ambient: config.dim() * config.len(),
        normals,
        gram,
        labels: Some(pairs.iter().map(|&(i, j)| ordered(i, j)).collect()),
    })
}

/// `true` iff `<x, nu_k> >= -tol` for every face.
pub fn cone_membership<T: Field>(cone: &PolyhedralCone<T>, x: &[T], tol: &T) -> Result<bool> {
    if x.len() != cone.ambient() {
        return Err(Error::DimensionMismatch {
            expected: cone.ambient(),
            got: x.len(),
        });
    }
    let floor = -tol.clone();
    Ok(cone.face_values(x).into_iter().all(|v| v >= floor))
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
struct ConfigRecord {
    d: usize,
    n: usize,
    centers: Vec<Vec<serde_json::Value>>,
}

pub(crate) fn scalar_to_json<T: Field>(x: &T) -> serde_json::Value {
    if T::PRECISION_BITS == 53 {
        serde_json::json!(x.to_f64())
    } else {
        serde_json::Value::String(x.to_repr())
    }
}

pub(crate) fn scalar_from_json<T: Field>(v: &serde_json::Value) -> Result<T> {
    let parsed = match v {
        serde_json::Value::Number(n) => T::parse_repr(&n.to_string()),
        serde_json::Value::String(s) => T::parse_repr(s),
        _ => None,
    };
    parsed.ok_or_else(|| Error::InvalidArgument(format!("not a scalar: {v}")))
}

impl<T: Field> BallConfiguration<T> {
    /// JSON object `{d, n, centers}`. Doubles are written as JSON numbers in
    /// shortest round-trip form; other scalar types as decimal strings.
    pub fn to_json(&self) -> serde_json::Value {
        let rec = ConfigRecord {
            d: self.dim,
            n: self.len(),
            centers: self
                .centers
                .iter()
                .map(|c| c.iter().map(scalar_to_json).collect())
                .collect(),
        };
        serde_json::to_value(rec).expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let rec: ConfigRecord = serde_json::from_value(value.clone())?;
        if rec.centers.len() != rec.n {
            return Err(Error::DimensionMismatch {
                expected: rec.n,
                got: rec.centers.len(),
            });
        }
        let centers = rec
            .centers
            .iter()
            .map(|c| c.iter().map(scalar_from_json).collect::<Result<Vec<T>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_centers(rec.d, centers)
    }

    /// CSV with one center per row and header `x1,...,xd`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record((1..=self.dim).map(|k| format!("x{k}")))?;
        for c in &self.centers {
            wr.write_record(c.iter().map(Field::to_repr))?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let dim = rd.headers()?.len();
        let mut centers = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    T::parse_repr(s).ok_or_else(|| Error::InvalidArgument(format!("bad scalar {s:?}")))
                })
                .collect::<Result<Vec<T>>>()?;
            centers.push(row);
        }
        Self::from_centers(dim, centers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dim: usize, centers: Vec<Vec<f64>>) -> BallConfiguration<f64> {
        BallConfiguration::from_centers(dim, centers).unwrap()
    }

    #[test]
    fn distant_balls_have_no_contacts() {
        let c = cfg(3, vec![vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]]);
        assert!(contact_pairs(&c, &CONTACT_TOL).unwrap().is_empty());
        let cone = tangent_cone(&c, &CONTACT_TOL).unwrap();
        assert_eq!(cone.faces(), 0);
        assert!(cone_membership(&cone, &[-5.0; 6], &0.0).unwrap());
    }

    #[test]
    fn overlap_is_an_error() {
        let c = cfg(1, vec![vec![0.0], vec![0.5]]);
        assert!(matches!(
            contact_pairs(&c, &CONTACT_TOL),
            Err(Error::Overlap { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn one_dimensional_normal() {
        let c = cfg(1, vec![vec![0.0], vec![1.0]]);
        let nu = wall_normal(&c, 0, 1, &CONTACT_TOL).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((nu[0] + s).abs() < 1e-15 && (nu[1] - s).abs() < 1e-15);
        // C_ij = C_ji: the same wall whichever index comes first
        let nu2 = wall_normal(&c, 1, 0, &CONTACT_TOL).unwrap();
        assert_eq!(nu, nu2);
        let g = gram_of_normals(&c, &CONTACT_TOL).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_contact_normal_rejected() {
        let c = cfg(2, vec![vec![0.0, 0.0], vec![2.0, 0.0]]);
        assert!(matches!(
            wall_normal(&c, 0, 1, &CONTACT_TOL),
            Err(Error::NotInContact { .. })
        ));
    }

    #[test]
    fn membership_dimension_mismatch() {
        let cone = PolyhedralCone::<f64>::orthant(3);
        assert!(cone_membership(&cone, &[1.0, 2.0], &0.0).is_err());
        assert!(cone_membership(&cone, &[0.0, 0.0, 0.0], &0.0).unwrap());
        assert!(!cone_membership(&cone, &[1.0, -1.0, 0.0], &0.0).unwrap());
    }

    #[test]
    fn json_and_csv_round_trip() {
        let c = cfg(3, vec![vec![0.1, 1.0 / 3.0, -2.0], vec![1e-17, 5.0, 7.25]]);
        let back = BallConfiguration::<f64>::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);
        let text = serde_json::to_string(&c.to_json()).unwrap();
        let reparsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(BallConfiguration::<f64>::from_json(&reparsed).unwrap(), c);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(BallConfiguration::<f64>::read_csv(&buf[..]).unwrap(), c);
    }
}
