//! Ball configurations in `R^3` whose tangent cone has a prescribed Gram
//! matrix.
//!
//! The reference configuration `q^` puts the even-numbered balls and ball 1
//! on a staircase in the `xy`-plane and every other odd ball directly above
//! or below its predecessor:
//!
//! ```text
//! q^_1 = (0, 0, 0)
//! q^_i = (k, k-1, 0)   i = 4k-2        q^_i = (k, k, 0)   i = 4k
//!        (k, k-1, -1)  i = 4k-1               (k, k, 1)   i = 4k+1
//! ```
//!
//! The touching pairs form the chain `u_1 = (1,2)`, `u_2k = (2k, 2k+1)`,
//! `u_2k+1 = (2k, 2k+2)`; two segments meet exactly when their indices form
//! an edge of the matrix edge set, and they meet at right angles. Bending the
//! angles at the shared balls to `alpha_ij` gives a cone with Gram entries
//! `cos(alpha_ij) / 2`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

use crate::atraj::{edge_set, in_edge_set};
use crate::error::{Error, Result};
use crate::geometry::{BallConfiguration, Pair};
use crate::numeric::{dot, Field, Real};

/// Margin by which non-touching balls must stay apart.
pub const SEPARATION_MARGIN: f64 = 1e-6;

/// The reference configuration of `n >= 2` balls, exact in any field.
pub fn hat_configuration<T: Field>(n: usize) -> Result<BallConfiguration<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 balls, got {n}")));
    }
    let centers = (1..=n as i64)
        .map(|i| {
            let (x, y, z) = hat_point(i);
            vec![T::from_i64(x), T::from_i64(y), T::from_i64(z)]
        })
        .collect();
    BallConfiguration::from_centers(3, centers)
}

fn hat_point(i: i64) -> (i64, i64, i64) {
    if i == 1 {
        return (0, 0, 0);
    }
    // i = 4k + r with r in {-2, -1, 0, 1}
    let k = (i + 2) / 4;
    match i - 4 * k {
        -2 => (k, k - 1, 0),
        -1 => (k, k - 1, -1),
        0 => (k, k, 0),
        _ => (k, k, 1),
    }
}

/// The touching pairs `u_1..u_m` of the reference configuration, `m = n - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContactChain {
    segments: Vec<Pair>,
}

impl ContactChain {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment `k` as a 0-based ball pair.
    pub fn segment(&self, k: usize) -> Pair {
        self.segments[k]
    }

    pub fn segments(&self) -> &[Pair] {
        &self.segments
    }

    /// Segments as 1-based ball pairs.
    pub fn one_based(&self) -> Vec<Pair> {
        self.segments.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }

    /// Ball shared by segments `a` and `b`, if any.
    pub fn shared_ball(&self, a: usize, b: usize) -> Option<usize> {
        let (p, q) = (self.segments[a], self.segments[b]);
        [p.0, p.1].into_iter().find(|s| *s == q.0 || *s == q.1)
    }
}

pub fn chain_segments(n: usize) -> Result<ContactChain> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 balls, got {n}")));
    }
    // 1-based: u_1 = (1,2), u_2k = (2k, 2k+1), u_2k+1 = (2k, 2k+2)
    let segments = (1..n)
        .map(|k| {
            let (i, j) = if k == 1 {
                (1, 2)
            } else if k % 2 == 0 {
                (k, k + 1)
            } else {
                (k - 1, k + 1)
            };
            (i - 1, j - 1)
        })
        .collect();
    Ok(ContactChain { segments })
}

/// Angles `alpha_ij` between meeting segments, indexed by 0-based edges
/// `(i, j)`, `i < j`. Stored as cosines so that assignments derived from
/// weights stay exact up to the working precision.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleAssignment<T> {
    m: usize,
    cosines: BTreeMap<Pair, T>,
}

impl<T: Real> AngleAssignment<T> {
    /// All angles equal to `pi/2`.
    pub fn right(m: usize) -> Self {
        AngleAssignment {
            m,
            cosines: edge_set(m).iter().map(|e| (e, T::zero())).collect(),
        }
    }

    /// From explicit cosines; every edge of `E_m` must be present.
    pub fn from_cosines(m: usize, cosines: BTreeMap<Pair, T>) -> Result<Self> {
        let edges = edge_set(m);
        if let Some(e) = cosines.keys().find(|&&(i, j)| j >= m || !in_edge_set(i, j)) {
            return Err(Error::InvalidArgument(format!(
                "({}, {}) is not an edge for m = {m}",
                e.0 + 1,
                e.1 + 1
            )));
        }
        if let Some(e) = edges.iter().find(|e| !cosines.contains_key(e)) {
            return Err(Error::InvalidArgument(format!("missing angle for ({}, {})", e.0 + 1, e.1 + 1)));
        }
        if let Some((e, _)) = cosines.iter().find(|(_, c)| c.abs() >= T::one()) {
            return Err(Error::InvalidArgument(format!("degenerate angle at ({}, {})", e.0 + 1, e.1 + 1)));
        }
        Ok(AngleAssignment { m, cosines })
    }

    pub fn from_radians(m: usize, radians: &BTreeMap<Pair, f64>) -> Result<Self> {
        Self::from_cosines(m, radians.iter().map(|(&e, a)| (e, T::from_f64(a.cos()))).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cos(&self, i: usize, j: usize) -> T {
        let key = if i < j { (i, j) } else { (j, i) };
        self.cosines.get(&key).cloned().unwrap_or_else(T::zero)
    }

    pub fn radians(&self, i: usize, j: usize) -> f64 {
        self.cos(i, j).to_f64().acos()
    }

    /// `max |alpha_ij - pi/2|`.
    pub fn max_deviation(&self) -> f64 {
        self.cosines
            .values()
            .map(|c| c.to_f64().asin().abs())
            .fold(0.0, f64::max)
    }

    /// JSON map `"i,j" -> radians` with 1-based indices.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .cosines
            .iter()
            .map(|(&(i, j), c)| (format!("{},{}", i + 1, j + 1), serde_json::json!(c.to_f64().acos())))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(m: usize, value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidArgument("angle map must be a JSON object".into()))?;
        let mut radians = BTreeMap::new();
        for (key, v) in obj {
            let parsed = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)));
            let Some((i, j)) = parsed.filter(|&(i, j)| i >= 1 && j > i) else {
                return Err(Error::InvalidArgument(format!("bad angle key {key:?}")));
            };
            let a = v
                .as_f64()
                .ok_or_else(|| Error::InvalidArgument(format!("angle {key:?} is not a number")))?;
            radians.insert((i - 1, j - 1), a);
        }
        Self::from_radians(m, &radians)
    }

    fn check_range(&self, theta: f64) -> Result<()> {
        for (&(i, j), c) in &self.cosines {
            let dev = c.to_f64().asin().abs();
            if dev >= theta {
                return Err(Error::InvalidArgument(format!(
                    "angle at ({}, {}) is {dev:.3e} from pi/2, outside theta = {theta:.3e}",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// `cos(alpha_ij) = -2 lambda_j / lambda_i` on every edge, so that the cone's
/// Gram matrix is `b_ij = -lambda_j / lambda_i`. Needs
/// `lambda_j / lambda_i < sin(theta) / 2`.
pub fn angles_from_lambda<T: Real>(lambda: &[T], theta: f64) -> Result<AngleAssignment<T>> {
    let m = lambda.len();
    if let Some(k) = lambda.iter().position(|l| *l <= T::zero()) {
        return Err(Error::InvalidArgument(format!("weight {} must be positive", k + 1)));
    }
    let bound = 0.5 * theta.sin();
    let two = T::from_i64(2);
    let mut cosines = BTreeMap::new();
    for (i, j) in edge_set(m).iter() {
        let ratio = lambda[j].clone() / lambda[i].clone();
        if ratio.to_f64() >= bound {
            return Err(Error::InvalidArgument(format!(
                "lambda_{}/lambda_{} = {} is not below sin(theta)/2 = {bound:.4}; use a smaller ratio or a larger theta",
                j + 1,
                i + 1,
                ratio.to_f64()
            )));
        }
        cosines.insert((i, j), -two.clone() * ratio);
    }
    AngleAssignment::from_cosines(m, cosines)
}

/// A configuration of `n` balls with the contact chain of `q^` and angle
/// `alpha_ij` between segments `u_i`, `u_j` for every edge.
///
/// The staircase (ball 1 and the even balls) is rebuilt in the `xy`-plane
/// turning by the prescribed angles with the orientation of `q^`; each odd
/// ball is then placed on the unit sphere around its predecessor, on the
/// same side of the plane as in `q^`. Fails when a pair that does not touch
/// in `q^` ends up closer than `1 + 1e-6`.
pub fn perturbed_configuration<T: Real>(
    n: usize,
    angles: &AngleAssignment<T>,
    theta: f64,
) -> Result<BallConfiguration<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 balls, got {n}")));
    }
    let m = n - 1;
    if angles.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: angles.m(),
        });
    }
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_6) {
        return Err(Error::InvalidArgument(format!("theta = {theta} must lie in (0, pi/6)")));
    }
    angles.check_range(theta)?;
    // work with an odd number of segments; extra angles are right
    let m_odd = if m % 2 == 1 { m } else { m + 1 };
    let cos = |i: usize, j: usize| if j < m { angles.cos(i, j) } else { T::zero() };
    let hat = hat_configuration::<T>(m_odd + 1)?;
    let mut q: Vec<Option<Vec<T>>> = vec![None; m_odd + 1];
    q[0] = Some(hat.center(0).to_vec());
    q[1] = Some(hat.center(1).to_vec());

    // staircase: 1-based i = 3, 5, .., m_odd places q_{i+1} from q_{i-1}
    for i in (3..=m_odd).step_by(2) {
        let (pivot, back_ball, new) = (i - 2, if i == 3 { 0 } else { i - 4 }, i);
        let p = q[pivot].clone().expect("placed");
        let back = sub(q[back_ball].as_ref().expect("placed"), &p);
        let hb = sub(hat.center(back_ball), hat.center(pivot));
        let hf = sub(hat.center(new), hat.center(pivot));
        let orient = hb[0].clone() * hf[1].clone() - hb[1].clone() * hf[0].clone();
        let c = cos(i - 3, i - 1);
        let s = (T::one() - c.clone() * c.clone()).sqrt();
        let s = if orient < T::zero() { -s } else { s };
        // rotate `back` by the angle in the xy-plane
        let dir = vec![
            c.clone() * back[0].clone() - s.clone() * back[1].clone(),
            s * back[0].clone() + c * back[1].clone(),
            T::zero(),
        ];
        q[new] = Some(add(&p, &dir));
    }

    // off-plane balls: 1-based i = 2, 4, .., m_odd - 1 places q_{i+1}
    for i in (2..m_odd).step_by(2) {
        let pivot = i - 1;
        let prev_ball = if i == 2 { 0 } else { i - 3 };
        let next_ball = i + 1;
        let p = q[pivot].clone().expect("placed");
        let a = sub(q[prev_ball].as_ref().expect("placed"), &p);
        let b = sub(q[next_ball].as_ref().expect("placed"), &p);
        // segments u_{i-1}, u_i, u_{i+1} in 1-based numbering
        let (ca, cb) = (cos(i - 2, i - 1), cos(i - 1, i));
        let g = dot(&a, &b);
        let det = T::one() - g.clone() * g.clone();
        if det <= T::scaled_tol(1e-12) {
            return Err(Error::Infeasible(format!("segments at ball {} are collinear", pivot + 1)));
        }
        let c1 = (ca.clone() - g.clone() * cb.clone()) / det.clone();
        let c2 = (cb - g * ca) / det;
        let w: Vec<T> = (0..3).map(|k| c1.clone() * a[k].clone() + c2.clone() * b[k].clone()).collect();
        let rest = T::one() - dot(&w, &w);
        if rest <= T::zero() {
            return Err(Error::Infeasible(format!(
                "no unit segment at ball {} meets the prescribed angles",
                pivot + 1
            )));
        }
        let up = hat.center(i)[2] > hat.center(pivot)[2];
        let z = if up { rest.sqrt() } else { -rest.sqrt() };
        q[i] = Some(vec![p[0].clone() + w[0].clone(), p[1].clone() + w[1].clone(), p[2].clone() + z]);
    }

    let centers: Vec<Vec<T>> = q.into_iter().take(n).map(|c| c.expect("every ball placed")).collect();
    let config = BallConfiguration::from_centers(3, centers)?;
    check_separation(&config)?;
    Ok(config)
}

fn sub<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

fn add<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

/// Non-chain pairs must be farther apart than `1 + SEPARATION_MARGIN`.
fn check_separation<T: Real>(config: &BallConfiguration<T>) -> Result<()> {
    let chain = chain_segments(config.len())?;
    let limit = T::one() + T::from_f64(SEPARATION_MARGIN);
    for i in 0..config.len() {
        for j in i + 1..config.len() {
            if chain.segments().contains(&(i, j)) {
                continue;
            }
            let d = config.dist(i, j);
            if d <= limit {
                return Err(Error::Infeasible(format!(
                    "balls {} and {} are {} apart; theta is too large for n = {}",
                    i + 1,
                    j + 1,
                    d.to_f64(),
                    config.len()
                )));
            }
        }
    }
    Ok(())
}

/// Largest `theta = pi/8 * 2^-k` for which bending every angle by `theta`
/// in either direction keeps all non-touching balls apart.
pub fn default_theta(n: usize) -> Result<f64> {
    let m = n.checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
        Error::InvalidArgument(format!("need at least 2 balls, got {n}"))
    })?;
    let mut theta = FRAC_PI_8;
    for _ in 0..40 {
        let probe = theta * (1.0 - 1e-9);
        let ok = [-1.0, 1.0].iter().all(|sign| {
            let cosines = edge_set(m)
                .iter()
                .map(|e| (e, (FRAC_PI_2 + sign * probe).cos()))
                .collect();
            AngleAssignment::<f64>::from_cosines(m, cosines)
                .and_then(|a| perturbed_configuration(n, &a, theta))
                .is_ok()
        });
        if ok {
            return Ok(theta);
        }
        theta /= 2.0;
    }
    Err(Error::Infeasible(format!("no admissible theta found for n = {n}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atraj::{build_atilde, geometric_weights, rescale};
    use crate::geometry::{contact_pairs, gram_for_pairs, CONTACT_TOL};
    use crate::numeric::Rational;

    #[test]
    fn hat_points() {
        let q = hat_configuration::<Rational>(6).unwrap();
        let r = |v: i64| Rational::from_i64(v);
        assert_eq!(q.center(4), &[r(1), r(1), r(1)]);
        assert_eq!(q.center(5), &[r(2), r(1), r(0)]);
        assert_eq!(q.dist_sq(0, 1), r(1));
    }

    #[test]
    fn hat_contacts_are_the_chain() {
        for n in 2..=32 {
            let q = hat_configuration::<Rational>(n).unwrap();
            let chain = chain_segments(n).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    let d2 = q.dist_sq(i, j);
                    if chain.segments().contains(&(i, j)) {
                        assert_eq!(d2, Rational::one(), "n = {n}, ({i}, {j})");
                    } else {
                        assert!(d2 >= Rational::from_i64(2), "n = {n}, ({i}, {j})");
                    }
                }
            }
        }
    }

    #[test]
    fn chain_enumeration() {
        assert_eq!(chain_segments(3).unwrap().one_based(), vec![(1, 2), (2, 3)]);
        assert_eq!(chain_segments(5).unwrap().one_based(), vec![(1, 2), (2, 3), (2, 4), (4, 5)]);
        let chain = chain_segments(6).unwrap();
        for a in 0..5 {
            for b in a + 1..5 {
                assert_eq!(chain.shared_ball(a, b).is_some(), edge_set(5).contains(a, b), "({a}, {b})");
            }
        }
    }

    #[test]
    fn right_angles_reproduce_hat() {
        for n in 2..=12 {
            let q = perturbed_configuration::<f64>(n, &AngleAssignment::right(n - 1), 0.3).unwrap();
            assert_eq!(q, hat_configuration::<f64>(n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn bent_angles_appear_in_gram() {
        let alpha = FRAC_PI_2 - 0.01;
        let mut rad = BTreeMap::new();
        for e in edge_set(3).iter() {
            rad.insert(e, alpha);
        }
        let angles = AngleAssignment::<f64>::from_radians(3, &rad).unwrap();
        let q = perturbed_configuration(4, &angles, 0.3).unwrap();
        let chain = chain_segments(4).unwrap();
        assert_eq!(contact_pairs(&q, &CONTACT_TOL).unwrap(), chain.segments().to_vec());
        let g = gram_for_pairs(&q, chain.segments(), &CONTACT_TOL).unwrap();
        for (i, j) in edge_set(3).iter() {
            assert!((g[(i, j)] - 0.5 * alpha.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_matches_rescaled_matrix() {
        for n in 2..=9 {
            let m = n - 1;
            let lam = geometric_weights(m, &0.125);
            let angles = angles_from_lambda(&lam, FRAC_PI_8).unwrap();
            let q = perturbed_configuration(n, &angles, FRAC_PI_8).unwrap();
            let chain = chain_segments(n).unwrap();
            let g = gram_for_pairs(&q, chain.segments(), &CONTACT_TOL).unwrap();
            let (at, _) = build_atilde(m, &lam).unwrap();
            let b = rescale(&at, &lam).unwrap();
            assert!(g.max_abs_diff(b.as_matrix()) <= 1e-10, "n = {n}");
            assert_eq!(contact_pairs(&q, &CONTACT_TOL).unwrap(), chain.segments().to_vec());
        }
    }

    #[test]
    fn lambda_precondition() {
        assert!(angles_from_lambda(&[1.0, 0.25], FRAC_PI_8).is_err());
        let a = angles_from_lambda(&[1.0, 0.1], FRAC_PI_8).unwrap();
        assert!((a.radians(0, 1) - (-0.2f64).acos()).abs() < 1e-15);
        let b = angles_from_lambda(&[1.0, 0.01], FRAC_PI_8).unwrap();
        assert!(b.max_deviation() < a.max_deviation());
    }

    #[test]
    fn out_of_range_angles_rejected() {
        let mut rad = BTreeMap::new();
        rad.insert((0, 1), FRAC_PI_2 + 0.4);
        let a = AngleAssignment::<f64>::from_radians(2, &{
            let mut r = rad.clone();
            r.insert((0, 2), FRAC_PI_2);
            r.insert((1, 2), FRAC_PI_2);
            r
        });
        assert!(a.is_err(), "(1,3) is an edge only for m = 3");
        let a = AngleAssignment::<f64>::from_radians(2, &rad).unwrap();
        assert!(perturbed_configuration(3, &a, 0.2).is_err());
    }

    #[test]
    fn converges_to_hat() {
        let n = 8;
        let hat = hat_configuration::<f64>(n).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let dev = 0.1 / (1 << k) as f64;
            let cosines = edge_set(n - 1).iter().map(|e| (e, (FRAC_PI_2 - dev).cos())).collect();
            let a = AngleAssignment::from_cosines(n - 1, cosines).unwrap();
            let q = perturbed_configuration(n, &a, 0.2).unwrap();
            let disp = (0..n)
                .map(|i| dot(&sub(q.center(i), hat.center(i)), &sub(q.center(i), hat.center(i))).sqrt())
                .fold(0.0, f64::max);
            assert!(disp <= 10.0 * n as f64 * dev);
            assert!(disp < prev);
            prev = disp;
        }
    }

    #[test]
    fn json_round_trip() {
        let a = angles_from_lambda(&[1.0, 0.1, 0.01], FRAC_PI_8).unwrap();
        let v = a.to_json();
        assert!(v.get("1,3").is_some());
        let b = AngleAssignment::<f64>::from_json(3, &v).unwrap();
        for (i, j) in edge_set(3).iter() {
            assert!((a.cos(i, j) - b.cos(i, j)).abs() < 1e-15);
        }
    }

    #[test]
    fn default_theta_is_positive() {
        for n in 2..=8 {
            let t = default_theta(n).unwrap();
            assert!(t > 0.0 && t <= FRAC_PI_8);
        }
    }
}
