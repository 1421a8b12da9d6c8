//! Cones with almost right angles and `2^m - 1` collisions.
//!
//! Given a trajectory `g` in `K` with `N` collisions, the path
//! `(g(t), C1 - C0 t)` is a trajectory in `K x R`. Cutting `K x R` by the
//! plane orthogonal to its final velocity adds one face that the path hits
//! head-on, so it retraces itself and collides `2N + 1` times. Taking `C0`
//! large makes the new face almost orthogonal to the old ones; taking `C1`
//! large keeps the path inside the new face until it is done with `K`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cone_billiard::gram::lift_vector;
use crate::cone_billiard::{gram_coordinates, simulate_cone, simulate_cone_from, ConeTrajectory};
use crate::error::{Error, Result};
use crate::geometry::{contact_pairs, tangent_cone, BallConfiguration, PolyhedralCone, CONTACT_TOL};
use crate::linalg::Matrix;
use crate::numeric::{dot, norm, Real};

/// A cone in `R^m` with its starting state; simulating from `(x0, v0)` at
/// `t_start` gives `2^m - 1` reflections.
#[derive(Clone, Debug)]
pub struct RightAngleExample<T> {
    pub cone: PolyhedralCone<T>,
    pub t_start: T,
    pub x0: Vec<T>,
    pub v0: Vec<T>,
    /// `C0` and `C1` of each doubling step.
    pub c0: Vec<T>,
    pub c1: Vec<T>,
}

impl<T: Real> RightAngleExample<T> {
    pub fn expected_collisions(&self) -> u128 {
        (1u128 << self.cone.faces()) - 1
    }

    pub fn simulate(&self) -> Result<ConeTrajectory<T>> {
        let budget = (self.expected_collisions() as usize).saturating_mul(2).max(4);
        simulate_cone_from(&self.cone, self.t_start.clone(), &self.x0, &self.v0, budget, None)
    }
}

/// Builds the cone by `m - 1` doubling steps from the half-line. `C0` is
/// the smallest power of two putting the new normal within `eps/2` of the
/// new axis, `C1` the smallest power of two keeping the state inside the new
/// face one time unit after the last collision.
pub fn build_right_angle_example<T: Real>(m: usize, eps: f64) -> Result<RightAngleExample<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one face".into()));
    }
    if !(eps > 0.0 && eps < std::f64::consts::FRAC_PI_4) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, pi/4)")));
    }
    let tol = T::scaled_tol(1e-12);
    let two = T::from_i64(2);
    let t_start = -T::one();
    let mut normals: Vec<Vec<T>> = vec![vec![T::one()]];
    let mut x0 = vec![T::one()];
    let mut v0 = vec![-T::one()];
    let (mut c0s, mut c1s) = (Vec::new(), Vec::new());
    let tan_half = T::from_f64((eps / 2.0).tan());

    for dim in 1..m {
        let cone = PolyhedralCone::new(dim, normals.clone(), &tol)?;
        let budget = 1usize << (dim + 1);
        let tr = simulate_cone_from(&cone, t_start.clone(), &x0, &v0, budget, None)?;
        let last = tr
            .events
            .last()
            .ok_or_else(|| Error::Numeric("trajectory without collisions".into()))?;
        let w = last.post.clone();
        let speed = norm(&w);
        let mut c0 = T::one();
        while speed >= c0.clone() * tan_half.clone() {
            c0 = c0 * two.clone();
        }
        let mut nu = w.iter().map(|x| -x.clone()).collect::<Vec<_>>();
        nu.push(c0.clone());
        let len = norm(&nu);
        let nu: Vec<T> = nu.into_iter().map(|x| x / len.clone()).collect();

        // state one time unit after the last collision, without its new
        // coordinate; <(p, C1 - C0 s), nu> must be positive
        let s = last.time.clone() + T::one();
        let p: Vec<T> = last.position.iter().zip(&w).map(|(x, v)| x.clone() + v.clone()).collect();
        let inside = |c1: &T| {
            let mut y = p.clone();
            y.push(c1.clone() - c0.clone() * s.clone());
            dot(&y, &nu) > T::zero()
        };
        let mut c1 = T::one();
        while !inside(&c1) {
            c1 = c1 * two.clone();
        }

        for n in normals.iter_mut() {
            n.push(T::zero());
        }
        normals.push(nu);
        x0.push(c1.clone() - c0.clone() * t_start.clone());
        v0.push(-c0.clone());
        c0s.push(c0);
        c1s.push(c1);
    }
    let cone = PolyhedralCone::new(m, normals, &tol)?;
    Ok(RightAngleExample {
        cone,
        t_start,
        x0,
        v0,
        c0: c0s,
        c1: c1s,
    })
}

/// `n` balls in `R^(n-1)`: unit vectors `q_1..q_{n-1}` with
/// `<q_i, q_j> = 2 <u_i, u_j>` for the face normals `u` of an almost
/// right-angled cone, and `q_n = 0` touching all of them. The tangent cone
/// at this configuration is isometric to the cone, so it carries a
/// trajectory with `2^(n-1) - 1` collisions.
#[derive(Clone, Debug)]
pub struct NdimExample {
    pub config: BallConfiguration<f64>,
    pub cone: PolyhedralCone<f64>,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub source: RightAngleExample<f64>,
}

impl NdimExample {
    pub fn simulate(&self) -> Result<ConeTrajectory<f64>> {
        let budget = (self.source.expected_collisions() as usize).saturating_mul(2).max(4);
        simulate_cone(&self.cone, &self.x0, &self.v0, budget)
    }
}

pub fn ndim_ball_example(n: usize, eps: f64) -> Result<NdimExample> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 balls, got {n}")));
    }
    let m = n - 1;
    let source = build_right_angle_example::<f64>(m, eps)?;
    let u = source.cone.gram();
    // H = 2U - I has unit diagonal and off-diagonal 2<u_i, u_j>
    let h = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 2.0 * u[(i, j)] });
    let eig = SymmetricEigen::new(h);
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l <= 0.0) {
        return Err(Error::Infeasible(format!(
            "doubled Gram matrix is not positive definite (eigenvalue {bad:e}); use a smaller eps"
        )));
    }
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
        * eig.eigenvectors.transpose();
    let mut centers: Vec<Vec<f64>> = (0..m).map(|i| root.row(i).iter().copied().collect()).collect();
    centers.push(vec![0.0; m]);
    // the factor is only accurate to rounding; snap the radii to exactly 1
    for c in centers.iter_mut().take(m) {
        let r = norm(c);
        c.iter_mut().for_each(|x| *x /= r);
    }
    let config = BallConfiguration::from_centers(m, centers)?;
    for i in 0..m {
        for j in i + 1..m {
            if config.dist(i, j) <= 1.0 {
                return Err(Error::Infeasible(format!(
                    "balls {} and {} touch; use a smaller eps",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let pairs = contact_pairs(&config, &CONTACT_TOL)?;
    if pairs.len() != m {
        return Err(Error::Infeasible(format!("{} contacts instead of {m}", pairs.len())));
    }
    let cone = tangent_cone(&config, &CONTACT_TOL)?;

    // move the source trajectory over through its face coordinates
    let tr = source.simulate()?;
    let end = tr.events.last().map_or(0.0, |e| e.time) + 1.0;
    let f = gram_coordinates(&source.cone, &tr, end)?;
    let (xi, eta) = f.initial_data();
    let lu = cone.gram().lu()?;
    let (x0, v0) = (lift_vector(&cone, &lu, &xi), lift_vector(&cone, &lu, &eta));
    Ok(NdimExample {
        config,
        cone,
        x0,
        v0,
        source,
    })
}

/// Largest `|<nu_i, nu_j>|` over distinct faces.
pub fn max_off_diagonal<T: Real>(g: &Matrix<T>) -> T {
    let mut best = T::zero();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            if i != j {
                best = T::max_of(best, g[(i, j)].abs());
            }
        }
    }
    best
}
