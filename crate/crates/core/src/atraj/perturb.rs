//! Splitting simultaneous roots of a generalized trajectory.
//!
//! The initial data at `t_start` is jittered and carried across each
//! collision cluster by the closed-form segment maps: on the window
//! `[tau_{k-1}, tau_k]` around cluster `J_k`,
//!
//! ```text
//! f_i(t) = |x_i + (t - tau) v_i|                                   i in J_k
//! f_j(t) = x_j + (t - tau) v_j - sum_i a_ij v_i (t - r_i + |t - r_i|)  otherwise
//! r_i    = tau - x_i / v_i
//! ```
//!
//! so the cluster's combinatorics are kept while its roots separate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atraj::matrix::AdmissibleMatrix;
use crate::atraj::trajectory::{validate, Mode, PLTrajectory};
use crate::error::{Error, Result};
use crate::numeric::Field;

/// Default number of fresh jitter draws before giving up.
pub const MAX_ATTEMPTS: usize = 16;

#[derive(Clone, Debug)]
pub struct PerturbOptions {
    /// Half-width of the uniform jitter applied to each initial value.
    pub jitter: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions {
            jitter: 1e-3,
            seed: 0,
            max_attempts: MAX_ATTEMPTS,
        }
    }
}

/// A genuine trajectory with the same collision count and cluster order as
/// the generalized trajectory `f`.
///
/// Only the initial positions are jittered; initial slopes are kept. Roots
/// of a cluster still separate for almost every draw, since the jitter of the
/// highest coordinate in a cluster moves only that coordinate and the ones
/// above it (`A` need not be triangular for this to hold generically).
///
/// A draw that moves a root out of its window is retried with a fresh seed
/// and half the jitter, since clusters crowd together as `m` grows.
pub fn perturb_to_genuine<T: Field>(
    f: &PLTrajectory<T>,
    a: &AdmissibleMatrix<T>,
    opts: &PerturbOptions,
    tol: &T,
) -> Result<PLTrajectory<T>> {
    let report = validate(f, a, Mode::Generalized, tol)?;
    if let Some(v) = report.violation {
        return Err(Error::InvalidArgument(format!("input is not a generalized trajectory: {v}")));
    }
    if opts.jitter == 0.0 && validate(f, a, Mode::Genuine, tol)?.passed() {
        return Ok(f.clone());
    }
    if opts.jitter < 0.0 || !opts.jitter.is_finite() {
        return Err(Error::InvalidArgument(format!("bad jitter {}", opts.jitter)));
    }

    let clusters: Vec<(T, Vec<usize>)> = f
        .collisions(tol)
        .into_iter()
        .map(|e| (e.time, e.vanishing))
        .collect();
    // tau_0 = t_start, tau_k between clusters k and k+1, tau_M = t_end
    let two = T::from_i64(2);
    let mut taus = vec![f.t_start().clone()];
    for w in clusters.windows(2) {
        taus.push((w[0].0.clone() + w[1].0.clone()) / two.clone());
    }
    taus.push(f.t_end().clone());

    let (x0, v0) = f.initial_data();
    let mut last_reason = String::new();
    for attempt in 0..opts.max_attempts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
        let jitter = opts.jitter * 0.5f64.powi(attempt as i32);
        let x: Vec<T> = x0
            .iter()
            .map(|xi| {
                let d: f64 = if jitter > 0.0 {
                    rng.random_range(-jitter..jitter)
                } else {
                    0.0
                };
                xi.clone() + T::from_f64(d)
            })
            .collect();
        match carry(a, &taus, &clusters, x, v0.clone(), f, tol) {
            Ok(g) => {
                let rep = validate(&g, a, Mode::Genuine, tol)?;
                if rep.passed() && rep.collisions == report.collisions {
                    return Ok(g);
                }
                last_reason = match rep.violation {
                    Some(v) => v.to_string(),
                    None => format!("{} collisions instead of {}", rep.collisions, report.collisions),
                };
            }
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::PerturbationFailed {
        attempts: opts.max_attempts.max(1),
        reason: last_reason,
    })
}

/// Root `tau - x/v` of a coordinate entering a window at `tau` with value
/// `x` and slope `v`.
pub fn root_time<T: Field>(tau: &T, x: &T, v: &T) -> T {
    tau.clone() - x.clone() / v.clone()
}

/// Applies the segment maps cluster by cluster. `Err` carries the reason an
/// attempt was rejected.
fn carry<T: Field>(
    a: &AdmissibleMatrix<T>,
    taus: &[T],
    clusters: &[(T, Vec<usize>)],
    mut x: Vec<T>,
    mut v: Vec<T>,
    f: &PLTrajectory<T>,
    tol: &T,
) -> std::result::Result<PLTrajectory<T>, String> {
    let m = x.len();
    let two = T::from_i64(2);
    let tie = T::tie_tolerance();
    let start = x.clone();
    let mut breaks: Vec<T> = Vec::new();
    let mut slopes = vec![v.clone()];
    if x.iter().any(|xi| *xi <= *tol) {
        return Err("jitter pushed a start value to zero".into());
    }

    for (k, (_, set)) in clusters.iter().enumerate() {
        let (lo, hi) = (&taus[k], &taus[k + 1]);
        let mut roots: Vec<(T, usize)> = Vec::with_capacity(set.len());
        for &i in set {
            if v[i] >= T::zero() {
                return Err(format!("coordinate {} is not approaching its wall in cluster {}", i + 1, k + 1));
            }
            let r = root_time(lo, &x[i], &v[i]);
            if r <= *lo || r >= *hi {
                return Err(format!("root of coordinate {} left its window in cluster {}", i + 1, k + 1));
            }
            roots.push((r, i));
        }
        roots.sort_by(|p, q| p.0.total_cmp(&q.0));
        for w in roots.windows(2) {
            if w[1].0.clone() - w[0].0.clone() <= tie {
                return Err(format!("roots of {} and {} still coincide", w[0].1 + 1, w[1].1 + 1));
            }
        }
        if let Some(prev) = breaks.last() {
            if roots[0].0 <= *prev {
                return Err("cluster order changed".into());
            }
        }

        // walk the kinks in time order
        let mut t = lo.clone();
        for (r, i) in &roots {
            let dt = r.clone() - t.clone();
            for j in 0..m {
                x[j] = x[j].clone() + v[j].clone() * dt.clone();
            }
            x[*i] = T::zero();
            if let Some(j) = (0..m).find(|&j| j != *i && x[j] <= *tol) {
                return Err(format!("coordinate {} touched zero at an unplanned time", j + 1));
            }
            let pre = v.clone();
            for j in 0..m {
                v[j] = pre[j].clone() - two.clone() * a[(*i, j)].clone() * pre[*i].clone();
            }
            breaks.push(r.clone());
            slopes.push(v.clone());
            t = r.clone();
        }
        let dt = hi.clone() - t;
        for j in 0..m {
            x[j] = x[j].clone() + v[j].clone() * dt.clone();
        }
        if let Some(j) = (0..m).find(|&j| x[j] <= *tol) {
            return Err(format!("coordinate {} is not positive after cluster {}", j + 1, k + 1));
        }
    }
    PLTrajectory::new(f.t_start().clone(), f.t_end().clone(), start, breaks, slopes).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atraj::inductive::build_inductive;
    use crate::atraj::matrix::build_am;
    use crate::numeric::Rational;

    #[test]
    fn genuine_input_unchanged_without_jitter() {
        let (f, _) = build_inductive(3).unwrap();
        let opts = PerturbOptions {
            jitter: 0.0,
            ..Default::default()
        };
        let g = perturb_to_genuine(&f, &build_am(3), &opts, &Rational::zero()).unwrap();
        assert_eq!(g, f);
    }

    #[test]
    fn zero_jitter_cannot_split() {
        let (f, _) = build_inductive(4).unwrap();
        let opts = PerturbOptions {
            jitter: 0.0,
            max_attempts: 2,
            ..Default::default()
        };
        assert!(matches!(
            perturb_to_genuine(&f, &build_am(4), &opts, &Rational::zero()),
            Err(Error::PerturbationFailed { .. })
        ));
    }

    #[test]
    fn splits_triple_events_exactly() {
        let (f, _) = build_inductive(4).unwrap();
        let a = build_am(4);
        let zero = Rational::zero();
        let g = perturb_to_genuine(&f, &a, &PerturbOptions::default(), &zero).unwrap();
        let rep = validate(&g, &a, Mode::Genuine, &zero).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.collisions, 12);
        assert_eq!(rep.collision_events, 12);
    }

    #[test]
    fn huge_jitter_is_rejected() {
        let (f, _) = build_inductive(4).unwrap();
        let opts = PerturbOptions {
            jitter: 0.4,
            max_attempts: 3,
            seed: 7,
        };
        let res = perturb_to_genuine(&f, &build_am(4), &opts, &Rational::zero());
        assert!(res.is_err());
    }

    #[test]
    fn root_formula() {
        let r = root_time(&Rational::zero(), &Rational::one(), &Rational::from_i64(-2));
        assert_eq!(r, Rational::from_ratio(1, 2));
    }
}
