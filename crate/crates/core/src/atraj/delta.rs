//! Searching for a perturbation size that keeps the collision sequence.

use serde::Serialize;

use crate::atraj::matrix::{build_atilde, geometric_weights};
use crate::atraj::propagate::propagate;
use crate::atraj::trajectory::PLTrajectory;
use crate::atraj::uncoupled;
use crate::error::{Error, Result};
use crate::numeric::Field;
use crate::sequence::equivalent;

/// Outcome of one trial ratio.
#[derive(Clone, Debug, Serialize)]
pub struct RatioProbe {
    pub ratio: f64,
    pub collisions: Option<usize>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaSearch {
    /// Largest tested weight ratio `r` (weights `r^(i-1)`) for which the
    /// perturbed matrix reproduces the sequence.
    pub ratio: f64,
    /// `||A~ - A_m|| = r^2` for that ratio.
    pub delta: f64,
    pub probes: Vec<RatioProbe>,
}

/// Checks whether the perturbed matrix with weight ratio `r` reproduces
/// the collision sequence of the genuine trajectory `f`, up to swapping
/// uncoupled coordinates.
pub fn ratio_works<T: Field>(f: &PLTrajectory<T>, r: &T, max_events: usize) -> Result<RatioProbe> {
    let m = f.m();
    let tol = T::scaled_tol(1e-9);
    let target = f.wall_sequence(&tol);
    let (at, _) = build_atilde(m, &geometric_weights(m, r))?;
    let (x, v) = f.initial_data();
    let probe = |collisions, ok| RatioProbe {
        ratio: r.to_f64(),
        collisions,
        ok,
    };
    match propagate(&at, f.t_start().clone(), &x, &v, f.t_end().clone(), max_events) {
        Ok(g) => {
            let seq = g.wall_sequence(&tol);
            let ok = equivalent(&seq, &target, |a, b| uncoupled(&at, *a, *b));
            Ok(probe(Some(seq.len()), ok))
        }
        Err(Error::Simultaneous { .. }) | Err(Error::Numeric(_)) => Ok(probe(None, false)),
        Err(e) => Err(e),
    }
}

/// Halves the ratio from 1/2 until the sequence is reproduced, then bisects
/// `steps` times between the last failure and the first success.
///
/// The set of good ratios need not be an interval, so the result is a
/// certified good ratio rather than a sharp threshold.
pub fn find_delta<T: Field>(f: &PLTrajectory<T>, steps: usize, max_events: usize) -> Result<DeltaSearch> {
    let mut probes = Vec::new();
    let half = T::from_ratio(1, 2);
    let mut bad = T::one();
    let mut r = half.clone();
    let mut good = None;
    for _ in 0..60 {
        let p = ratio_works(f, &r, max_events)?;
        let ok = p.ok;
        probes.push(p);
        if ok {
            good = Some(r.clone());
            break;
        }
        bad = r.clone();
        r = r * half.clone();
    }
    let Some(mut good) = good else {
        return Err(Error::Infeasible(format!(
            "no weight ratio down to 2^-60 reproduces the {} collisions",
            f.collision_count(&T::scaled_tol(1e-9))
        )));
    };
    for _ in 0..steps {
        let mid = (good.clone() + bad.clone()) * half.clone();
        let p = ratio_works(f, &mid, max_events)?;
        let ok = p.ok;
        probes.push(p);
        if ok {
            good = mid;
        } else {
            bad = mid;
        }
    }
    let ratio = good.to_f64();
    Ok(DeltaSearch {
        ratio,
        delta: ratio * ratio,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atraj::inductive::build_inductive;
    use crate::atraj::matrix::build_am;
    use crate::atraj::perturb::{perturb_to_genuine, PerturbOptions};
    use crate::atraj::MAX_EVENTS;
    use crate::numeric::Rational;

    #[test]
    fn small_ratio_reproduces_sequence() {
        for m in 2..=5 {
            let (f, _) = build_inductive(m).unwrap();
            let zero = Rational::zero();
            let g = perturb_to_genuine(&f, &build_am(m), &PerturbOptions::default(), &zero).unwrap();
            let gf = g.map(|x| x.to_f64());
            let res = find_delta(&gf, 6, MAX_EVENTS).unwrap();
            assert!(res.ratio > 0.0 && res.ratio < 1.0);
            assert!(ratio_works(&gf, &res.ratio, MAX_EVENTS).unwrap().ok, "m = {m}");
        }
    }
}
