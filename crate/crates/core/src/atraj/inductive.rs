//! The inductive generalized `A_m`-trajectory with `f_i(t) = dist(t, T_i)`.
//!
//! `T_1 = {0}` with common difference 1. From an odd progression
//! `T_{2k-1} = {x_1 < .. < x_M}` with difference `beta`:
//!
//! * `T_{2k}` has the `M + 1` points `x_1 + (s - 3/2) beta`, interleaving
//!   `T_{2k-1}`;
//! * `T_{2k-1} u T_{2k}` is then a progression with difference `beta/2`
//!   starting at `y_1`, and `T_{2k+1}` is built from it the same way, with
//!   `2M + 2` points and difference `beta/2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::atraj::trajectory::PLTrajectory;
use crate::error::{Error, Result};
use crate::numeric::{Field, Rational};

/// Finite arithmetic progression `first + s * diff`, `s = 0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Progression<T> {
    pub first: T,
    pub diff: T,
    pub len: usize,
}

impl<T: Field> Progression<T> {
    pub fn elements(&self) -> Vec<T> {
        (0..self.len)
            .map(|s| self.first.clone() + self.diff.clone() * T::from_i64(s as i64))
            .collect()
    }

    pub fn last(&self) -> T {
        self.first.clone() + self.diff.clone() * T::from_i64(self.len as i64 - 1)
    }

    /// Distance from `t` to the nearest element, with the one-sided slope
    /// on the right of `t`.
    fn dist_and_slope(&self, t: &T) -> (T, T) {
        let mut best: Option<T> = None;
        let mut slope = T::one();
        for x in self.elements() {
            let d = (t.clone() - x.clone()).abs();
            let closer = match &best {
                None => true,
                Some(b) => d < *b,
            };
            if closer {
                slope = if *t < x { -T::one() } else { T::one() };
                best = Some(d);
            }
        }
        (best.expect("nonempty progression"), slope)
    }
}

/// Root sets `T_i` of the inductive construction.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSchedule<T> {
    progressions: Vec<Progression<T>>,
}

impl<T: Field> RootSchedule<T> {
    pub fn m(&self) -> usize {
        self.progressions.len()
    }

    pub fn progression(&self, i: usize) -> &Progression<T> {
        &self.progressions[i]
    }

    pub fn roots(&self, i: usize) -> Vec<T> {
        self.progressions[i].elements()
    }

    /// `sum_i |T_i|`.
    pub fn total(&self) -> usize {
        self.progressions.iter().map(|p| p.len).sum()
    }

    /// JSON `{ "i": {first, diff, len} }` with 1-based keys.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize, Deserialize)]
        struct Entry {
            first: String,
            diff: String,
            len: usize,
        }
        let map: BTreeMap<usize, Entry> = self
            .progressions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                (
                    i + 1,
                    Entry {
                        first: p.first.to_repr(),
                        diff: p.diff.to_repr(),
                        len: p.len,
                    },
                )
            })
            .collect();
        serde_json::to_value(map).expect("serializable")
    }
}

/// Builds the schedule `T_1..T_m`.
pub fn root_schedule(m: usize) -> Result<RootSchedule<Rational>> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let half = Rational::from_ratio(1, 2);
    let three_halves = Rational::from_ratio(3, 2);
    let mut progs = vec![Progression {
        first: Rational::zero(),
        diff: Rational::one(),
        len: 1,
    }];
    while progs.len() < m {
        let odd = progs.last().expect("nonempty").clone();
        let beta = odd.diff.clone();
        // y_s = x_1 + (s - 3/2) beta, s = 1..M+1
        let even = Progression {
            first: odd.first.clone() + (Rational::one() - three_halves.clone()) * beta.clone(),
            diff: beta.clone(),
            len: odd.len + 1,
        };
        let half_beta = beta * half.clone();
        // z_s = y_1 + (s - 3/2) beta/2, s = 1..2M+2
        let next_odd = Progression {
            first: even.first.clone() + (Rational::one() - three_halves.clone()) * half_beta.clone(),
            diff: half_beta,
            len: 2 * odd.len + 2,
        };
        progs.push(even);
        if progs.len() < m {
            progs.push(next_odd);
        }
    }
    Ok(RootSchedule { progressions: progs })
}

/// The generalized `A_m`-trajectory `f_i(t) = dist(t, T_i)` on the window
/// `[min root - margin, max root + margin]`, where the margin is the common
/// difference of `T_m`. Every slope is `+-1`.
pub fn build_inductive(m: usize) -> Result<(PLTrajectory<Rational>, RootSchedule<Rational>)> {
    let schedule = root_schedule(m)?;
    let mut all: Vec<Rational> = (0..m).flat_map(|i| schedule.roots(i)).collect();
    all.sort();
    all.dedup();
    let margin = schedule.progression(m - 1).diff.clone();
    let t_start = all.first().expect("T_1 nonempty").clone() - margin.clone();
    let t_end = all.last().expect("T_1 nonempty").clone() + margin;

    let start: Vec<Rational> = schedule
        .progressions
        .iter()
        .map(|p| p.dist_and_slope(&t_start).0)
        .collect();
    let two = Rational::from_i64(2);
    let mut slopes = Vec::with_capacity(all.len() + 1);
    let mut left = t_start.clone();
    for right in all.iter().chain(std::iter::once(&t_end)) {
        // slope of each dist function on (left, right), read at the midpoint
        let mid = (left.clone() + right.clone()) / two.clone();
        slopes.push(
            schedule
                .progressions
                .iter()
                .map(|p| p.dist_and_slope(&mid).1)
                .collect(),
        );
        left = right.clone();
    }
    let f = PLTrajectory::new(t_start, t_end, start, all, slopes)?;
    Ok((f, schedule))
}

/// `sum_i |T_i|` in closed form: with `k = floor((m + 1) / 2)`,
/// `2^(k+2) + 2^(k-1) - 3k - 5` for odd `m` and `2^(k+2) + 2^(k+1) - 3k - 6`
/// for even `m`. Defined for `m >= 1`; from `m = 2` on it is at least `2^k`.
pub fn collision_count_formula(m: usize) -> Result<u128> {
    if m == 0 {
        return Err(Error::InvalidArgument("the count formula needs m >= 1".into()));
    }
    if m > 240 {
        return Err(Error::InvalidArgument(format!("m = {m} overflows the count")));
    }
    let k = m.div_ceil(2) as u32;
    let p = |e: u32| 1u128 << e;
    let k3 = 3 * k as u128;
    let n = if m % 2 == 1 {
        p(k + 2) + p(k - 1) - k3 - 5
    } else {
        p(k + 2) + p(k + 1) - k3 - 6
    };
    assert!(m < 2 || n >= p(k), "count {n} below 2^{k}");
    Ok(n)
}

/// Lower bound `2^floor(n/2)` on the number of collisions of `n` balls.
pub fn exponential_bound(n: usize) -> u128 {
    1u128 << (n / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atraj::matrix::build_am;
    use crate::atraj::trajectory::{validate, Mode};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn base_case() {
        let (f, s) = build_inductive(1).unwrap();
        assert_eq!(s.roots(0), vec![q(0, 1)]);
        assert_eq!(f.collision_count(&Rational::zero()), 1);
        assert_eq!(*f.t_start(), q(-1, 1));
        assert_eq!(*f.t_end(), q(1, 1));
    }

    #[test]
    fn three_coordinates_by_hand() {
        let (f, s) = build_inductive(3).unwrap();
        assert_eq!(s.roots(1), vec![q(-1, 2), q(1, 2)]);
        assert_eq!(s.roots(2), vec![q(-3, 4), q(-1, 4), q(1, 4), q(3, 4)]);
        assert_eq!(f.collision_count(&Rational::zero()), 7);
    }

    #[test]
    fn fourth_coordinate_and_simultaneous_roots() {
        let (f, s) = build_inductive(4).unwrap();
        assert_eq!(s.roots(3), vec![q(-1, 1), q(-1, 2), q(0, 1), q(1, 2), q(1, 1)]);
        let a = build_am::<Rational>(4);
        let zero = Rational::zero();
        let multi: Vec<_> = f.collisions(&zero).into_iter().filter(|e| e.vanishing.len() > 1).collect();
        assert_eq!(
            multi.iter().map(|e| e.time.clone()).collect::<Vec<_>>(),
            vec![q(-1, 2), q(0, 1), q(1, 2)]
        );
        for e in multi {
            for &i in &e.vanishing {
                for &j in &e.vanishing {
                    if i != j {
                        assert!(a[(i, j)].is_zero_value() && a[(j, i)].is_zero_value());
                    }
                }
            }
        }
    }

    #[test]
    fn sizes_follow_closed_forms() {
        let s = root_schedule(12).unwrap();
        for i in 1..=12usize {
            let k = (i / 2) as u32;
            let want = if i == 1 {
                1
            } else if i % 2 == 0 {
                (1 << k) + (1 << (k - 1)) - 1
            } else {
                (1 << (k + 1)) + (1 << k) - 2
            };
            assert_eq!(s.progression(i - 1).len, want, "T_{i}");
        }
    }

    #[test]
    fn slopes_are_unit_and_trajectory_validates() {
        for m in 1..=8 {
            let (f, _) = build_inductive(m).unwrap();
            let one = Rational::one();
            assert!(f.slopes().iter().flatten().all(|v| v.abs() == one));
            let rep = validate(&f, &build_am(m), Mode::Generalized, &Rational::zero()).unwrap();
            assert!(rep.passed(), "m = {m}: {:?}", rep.violation);
        }
    }

    #[test]
    fn formula_values() {
        assert_eq!(collision_count_formula(1).unwrap(), 1);
        assert!(collision_count_formula(0).is_err());
        assert_eq!(collision_count_formula(2).unwrap(), 3);
        assert_eq!(collision_count_formula(3).unwrap(), 7);
        assert_eq!(collision_count_formula(4).unwrap(), 12);
        assert_eq!(collision_count_formula(5).unwrap(), 22);
        assert_eq!(collision_count_formula(8).unwrap(), 78);
    }

    #[test]
    fn schedule_json_uses_one_based_keys() {
        let s = root_schedule(3).unwrap();
        let v = s.to_json();
        assert_eq!(v["3"]["len"], 4);
        assert_eq!(v["2"]["first"], "-1/2");
    }
}
