//! Forward integration of the matrix reflection dynamics.

use crate::atraj::matrix::AdmissibleMatrix;
use crate::atraj::trajectory::PLTrajectory;
use crate::error::{Error, Result};
use crate::numeric::Field;

/// Default cap on the number of events in one propagation.
pub const MAX_EVENTS: usize = 1 << 20;

/// Evolves initial data `(x, v)` at `t_start` until `t_end`.
///
/// At each step the coordinates with the earliest root (ties within
/// [`Field::tie_tolerance`]) vanish together and every slope jumps by
/// `-2 sum_i a_ij v_i`. Coordinates that vanish together must be uncoupled
/// (`a_ij = a_ji = 0`), otherwise the continuation is undefined and an error
/// is returned.
pub fn propagate<T: Field>(
    a: &AdmissibleMatrix<T>,
    t_start: T,
    x: &[T],
    v: &[T],
    t_end: T,
    max_events: usize,
) -> Result<PLTrajectory<T>> {
    let m = a.order();
    if x.len() != m || v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x.len().min(v.len()),
        });
    }
    if let Some(i) = x.iter().position(|xi| *xi <= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "initial value of coordinate {} is not positive",
            i + 1
        )));
    }
    let tie = T::tie_tolerance();
    let two = T::from_i64(2);
    let mut t = t_start.clone();
    let mut pos = x.to_vec();
    let mut vel = v.to_vec();
    let mut breaks = Vec::new();
    let mut slopes = vec![vel.clone()];

    loop {
        // time until each approaching coordinate hits zero
        let hits: Vec<(usize, T)> = (0..m)
            .filter(|&i| vel[i] < T::zero())
            .map(|i| (i, -pos[i].clone() / vel[i].clone()))
            .collect();
        let Some(first) = hits.iter().map(|(_, dt)| dt.clone()).reduce(T::min_of) else {
            break;
        };
        let t_hit = t.clone() + first.clone();
        if t_hit >= t_end {
            break;
        }
        if breaks.len() >= max_events {
            return Err(Error::Numeric(format!("event budget {max_events} exhausted at t = {t_hit}")));
        }
        let set: Vec<usize> = hits
            .iter()
            .filter(|(_, dt)| dt.clone() - first.clone() <= tie)
            .map(|(i, _)| *i)
            .collect();
        for (p, &i) in set.iter().enumerate() {
            for &j in &set[p + 1..] {
                if !a[(i, j)].is_zero_value() || !a[(j, i)].is_zero_value() {
                    return Err(Error::Simultaneous {
                        time: t_hit.to_f64(),
                        detail: format!("coupled coordinates {} and {} vanish together", i + 1, j + 1),
                    });
                }
            }
        }
        for j in 0..m {
            pos[j] = pos[j].clone() + vel[j].clone() * first.clone();
        }
        for &i in &set {
            pos[i] = T::zero();
        }
        let pre = vel.clone();
        for (j, vj) in vel.iter_mut().enumerate() {
            let jump = set
                .iter()
                .fold(T::zero(), |acc, &i| acc + two.clone() * a[(i, j)].clone() * pre[i].clone());
            *vj = pre[j].clone() - jump;
        }
        t = t_hit.clone();
        breaks.push(t_hit);
        slopes.push(vel.clone());
    }
    PLTrajectory::new(t_start, t_end, x.to_vec(), breaks, slopes)
}
