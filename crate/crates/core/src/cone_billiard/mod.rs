//! Billiards in polyhedral cones.
//!
//! A point moves freely inside `{x : <x, nu_k> >= 0}` and reflects off the
//! face it hits, `v -> v - 2 <v, nu> nu`. In face coordinates
//! `f_k(t) = <x(t), nu_k>` this is exactly the matrix reflection rule with the
//! Gram matrix of the normals, which is how [`gram_coordinates`] and
//! [`lift_from_gram`] pass between the two pictures.

mod doubling;
mod gram;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{scalar_to_json, PolyhedralCone};
use crate::numeric::{dot, Field, Real};

pub use doubling::{build_right_angle_example, max_off_diagonal, ndim_ball_example, NdimExample, RightAngleExample};
pub use gram::{gram_coordinates, lift_from_gram};

/// Why a cone simulation stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// No face is approached any more.
    Escaped,
    MaxEvents,
    /// Reached the requested end time.
    Horizon,
}

/// One reflection.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeEvent<T> {
    pub time: T,
    /// 0-based face index.
    pub wall: usize,
    pub position: Vec<T>,
    pub pre: Vec<T>,
    pub post: Vec<T>,
}

/// Straight segments between reflections, starting from `(start, velocity)`
/// at `t_start`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeTrajectory<T> {
    pub t_start: T,
    pub start: Vec<T>,
    pub velocity: Vec<T>,
    pub events: Vec<ConeEvent<T>>,
    pub termination: Termination,
    /// End of the trajectory when it is a bounded window.
    pub t_end: Option<T>,
}

impl<T: Field> ConeTrajectory<T> {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn wall_sequence(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.wall).collect()
    }

    /// Position at time `t >= t_start`.
    pub fn position_at(&self, t: &T) -> Vec<T> {
        let k = self.events.iter().take_while(|e| e.time <= *t).count();
        let (t0, x0, v) = if k == 0 {
            (&self.t_start, &self.start, &self.velocity)
        } else {
            let e = &self.events[k - 1];
            (&e.time, &e.position, &e.post)
        };
        let dt = t.clone() - t0.clone();
        x0.iter().zip(v).map(|(x, v)| x.clone() + v.clone() * dt.clone()).collect()
    }

    /// Largest `|<x, nu>|` over the positions of all events.
    pub fn max_wall_residual(&self, cone: &PolyhedralCone<T>) -> T {
        self.events
            .iter()
            .map(|e| dot(&e.position, cone.normal(e.wall)).abs())
            .fold(T::zero(), T::max_of)
    }

    /// Largest `|v+ - v- + 2 <v-, nu> nu|` over all events.
    pub fn max_reflection_residual(&self, cone: &PolyhedralCone<T>) -> T {
        let two = T::from_i64(2);
        self.events
            .iter()
            .map(|e| {
                let nu = cone.normal(e.wall);
                let c = two.clone() * dot(&e.pre, nu);
                e.post
                    .iter()
                    .zip(&e.pre)
                    .zip(nu)
                    .map(|((p, q), n)| (p.clone() - q.clone() + c.clone() * n.clone()).abs())
                    .fold(T::zero(), T::max_of)
            })
            .fold(T::zero(), T::max_of)
    }

    /// CSV with columns `t, wall_index, x_1.., pre_1.., post_1..`, 1-based
    /// wall indices.
    pub fn write_events_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.start.len();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "wall_index".to_string()];
        header.extend((1..=d).map(|k| format!("x_{k}")));
        header.extend((1..=d).map(|k| format!("pre_{k}")));
        header.extend((1..=d).map(|k| format!("post_{k}")));
        wr.write_record(&header)?;
        for e in &self.events {
            let mut row = vec![e.time.to_repr(), (e.wall + 1).to_string()];
            for v in [&e.position, &e.pre, &e.post] {
                row.extend(v.iter().map(Field::to_repr));
            }
            wr.write_record(&row)?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Cone JSON: `{ambient, normals, gram, labels}` with 1-based ball labels.
pub fn cone_to_json<T: Field>(cone: &PolyhedralCone<T>) -> serde_json::Value {
    let vecs = |v: &[T]| v.iter().map(scalar_to_json).collect::<Vec<_>>();
    serde_json::json!({
        "ambient": cone.ambient(),
        "normals": cone.normals().iter().map(|n| vecs(n)).collect::<Vec<_>>(),
        "gram": cone.gram().to_rows().iter().map(|r| vecs(r)).collect::<Vec<_>>(),
        "labels": cone.labels().map(|l| l.iter().map(|&(i, j)| [i + 1, j + 1]).collect::<Vec<_>>()),
    })
}

/// Billiard from `(x0, v0)` at time 0 until escape or `max_events`.
pub fn simulate_cone<T: Real>(
    cone: &PolyhedralCone<T>,
    x0: &[T],
    v0: &[T],
    max_events: usize,
) -> Result<ConeTrajectory<T>> {
    simulate_cone_from(cone, T::zero(), x0, v0, max_events, None)
}

/// Billiard from `(x0, v0)` at time `t0`. Stops at escape, after
/// `max_events` reflections, or at `horizon`. Two faces hit within
/// [`Field::tie_tolerance`] of each other is a singular event and an error.
pub fn simulate_cone_from<T: Real>(
    cone: &PolyhedralCone<T>,
    t0: T,
    x0: &[T],
    v0: &[T],
    max_events: usize,
    horizon: Option<T>,
) -> Result<ConeTrajectory<T>> {
    let d = cone.ambient();
    for v in [x0, v0] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    if let Some(k) = cone.face_values(x0).iter().position(|f| *f <= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "start point is not inside the cone (face {})",
            k + 1
        )));
    }
    let tie = T::tie_tolerance();
    let two = T::from_i64(2);
    let mut t = t0.clone();
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut events = Vec::new();
    let termination = loop {
        if events.len() >= max_events {
            break Termination::MaxEvents;
        }
        let values = cone.face_values(&x);
        let rates = cone.face_values(&v);
        let mut hits: Vec<(T, usize)> = (0..cone.faces())
            .filter(|&k| rates[k] < T::zero())
            .map(|k| {
                let dt = -values[k].clone() / rates[k].clone();
                (T::max_of(dt, T::zero()), k)
            })
            .collect();
        if hits.is_empty() {
            break Termination::Escaped;
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (dt, wall) = hits[0].clone();
        if let Some(h) = &horizon {
            if t.clone() + dt.clone() >= *h {
                break Termination::Horizon;
            }
        }
        if hits.len() > 1 && hits[1].0.clone() - dt.clone() <= tie {
            return Err(Error::Simultaneous {
                time: (t + dt).to_f64(),
                detail: format!("faces {} and {} hit together", wall + 1, hits[1].1 + 1),
            });
        }
        t = t + dt.clone();
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi = xi.clone() + vi.clone() * dt.clone();
        }
        // put the point back on the face it hit
        let nu = cone.normal(wall);
        let off = dot(&x, nu);
        for (xi, n) in x.iter_mut().zip(nu) {
            *xi = xi.clone() - off.clone() * n.clone();
        }
        let pre = v.clone();
        let c = two.clone() * dot(&pre, nu);
        for (vi, n) in v.iter_mut().zip(nu) {
            *vi = vi.clone() - c.clone() * n.clone();
        }
        events.push(ConeEvent {
            time: t.clone(),
            wall,
            position: x.clone(),
            pre,
            post: v.clone(),
        });
    };
    Ok(ConeTrajectory {
        t_start: t0,
        start: x0.to_vec(),
        velocity: v0.to_vec(),
        events,
        termination,
        t_end: horizon,
    })
}
