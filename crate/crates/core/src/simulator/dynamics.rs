use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{contact_tol, scalar_from_json, scalar_to_json, BallConfiguration, Pair};
use crate::numeric::{dot, Field, Real};

/// Positions, velocities and clock of `n` equal balls.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSystemState<T> {
    pub config: BallConfiguration<T>,
    pub velocities: Vec<Vec<T>>,
    pub time: T,
}

impl<T: Real> BallSystemState<T> {
    /// Checks shapes and that no two balls overlap by more than `tol`.
    pub fn new(config: BallConfiguration<T>, velocities: Vec<Vec<T>>, time: T, tol: &T) -> Result<Self> {
        if velocities.len() != config.len() {
            return Err(Error::DimensionMismatch {
                expected: config.len(),
                got: velocities.len(),
            });
        }
        if let Some(v) = velocities.iter().find(|v| v.len() != config.dim()) {
            return Err(Error::DimensionMismatch {
                expected: config.dim(),
                got: v.len(),
            });
        }
        config.check_valid(tol)?;
        Ok(BallSystemState {
            config,
            velocities,
            time,
        })
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    pub fn momentum(&self) -> Vec<T> {
        let d = self.config.dim();
        (0..d)
            .map(|k| self.velocities.iter().fold(T::zero(), |acc, v| acc + v[k].clone()))
            .collect()
    }

    /// Twice the kinetic energy, `sum |v_i|^2`.
    pub fn energy(&self) -> T {
        self.velocities.iter().fold(T::zero(), |acc, v| acc + dot(v, v))
    }

    /// Free flight by `dt`.
    pub fn advance(&mut self, dt: &T) {
        let centers = self
            .config
            .centers()
            .iter()
            .zip(&self.velocities)
            .map(|(q, v)| q.iter().zip(v).map(|(x, u)| x.clone() + u.clone() * dt.clone()).collect())
            .collect();
        self.config = BallConfiguration::from_centers(self.config.dim(), centers).expect("same shape");
        self.time = self.time.clone() + dt.clone();
    }

    /// Reverses every velocity.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        for v in out.velocities.iter_mut() {
            v.iter_mut().for_each(|x| *x = -x.clone());
        }
        out
    }

    /// JSON `{d, n, positions, velocities, time}`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = |vs: &[Vec<T>]| {
            vs.iter()
                .map(|v| v.iter().map(scalar_to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        serde_json::to_value(StateRecord {
            d: self.config.dim(),
            n: self.len(),
            positions: rows(self.config.centers()),
            velocities: rows(&self.velocities),
            time: scalar_to_json(&self.time),
        })
        .expect("serializable")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let rec: StateRecord = serde_json::from_value(value.clone())?;
        let rows = |vs: &[Vec<serde_json::Value>]| {
            vs.iter()
                .map(|v| v.iter().map(scalar_from_json).collect::<Result<Vec<T>>>())
                .collect::<Result<Vec<_>>>()
        };
        let config = BallConfiguration::from_centers(rec.d, rows(&rec.positions)?)?;
        if config.len() != rec.n {
            return Err(Error::DimensionMismatch {
                expected: rec.n,
                got: config.len(),
            });
        }
        Self::new(config, rows(&rec.velocities)?, scalar_from_json(&rec.time)?, &contact_tol())
    }
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    d: usize,
    n: usize,
    positions: Vec<Vec<serde_json::Value>>,
    velocities: Vec<Vec<serde_json::Value>>,
    time: serde_json::Value,
}

/// Earliest time `t > 0` with `|dq + t dv| = 1` for an approaching pair, if
/// any. Uses `t = c / (-b + sqrt(b^2 - a c))`, which has no cancellation
/// for `b < 0`.
fn pair_hit<T: Real>(dq: &[T], dv: &[T]) -> Option<T> {
    let b = dot(dq, dv);
    if b >= T::zero() {
        return None;
    }
    let a = dot(dv, dv);
    let c = dot(dq, dq) - T::one();
    let disc = b.clone() * b.clone() - a * c.clone();
    if disc < T::zero() {
        return None;
    }
    let t = c / (-b + disc.sqrt());
    Some(T::max_of(t, T::zero()))
}

fn diff<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

/// Next collision `(absolute time, pair)`, or `None` for free flight
/// forever. Two pairs colliding within [`Field::tie_tolerance`] of each
/// other is reported as [`Error::Simultaneous`].
pub fn next_collision<T: Real>(state: &BallSystemState<T>) -> Result<Option<(T, Pair)>> {
    let n = state.len();
    let mut best: Option<(T, Pair)> = None;
    let mut runner_up: Option<(T, Pair)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let dq = state.config.diff(i, j);
            let dv = diff(&state.velocities[i], &state.velocities[j]);
            let Some(t) = pair_hit(&dq, &dv) else { continue };
            match &best {
                Some((bt, _)) if t >= *bt => {
                    if runner_up.as_ref().is_none_or(|(rt, _)| t < *rt) {
                        runner_up = Some((t, (i, j)));
                    }
                }
                _ => {
                    runner_up = best.take();
                    best = Some((t, (i, j)));
                }
            }
        }
    }
    if let (Some((t1, p1)), Some((t2, p2))) = (&best, &runner_up) {
        if t2.clone() - t1.clone() <= T::tie_tolerance() {
            return Err(Error::Simultaneous {
                time: (state.time.clone() + t1.clone()).to_f64(),
                detail: format!(
                    "pairs ({}, {}) and ({}, {}) collide together",
                    p1.0 + 1,
                    p1.1 + 1,
                    p2.0 + 1,
                    p2.1 + 1
                ),
            });
        }
    }
    Ok(best.map(|(t, p)| (state.time.clone() + t, p)))
}

/// Elastic collision of equal balls: the velocity components along
/// `q_i - q_j` are exchanged, tangential components are kept.
pub fn apply_elastic<T: Real>(state: &mut BallSystemState<T>, pair: Pair, tol: &T) -> Result<()> {
    let (i, j) = pair;
    let dist = state.config.dist(i, j);
    if (dist.clone() - T::one()).abs() > *tol {
        return Err(Error::NotInContact {
            i,
            j,
            distance: dist.to_f64(),
        });
    }
    let e: Vec<T> = state.config.diff(i, j).into_iter().map(|x| x / dist.clone()).collect();
    let u = dot(&diff(&state.velocities[i], &state.velocities[j]), &e);
    for (k, ek) in e.iter().enumerate() {
        let du = u.clone() * ek.clone();
        state.velocities[i][k] = state.velocities[i][k].clone() - du.clone();
        state.velocities[j][k] = state.velocities[j][k].clone() + du;
    }
    Ok(())
}

/// One collision with snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord<T> {
    pub time: T,
    pub pair: Pair,
    pub positions: Vec<Vec<T>>,
    pub pre: Vec<Vec<T>>,
    pub post: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventLog<T> {
    pub dim: usize,
    pub records: Vec<EventRecord<T>>,
}

impl<T: Field> EventLog<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn pairs(&self) -> Vec<Pair> {
        self.records.iter().map(|r| r.pair).collect()
    }

    pub fn times(&self) -> Vec<T> {
        self.records.iter().map(|r| r.time.clone()).collect()
    }

    /// CSV `t, i, j, q<b>_<k>.., vpre<b>_<k>.., vpost<b>_<k>..` with 1-based
    /// ball numbers.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.records.first().map_or(0, |r| r.positions.len());
        let mut header = vec!["t".to_string(), "i".to_string(), "j".to_string()];
        for prefix in ["q", "vpre", "vpost"] {
            for b in 1..=n {
                header.extend((1..=self.dim).map(|k| format!("{prefix}{b}_{k}")));
            }
        }
        wr.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.time.to_repr(), (r.pair.0 + 1).to_string(), (r.pair.1 + 1).to_string()];
            for block in [&r.positions, &r.pre, &r.post] {
                row.extend(block.iter().flatten().map(Field::to_repr));
            }
            wr.write_record(&row)?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Why a simulation stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stop {
    /// No pair will ever collide again.
    FreeFlight,
    Horizon,
    MaxEvents,
}

/// Event-driven simulation from `state` until free flight, `horizon`
/// (absolute time) or `max_events`. Returns the log and the final state.
pub fn simulate<T: Real>(
    state: &BallSystemState<T>,
    horizon: Option<T>,
    max_events: usize,
) -> Result<(EventLog<T>, BallSystemState<T>, Stop)> {
    let tol = contact_tol::<T>();
    let mut cur = state.clone();
    let mut records = Vec::new();
    let stop = loop {
        if records.len() >= max_events {
            break Stop::MaxEvents;
        }
        let Some((t, pair)) = next_collision(&cur)? else {
            break Stop::FreeFlight;
        };
        if let Some(h) = &horizon {
            if t > *h {
                let dt = h.clone() - cur.time.clone();
                cur.advance(&dt);
                break Stop::Horizon;
            }
        }
        let dt = t - cur.time.clone();
        cur.advance(&dt);
        let pre = cur.velocities.clone();
        apply_elastic(&mut cur, pair, &tol)?;
        records.push(EventRecord {
            time: cur.time.clone(),
            pair,
            positions: cur.config.centers().to_vec(),
            pre,
            post: cur.velocities.clone(),
        });
    };
    let log = EventLog {
        dim: state.config.dim(),
        records,
    };
    Ok((log, cur, stop))
}
