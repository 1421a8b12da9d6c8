use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::atraj::matrix::AdmissibleMatrix;
use crate::error::{Error, Result};
use crate::numeric::Field;

/// Piecewise-linear map `[t_start, t_end] -> R^m`, stored as its value at
/// `t_start`, the strictly increasing break points, and one slope vector per
/// segment (`breaks.len() + 1` of them).
#[derive(Clone, Debug, PartialEq)]
pub struct PLTrajectory<T> {
    t_start: T,
    t_end: T,
    start: Vec<T>,
    breaks: Vec<T>,
    slopes: Vec<Vec<T>>,
}

/// One break point of a trajectory, with the coordinates that vanish there.
#[derive(Clone, Debug, PartialEq)]
pub struct Event<T> {
    pub time: T,
    pub vanishing: Vec<usize>,
    pub values: Vec<T>,
    pub pre: Vec<T>,
    pub post: Vec<T>,
}

impl<T: Field> PLTrajectory<T> {
    /// Checks the structural invariants only (shapes and ordering).
    pub fn new(t_start: T, t_end: T, start: Vec<T>, breaks: Vec<T>, slopes: Vec<Vec<T>>) -> Result<Self> {
        let m = start.len();
        if slopes.len() != breaks.len() + 1 {
            return Err(Error::Structure(format!(
                "{} break points need {} slope vectors, got {}",
                breaks.len(),
                breaks.len() + 1,
                slopes.len()
            )));
        }
        if let Some(k) = slopes.iter().position(|s| s.len() != m) {
            return Err(Error::Structure(format!("segment {k} slope has wrong length")));
        }
        if t_end <= t_start {
            return Err(Error::Structure("empty time window".into()));
        }
        let mut prev = &t_start;
        for (k, b) in breaks.iter().enumerate() {
            if b <= prev {
                return Err(Error::Structure(format!("break point {k} at {b} is out of order")));
            }
            prev = b;
        }
        if !breaks.is_empty() && *prev >= t_end {
            return Err(Error::Structure("last break point is not before t_end".into()));
        }
        Ok(PLTrajectory {
            t_start,
            t_end,
            start,
            breaks,
            slopes,
        })
    }

    pub fn m(&self) -> usize {
        self.start.len()
    }

    pub fn t_start(&self) -> &T {
        &self.t_start
    }

    pub fn t_end(&self) -> &T {
        &self.t_end
    }

    pub fn start(&self) -> &[T] {
        &self.start
    }

    pub fn breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn slopes(&self) -> &[Vec<T>] {
        &self.slopes
    }

    /// `(f(t_start), f'(t_start+))`.
    pub fn initial_data(&self) -> (Vec<T>, Vec<T>) {
        (self.start.clone(), self.slopes[0].clone())
    }

    /// Values at each break point, in order.
    pub fn break_values(&self) -> Vec<Vec<T>> {
        let mut cur = self.start.clone();
        let mut prev_t = self.t_start.clone();
        let mut out = Vec::with_capacity(self.breaks.len());
        for (k, t) in self.breaks.iter().enumerate() {
            let dt = t.clone() - prev_t;
            cur = cur
                .iter()
                .zip(&self.slopes[k])
                .map(|(x, v)| x.clone() + v.clone() * dt.clone())
                .collect();
            out.push(cur.clone());
            prev_t = t.clone();
        }
        out
    }

    pub fn end_values(&self) -> Vec<T> {
        let last_t = self.breaks.last().unwrap_or(&self.t_start).clone();
        let last_x = self.break_values().pop().unwrap_or_else(|| self.start.clone());
        let dt = self.t_end.clone() - last_t;
        last_x
            .iter()
            .zip(self.slopes.last().expect("at least one segment"))
            .map(|(x, v)| x.clone() + v.clone() * dt.clone())
            .collect()
    }

    pub fn value_at(&self, t: &T) -> Vec<T> {
        let k = self.breaks.iter().take_while(|b| *b <= t).count();
        let (base_t, base_x) = if k == 0 {
            (self.t_start.clone(), self.start.clone())
        } else {
            (self.breaks[k - 1].clone(), self.break_values().swap_remove(k - 1))
        };
        let dt = t.clone() - base_t;
        base_x
            .iter()
            .zip(&self.slopes[k])
            .map(|(x, v)| x.clone() + v.clone() * dt.clone())
            .collect()
    }

    /// Break points annotated with the coordinates within `tol` of zero.
    pub fn events(&self, tol: &T) -> Vec<Event<T>> {
        self.break_values()
            .into_iter()
            .enumerate()
            .map(|(k, values)| Event {
                time: self.breaks[k].clone(),
                vanishing: values
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| x.abs() <= *tol)
                    .map(|(i, _)| i)
                    .collect(),
                values,
                pre: self.slopes[k].clone(),
                post: self.slopes[k + 1].clone(),
            })
            .collect()
    }

    /// Only the events where some coordinate vanishes.
    pub fn collisions(&self, tol: &T) -> Vec<Event<T>> {
        self.events(tol)
            .into_iter()
            .filter(|e| !e.vanishing.is_empty())
            .collect()
    }

    /// Roots of coordinate `i`.
    pub fn roots(&self, i: usize, tol: &T) -> Vec<T> {
        self.collisions(tol)
            .into_iter()
            .filter(|e| e.vanishing.contains(&i))
            .map(|e| e.time)
            .collect()
    }

    /// Total number of roots, counted with multiplicity at simultaneous
    /// events.
    pub fn collision_count(&self, tol: &T) -> usize {
        self.collisions(tol).iter().map(|e| e.vanishing.len()).sum()
    }

    /// Sequence of vanishing coordinates in time order; a simultaneous event
    /// contributes its coordinates in increasing index order.
    pub fn wall_sequence(&self, tol: &T) -> Vec<usize> {
        self.collisions(tol)
            .into_iter()
            .flat_map(|e| e.vanishing)
            .collect()
    }

    /// Coordinatewise scaling `g_i = w_i f_i`.
    pub fn scaled(&self, w: &[T]) -> Result<Self> {
        if w.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: w.len(),
            });
        }
        let scale = |v: &Vec<T>| -> Vec<T> { v.iter().zip(w).map(|(a, b)| a.clone() * b.clone()).collect() };
        Ok(PLTrajectory {
            t_start: self.t_start.clone(),
            t_end: self.t_end.clone(),
            start: scale(&self.start),
            breaks: self.breaks.clone(),
            slopes: self.slopes.iter().map(scale).collect(),
        })
    }

    pub fn map<S: Field>(&self, f: impl Fn(&T) -> S) -> PLTrajectory<S> {
        PLTrajectory {
            t_start: f(&self.t_start),
            t_end: f(&self.t_end),
            start: self.start.iter().map(&f).collect(),
            breaks: self.breaks.iter().map(&f).collect(),
            slopes: self.slopes.iter().map(|s| s.iter().map(&f).collect()).collect(),
        }
    }

    /// Trajectory with a replaced slope entry; used to build negative
    /// controls.
    pub fn with_slope(&self, segment: usize, coord: usize, value: T) -> Self {
        let mut out = self.clone();
        out.slopes[segment][coord] = value;
        out
    }
}

/// Which reflection rule to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// At most one coordinate vanishes at a time.
    Genuine,
    /// Simultaneous roots allowed for coordinates `i, j` with
    /// `a_ij = a_ji = 0`; the velocity jump sums over the vanishing set.
    Generalized,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    Negative { coord: usize, value: f64 },
    SimultaneousRoots { coords: Vec<usize> },
    CoupledSimultaneous { i: usize, j: usize },
    Reflection { coord: usize, expected: f64, got: f64 },
    EndpointCollision { coord: usize, at_end: bool },
    RestingOnWall { coord: usize },
}

/// First rule violation, located by break point index (`None` for the
/// endpoints).
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub event: Option<usize>,
    pub time: f64,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.event {
            Some(k) => write!(f, "event {} at t = {}: {:?}", k + 1, self.time, self.kind),
            None => write!(f, "endpoint t = {}: {:?}", self.time, self.kind),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub mode: Mode,
    pub collisions: usize,
    pub collision_events: usize,
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks `f` against the reflection rule of `a`.
///
/// Structural problems (shapes, unsorted break points, order mismatch) are
/// returned as `Err`; rule violations come back in the report. With an exact
/// scalar type pass `tol = 0` for exact checks.
pub fn validate<T: Field>(
    f: &PLTrajectory<T>,
    a: &AdmissibleMatrix<T>,
    mode: Mode,
    tol: &T,
) -> Result<ValidationReport> {
    let m = f.m();
    if a.order() != m {
        return Err(Error::Structure(format!(
            "matrix order {} does not match {m} coordinates",
            a.order()
        )));
    }
    // Re-run the structural checks in case the value was assembled by hand.
    PLTrajectory::new(
        f.t_start.clone(),
        f.t_end.clone(),
        f.start.clone(),
        f.breaks.clone(),
        f.slopes.clone(),
    )?;

    let mut report = ValidationReport {
        mode,
        collisions: 0,
        collision_events: 0,
        violation: None,
    };
    let fail = |report: &mut ValidationReport, event, time: &T, kind| {
        report.violation = Some(Violation {
            event,
            time: time.to_f64(),
            kind,
        });
    };

    for (i, x) in f.start.iter().enumerate() {
        if *x <= *tol {
            fail(&mut report, None, &f.t_start, ViolationKind::EndpointCollision { coord: i, at_end: false });
            return Ok(report);
        }
    }

    for (k, ev) in f.events(tol).iter().enumerate() {
        if let Some(i) = ev.values.iter().position(|x| *x < -tol.clone()) {
            fail(
                &mut report,
                Some(k),
                &ev.time,
                ViolationKind::Negative {
                    coord: i,
                    value: ev.values[i].to_f64(),
                },
            );
            return Ok(report);
        }
        let s = &ev.vanishing;
        match mode {
            Mode::Genuine if s.len() > 1 => {
                fail(&mut report, Some(k), &ev.time, ViolationKind::SimultaneousRoots { coords: s.clone() });
                return Ok(report);
            }
            Mode::Generalized => {
                for (p, &i) in s.iter().enumerate() {
                    for &j in &s[p + 1..] {
                        if !a[(i, j)].is_zero_value() || !a[(j, i)].is_zero_value() {
                            fail(&mut report, Some(k), &ev.time, ViolationKind::CoupledSimultaneous { i, j });
                            return Ok(report);
                        }
                    }
                }
            }
            _ => {}
        }
        if let Some(&i) = s.iter().find(|&&i| ev.pre[i].abs() <= *tol) {
            fail(&mut report, Some(k), &ev.time, ViolationKind::RestingOnWall { coord: i });
            return Ok(report);
        }
        for j in 0..m {
            let jump = s.iter().fold(T::zero(), |acc, &i| {
                acc + T::from_i64(2) * a[(i, j)].clone() * ev.pre[i].clone()
            });
            let expected = ev.pre[j].clone() - jump;
            if (expected.clone() - ev.post[j].clone()).abs() > *tol {
                fail(
                    &mut report,
                    Some(k),
                    &ev.time,
                    ViolationKind::Reflection {
                        coord: j,
                        expected: expected.to_f64(),
                        got: ev.post[j].to_f64(),
                    },
                );
                return Ok(report);
            }
        }
        if !s.is_empty() {
            report.collision_events += 1;
            report.collisions += s.len();
        }
    }

    for (i, x) in f.end_values().iter().enumerate() {
        if *x <= *tol {
            fail(&mut report, None, &f.t_end, ViolationKind::EndpointCollision { coord: i, at_end: true });
            return Ok(report);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Export

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub m: usize,
    pub t_start: String,
    pub t_end: String,
    pub start: Vec<String>,
    pub segments: Vec<SegmentRecord>,
}

/// One linear piece: starts at `t` (the window start or a break point).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub t: String,
    pub slopes: Vec<String>,
}

impl<T: Field> PLTrajectory<T> {
    pub fn to_record(&self) -> TrajectoryRecord {
        let strs = |v: &[T]| v.iter().map(Field::to_repr).collect::<Vec<_>>();
        let starts = std::iter::once(&self.t_start).chain(&self.breaks);
        TrajectoryRecord {
            m: self.m(),
            t_start: self.t_start.to_repr(),
            t_end: self.t_end.to_repr(),
            start: strs(&self.start),
            segments: starts
                .zip(&self.slopes)
                .map(|(t, s)| SegmentRecord {
                    t: t.to_repr(),
                    slopes: strs(s),
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &TrajectoryRecord) -> Result<Self> {
        let p = |s: &String| T::parse_repr(s).ok_or_else(|| Error::InvalidArgument(format!("bad scalar {s:?}")));
        let pv = |v: &Vec<String>| v.iter().map(p).collect::<Result<Vec<T>>>();
        if rec.segments.is_empty() {
            return Err(Error::Structure("trajectory without segments".into()));
        }
        let breaks = rec.segments[1..].iter().map(|s| p(&s.t)).collect::<Result<Vec<_>>>()?;
        let slopes = rec.segments.iter().map(|s| pv(&s.slopes)).collect::<Result<Vec<_>>>()?;
        let t = Self::new(p(&rec.t_start)?, p(&rec.t_end)?, pv(&rec.start)?, breaks, slopes)?;
        if t.m() != rec.m {
            return Err(Error::DimensionMismatch {
                expected: rec.m,
                got: t.m(),
            });
        }
        Ok(t)
    }

    /// Event CSV: `t_event, coordinate_index, pre_1..pre_m, post_1..post_m`,
    /// one row per vanishing coordinate, 1-based indices.
    pub fn write_events_csv<W: Write>(&self, w: W, tol: &T) -> Result<()> {
        let m = self.m();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t_event".to_string(), "coordinate_index".to_string()];
        header.extend((1..=m).map(|i| format!("pre_slope_{i}")));
        header.extend((1..=m).map(|i| format!("post_slope_{i}")));
        wr.write_record(&header)?;
        for ev in self.collisions(tol) {
            for &i in &ev.vanishing {
                let mut row = vec![ev.time.to_repr(), (i + 1).to_string()];
                row.extend(ev.pre.iter().map(Field::to_repr));
                row.extend(ev.post.iter().map(Field::to_repr));
                wr.write_record(&row)?;
            }
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
