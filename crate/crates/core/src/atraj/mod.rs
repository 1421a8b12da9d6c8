//! Admissible matrices and piecewise-linear `A`-trajectories.
//!
//! For an admissible matrix `A` (unit diagonal), an `A`-trajectory is a
//! nonnegative piecewise-linear `f: I -> R^m` that is linear while all
//! coordinates are positive and, whenever `f_i` vanishes, changes slopes by
//!
//! ```text
//! f_j'(t+) = f_j'(t-) - 2 a_ij f_i'(t-)      for every j.
//! ```
//!
//! Generalized trajectories let uncoupled coordinates vanish together, with
//! the jump summed over the vanishing set. Coordinates are 0-based here.

mod delta;
mod inductive;
mod matrix;
mod perturb;
mod propagate;
mod trajectory;

pub use delta::{find_delta, ratio_works, DeltaSearch, RatioProbe};
pub use inductive::{
    build_inductive, collision_count_formula, exponential_bound, root_schedule, Progression, RootSchedule,
};
pub use matrix::{
    build_am, build_atilde, edge_set, geometric_weights, in_edge_set, rescale, AdmissibleMatrix, EdgeSet,
};
pub use perturb::{perturb_to_genuine, root_time, PerturbOptions, MAX_ATTEMPTS};
pub use propagate::{propagate, MAX_EVENTS};
pub use trajectory::{
    validate, Event, Mode, PLTrajectory, SegmentRecord, TrajectoryRecord, ValidationReport, Violation,
    ViolationKind,
};

use crate::numeric::Field;

/// Coordinates `i` and `j` may swap roots without changing the dynamics.
pub fn uncoupled<T: Field>(a: &AdmissibleMatrix<T>, i: usize, j: usize) -> bool {
    i != j && a[(i, j)].is_zero_value() && a[(j, i)].is_zero_value()
}
