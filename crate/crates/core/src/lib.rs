//! Hard-ball trajectories with exponentially many collisions.
//!
//! The pipeline runs in four layers:
//!
//! * [`atraj`]: admissible matrices and piecewise-linear trajectories that
//!   reflect off coordinate walls, including the inductive construction with
//!   exponentially many roots;
//! * [`cone_billiard`]: billiards in polyhedral cones and the Gram-matrix
//!   lift from matrix trajectories to cone trajectories;
//! * [`ball_config`]: explicit ball configurations whose tangent cone has a
//!   prescribed Gram matrix;
//! * [`simulator`]: an event-driven simulator for equal hard balls, used to
//!   confirm that a realized configuration produces the predicted collisions.
//!
//! ```
//! use hardball::atraj::{build_am, build_inductive, validate, Mode};
//! use hardball::numeric::{Field, Rational};
//!
//! let (f, _) = build_inductive(5).unwrap();
//! let report = validate(&f, &build_am(5), Mode::Generalized, &Rational::zero()).unwrap();
//! assert!(report.passed());
//! assert_eq!(report.collisions, 22);
//! ```

pub mod atraj;
pub mod ball_config;
pub mod cli;
pub mod cone_billiard;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod manifest;
pub mod numeric;
pub mod sequence;
pub mod simulator;

pub use error::{Error, Result};

// the guide's code blocks run as doc-tests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/matrix-trajectories.md")]
    mod matrix_trajectories {}
    #[doc = include_str!("../../../book/src/construction.md")]
    mod construction {}
    #[doc = include_str!("../../../book/src/cone-billiards.md")]
    mod cone_billiards {}
    #[doc = include_str!("../../../book/src/ball-configurations.md")]
    mod ball_configurations {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
