//! Event-driven hard-ball dynamics and the realization of cone trajectories
//! as ball collisions.

mod dynamics;
mod realize;

pub use dynamics::{apply_elastic, next_collision, simulate, BallSystemState, EventLog, EventRecord, Stop};
pub use realize::{
    default_precision, realize_from_cone, verify_exponential, verify_exponential_full, verify_with_precision, VerifyArtifacts, VerifyOutcome,
    VerifyParams, VerifyReport,
    LAMBDA_CAP_EXP, LAMBDA_START_EXP,
};
