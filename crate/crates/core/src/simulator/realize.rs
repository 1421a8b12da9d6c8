//! From matrix trajectories to genuine hard-ball collisions.
//!
//! A cone trajectory `x(t)` in the tangent cone at a contact configuration
//! `q` is realized by starting the balls at `q + x(t0)/lambda` with velocity
//! `x'(t0)`. Ball time `s` corresponds to cone time `t0 + lambda s`, and as
//! `lambda` grows the ball collisions converge to the cone reflections.

use std::time::Instant;

use serde::Serialize;

use crate::atraj::{
    build_am, build_inductive, collision_count_formula, exponential_bound, geometric_weights, perturb_to_genuine,
    propagate, rescale, uncoupled, validate, build_atilde, Mode, PerturbOptions, PLTrajectory, TrajectoryRecord, MAX_EVENTS,
};
use crate::ball_config::{angles_from_lambda, chain_segments, default_theta, perturbed_configuration};
use crate::cone_billiard::{lift_from_gram, simulate_cone_from};
use crate::error::{Error, Result, ResultExt};
use crate::geometry::{contact_tol, tangent_cone_for_pairs, BallConfiguration, Pair};
use crate::numeric::{Field, Rational, Real, Wide128, Wide256};
use crate::sequence::{equivalent, matched_prefix};
use crate::simulator::dynamics::{simulate, BallSystemState};

/// First and last exponent of the scale search `lambda = 2^e`.
pub const LAMBDA_START_EXP: u32 = 10;
pub const LAMBDA_CAP_EXP: u32 = 60;

/// Balls at `q + x0/lambda` with velocities `v0`, at ball time 0.
pub fn realize_from_cone<T: Real>(
    q: &BallConfiguration<T>,
    x0: &[T],
    v0: &[T],
    lambda: &T,
) -> Result<BallSystemState<T>> {
    let d = q.dim();
    let n = q.len();
    for v in [x0, v0] {
        if v.len() != d * n {
            return Err(Error::DimensionMismatch {
                expected: d * n,
                got: v.len(),
            });
        }
    }
    if *lambda <= T::zero() {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let config = q.displaced(x0, T::one() / lambda.clone())?;
    for i in 0..n {
        for j in i + 1..n {
            if config.dist_sq(i, j) <= T::one() {
                return Err(Error::InvalidArgument(format!(
                    "realized start has balls {} and {} touching or overlapping",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let velocities = v0.chunks(d).map(<[T]>::to_vec).collect();
    BallSystemState::new(config, velocities, T::zero(), &T::zero())
}

fn disjoint(a: &Pair, b: &Pair) -> bool {
    a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyParams {
    /// Ratio `r` of the weights `lambda_i = r^(i-1)`; halved until the
    /// perturbed matrix keeps the collision sequence.
    pub weight_ratio: f64,
    /// Angle tolerance; searched per `n` when absent.
    pub theta: Option<f64>,
    pub jitter: f64,
    pub seed: u64,
    pub max_events: usize,
    /// Fresh jitter seeds tried after a simultaneous collision.
    pub retries: usize,
    pub lambda_start_exp: u32,
    pub lambda_cap_exp: u32,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            weight_ratio: 0.125,
            theta: None,
            jitter: 1e-3,
            seed: 0,
            max_events: 10_000,
            retries: 4,
            lambda_start_exp: LAMBDA_START_EXP,
            lambda_cap_exp: LAMBDA_CAP_EXP,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub m: usize,
    pub predicted: u128,
    pub bound: u128,
    /// Ball collisions matched against the constructed sequence.
    pub observed: usize,
    /// All ball collisions in the window.
    pub simulated: usize,
    pub matched: bool,
    pub precision_bits: u32,
    pub weight_ratio: f64,
    /// `||A~ - A_m||` for the ratio used.
    pub delta: f64,
    pub theta: f64,
    pub jitter: f64,
    pub seed: u64,
    /// `log2` of the realization scale, when a match was found.
    pub lambda_exp: Option<u32>,
    /// Largest gap between a ball collision and its cone reflection, in
    /// cone time.
    pub max_time_gap: Option<f64>,
    pub cone_events: usize,
    pub gram_error: f64,
    pub seconds: f64,
    /// Matched prefix length for each scale tried.
    pub attempts: Vec<(u32, usize)>,
    pub note: Option<String>,
}

/// Files a verification run can write: the exact `B`-trajectory, the ball
/// configuration, the realized initial state and its collision log.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyArtifacts {
    pub trajectory: TrajectoryRecord,
    /// `B` as decimal strings.
    pub matrix: Vec<Vec<String>>,
    pub configuration: serde_json::Value,
    /// Present when some scale matched.
    pub initial_state: Option<serde_json::Value>,
    pub events_csv: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyOutcome {
    pub report: VerifyReport,
    pub artifacts: VerifyArtifacts,
}

/// Outcome of the exact part of the pipeline.
struct Exact {
    /// The genuine `B`-trajectory with `B = rescale(A~, lambda)`.
    b_traj: PLTrajectory<Rational>,
    b: Vec<Vec<Rational>>,
    lambda: Vec<Rational>,
    ratio: Rational,
}

fn exact_stage(m: usize, params: &VerifyParams, seed: u64) -> Result<Exact> {
    let (f, _) = build_inductive(m)?;
    let a = build_am::<Rational>(m);
    let zero = Rational::zero();
    let opts = PerturbOptions {
        jitter: params.jitter,
        seed,
        ..Default::default()
    };
    let g = perturb_to_genuine(&f, &a, &opts, &zero).context("de-generalizing")?;
    let target = g.wall_sequence(&zero);
    let (x, v) = g.initial_data();
    let mut ratio = Rational::from_f64(params.weight_ratio);
    for _ in 0..30 {
        let lambda = geometric_weights(m, &ratio);
        let (at, _) = build_atilde(m, &lambda)?;
        let res = propagate(&at, g.t_start().clone(), &x, &v, g.t_end().clone(), MAX_EVENTS);
        if let Ok(h) = res {
            let seq = h.wall_sequence(&zero);
            if equivalent(&seq, &target, |p, q| uncoupled(&at, *p, *q)) {
                let b = rescale(&at, &lambda)?;
                let b_traj = h.scaled(&lambda)?;
                let rep = validate(&b_traj, &b, Mode::Genuine, &zero)?;
                if let Some(viol) = rep.violation {
                    return Err(Error::Numeric(format!("rescaled trajectory fails: {viol}")));
                }
                return Ok(Exact {
                    b_traj,
                    b: b.to_rows(),
                    lambda,
                    ratio,
                });
            }
        }
        ratio *= Rational::from_ratio(1, 2);
    }
    Err(Error::Infeasible("no weight ratio keeps the collision sequence".into()))
}

/// Runs the whole construction for `n` balls in `R^3` at the precision of
/// `T` and checks the predicted collisions by simulation.
pub fn verify_exponential<T: Real>(n: usize, params: &VerifyParams) -> Result<VerifyReport> {
    verify_exponential_full::<T>(n, params).map(|o| o.report)
}

/// [`verify_exponential`] together with the artifacts of the run.
pub fn verify_exponential_full<T: Real>(n: usize, params: &VerifyParams) -> Result<VerifyOutcome> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 balls, got {n}")));
    }
    let clock = Instant::now();
    let mut last_err = None;
    for k in 0..params.retries.max(1) {
        let seed = params.seed.wrapping_add(k as u64);
        match verify_once::<T>(n, params, seed, &clock) {
            Err(e) if matches!(e.root(), Error::Simultaneous { .. }) => last_err = Some(e),
            other => return other,
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn verify_once<T: Real>(n: usize, params: &VerifyParams, seed: u64, clock: &Instant) -> Result<VerifyOutcome> {
    let m = n - 1;
    let predicted = collision_count_formula(m)?;
    let exact = exact_stage(m, params, seed)?;

    let theta = match params.theta {
        Some(t) => t,
        None => default_theta(n)?,
    };
    let lambda: Vec<T> = exact.lambda.iter().map(T::from_rational).collect();
    let angles = angles_from_lambda(&lambda, theta)?;
    let config = perturbed_configuration(n, &angles, theta).context("placing balls")?;
    let chain = chain_segments(n)?;
    let cone = tangent_cone_for_pairs(&config, chain.segments(), &contact_tol())?;
    let gram_error = exact
        .b
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, b)| (i, j, b)))
        .map(|(i, j, b)| (cone.gram()[(i, j)].clone() - T::from_rational(b)).abs().to_f64())
        .fold(0.0, f64::max);
    if gram_error > 1e-10 {
        return Err(Error::Numeric(format!("cone Gram differs from B by {gram_error:e}")));
    }

    let traj: PLTrajectory<T> = exact.b_traj.map(T::from_rational);
    let lifted = lift_from_gram(&cone, &traj, &T::scaled_tol(1e-9)).context("lifting to the cone")?;
    let t0 = traj.t_start().clone();
    let t_end = traj.t_end().clone();
    let cone_run = simulate_cone_from(
        &cone,
        t0.clone(),
        &lifted.start,
        &lifted.velocity,
        params.max_events,
        Some(t_end.clone()),
    )
    .context("cone billiard")?;
    let labels = cone.labels().expect("tangent cone has labels").to_vec();
    let target: Vec<Pair> = exact
        .b_traj
        .wall_sequence(&Rational::zero())
        .into_iter()
        .map(|k| labels[k])
        .collect();
    let cone_pairs: Vec<Pair> = cone_run.wall_sequence().into_iter().map(|k| labels[k]).collect();
    if !equivalent(&cone_pairs, &target, disjoint) {
        return Err(Error::Numeric(format!(
            "cone billiard gives {} reflections, matching {} of {}",
            cone_pairs.len(),
            matched_prefix(&cone_pairs, &target, disjoint),
            target.len()
        )));
    }

    let mut report = VerifyReport {
        n,
        m,
        predicted,
        bound: exponential_bound(n),
        observed: 0,
        simulated: 0,
        matched: false,
        precision_bits: T::PRECISION_BITS,
        weight_ratio: exact.ratio.to_f64(),
        delta: (exact.ratio.clone() * exact.ratio.clone()).to_f64(),
        theta,
        jitter: params.jitter,
        seed,
        lambda_exp: None,
        max_time_gap: None,
        cone_events: cone_run.len(),
        gram_error,
        seconds: 0.0,
        attempts: Vec::new(),
        note: None,
    };
    let mut artifacts = VerifyArtifacts {
        trajectory: exact.b_traj.to_record(),
        matrix: exact.b.iter().map(|r| r.iter().map(Field::to_repr).collect()).collect(),
        configuration: config.to_json(),
        initial_state: None,
        events_csv: None,
    };
    let two = T::from_i64(2);
    let mut scale = (0..params.lambda_start_exp).fold(T::one(), |acc, _| acc * two.clone());
    for e in params.lambda_start_exp..=params.lambda_cap_exp {
        let state = realize_from_cone(&config, &lifted.start, &lifted.velocity, &scale)?;
        let horizon = (t_end.clone() - t0.clone()) / scale.clone();
        let (log, _, _) = simulate(&state, Some(horizon), params.max_events)?;
        let observed = log.pairs();
        let matched = matched_prefix(&observed, &target, disjoint);
        report.attempts.push((e, matched));
        report.observed = matched;
        report.simulated = observed.len();
        if matched == target.len() {
            report.matched = true;
            report.lambda_exp = Some(e);
            report.max_time_gap = Some(time_gap(&log.times(), &cone_run, &t0, &scale));
            let mut csv = Vec::new();
            log.write_csv(&mut csv)?;
            artifacts.initial_state = Some(state.to_json());
            artifacts.events_csv = Some(String::from_utf8(csv).expect("csv is utf-8"));
            break;
        }
        scale = scale * two.clone();
    }
    if !report.matched {
        report.note = Some(format!(
            "no scale up to 2^{} reproduced the sequence; best prefix {}",
            params.lambda_cap_exp,
            report.attempts.iter().map(|a| a.1).max().unwrap_or(0)
        ));
    }
    report.seconds = clock.elapsed().as_secs_f64();
    Ok(VerifyOutcome { report, artifacts })
}

/// Largest `|t0 + lambda s_k - t_k|` over ball times `s_k` and cone times
/// `t_k`, both sorted.
fn time_gap<T: Real>(ball: &[T], cone: &crate::cone_billiard::ConeTrajectory<T>, t0: &T, scale: &T) -> f64 {
    ball.iter()
        .zip(&cone.events)
        .map(|(s, e)| (t0.clone() + scale.clone() * s.clone() - e.time.clone()).abs().to_f64())
        .fold(0.0, f64::max)
}

/// Picks the scalar type from a mantissa width: 53 bits runs in `f64`,
/// up to 128 in [`Wide128`], anything wider in [`Wide256`].
pub fn verify_with_precision(n: usize, params: &VerifyParams, bits: u32) -> Result<VerifyOutcome> {
    match bits {
        0..=53 => verify_exponential_full::<f64>(n, params),
        54..=128 => verify_exponential_full::<Wide128>(n, params),
        _ => verify_exponential_full::<Wide256>(n, params),
    }
}

/// Default mantissa width for `n` balls: double up to 5 balls, 128 bits
/// beyond.
pub fn default_precision(n: usize) -> u32 {
    if n <= 5 {
        53
    } else {
        128
    }
}
