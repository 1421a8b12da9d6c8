//! Acceptance checks, one PASS/FAIL line each. Runs without the test harness
//! so the lines always show; exits nonzero if any check fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hardball::atraj::{build_am, build_inductive, collision_count_formula, perturb_to_genuine, validate, Mode, PerturbOptions};
use hardball::cli::{cmd_verify, Tuning, VerifyArgs};
use hardball::cone_billiard::{build_right_angle_example, ndim_ball_example, simulate_cone};
use hardball::geometry::{contact_pairs, gram_brute_force, gram_closed_form, wall_normal, BallConfiguration, PolyhedralCone};
use hardball::numeric::{Field, Rational};
use hardball::simulator::{simulate, BallSystemState, EventLog};
use hardball::Error;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn construction_count_identity() -> Check {
    let clock = Instant::now();
    let zero = Rational::zero();
    let mut counts = Vec::new();
    for m in 1..=12 {
        let (f, _) = build_inductive(m).map_err(|e| e.to_string())?;
        let rep = validate(&f, &build_am(m), Mode::Generalized, &zero).map_err(|e| e.to_string())?;
        if let Some(v) = rep.violation {
            return Err(format!("m = {m}: {v}"));
        }
        let formula = collision_count_formula(m).map_err(|e| e.to_string())?;
        if rep.collisions as u128 != formula || f.collision_count(&zero) as u128 != formula {
            return Err(format!("m = {m}: {} roots, formula {formula}", rep.collisions));
        }
        counts.push(formula);
    }
    let secs = clock.elapsed().as_secs_f64();
    if secs >= 1.0 {
        return Err(format!("took {secs:.2} s, limit 1 s"));
    }
    Ok(format!("m = 1..12 give N = {counts:?} in {secs:.3} s"))
}

fn degeneralization() -> Check {
    let clock = Instant::now();
    let zero = Rational::zero();
    for m in 1..=12 {
        let (f, _) = build_inductive(m).map_err(|e| e.to_string())?;
        let a = build_am(m);
        let g = perturb_to_genuine(&f, &a, &PerturbOptions::default(), &zero).map_err(|e| e.to_string())?;
        let rep = validate(&g, &a, Mode::Genuine, &zero).map_err(|e| e.to_string())?;
        if let Some(v) = rep.violation {
            return Err(format!("m = {m}: {v}"));
        }
        let n = collision_count_formula(m).unwrap() as usize;
        let events = g.collisions(&zero);
        if rep.collisions != n || events.len() != n {
            return Err(format!("m = {m}: {} collisions, expected {n}", rep.collisions));
        }
        if events.iter().any(|e| e.vanishing.len() != 1) || events.windows(2).any(|w| w[0].time >= w[1].time) {
            return Err(format!("m = {m}: roots are not distinct"));
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    if secs >= 5.0 {
        return Err(format!("took {secs:.2} s, limit 5 s"));
    }
    Ok(format!("m = 1..12 genuine with distinct roots in {secs:.3} s"))
}

fn cone_doubling() -> Check {
    let mut last = 0.0;
    for m in 1..=10 {
        let clock = Instant::now();
        let ex = build_right_angle_example::<f64>(m, 0.1).map_err(|e| e.to_string())?;
        let tr = ex.simulate().map_err(|e| e.to_string())?;
        let expected = (1usize << m) - 1;
        if tr.len() != expected {
            return Err(format!("m = {m}: {} collisions, expected {expected}", tr.len()));
        }
        last = clock.elapsed().as_secs_f64();
    }
    if last >= 10.0 {
        return Err(format!("m = 10 took {last:.2} s, limit 10 s"));
    }
    Ok(format!("2^m - 1 for m = 1..10, m = 10 in {last:.3} s"))
}

fn orthant_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0;
    for k in 0..1000 {
        let m = 1 + k % 8;
        let cone = PolyhedralCone::<f64>::orthant(m);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..10.0)).collect();
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tr = simulate_cone(&cone, &x, &v, 10 * m).map_err(|e| e.to_string())?;
        if tr.len() > m {
            return Err(format!("m = {m}: {} collisions", tr.len()));
        }
        worst = worst.max(tr.len());
    }
    Ok(format!("1000 runs with m <= 8, at most {worst} collisions"))
}

fn end_to_end() -> Check {
    let clock = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let args = VerifyArgs {
        n: (3, 6),
        tuning: Tuning {
            precision_bits: None,
            lambda_ratio: 0.125,
            theta: None,
            jitter: 1e-3,
            seed: 0,
            max_events: 10_000,
        },
    };
    let summary = cmd_verify(&args, dir.path()).map_err(|e| e.to_string())?;
    let expected = [(3, 3u128, 53), (4, 7, 53), (5, 12, 53), (6, 22, 128)];
    let mut observed = Vec::new();
    for (row, (n, count, bits)) in summary.rows.iter().zip(expected) {
        let rep = row.outcome.as_ref().map_err(|e| format!("n = {n}: {e}"))?;
        if !rep.matched || rep.observed as u128 != count || rep.predicted != count {
            return Err(format!("n = {n}: observed {} of {count}", rep.observed));
        }
        if (rep.observed as u128) < rep.bound {
            return Err(format!("n = {n}: below 2^(n/2)"));
        }
        if rep.precision_bits != bits {
            return Err(format!("n = {n}: ran at {} bits", rep.precision_bits));
        }
        observed.push(rep.observed);
    }
    let secs = clock.elapsed().as_secs_f64();
    if secs >= 120.0 {
        return Err(format!("took {secs:.1} s, limit 120 s"));
    }
    Ok(format!("n = 3..6 observed {observed:?} in {secs:.2} s"))
}

fn ndim_instance() -> Check {
    let ex = ndim_ball_example(4, 0.05).map_err(|e| e.to_string())?;
    if ex.config.dim() != 3 || ex.config.len() != 4 {
        return Err("wrong shape".into());
    }
    let contacts = contact_pairs(&ex.config, &1e-9).map_err(|e| e.to_string())?;
    if contacts.len() != 3 {
        return Err(format!("{} contacts", contacts.len()));
    }
    let tr = ex.simulate().map_err(|e| e.to_string())?;
    if tr.len() < 7 {
        return Err(format!("{} collisions", tr.len()));
    }
    Ok(format!("4 balls in R^3 with 3 contacts, {} collisions", tr.len()))
}

/// Largest relative momentum and energy change and collision-rule residual
/// over all events of `log`.
fn event_residuals(log: &EventLog<f64>) -> (f64, f64, f64) {
    let (mut mom, mut en, mut rule) = (0.0f64, 0.0f64, 0.0f64);
    let d = log.dim;
    for r in &log.records {
        let sum = |vs: &[Vec<f64>], k: usize| vs.iter().map(|v| v[k]).sum::<f64>();
        let scale: f64 = r.pre.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum();
        for k in 0..d {
            mom = mom.max((sum(&r.post, k) - sum(&r.pre, k)).abs() / scale.sqrt().max(1e-300));
        }
        let e_post: f64 = r.post.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum();
        en = en.max((e_post - scale).abs() / scale.max(1e-300));
        // v_i' = v_i - <v_i - v_j, e> e and v_j' = v_j + <v_i - v_j, e> e
        let (i, j) = r.pair;
        let e: Vec<f64> = (0..d).map(|k| r.positions[i][k] - r.positions[j][k]).collect();
        let len = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: f64 = (0..d).map(|k| (r.pre[i][k] - r.pre[j][k]) * e[k] / len).sum();
        for b in 0..r.pre.len() {
            for (k, ek) in e.iter().enumerate() {
                let want = match b {
                    _ if b == i => r.pre[i][k] - u * ek / len,
                    _ if b == j => r.pre[j][k] + u * ek / len,
                    _ => r.pre[b][k],
                };
                rule = rule.max((r.post[b][k] - want).abs());
            }
        }
    }
    (mom, en, rule)
}

fn random_gas(rng: &mut ChaCha8Rng, n: usize) -> BallSystemState<f64> {
    let side = 1.6 * n as f64;
    let mut centers: Vec<Vec<f64>> = Vec::new();
    while centers.len() < n {
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..side)).collect();
        if centers.iter().all(|q| q.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 1.1) {
            centers.push(c);
        }
    }
    // aim everything at the middle of the box so the balls meet
    let velocities = centers
        .iter()
        .map(|c| c.iter().map(|x| side / 2.0 - x + rng.random_range(-0.3..0.3)).collect())
        .collect();
    let config = BallConfiguration::from_centers(3, centers).unwrap();
    BallSystemState::new(config, velocities, 0.0, &1e-9).unwrap()
}

/// Contact tree: each new ball touches a random earlier one.
fn random_contact_tree(rng: &mut ChaCha8Rng, n: usize) -> (BallConfiguration<f64>, Vec<(usize, usize)>) {
    loop {
        let mut centers = vec![vec![0.0; 3]];
        let mut pairs = Vec::new();
        let mut ok = true;
        for b in 1..n {
            let parent = rng.random_range(0..b);
            let dir: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len < 1e-3 {
                ok = false;
                break;
            }
            let c: Vec<f64> = centers[parent].iter().zip(&dir).map(|(p, d)| p + d / len).collect();
            let clear = centers
                .iter()
                .enumerate()
                .all(|(k, q)| k == parent || q.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() > 1.01);
            if !clear {
                ok = false;
                break;
            }
            centers.push(c);
            pairs.push((parent, b));
        }
        if ok {
            return (BallConfiguration::from_centers(3, centers).unwrap(), pairs);
        }
    }
}

fn conservation_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut mom, mut en, mut rule) = (0.0f64, 0.0f64, 0.0f64);
    let (mut events, mut skipped) = (0, 0);
    for k in 0..100 {
        let state = random_gas(&mut rng, 3 + k % 5);
        match simulate(&state, None, 500) {
            Ok((log, _, _)) => {
                let r = event_residuals(&log);
                mom = mom.max(r.0);
                en = en.max(r.1);
                rule = rule.max(r.2);
                events += log.len();
            }
            Err(Error::Simultaneous { .. }) => skipped += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    if events == 0 {
        return Err("no collisions simulated".into());
    }
    let mut gram = 0.0f64;
    for k in 0..100 {
        let (config, pairs) = random_contact_tree(&mut rng, 3 + k % 6);
        let normals: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(i, j)| wall_normal(&config, i, j, &1e-9))
            .collect::<hardball::Result<_>>()
            .map_err(|e| e.to_string())?;
        gram = gram.max(gram_closed_form(&config, &pairs).max_abs_diff(&gram_brute_force(&normals)));
    }
    let worst = [("momentum", mom), ("energy", en), ("collision rule", rule), ("Gram", gram)];
    if let Some((what, v)) = worst.iter().find(|(_, v)| *v > 1e-12) {
        return Err(format!("{what} error {v:e}"));
    }
    Ok(format!(
        "{events} events ({skipped} runs tied): momentum {mom:.1e}, energy {en:.1e}, rule {rule:.1e}; Gram {gram:.1e} on 100 configurations"
    ))
}

fn line_sanity() -> Check {
    let pos = [0.0, 2.7, 5.1, 8.3, 10.9];
    let vel = [2.0, 0.7, -0.45, -1.3, -2.9];
    let mut counts = Vec::new();
    for n in 3..=5 {
        let config = BallConfiguration::from_centers(1, pos[..n].iter().map(|&x| vec![x]).collect()).unwrap();
        let v = vel[..n].iter().map(|&x| vec![x]).collect();
        let state = BallSystemState::new(config, v, 0.0, &1e-9).map_err(|e| e.to_string())?;
        let (log, _, _) = simulate(&state, None, 100).map_err(|e| e.to_string())?;
        if log.len() != n * (n - 1) / 2 {
            return Err(format!("n = {n}: {} collisions", log.len()));
        }
        counts.push(log.len());
    }
    Ok(format!("n = 3, 4, 5 give {counts:?}"))
}

fn main() -> ExitCode {
    let checks: [Criterion; 8] = [
        ("construction count identity", construction_count_identity),
        ("de-generalization", degeneralization),
        ("cone doubling", cone_doubling),
        ("orthant bound", orthant_bound),
        ("end-to-end ball collisions n = 3..6", end_to_end),
        ("four balls in R^3", ndim_instance),
        ("conservation and Gram suite", conservation_suite),
        ("balls on a line", line_sanity),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let clock = Instant::now();
        let res = check();
        let secs = clock.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2} s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.2} s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
