//! Command-line front end: `construct`, `verify`, `cone-demo` and `export`.
//!
//! Every command writes its artifacts and a `manifest.json` into a run
//! directory under `--out-dir` (default `$HARDBALL_OUT_DIR`, else
//! `hardball-out`) and prints a short summary, which is also saved as
//! `summary.txt`.
//!
//! Exit codes: 0 when everything checked out, 1 on a collision-count
//! mismatch, 2 on bad usage, 3 when a numeric step aborted.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::atraj::{
    build_am, build_inductive, collision_count_formula, exponential_bound, perturb_to_genuine, PLTrajectory,
    PerturbOptions, TrajectoryRecord,
};
use crate::ball_config::{angles_from_lambda, default_theta, hat_configuration, perturbed_configuration};
use crate::cone_billiard::{build_right_angle_example, cone_to_json, ConeTrajectory, RightAngleExample};
use crate::error::{Error, Result, ResultExt};
use crate::manifest::{create_dir, RunManifest, EXPORT_MANIFEST_FILE};
use crate::numeric::{Field, Rational, Real, Wide128, Wide256};
use crate::simulator::{default_precision, verify_with_precision, VerifyOutcome, VerifyParams, VerifyReport};

pub const OUT_DIR_ENV: &str = "HARDBALL_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "hardball-out";

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "hardball", version, about = "Hard-ball trajectories with exponentially many collisions")]
pub struct Cli {
    /// Directory for run artifacts [env: HARDBALL_OUT_DIR]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the exact matrix trajectory and ball configuration for one size.
    Construct(ConstructArgs),
    /// Realize the construction with balls and count the collisions.
    Verify(VerifyArgs),
    /// Cone with almost right angles and 2^m - 1 reflections.
    ConeDemo(ConeDemoArgs),
    /// Convert the trajectories of a run directory.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct Tuning {
    /// Mantissa bits for floating-point stages (53, 128 or 256)
    #[arg(long)]
    pub precision_bits: Option<u32>,
    /// Ratio r of the weights r^(i-1); halved automatically if too large
    #[arg(long, default_value_t = 0.125)]
    pub lambda_ratio: f64,
    /// Angle tolerance in radians, in (0, pi/6)
    #[arg(long)]
    pub theta: Option<f64>,
    /// Half-width of the jitter that separates simultaneous roots
    #[arg(long, default_value_t = 1e-3)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_events: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "size")]
pub struct Size {
    /// Number of balls
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of matrix coordinates, n - 1
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub size: Size,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Ball count or inclusive range such as 3..6
    #[arg(long, value_parser = parse_range)]
    pub n: (usize, usize),
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct ConeDemoArgs {
    #[arg(long)]
    pub m: usize,
    /// Largest allowed deviation of a dihedral angle from a right angle
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long)]
    pub precision_bits: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Run directory written by construct or verify
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// Event CSV per trajectory
    Csv,
    /// Trajectory JSON with break values and events
    Json,
}

/// Parses `a`, `a..b` or `a..=b`, both ends inclusive.
pub fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("{t:?} is not a ball count"))
    };
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let a = num(s)?;
            (a, a)
        }
    };
    if a < 3 {
        return Err(format!("ball counts start at 3, got {a}"));
    }
    if b < a {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

fn out_root(cli: &Option<PathBuf>) -> PathBuf {
    cli.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Exit code for an error that ended a command.
pub fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses the process arguments and runs the command.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> Result<u8> {
    let root = out_root(&cli.out_dir);
    match cli.command {
        Command::Construct(a) => cmd_construct(&a, &root).map(|_| EXIT_OK),
        Command::Verify(a) => cmd_verify(&a, &root).map(|s| s.exit_code()),
        Command::ConeDemo(a) => cmd_cone_demo(&a, &root).map(|ok| if ok { EXIT_OK } else { EXIT_MISMATCH }),
        Command::Export(a) => cmd_export(&a.run, a.format).map(|_| EXIT_OK),
    }
}

fn finish(manifest: &mut RunManifest, dir: &Path, summary: &str) -> Result<()> {
    print!("{summary}");
    manifest.emit(dir, "summary.txt", summary)?;
    manifest.finish(dir)?;
    Ok(())
}

fn tuning_json(t: &Tuning) -> serde_json::Value {
    serde_json::json!({
        "precision_bits": t.precision_bits,
        "lambda_ratio": t.lambda_ratio,
        "theta": t.theta,
        "jitter": t.jitter,
        "seed": t.seed,
        "max_events": t.max_events,
    })
}

/// What `construct` produced.
#[derive(Clone, Debug)]
pub struct Constructed {
    pub dir: PathBuf,
    pub n: usize,
    pub m: usize,
    pub collisions: usize,
}

/// Writes the exact trajectory `f`, its schedule and events, `A_m`, a
/// genuine perturbation of `f`, and the contact configurations.
pub fn cmd_construct(args: &ConstructArgs, root: &Path) -> Result<Constructed> {
    let m = match (args.size.n, args.size.m) {
        (Some(n), None) if n >= 2 => n - 1,
        (None, Some(m)) if m >= 1 => m,
        _ => return Err(Error::InvalidArgument("need --n >= 2 or --m >= 1".into())),
    };
    let n = m + 1;
    let t = &args.tuning;
    let dir = root.join(format!("construct-n{n}"));
    create_dir(&dir)?;
    let mut manifest = RunManifest::new("construct", serde_json::json!({ "n": n, "m": m, "tuning": tuning_json(t) }));

    let (f, schedule) = build_inductive(m).context("building the trajectory")?;
    let zero = Rational::zero();
    let count = f.collision_count(&zero);
    if collision_count_formula(m)? != count as u128 {
        return Err(Error::Numeric(format!("trajectory has {count} roots, formula disagrees")));
    }
    let a = build_am::<Rational>(m);
    let opts = PerturbOptions {
        jitter: t.jitter,
        seed: t.seed,
        ..Default::default()
    };
    let g = perturb_to_genuine(&f, &a, &opts, &zero).context("de-generalizing")?;

    manifest.emit_json(&dir, "trajectory.json", &f.to_record())?;
    manifest.emit(&dir, "events.csv", events_csv(&f)?)?;
    manifest.emit_json(&dir, "schedule.json", &schedule.to_json())?;
    manifest.emit_json(&dir, "matrix.json", &rows_json(&a.as_matrix().to_rows()))?;
    manifest.emit_json(&dir, "genuine/trajectory.json", &g.to_record())?;
    manifest.emit(&dir, "genuine/events.csv", events_csv(&g)?)?;
    manifest.emit_json(&dir, "configuration.json", &hat_configuration::<Rational>(n)?.to_json())?;

    let theta = match t.theta {
        Some(x) => x,
        None => default_theta(n)?,
    };
    // halve the weight ratio until the angles it asks for fit in theta
    let mut ratio = t.lambda_ratio;
    let mut bent = Err(Error::InvalidArgument("no ratio tried".into()));
    for _ in 0..30 {
        let lambda: Vec<f64> = (0..m).map(|i| ratio.powi(i as i32)).collect();
        bent = angles_from_lambda(&lambda, theta).and_then(|ang| perturbed_configuration(n, &ang, theta));
        if bent.is_ok() {
            break;
        }
        ratio /= 2.0;
    }
    let bent_note = match bent {
        Ok(q) => {
            manifest.emit_json(&dir, "perturbed_configuration.json", &q.to_json())?;
            None
        }
        Err(e) => Some(format!("no perturbed configuration: {e}")),
    };

    let mut summary = format!("construct n = {n} (m = {m})\nN = {count}");
    if n >= 3 {
        let k = n / 2;
        let _ = write!(summary, ", bound 2^{k} = {}", exponential_bound(n));
    }
    summary.push('\n');
    if m == 1 {
        summary.push_str("trajectory |t|\n");
    }
    if let Some(note) = &bent_note {
        let _ = writeln!(summary, "{note}");
    }
    let _ = writeln!(summary, "artifacts in {}", dir.display());
    manifest.outcome = serde_json::json!({
        "collisions": count,
        "bound": exponential_bound(n),
        "theta": theta,
        "lambda_ratio": ratio,
        "note": bent_note,
    });
    finish(&mut manifest, &dir, &summary)?;
    Ok(Constructed {
        dir,
        n,
        m,
        collisions: count,
    })
}

fn events_csv<T: Field>(f: &PLTrajectory<T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f.write_events_csv(&mut buf, &T::zero())?;
    Ok(buf)
}

fn rows_json<T: Field>(rows: &[Vec<T>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(Field::to_repr).collect()).collect()
}

/// One row of the verification table.
#[derive(Clone, Debug)]
pub struct VerifyRow {
    pub n: usize,
    pub outcome: std::result::Result<VerifyReport, String>,
    /// Whether the failure was a numeric abort rather than a mismatch.
    pub aborted: bool,
}

#[derive(Clone, Debug)]
pub struct VerifySummary {
    pub dir: PathBuf,
    pub rows: Vec<VerifyRow>,
}

impl VerifySummary {
    pub fn all_matched(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.as_ref().is_ok_and(|rep| rep.matched))
    }

    /// 0 when every size matched, 1 when some count was off, 3 when the only
    /// failures were aborts.
    pub fn exit_code(&self) -> u8 {
        if self.all_matched() {
            EXIT_OK
        } else if self.rows.iter().any(|r| !r.aborted && !r.outcome.as_ref().is_ok_and(|rep| rep.matched)) {
            EXIT_MISMATCH
        } else {
            EXIT_NUMERIC
        }
    }
}

/// Runs the verification pipeline for every `n` in the range, in parallel,
/// and prints the table. Failures of one size do not stop the others.
pub fn cmd_verify(args: &VerifyArgs, root: &Path) -> Result<VerifySummary> {
    let (lo, hi) = args.n;
    let t = &args.tuning;
    if !(t.lambda_ratio > 0.0 && t.lambda_ratio < 0.5) {
        return Err(Error::InvalidArgument(format!("lambda ratio {} not in (0, 1/2)", t.lambda_ratio)));
    }
    let dir = root.join(if lo == hi { format!("verify-n{lo}") } else { format!("verify-n{lo}-{hi}") });
    create_dir(&dir)?;
    let params = VerifyParams {
        weight_ratio: t.lambda_ratio,
        theta: t.theta,
        jitter: t.jitter,
        seed: t.seed,
        max_events: t.max_events,
        ..Default::default()
    };
    let mut manifest = RunManifest::new(
        "verify",
        serde_json::json!({ "n": [lo, hi], "tuning": tuning_json(t), "params": &params }),
    );
    let results: Vec<(usize, Result<VerifyOutcome>)> = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let bits = t.precision_bits.unwrap_or_else(|| default_precision(n));
            (n, verify_with_precision(n, &params, bits))
        })
        .collect();

    let mut rows = Vec::new();
    for (n, res) in results {
        match res {
            Ok(out) => {
                let sub = format!("n{n}");
                let a = &out.artifacts;
                manifest.emit_json(&dir, &format!("{sub}/trajectory.json"), &a.trajectory)?;
                manifest.emit_json(&dir, &format!("{sub}/matrix.json"), &a.matrix)?;
                manifest.emit_json(&dir, &format!("{sub}/configuration.json"), &a.configuration)?;
                manifest.emit_json(&dir, &format!("{sub}/report.json"), &out.report)?;
                if let Some(s) = &a.initial_state {
                    manifest.emit_json(&dir, &format!("{sub}/initial_state.json"), s)?;
                }
                if let Some(csv) = &a.events_csv {
                    manifest.emit(&dir, &format!("{sub}/events.csv"), csv)?;
                }
                rows.push(VerifyRow {
                    n,
                    outcome: Ok(out.report),
                    aborted: false,
                });
            }
            Err(e) => rows.push(VerifyRow {
                n,
                aborted: exit_code(&e) == EXIT_NUMERIC,
                outcome: Err(e.to_string()),
            }),
        }
    }
    let summary = VerifySummary { dir: dir.clone(), rows };
    let table = format_table(&summary.rows);
    manifest.outcome = serde_json::json!({
        "all_matched": summary.all_matched(),
        "rows": summary.rows.iter().map(|r| match &r.outcome {
            Ok(rep) => serde_json::json!({"n": r.n, "predicted": rep.predicted, "observed": rep.observed, "matched": rep.matched}),
            Err(e) => serde_json::json!({"n": r.n, "error": e}),
        }).collect::<Vec<_>>(),
    });
    finish(&mut manifest, &dir, &table)?;
    Ok(summary)
}

pub fn format_table(rows: &[VerifyRow]) -> String {
    let mut s = format!(
        "{:>3} {:>11} {:>10} {:>9} {:>6} {:>5} {:>6} {:>9}\n",
        "n", "N_predicted", "N_observed", "2^(n/2)", "match", "bits", "log2 L", "seconds"
    );
    for r in rows {
        match &r.outcome {
            Ok(rep) => {
                let _ = writeln!(
                    s,
                    "{:>3} {:>11} {:>10} {:>9} {:>6} {:>5} {:>6} {:>9.3}",
                    r.n,
                    rep.predicted,
                    rep.observed,
                    rep.bound,
                    if rep.matched { "yes" } else { "NO" },
                    rep.precision_bits,
                    rep.lambda_exp.map_or("-".to_string(), |e| e.to_string()),
                    rep.seconds
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{:>3} error: {e}", r.n);
            }
        }
    }
    s
}

/// Builds the doubling cone, simulates it and compares with `2^m - 1`.
pub fn cmd_cone_demo(args: &ConeDemoArgs, root: &Path) -> Result<bool> {
    let dir = root.join(format!("cone-demo-m{}", args.m));
    create_dir(&dir)?;
    let bits = args.precision_bits.unwrap_or(53);
    let mut manifest = RunManifest::new(
        "cone-demo",
        serde_json::json!({ "m": args.m, "eps": args.eps, "precision_bits": bits }),
    );
    let clock = Instant::now();
    let (expected, observed) = match bits {
        0..=53 => cone_demo::<f64>(args, &dir, &mut manifest)?,
        54..=128 => cone_demo::<Wide128>(args, &dir, &mut manifest)?,
        _ => cone_demo::<Wide256>(args, &dir, &mut manifest)?,
    };
    let secs = clock.elapsed().as_secs_f64();
    let ok = observed as u128 == expected;
    let summary = format!(
        "cone-demo m = {}, eps = {}\n{observed} collisions, expected 2^{} - 1 = {expected}, {secs:.3} s\n",
        args.m, args.eps, args.m
    );
    manifest.outcome = serde_json::json!({ "expected": expected, "observed": observed, "matched": ok, "seconds": secs });
    finish(&mut manifest, &dir, &summary)?;
    Ok(ok)
}

fn cone_demo<T: Real>(args: &ConeDemoArgs, dir: &Path, manifest: &mut RunManifest) -> Result<(u128, usize)> {
    let ex: RightAngleExample<T> = build_right_angle_example(args.m, args.eps)?;
    let tr: ConeTrajectory<T> = ex.simulate()?;
    manifest.emit_json(dir, "cone.json", &cone_to_json(&ex.cone))?;
    let mut buf = Vec::new();
    tr.write_events_csv(&mut buf)?;
    manifest.emit(dir, "events.csv", buf)?;
    Ok((ex.expected_collisions(), tr.len()))
}

/// Converts every `trajectory.json` in `run` and its subdirectories.
/// Returns the written files.
pub fn cmd_export(run: &Path, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    collect_trajectories(run, &mut found)?;
    if found.is_empty() {
        return Err(Error::InvalidArgument(format!("no trajectory.json under {}", run.display())));
    }
    found.sort();
    let mut manifest = RunManifest::new(
        "export",
        serde_json::json!({ "run": run.display().to_string(), "format": format!("{format:?}").to_lowercase() }),
    );
    let mut written = Vec::new();
    for path in found {
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let rec: TrajectoryRecord = serde_json::from_str(&text)?;
        let f = PLTrajectory::<Rational>::from_record(&rec).context(path.display().to_string())?;
        let parent = path.parent().expect("file has a parent");
        let (name, bytes) = match format {
            ExportFormat::Csv => ("trajectory_events.csv", events_csv(&f)?),
            ExportFormat::Json => ("trajectory_full.json", (serde_json::to_string_pretty(&full_json(&f))? + "\n").into_bytes()),
        };
        let rel = parent.strip_prefix(run).expect("found under run").join(name);
        manifest.emit(run, &rel.to_string_lossy(), bytes)?;
        let out = run.join(rel);
        println!("{}", out.display());
        written.push(out);
    }
    manifest.outcome = serde_json::json!({ "files": written.len() });
    manifest.finish_as(run, EXPORT_MANIFEST_FILE)?;
    Ok(written)
}

fn collect_trajectories(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries.flatten() {
        let p = entry.path();
        if p.is_dir() {
            collect_trajectories(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "trajectory.json") {
            out.push(p);
        }
    }
    Ok(())
}

/// The record plus the values at every break point and the collision list.
pub fn full_json<T: Field>(f: &PLTrajectory<T>) -> serde_json::Value {
    let strs = |v: &[T]| v.iter().map(Field::to_repr).collect::<Vec<_>>();
    let events: Vec<_> = f
        .collisions(&T::zero())
        .iter()
        .map(|e| {
            serde_json::json!({
                "t": e.time.to_repr(),
                "coordinates": e.vanishing.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "pre": strs(&e.pre),
                "post": strs(&e.post),
            })
        })
        .collect();
    serde_json::json!({
        "record": f.to_record(),
        "break_values": f.break_values().iter().map(|v| strs(v)).collect::<Vec<_>>(),
        "end_values": strs(&f.end_values()),
        "collisions": events.len(),
        "events": events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3..5"), Ok((3, 5)));
        assert_eq!(parse_range("3..=5"), Ok((3, 5)));
        assert_eq!(parse_range("4"), Ok((4, 4)));
        for bad in ["", "x", "5..3", "1..4", "3..", "3...5"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["hardball", "verify", "--n", "3..4", "--seed", "7"]).unwrap();
        match cli.command {
            Command::Verify(a) => {
                assert_eq!(a.n, (3, 4));
                assert_eq!(a.tuning.seed, 7);
                assert_eq!(a.tuning.lambda_ratio, 0.125);
            }
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["hardball", "construct", "--n", "3", "--m", "2"]).is_err());
        assert!(Cli::try_parse_from(["hardball", "construct"]).is_err());
        assert!(Cli::try_parse_from(["hardball", "export", "--run", ".", "--format", "xml"]).is_err());
    }
}
