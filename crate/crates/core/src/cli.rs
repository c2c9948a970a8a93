//! Command-line surface: `verify`, `flow` and `sweep`.
//!
//! Exit codes: 0 success, 1 input error, 2 inconclusive (or drift over
//! tolerance), 3 flow residual blow-up.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bridge::{run_case, Budgets, CaseConfig, CasePath, Conclusion, VerificationCase};
use crate::error::Error;
use crate::flows::{conservation_report, integrate_flow, write_csv, ConservationReport, FlowSpec};
use crate::invariants::IntegralFamily;
use crate::sampling::{random_in, rng_for, Purpose};
use crate::setup::{build_setup_with, partitions, Space};
use crate::subspace::RankRule;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "suborbit", version, about = "Verify shift-of-argument integrability on real suborbits of U(n) orbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full verification for one partition.
    Verify(VerifyArgs),
    /// Integrate the reduced flow and report drift of the integrals.
    Flow(FlowArgs),
    /// Verify every partition of every n up to a bound.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct OrbitArgs {
    /// Block sizes, e.g. 1,1,2.
    #[arg(long, value_delimiter = ',', required = true)]
    partition: Vec<usize>,
    /// Distinct diagonal values, one per block.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    spectrum: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "tolerance-rank", default_value_t = 1e-9)]
    tolerance_rank: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    orbit: OrbitArgs,
    /// Samples used to estimate generic centralizer dimensions.
    #[arg(long, default_value_t = 25)]
    samples: usize,
    /// Real points tried when looking for a Kronecker witness.
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long = "lambda-samples", default_value_t = 20)]
    lambda_samples: usize,
    /// Also integrate the flow for this b spectrum from the witness point.
    #[arg(long = "b-spectrum", value_delimiter = ',', allow_hyphen_values = true)]
    b_spectrum: Option<Vec<f64>>,
    /// Record wall-clock time (makes the report non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    orbit: OrbitArgs,
    #[arg(long = "b-spectrum", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    b_spectrum: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long = "record-stride", default_value_t = 100)]
    record_stride: usize,
    /// Norm of the random starting point in m̃.
    #[arg(long = "x0-norm", default_value_t = 1.0)]
    x0_norm: f64,
    #[arg(long = "drift-tol", default_value_t = 1e-6)]
    drift_tol: f64,
    #[arg(long = "out-traj")]
    out_traj: Option<PathBuf>,
    #[arg(long = "out-summary")]
    out_summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long = "max-n", default_value_t = 6)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Timing {
    seconds: f64,
}

#[derive(Serialize)]
pub struct ReportDocument {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: CaseConfig,
    result: VerificationCase,
    conclusion: Conclusion,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

#[derive(Serialize)]
struct FlowInput {
    multiplicities: Vec<usize>,
    spectrum: Vec<f64>,
    b_spectrum: Vec<f64>,
    seed: u64,
    dt: f64,
    steps: usize,
    record_stride: usize,
    x0_norm: f64,
    drift_tol: f64,
}

#[derive(Serialize)]
struct FlowDocument {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: FlowInput,
    phi_spectrum: Vec<f64>,
    initial_point: Vec<f64>,
    recorded_states: usize,
    max_space_residual: Option<f64>,
    conservation: Option<ConservationReport>,
    within_tolerance: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepRow {
    multiplicities: Vec<usize>,
    path: CasePath,
    conclusion: Conclusion,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct SweepDocument {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    max_n: usize,
    seed: u64,
    rows: Vec<SweepRow>,
}

const TOOL: &str = "suborbit";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Verify(args) => verify(args),
        Command::Flow(args) => flow(args),
        Command::Sweep(args) => sweep(args),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_INPUT
    })
}

fn emit(path: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    match path {
        Some(path) => write_atomic(path, &bytes),
        None => Ok(std::io::stdout().write_all(&bytes)?),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn verify(args: VerifyArgs) -> anyhow::Result<i32> {
    let started = Instant::now();
    let orbit = &args.orbit;
    let config = CaseConfig {
        multiplicities: orbit.partition.clone(),
        spectrum: orbit.spectrum.clone(),
        b_spectrum: args.b_spectrum.clone(),
        seed: orbit.seed,
        budgets: Budgets {
            dim_samples: args.samples,
            points: args.points,
            lambda_samples: args.lambda_samples,
            ..Budgets::default()
        },
        rank_tolerance: orbit.tolerance_rank,
    };
    let case = run_case(&config)?;
    let conclusion = case.conclusion;
    for note in &case.notes {
        eprintln!("note: {note}");
    }
    let doc = ReportDocument {
        tool: TOOL,
        version: VERSION,
        command: "verify",
        input: config,
        result: case,
        conclusion,
        timing: args.timing.then(|| Timing { seconds: started.elapsed().as_secs_f64() }),
    };
    emit(args.out.as_deref(), &doc)?;
    Ok(match conclusion {
        Conclusion::Confirmed | Conclusion::ReducedPathUsed => EXIT_OK,
        Conclusion::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn flow(args: FlowArgs) -> anyhow::Result<i32> {
    let orbit = &args.orbit;
    let setup = build_setup_with(&orbit.partition, &orbit.spectrum, RankRule::new(orbit.tolerance_rank)?)?;
    let spec = FlowSpec::new(&setup, Space::MTilde, &args.b_spectrum)?;
    let x0 = random_in(spec.flow_space(), setup.n, &mut rng_for(orbit.seed, Purpose::Flow, 0));
    if !(args.x0_norm > 0.0 && args.x0_norm.is_finite()) {
        anyhow::bail!("--x0-norm must be positive");
    }
    let x0 = x0.scale(args.x0_norm / x0.norm());
    let family = IntegralFamily::for_pair(setup.pair(Space::MTilde), &setup.a, orbit.seed);

    let input = FlowInput {
        multiplicities: orbit.partition.clone(),
        spectrum: orbit.spectrum.clone(),
        b_spectrum: args.b_spectrum.clone(),
        seed: orbit.seed,
        dt: args.dt,
        steps: args.steps,
        record_stride: args.record_stride,
        x0_norm: args.x0_norm,
        drift_tol: args.drift_tol,
    };
    let mut doc = FlowDocument {
        tool: TOOL,
        version: VERSION,
        command: "flow",
        input,
        phi_spectrum: spec.phi_spectrum(),
        initial_point: x0.coords().iter().copied().collect(),
        recorded_states: 0,
        max_space_residual: None,
        conservation: None,
        within_tolerance: false,
        error: None,
    };
    let code = match integrate_flow(&spec, &x0, args.dt, args.steps, args.record_stride) {
        Ok(traj) => {
            let report = conservation_report(&spec, &traj, &family);
            doc.within_tolerance = report.max_drift < args.drift_tol;
            doc.recorded_states = traj.states.len();
            doc.max_space_residual = Some(traj.max_residual);
            doc.conservation = Some(report);
            if let Some(path) = &args.out_traj {
                let mut csv = Vec::new();
                write_csv(&mut csv, &spec, &traj, &family)?;
                write_atomic(path, &csv)?;
            }
            if doc.within_tolerance {
                EXIT_OK
            } else {
                EXIT_INCONCLUSIVE
            }
        }
        Err(e @ Error::ResidualBlowup { .. }) => {
            eprintln!("error: {e}");
            doc.error = Some(e.to_string());
            EXIT_BLOWUP
        }
        Err(e) => return Err(e.into()),
    };
    emit(args.out_summary.as_deref(), &doc)?;
    Ok(code)
}

fn sweep(args: SweepArgs) -> anyhow::Result<i32> {
    let mut rows = Vec::new();
    for n in 2..=args.max_n {
        for mults in partitions(n) {
            let spectrum: Vec<f64> = (1..=mults.len()).map(|v| v as f64).collect();
            let case = run_case(&CaseConfig::new(&mults, &spectrum, args.seed))?;
            eprintln!("{:?}: {:?}", mults, case.conclusion);
            rows.push(SweepRow { multiplicities: mults, path: case.path, conclusion: case.conclusion, notes: case.notes });
        }
    }
    let all_settled = rows.iter().all(|r| r.conclusion != Conclusion::Inconclusive);
    let doc = SweepDocument { tool: TOOL, version: VERSION, command: "sweep", max_n: args.max_n, seed: args.seed, rows };
    emit(args.out.as_deref(), &doc)?;
    Ok(if all_settled { EXIT_OK } else { EXIT_INCONCLUSIVE })
}
