//! Command-line front end: verification, single-state analysis,
//! teleportation demos, and noise sweeps with machine-readable output.
//!
//! All randomness flows from one master seed; each run, label, or grid
//! cell draws from its own derived stream, so identical configurations
//! produce byte-identical output.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analyzer::{
    analyze, expected_probe_signature, table2_group, verify_all, AnalysisRecord,
};
use crate::error::Error;
use crate::hilbert::{BellLabel, DofKind, HyperBellLabel, PhotonId, PureState};
use crate::kerr::{
    attach_probes, cross_kerr, error_probability, homodyne_x, standard_couplings, HomodyneModel,
    KerrParams, ProbeId, ProbeOutcome, TaggedState,
};
use crate::teleport::{teleport, DofAmplitudes};

/// Documented default master seed.
pub const DEFAULT_SEED: u64 = 42;
/// Default per-photon cross-Kerr phase (radians): a weak shift.
pub const DEFAULT_THETA: f64 = 0.1;
/// Default probe amplitude: strong enough that the default gaussian model
/// discriminates essentially perfectly (alpha·(1 − cos theta) ≈ 7.5).
pub const DEFAULT_ALPHA: f64 = 1500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Ideal,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Resolved run configuration shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub theta: f64,
    pub alpha: f64,
    pub model: ModelKind,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn homodyne_model(&self) -> Result<HomodyneModel, Error> {
        let params = KerrParams::new(self.theta, self.alpha)?;
        match self.model {
            ModelKind::Ideal => Ok(HomodyneModel::Ideal),
            ModelKind::Gaussian => HomodyneModel::gaussian(params),
        }
    }

    fn model_name(&self) -> &'static str {
        match self.model {
            ModelKind::Ideal => "ideal",
            ModelKind::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hbsa",
    version,
    about = "Exact simulator and verifier for complete hyperentangled Bell-state analysis"
)]
pub struct Cli {
    /// Master seed for all derived random streams
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Cross-Kerr phase per photon, radians (0 <= theta <= pi/2)
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,

    /// Probe coherent amplitude (>= 0; gaussian model needs > 0)
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Homodyne readout model
    #[arg(long, value_enum, default_value_t = ModelKind::Ideal)]
    pub model: ModelKind,

    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Write output to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze all 64 hyper-Bell inputs and summarize the discrimination
    Verify,
    /// Analyze one labelled input, e.g. "phi+,psi-,phi+" (P,F,S order)
    Analyze { label: String },
    /// Teleport three-DOF single-photon states and report fidelities
    Teleport {
        /// Number of random input states
        #[arg(long)]
        random: Option<usize>,
        /// Explicit input: 12 comma-separated reals, re/im pairs of
        /// aP,bP,aF,bF,aS,bS
        #[arg(long, conflicts_with = "random", value_name = "AMPS")]
        amps: Option<String>,
    },
    /// Compare analytic and empirical homodyne error over a grid
    NoiseSweep {
        /// Alpha grid, inclusive: start..end:step
        #[arg(long = "alpha", value_name = "A1..A2:STEP")]
        alpha_grid: String,
        /// Theta grid, inclusive: start..end:step
        #[arg(long = "theta", value_name = "T1..T2:STEP")]
        theta_grid: String,
        /// Monte-Carlo trials per grid cell
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

/// A command failure with its process exit code: 2 for usage problems,
/// 1 for runtime failures.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BadKerrParams { .. }
            | Error::GaussianNeedsAlpha
            | Error::ParseLabel(_)
            | Error::BadAmplitudes(_) => usage(e.to_string()),
            other => runtime(other.to_string()),
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32, Failure> {
    let config = RunConfig {
        seed: cli.seed,
        theta: cli.theta,
        alpha: cli.alpha,
        model: cli.model,
        format: cli.format,
        out: cli.out.clone(),
    };
    // surface bad parameters as usage errors before doing any work
    config.homodyne_model()?;

    match &cli.command {
        Command::Verify => cmd_verify(&config),
        Command::Analyze { label } => cmd_analyze(&config, label),
        Command::Teleport { random, amps } => cmd_teleport(&config, *random, amps.as_deref()),
        Command::NoiseSweep {
            alpha_grid,
            theta_grid,
            trials,
        } => cmd_noise_sweep(&config, alpha_grid, theta_grid, *trials),
    }
}

#[derive(Debug, Serialize)]
pub struct VerifySummary {
    pub correct: usize,
    pub total: usize,
    pub injective: bool,
    pub table1_consistent: bool,
    pub table2_consistent: bool,
    pub error_rate: f64,
}

impl VerifySummary {
    pub fn from_records(records: &[AnalysisRecord]) -> Self {
        let total = records.len();
        let correct = records.iter().filter(|r| r.correct() == Some(true)).count();
        let keys: std::collections::BTreeSet<_> = records
            .iter()
            .map(|r| (r.probe_sig, r.detection.parity_class()))
            .collect();
        let table1_consistent = records.iter().all(|r| {
            r.input
                .is_some_and(|l| r.probe_sig == expected_probe_signature(l))
        });
        let table2_consistent = records.iter().all(|r| {
            r.input
                .is_some_and(|l| table2_group(r.decoded) == table2_group(l))
        });
        Self {
            correct,
            total,
            injective: keys.len() == total,
            table1_consistent,
            table2_consistent,
            error_rate: 1.0 - correct as f64 / total as f64,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.correct == self.total
            && self.injective
            && self.table1_consistent
            && self.table2_consistent
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    model: &'a str,
    seed: u64,
    theta: f64,
    alpha: f64,
    records: &'a [AnalysisRecord],
    summary: &'a VerifySummary,
}

fn cmd_verify(config: &RunConfig) -> Result<i32, Failure> {
    let model = config.homodyne_model()?;
    let records = verify_all(&model, config.seed)?;
    let summary = VerifySummary::from_records(&records);

    let output = match config.format {
        OutputFormat::Json => {
            let report = VerifyReport {
                model: config.model_name(),
                seed: config.seed,
                theta: config.theta,
                alpha: config.alpha,
                records: &records,
                summary: &summary,
            };
            to_json(&report)
        }
        OutputFormat::Csv => records_csv(&records),
    };
    write_output(config, &output)?;

    if model.is_ideal() && !summary.all_pass() {
        return Ok(1);
    }
    Ok(0)
}

fn cmd_analyze(config: &RunConfig, label: &str) -> Result<i32, Failure> {
    let label: HyperBellLabel = label.parse()?;
    let model = config.homodyne_model()?;
    let state = PureState::hyper_bell_state(label, (PhotonId::A, PhotonId::B))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut record = analyze(&state, (PhotonId::A, PhotonId::B), &model, &mut rng)?;
    record.input = Some(label);

    let output = match config.format {
        OutputFormat::Json => to_json(&record),
        OutputFormat::Csv => records_csv(std::slice::from_ref(&record)),
    };
    write_output(config, &output)?;
    Ok(0)
}

#[derive(Serialize)]
struct TeleportRow {
    run: usize,
    label: HyperBellLabel,
    fidelity: f64,
}

#[derive(Serialize)]
struct TeleportSummary {
    min_fidelity: f64,
    mean_fidelity: f64,
}

#[derive(Serialize)]
struct TeleportReport<'a> {
    model: &'a str,
    seed: u64,
    theta: f64,
    alpha: f64,
    runs: &'a [TeleportRow],
    summary: TeleportSummary,
}

fn cmd_teleport(
    config: &RunConfig,
    random: Option<usize>,
    amps: Option<&str>,
) -> Result<i32, Failure> {
    let model = config.homodyne_model()?;
    let mut rows = Vec::new();

    match (random, amps) {
        (Some(n), None) => {
            if n == 0 {
                return Err(usage("--random needs at least one run"));
            }
            for run in 0..n {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(run as u64);
                let p = DofAmplitudes::random(&mut rng);
                let f = DofAmplitudes::random(&mut rng);
                let s = DofAmplitudes::random(&mut rng);
                let outcome = teleport(&p, &f, &s, &model, &mut rng)?;
                rows.push(TeleportRow {
                    run,
                    label: outcome.label,
                    fidelity: outcome.fidelity,
                });
            }
        }
        (None, Some(text)) => {
            let (p, f, s) = parse_amps(text)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let outcome = teleport(&p, &f, &s, &model, &mut rng)?;
            rows.push(TeleportRow {
                run: 0,
                label: outcome.label,
                fidelity: outcome.fidelity,
            });
        }
        _ => return Err(usage("provide exactly one of --random N or --amps ...")),
    }

    let min_fidelity = rows
        .iter()
        .map(|r| r.fidelity)
        .fold(f64::INFINITY, f64::min);
    let mean_fidelity = rows.iter().map(|r| r.fidelity).sum::<f64>() / rows.len() as f64;
    let output = match config.format {
        OutputFormat::Json => to_json(&TeleportReport {
            model: config.model_name(),
            seed: config.seed,
            theta: config.theta,
            alpha: config.alpha,
            runs: &rows,
            summary: TeleportSummary {
                min_fidelity,
                mean_fidelity,
            },
        }),
        OutputFormat::Csv => {
            let mut csv = String::from("run,label,fidelity\n");
            for r in &rows {
                let _ = writeln!(csv, "{},\"{}\",{}", r.run, r.label, r.fidelity);
            }
            csv
        }
    };
    write_output(config, &output)?;
    Ok(0)
}

#[derive(Serialize)]
struct SweepRow {
    alpha: f64,
    theta: f64,
    analytic_error: f64,
    empirical_error: f64,
    trials: usize,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    seed: u64,
    trials: usize,
    rows: &'a [SweepRow],
}

fn cmd_noise_sweep(
    config: &RunConfig,
    alpha_grid: &str,
    theta_grid: &str,
    trials: usize,
) -> Result<i32, Failure> {
    let alphas = parse_grid(alpha_grid)?;
    let thetas = parse_grid(theta_grid)?;
    if alphas.is_empty() || thetas.is_empty() {
        return Err(usage("noise sweep grids must be non-empty"));
    }
    if trials == 0 {
        return Err(usage("--trials must be positive"));
    }

    let mut rows = Vec::with_capacity(alphas.len() * thetas.len());
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (ti, &theta) in thetas.iter().enumerate() {
            let params = KerrParams::new(theta, alpha)?;
            let model = HomodyneModel::gaussian(params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((ai * thetas.len() + ti) as u64);
            let empirical = empirical_misclassification(&model, trials, &mut rng)?;
            rows.push(SweepRow {
                alpha,
                theta,
                analytic_error: error_probability(&params),
                empirical_error: empirical,
                trials,
            });
        }
    }

    let output = match config.format {
        OutputFormat::Json => to_json(&SweepReport {
            seed: config.seed,
            trials,
            rows: &rows,
        }),
        OutputFormat::Csv => {
            let mut csv = String::from("alpha,theta,analytic_error,empirical_error,trials\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    r.alpha, r.theta, r.analytic_error, r.empirical_error, r.trials
                );
            }
            csv
        }
    };
    write_output(config, &output)?;
    Ok(0)
}

/// Empirical misreport rate of the gaussian homodyne, driving the real
/// readout path with alternating shifted / unshifted probe states.
pub fn empirical_misclassification(
    model: &HomodyneModel,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<f64, Error> {
    let pair = (PhotonId::A, PhotonId::B);
    let shifted = {
        let st = PureState::bell_state(BellLabel::PSI_PLUS, DofKind::S, pair)?;
        let mut tagged = attach_probes(st);
        for c in standard_couplings(pair)
            .iter()
            .filter(|c| c.probe == ProbeId::P2)
        {
            tagged = cross_kerr(tagged, c)?;
        }
        tagged
    };
    let quiet: TaggedState = attach_probes(PureState::bell_state(
        BellLabel::PHI_PLUS,
        DofKind::S,
        pair,
    )?);

    let mut wrong = 0usize;
    for trial in 0..trials {
        let shifted_truth = trial % 2 == 0;
        let prepared = if shifted_truth {
            shifted.clone()
        } else {
            quiet.clone()
        };
        let (outcome, _) = homodyne_x(prepared, ProbeId::P2, model, rng)?;
        if (outcome == ProbeOutcome::ThetaMag) != shifted_truth {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / trials as f64)
}

/// Parse a 12-real amplitude list into the three DOF amplitude pairs.
fn parse_amps(text: &str) -> Result<(DofAmplitudes, DofAmplitudes, DofAmplitudes), Failure> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("cannot parse --amps: {e}")))?;
    if values.len() != 12 {
        return Err(usage(format!(
            "--amps needs 12 reals, got {}",
            values.len()
        )));
    }
    let pair = |k: usize| {
        DofAmplitudes::new(
            C64::new(values[4 * k], values[4 * k + 1]),
            C64::new(values[4 * k + 2], values[4 * k + 3]),
        )
    };
    Ok((pair(0)?, pair(1)?, pair(2)?))
}

/// Parse an inclusive "start..end:step" grid.
fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("grid {text:?} does not match start..end:step"));
    let (range, step) = text.split_once(':').ok_or_else(bad)?;
    let (start, end) = range.split_once("..").ok_or_else(bad)?;
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let end: f64 = end.trim().parse().map_err(|_| bad())?;
    let step: f64 = step.trim().parse().map_err(|_| bad())?;
    if !step.is_finite() || step <= 0.0 || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let mut values = Vec::new();
    let mut k = 0usize;
    loop {
        let v = start + step * k as f64;
        if v > end + 1e-9 * step {
            break;
        }
        values.push(v);
        k += 1;
    }
    if values.is_empty() {
        return Err(usage(format!("grid {text:?} is empty")));
    }
    Ok(values)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Fixed CSV schema for analysis records:
/// `input,s1,s2,s3,first_pol,first_f,first_s,second_pol,second_f,second_s,decoded,correct`
fn records_csv(records: &[AnalysisRecord]) -> String {
    let mut csv = String::from(
        "input,s1,s2,s3,first_pol,first_f,first_s,second_pol,second_f,second_s,decoded,correct\n",
    );
    for r in records {
        let input = r.input.map(|l| l.to_string()).unwrap_or_default();
        let correct = r.correct().map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "\"{}\",{},{},{},{},{},{},{},{},{},\"{}\",{}",
            input,
            r.probe_sig.s1,
            r.probe_sig.s2,
            r.probe_sig.s3,
            r.detection.first.pol,
            r.detection.first.f,
            r.detection.first.s,
            r.detection.second.pol,
            r.detection.second.f,
            r.detection.second.s,
            r.decoded,
            correct,
        );
    }
    csv
}

fn write_output(config: &RunConfig, output: &str) -> Result<(), Failure> {
    match &config.out {
        Some(path) => std::fs::write(path, output)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{output}");
            Ok(())
        }
    }
}
