//! `qlm`: exact and asymptotic error curves, oracle cross-checks, the
//! single-copy measurement simulation and spectrum dumps.

mod output;
mod parse;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{fmt_opt, fmt_sig, open_sink, round_sig, tagged_path, write_csv, write_json};
use qlm_core::oracle::{p_err_oracle, MAX_ORACLE_N};
use qlm_core::povm::{p_err_n1_closed_form, simulate_misclassification, NoiseModel, DEFAULT_LAYERS};
use qlm_core::spectrum::{p_err_min_with, spectrum_report, spectrum_totals, EngineOptions, SpectrumTotals};
use qlm_core::PriorScenario;
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Tolerance of `qlm oracle`.
const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "qlm", version, about = "Optimal quantum learning machines for qubit template discrimination")]
struct Cli {
    /// Worker threads (defaults to QLM_THREADS, then the number of cores).
    #[arg(long, global = true, env = "QLM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact, asymptotic and Helstrom error probabilities over a range of n.
    Perr(PerrArgs),
    /// Compare the engine with brute-force dense matrices (n ≤ 2).
    Oracle(OracleArgs),
    /// Simulate the single-copy measurement over a grid of overlap angles.
    Simulate(SimulateArgs),
    /// Dump the full spectrum of Θ for one n.
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioKind {
    FixedPurity,
    HardSphere,
    FixedOverlap,
    FixedOverlapDim,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioKind,
    /// Bloch-vector length of the first template.
    #[arg(long)]
    r1: Option<f64>,
    /// Bloch-vector length of the second template.
    #[arg(long)]
    r2: Option<f64>,
    /// Overlap angle; accepts `pi/3`-style literals.
    #[arg(long, value_parser = parse::parse_angle, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Hilbert-space dimension for fixed-overlap-dim.
    #[arg(long)]
    d: Option<u32>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Inclusive list of `n` values.
#[derive(Clone)]
struct NRange(Vec<u32>);

fn parse_n_range(text: &str) -> Result<NRange, String> {
    parse::parse_range(text).map(NRange)
}

#[derive(Args)]
struct PerrArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `a`, `a:b` or `a:b:step`, inclusive.
    #[arg(long, value_parser = parse_n_range)]
    n: NRange,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Skip negligible (s, t) pairs for n > 200.
    #[arg(long)]
    truncate: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_parser = parse_n_range, default_value = "1:2")]
    n: NRange,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    None,
    Depolarizing,
    Thermal,
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma-separated angles; defaults to an even grid over [0, π].
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Intervals of the default grid.
    #[arg(long, default_value_t = 25)]
    steps: u32,
    #[arg(long, default_value_t = 256)]
    shots: u64,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseArg,
    /// Comma-separated depolarizing probabilities per layer; one output per value.
    #[arg(long)]
    p_depol: Option<String>,
    /// Comma-separated relaxation times T1 = T2 in microseconds; one output per value.
    #[arg(long)]
    t: Option<String>,
    /// Noise layers applied after the ideal unitary.
    #[arg(long, default_value_t = DEFAULT_LAYERS)]
    layers: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output path; with several noise values each gets a `_p…` or `_t…` suffix.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<qlm_core::Error> for Failure {
    fn from(e: qlm_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("cannot write output: {e}"))
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn require<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("--{flag} is required for --scenario {kind}")))
}

fn build_scenario(a: &ScenarioArgs) -> Result<PriorScenario, Failure> {
    let sc = match a.scenario {
        ScenarioKind::FixedPurity => PriorScenario::FixedPurities {
            r1: require(a.r1, "r1", "fixed-purity")?,
            r2: require(a.r2, "r2", "fixed-purity")?,
        },
        ScenarioKind::HardSphere => PriorScenario::HardSphere,
        ScenarioKind::FixedOverlap => PriorScenario::FixedOverlap {
            theta: require(a.theta, "theta", "fixed-overlap")?,
        },
        ScenarioKind::FixedOverlapDim => PriorScenario::FixedOverlapDim {
            theta: require(a.theta, "theta", "fixed-overlap-dim")?,
            d: require(a.d, "d", "fixed-overlap-dim")?,
        },
    };
    sc.validate()?;
    Ok(sc)
}

#[derive(Serialize)]
struct PerrRow {
    n: u32,
    scenario: PriorScenario,
    p_exact: f64,
    p_asymptotic: Option<f64>,
    helstrom: f64,
    excess_risk: f64,
}

fn cmd_perr(a: &PerrArgs) -> Result<(), Failure> {
    let scenario = build_scenario(&a.scenario)?;
    let options = EngineOptions {
        truncate: a.truncate,
        ..EngineOptions::default()
    };
    let reports = a
        .n
        .0
        .par_iter()
        .map(|&n| p_err_min_with(n, &scenario, &options))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = open_sink(a.output.as_deref())?;
    match a.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_sig(r.p_exact),
                        fmt_opt(r.p_asymptotic),
                        fmt_sig(r.helstrom),
                        fmt_sig(r.excess_risk),
                    ]
                })
                .collect();
            write_csv(&mut out, &["n", "p_exact", "p_asymptotic", "helstrom", "excess_risk"], &rows)?;
        }
        Format::Json => {
            let rows: Vec<PerrRow> = reports
                .iter()
                .map(|r| PerrRow {
                    n: r.n,
                    scenario: r.scenario,
                    p_exact: round_sig(r.p_exact),
                    p_asymptotic: r.p_asymptotic.map(round_sig),
                    helstrom: round_sig(r.helstrom),
                    excess_risk: round_sig(r.excess_risk),
                })
                .collect();
            write_json(&mut out, &rows)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleRow {
    n: u32,
    scenario: String,
    p_engine: f64,
    p_oracle: f64,
    abs_diff: f64,
    pass: bool,
}

fn cmd_oracle(a: &OracleArgs) -> Result<(), Failure> {
    let scenario = build_scenario(&a.scenario)?;
    if let Some(&bad) = a.n.0.iter().find(|&&n| n == 0 || n > MAX_ORACLE_N) {
        return Err(usage(format!("the dense oracle handles 1 ≤ n ≤ {MAX_ORACLE_N}, got {bad}")));
    }
    let mut rows = Vec::new();
    for &n in &a.n.0 {
        let p_engine = p_err_min_with(n, &scenario, &EngineOptions::default())?.p_exact;
        let p_oracle = p_err_oracle(n, &scenario)?;
        let abs_diff = (p_engine - p_oracle).abs();
        rows.push(OracleRow {
            n,
            scenario: scenario.to_string(),
            p_engine,
            p_oracle,
            abs_diff,
            pass: abs_diff <= ORACLE_TOLERANCE,
        });
    }
    let mut out = open_sink(a.output.as_deref())?;
    match a.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.scenario.clone(),
                        fmt_sig(r.p_engine),
                        fmt_sig(r.p_oracle),
                        format!("{:.3e}", r.abs_diff),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            write_csv(&mut out, &["n", "scenario", "p_engine", "p_oracle", "abs_diff", "pass"], &table)?;
        }
        Format::Json => write_json(&mut out, &rows)?,
    }
    match rows.iter().find(|r| !r.pass) {
        Some(r) => Err(Failure::Verification(format!(
            "engine and oracle differ by {:.3e} at n = {} ({})",
            r.abs_diff, r.n, r.scenario
        ))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct SimRow {
    theta: f64,
    frequency: f64,
    stderr: f64,
    p_closed_form: f64,
}

fn theta_grid(a: &SimulateArgs) -> Result<Vec<f64>, Failure> {
    match &a.theta {
        Some(list) => parse::parse_list(list, parse::parse_angle).map_err(usage),
        None => {
            if a.steps == 0 {
                return Err(usage("--steps must be positive"));
            }
            Ok((0..=a.steps)
                .map(|i| std::f64::consts::PI * f64::from(i) / f64::from(a.steps))
                .collect())
        }
    }
}

/// One noise model per requested value, with the suffix for its output file.
fn noise_models(a: &SimulateArgs) -> Result<Vec<(NoiseModel, String)>, Failure> {
    let number = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number '{s}'"));
    let models = match a.noise {
        NoiseArg::None => vec![(NoiseModel::none(), String::new())],
        NoiseArg::Depolarizing => {
            let list = a.p_depol.as_deref().ok_or_else(|| usage("--p-depol is required for depolarizing noise"))?;
            parse::parse_list(list, number)
                .map_err(usage)?
                .into_iter()
                .map(|p| (NoiseModel::depolarizing(p), format!("p{p}")))
                .collect()
        }
        NoiseArg::Thermal => {
            let list = a.t.as_deref().ok_or_else(|| usage("--t is required for thermal noise"))?;
            parse::parse_list(list, number)
                .map_err(usage)?
                .into_iter()
                .map(|t| (NoiseModel::thermal(t, t), format!("t{t}")))
                .collect()
        }
    };
    let models: Vec<_> = models
        .into_iter()
        .map(|(m, tag)| (m.with_layers(a.layers), tag))
        .collect();
    for (m, _) in &models {
        m.validate()?;
    }
    Ok(models)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    if a.shots == 0 {
        return Err(usage("--shots must be positive"));
    }
    let thetas = theta_grid(a)?;
    let models = noise_models(a)?;
    if models.len() > 1 && a.output.is_none() {
        return Err(usage("several noise values need --output to name one file per value"));
    }
    for (noise, tag) in &models {
        let rows = thetas
            .iter()
            .enumerate()
            .map(|(i, &theta)| {
                let run = simulate_misclassification(theta, a.shots, noise, a.seed.wrapping_add(i as u64))?;
                Ok(SimRow {
                    theta,
                    frequency: run.frequency,
                    stderr: run.stderr,
                    p_closed_form: p_err_n1_closed_form(theta),
                })
            })
            .collect::<Result<Vec<_>, qlm_core::Error>>()?;
        let path = match &a.output {
            Some(p) if models.len() > 1 => Some(tagged_path(p, tag)),
            other => other.clone(),
        };
        write_sim(&rows, a.format, path.as_deref())?;
    }
    Ok(())
}

fn write_sim(rows: &[SimRow], format: Format, path: Option<&Path>) -> Result<(), Failure> {
    let mut out = open_sink(path)?;
    match format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![fmt_sig(r.theta), fmt_sig(r.frequency), fmt_sig(r.stderr), fmt_sig(r.p_closed_form)])
                .collect();
            write_csv(&mut out, &["theta", "frequency", "stderr", "p_closed_form"], &table)?;
        }
        Format::Json => {
            let rounded: Vec<SimRow> = rows
                .iter()
                .map(|r| SimRow {
                    theta: round_sig(r.theta),
                    frequency: round_sig(r.frequency),
                    stderr: round_sig(r.stderr),
                    p_closed_form: round_sig(r.p_closed_form),
                })
                .collect();
            write_json(&mut out, &rounded)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow {
    s: f64,
    t: f64,
    q: f64,
    case: String,
    branch: qlm_core::spectrum::Branch,
    eigenvalue: f64,
    multiplicity: u128,
    ln_scale: Option<f64>,
    weighted: f64,
}

#[derive(Serialize)]
struct SpectrumDump {
    n: u32,
    scenario: PriorScenario,
    entries: Vec<SpectrumRow>,
    totals: SpectrumTotals,
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<(), Failure> {
    let scenario = build_scenario(&a.scenario)?;
    let entries = spectrum_report(a.n, &scenario)?;
    let totals = spectrum_totals(&entries);
    let rows: Vec<SpectrumRow> = entries
        .iter()
        .map(|e| SpectrumRow {
            s: e.sector.s.value(),
            t: e.sector.t.value(),
            q: e.sector.q.value(),
            case: e.sector.case_tag.to_string(),
            branch: e.branch,
            eigenvalue: round_sig(e.eigenvalue),
            multiplicity: e.multiplicity,
            // a zero scale has no logarithm
            ln_scale: (!e.scale.is_zero()).then(|| round_sig(e.scale.ln_magnitude)),
            weighted: round_sig(e.weighted()),
        })
        .collect();
    let mut out = open_sink(a.output.as_deref())?;
    match a.format {
        Format::Json => {
            let totals = SpectrumTotals {
                trace_sum: round_sig(totals.trace_sum),
                positive_sum: round_sig(totals.positive_sum),
                negative_sum: round_sig(totals.negative_sum),
                total_multiplicity: totals.total_multiplicity,
            };
            write_json(&mut out, &SpectrumDump { n: a.n, scenario, entries: rows, totals })?;
        }
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_sig(r.s),
                        fmt_sig(r.t),
                        fmt_sig(r.q),
                        r.case.clone(),
                        format!("{:?}", r.branch).to_lowercase(),
                        fmt_sig(r.eigenvalue),
                        r.multiplicity.to_string(),
                        fmt_opt(r.ln_scale),
                        fmt_sig(r.weighted),
                    ]
                })
                .collect();
            write_csv(
                &mut out,
                &["s", "t", "q", "case", "branch", "eigenvalue", "multiplicity", "ln_scale", "weighted"],
                &table,
            )?;
            eprintln!(
                "trace_sum={} positive_sum={} negative_sum={} total_multiplicity={}",
                fmt_sig(totals.trace_sum),
                fmt_sig(totals.positive_sum),
                fmt_sig(totals.negative_sum),
                totals.total_multiplicity
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: {e}");
        }
    }
    let result = match &cli.command {
        Command::Perr(a) => cmd_perr(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Spectrum(a) => cmd_spectrum(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
