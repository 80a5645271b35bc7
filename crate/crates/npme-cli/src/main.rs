//! Command-line front end: derives solution constants, tabulates densities,
//! samples random flights and runs the statistical verification suite.
//!
//! Exit codes: 0 success, 1 statistical failure, 2 invalid arguments, 3 I/O.

use clap::{Args, Parser, Subcommand};
use npme::flight::{batch_sample, RenewalLaw, SampleBatch};
use npme::kernel::{FlightCase, NpmeParams};
use npme::verify::{build_report, empirical_cf, mass_quadrature, TestFragment};
use serde::Deserialize;
use std::f64::consts::PI;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "npme", version, about = "Self-similar NPME solutions and the random flights that realize them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the derived solution constants as JSON.
    Params(Common),
    /// Tabulate density, radial density and radial CDF on a grid as CSV.
    Density(DensityArgs),
    /// Sample flight endpoints at a fixed time and write them as JSONL.
    Simulate(Common),
    /// Check a sample batch against the analytic law; JSON report.
    Verify(VerifyArgs),
    /// Classify flight rows as sub/normal/super-diffusive; CSV table.
    Classify(ClassifyArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Fractional exponent in (0, 2].
    #[arg(long)]
    alpha: Option<f64>,
    /// Porous-medium exponent (> 1); alternative to --n/--case.
    #[arg(long)]
    m: Option<f64>,
    /// Number of direction changes of the flight.
    #[arg(long)]
    n: Option<usize>,
    /// Flight construction: d1 | dir_a | dir_b.
    #[arg(long, value_parser = FlightCase::from_str)]
    case: Option<FlightCase>,
    /// Space dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Observation time.
    #[arg(long)]
    t: Option<f64>,
    /// Batch size.
    #[arg(long = "N")]
    n_samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for batch sampling.
    #[arg(long)]
    workers: Option<usize>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    common: Common,
    /// Number of grid points over [0, c t^beta].
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Existing JSONL batch to verify instead of simulating afresh.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    /// A classification row "d:n:case:alpha"; repeatable.
    #[arg(long = "row")]
    rows: Vec<String>,
}

/// Config-file mirror of the flags; every field optional.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    m: Option<f64>,
    n: Option<usize>,
    case: Option<String>,
    d: Option<usize>,
    t: Option<f64>,
    #[serde(rename = "N")]
    n_samples: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    points: Option<usize>,
    out: Option<PathBuf>,
    input: Option<PathBuf>,
    rows: Option<Vec<ConfigRow>>,
}

#[derive(Deserialize)]
struct ConfigRow {
    d: usize,
    n: usize,
    case: String,
    alpha: f64,
}

/// Flag set after merging the config file (flags win).
struct Resolved {
    alpha: Option<f64>,
    m: Option<f64>,
    n: Option<usize>,
    case: Option<FlightCase>,
    d: Option<usize>,
    t: Option<f64>,
    n_samples: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    points: Option<usize>,
    out: Option<PathBuf>,
    input: Option<PathBuf>,
    rows: Vec<ConfigRow>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn args(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn io(message: impl std::fmt::Display) -> Self {
        Failure { code: 3, message: message.to_string() }
    }
}

impl From<npme::Error> for Failure {
    fn from(e: npme::Error) -> Self {
        let code = match &e {
            npme::Error::Io(_) | npme::Error::Json(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Params(c) => cmd_params(&c),
        Cmd::Density(a) => cmd_density(&a),
        Cmd::Simulate(c) => cmd_simulate(&c),
        Cmd::Verify(a) => cmd_verify(&a),
        Cmd::Classify(a) => cmd_classify(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn resolve(common: &Common, points: Option<usize>, input: Option<&PathBuf>) -> Result<Resolved, Failure> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Failure::io)?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::args(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let case = match (&common.case, &file.case) {
        (Some(c), _) => Some(*c),
        (None, Some(s)) => Some(FlightCase::from_str(s)?),
        (None, None) => None,
    };
    Ok(Resolved {
        alpha: common.alpha.or(file.alpha),
        m: common.m.or(file.m),
        n: common.n.or(file.n),
        case,
        d: common.d.or(file.d),
        t: common.t.or(file.t),
        n_samples: common.n_samples.or(file.n_samples),
        seed: common.seed.or(file.seed),
        workers: common.workers.or(file.workers),
        points: points.or(file.points),
        out: common.out.clone().or(file.out),
        input: input.cloned().or(file.input),
        rows: file.rows.unwrap_or_default(),
    })
}

fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::args(format!("missing required {flag}")))
}

/// Builds the parameter set from either `--m` or the `(--n, --case)` pair.
fn params_from(spec: &Resolved) -> Result<NpmeParams, Failure> {
    let alpha = require(spec.alpha, "--alpha")?;
    let d = require(spec.d, "--d")?;
    match (spec.m, spec.n, spec.case) {
        (Some(m), None, None) => Ok(NpmeParams::new(alpha, m, d)?),
        (None, Some(n), Some(case)) => Ok(NpmeParams::from_flight(n, d, alpha, case)?),
        (None, _, _) => Err(Failure::args(
            "supply either --m or both --n and --case",
        )),
        (Some(_), _, _) => Err(Failure::args(
            "supply either --m or (--n, --case), not both",
        )),
    }
}

/// Flight parameters for commands that must sample: `m` alone is rejected
/// because several flights share one exponent.
fn flight_from(spec: &Resolved) -> Result<(NpmeParams, usize, FlightCase), Failure> {
    let alpha = require(spec.alpha, "--alpha")?;
    let d = require(spec.d, "--d")?;
    let n = require(spec.n, "--n")?;
    let case = require(spec.case, "--case")?;
    let params = NpmeParams::from_flight(n, d, alpha, case)?;
    if let Some(m) = spec.m {
        if ((m - params.m) / params.m).abs() > 1e-9 {
            return Err(Failure::args(format!(
                "--m {m} contradicts the flight, which requires m = {}",
                params.m
            )));
        }
    }
    Ok((params, n, case))
}

fn write_text(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(Failure::io),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(Failure::io),
    }
}

fn cmd_params(common: &Common) -> Result<u8, Failure> {
    let spec = resolve(common, None, None)?;
    let params = params_from(&spec)?;
    let class = params.classify_diffusivity();
    let doc = serde_json::json!({
        "alpha": params.alpha,
        "m": params.m,
        "d": params.d,
        "beta": params.beta,
        "k": params.k_const,
        "C": params.big_c,
        "c": params.speed_c,
        "diffusivity": class.label.as_str(),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
    text.push('\n');
    write_text(&spec.out, &text)?;
    Ok(0)
}

fn cmd_density(args: &DensityArgs) -> Result<u8, Failure> {
    let spec = resolve(&args.common, args.points, None)?;
    let params = params_from(&spec)?;
    let t = require(spec.t, "--t")?;
    let points = spec.points.unwrap_or(201);
    if points < 2 {
        return Err(Failure::args(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    let rad = params.support_radius(t);
    let mut point = vec![0.0; params.d];
    let mut csv = String::from("r,u,radial_density,radial_cdf\n");
    for i in 0..points {
        let r = rad * i as f64 / (points - 1) as f64;
        point[0] = r;
        csv.push_str(&format!(
            "{r},{},{},{}\n",
            params.density(&point, t)?,
            params.radial_density(r, t)?,
            params.radial_cdf(r, t)?,
        ));
    }
    write_text(&spec.out, &csv)?;
    Ok(0)
}

fn cmd_simulate(common: &Common) -> Result<u8, Failure> {
    let spec = resolve(common, None, None)?;
    let (params, n, case) = flight_from(&spec)?;
    let t = require(spec.t, "--t")?;
    let count = require(spec.n_samples, "--N")?;
    let seed = require(spec.seed, "--seed")?;
    let workers = spec.workers.unwrap_or(1);
    let batch = batch_sample(count, t, n, case, &params, seed, workers)?;
    match &spec.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(Failure::io)?;
            batch.write_jsonl(std::io::BufWriter::new(file))?;
        }
        None => batch.write_jsonl(std::io::stdout().lock())?,
    }
    Ok(0)
}

fn case_of(law: RenewalLaw) -> FlightCase {
    match law {
        RenewalLaw::F1 => FlightCase::D1,
        RenewalLaw::F2A => FlightCase::DirA,
        RenewalLaw::F3B => FlightCase::DirB,
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let spec = resolve(&args.common, None, args.input.as_ref())?;
    let (params, batch) = match &spec.input {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(Failure::io)?;
            let batch = SampleBatch::read_jsonl(BufReader::new(file))?;
            let alpha = require(spec.alpha, "--alpha")?;
            let params = NpmeParams::from_flight(
                batch.config.n,
                batch.config.d,
                alpha,
                case_of(batch.config.law),
            )?;
            (params, batch)
        }
        None => {
            let (params, n, case) = flight_from(&spec)?;
            let t = require(spec.t, "--t")?;
            let count = require(spec.n_samples, "--N")?;
            let seed = require(spec.seed, "--seed")?;
            let workers = spec.workers.unwrap_or(1);
            let batch = batch_sample(count, t, n, case, &params, seed, workers)?;
            (params, batch)
        }
    };
    let t = batch.t_obs;
    let count = batch.positions.len();
    let mut fragments = Vec::new();
    fragments.push(TestFragment::new(
        "mass_quadrature",
        (mass_quadrature(&params, t)? - 1.0).abs(),
        1e-8,
    ));
    fragments.push(npme::verify::beta_square_test(&batch, &params, t)?);
    // empirical CF against the Bessel closed form at a few radial frequencies
    let rad = params.support_radius(t);
    let mut worst = 0.0f64;
    for q in [0.5 / rad, 1.5 / rad, 3.0 / rad] {
        let mut xi = vec![0.0; params.d];
        xi[0] = q;
        let (re, im) = empirical_cf(&batch, &[xi])?[0];
        let cf = (2.0 * PI).powf(params.d as f64 / 2.0) * params.fourier_transform(q, t)?;
        worst = worst.max((re - cf).hypot(im));
    }
    fragments.push(TestFragment::new(
        "cf_max_error",
        worst,
        4.0 / (count as f64).sqrt(),
    ));
    let meta = serde_json::json!({
        "d": params.d,
        "n": batch.config.n,
        "alpha": params.alpha,
        "m": params.m,
        "t": t,
        "N": count,
        "seed": batch.seed,
    });
    let report = build_report(fragments, Some(meta))?;
    let mut text = serde_json::to_string_pretty(&report).expect("serializable report");
    text.push('\n');
    write_text(&spec.out, &text)?;
    Ok(if report.pass { 0 } else { 1 })
}

fn parse_row(text: &str) -> Result<ConfigRow, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(Failure::args(format!(
            "row {text:?} is not of the form d:n:case:alpha"
        )));
    }
    let bad = |field: &str| Failure::args(format!("row {text:?}: invalid {field}"));
    Ok(ConfigRow {
        d: parts[0].parse().map_err(|_| bad("d"))?,
        n: parts[1].parse().map_err(|_| bad("n"))?,
        case: parts[2].to_string(),
        alpha: parts[3].parse().map_err(|_| bad("alpha"))?,
    })
}

fn cmd_classify(args: &ClassifyArgs) -> Result<u8, Failure> {
    let spec = resolve(&args.common, None, None)?;
    let mut rows = spec.rows;
    for text in &args.rows {
        rows.push(parse_row(text)?);
    }
    if rows.is_empty() {
        // fall back to the single row described by the scalar flags
        rows.push(ConfigRow {
            d: require(spec.d, "--d")?,
            n: require(spec.n, "--n")?,
            case: require(spec.case, "--case")?.as_str().to_string(),
            alpha: require(spec.alpha, "--alpha")?,
        });
    }
    let mut csv = String::from("d,n,case,alpha,m,2beta,label\n");
    for row in &rows {
        let entry = FlightCase::from_str(&row.case)
            .and_then(|case| NpmeParams::from_flight(row.n, row.d, row.alpha, case));
        match entry {
            Ok(params) => {
                let class = params.classify_diffusivity();
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.d,
                    row.n,
                    row.case,
                    row.alpha,
                    params.m,
                    class.exponent,
                    class.label.as_str(),
                ));
            }
            Err(e) => {
                // the reason may contain commas, so the field is quoted
                csv.push_str(&format!(
                    "{},{},{},{},,,\"invalid: {}\"\n",
                    row.d, row.n, row.case, row.alpha, e
                ));
            }
        }
    }
    write_text(&spec.out, &csv)?;
    Ok(0)
}
