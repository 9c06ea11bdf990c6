//! `hlab <experiment> [options]`: runs one experiment and writes its report as CSV.
//!
//! Exit status is 0 when every row passes, 1 when a row fails or the run
//! errors, and 2 for configuration errors.

use anyhow::{Context, Result};
use clap::Parser;
use hlab::kernels::{evaluate_batch, read_queries_csv, write_values_csv, KernelKind, DEFAULT_TOL};
use hlab::lab::{run, Experiment, ExperimentConfig};
use hlab::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "hlab", version, about = "Numerical experiments for the Schrödinger flow on the Heisenberg group")]
struct Cli {
    /// One of: heat-equiv, mehler, kernel-consistency, dispersion, strichartz-window,
    /// concentrate, restricted-sweep, mkappa; or kernel-batch to evaluate a query file.
    experiment: String,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long = "R0", alias = "r0")]
    r0: Option<String>,
    /// Comma-separated times.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Cells per axis of the convolution grid.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` file, overridden by flags given on the command line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Halve grid sizes per axis.
    #[arg(long)]
    fast: bool,
    /// kernel-batch only: query CSV with columns d, t (or re_z, im_z), rho, s.
    #[arg(long)]
    input: Option<PathBuf>,
    /// kernel-batch only: heat, heat-series, schrodinger, complex-time, or restricted.
    #[arg(long, default_value = "schrodinger")]
    kind: String,
}

enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) => Failure::Config(e.into()),
            other => Failure::Run(other.into()),
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let experiment: Experiment = cli.experiment.parse()?;
    let mut config = ExperimentConfig::new(experiment);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(Failure::Config)?;
        config.apply_file(&text)?;
        // The positional experiment wins over one named in the file.
        config.experiment = experiment;
    }
    let overrides = [
        ("d", &cli.d),
        ("kappa", &cli.kappa),
        ("ell", &cli.ell),
        ("R0", &cli.r0),
        ("t", &cli.t),
        ("tol", &cli.tol),
        ("grid", &cli.grid),
        ("seed", &cli.seed),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if cli.fast {
        config.fast = true;
    }
    Ok(config)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_experiment(cli: &Cli) -> Result<bool, Failure> {
    let config = build_config(cli)?;
    let report = run(&config)?;
    let out = output(&config.out).map_err(Failure::Run)?;
    report.write_csv(out)?;
    eprint!("{}", report.summary());
    Ok(report.passed())
}

fn parse_kind(name: &str, ell: Option<&str>) -> Result<KernelKind, Failure> {
    Ok(match name {
        "heat" => KernelKind::Heat,
        "heat-series" => KernelKind::HeatSeries,
        "schrodinger" => KernelKind::Schrodinger,
        "complex-time" => KernelKind::ComplexTime,
        "restricted" => {
            let ell = ell
                .unwrap_or("1")
                .parse()
                .map_err(|_| Failure::Config(anyhow::anyhow!("--ell must be a nonnegative integer")))?;
            KernelKind::Restricted(ell)
        }
        other => return Err(Failure::Config(anyhow::anyhow!("unknown kernel kind `{other}`"))),
    })
}

fn run_batch(cli: &Cli) -> Result<bool, Failure> {
    let kind = parse_kind(&cli.kind, cli.ell.as_deref())?;
    let input = cli
        .input
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow::anyhow!("kernel-batch needs --input")))?;
    let tol = match &cli.tol {
        Some(t) => t
            .parse()
            .map_err(|_| Failure::Config(anyhow::anyhow!("--tol must be a number")))?,
        None => DEFAULT_TOL,
    };
    let queries = read_queries_csv(input, tol)?;
    let values = evaluate_batch(kind, &queries);
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow::anyhow!("kernel-batch needs --out")))?;
    write_values_csv(out, &queries, &values)?;
    let failed = values.iter().filter(|v| v.is_err()).count();
    eprintln!("kernel-batch: {} of {} queries evaluated", queries.len() - failed, queries.len());
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = if cli.experiment == "kernel-batch" {
        run_batch(&cli)
    } else {
        run_experiment(&cli)
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}
