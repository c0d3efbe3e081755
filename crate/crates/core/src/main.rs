use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ergolab::caps::Caps;
use ergolab::entropy::LogBase;
use ergolab::explab::{emit_report, render, run_experiment, ExperimentConfig, Format, Kind};
use ergolab::Result;

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Run entropy and rank-one experiments and report each check")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel identities, intertwining, rank and entropy separation.
    MarkovVerify(Common),
    /// Rank-one heights and tower measures.
    RankoneBuild(Common),
    /// Disjointness of tower translates, with an optional control case.
    RankoneDisjoint(Common),
    /// Cylinder measures against Monte Carlo frequencies.
    PoissonMeasure(Common),
    /// Independence of cylinder events over disjoint sets.
    PoissonIndependence(Common),
    /// P-entropy columns for Bernoulli, rotation and suspension systems.
    Pentropy(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config; built-in defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of --out, then json.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    base: Option<LogBase>,
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::MarkovVerify(c) => (Kind::MarkovVerify, c),
            Command::RankoneBuild(c) => (Kind::RankoneBuild, c),
            Command::RankoneDisjoint(c) => (Kind::RankoneDisjoint, c),
            Command::PoissonMeasure(c) => (Kind::PoissonMeasure, c),
            Command::PoissonIndependence(c) => (Kind::PoissonIndependence, c),
            Command::Pentropy(c) => (Kind::Pentropy, c),
        }
    }
}

fn run(kind: Kind, args: Common) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?, Some(kind))?,
        None => ExperimentConfig::new(kind),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(n) = args.samples {
        config.samples = Some(n);
    }
    if let Some(b) = args.base {
        config.base = b;
    }
    if args.out.is_some() {
        config.out = args.out;
    }
    let format = args.format.unwrap_or_else(|| match config.out.as_ref().and_then(|p| p.extension()) {
        Some(e) if e == "csv" => Format::Csv,
        _ => Format::Json,
    });
    let caps = Caps::from_env()?;
    let report = run_experiment(&config, &caps)?;
    match &config.out {
        Some(path) => emit_report(&report, format, path)?,
        None => print!("{}", render(&report, format)),
    }
    let failed = report.failures().count();
    eprintln!("{kind}: {} checks, {failed} failed", report.records.len());
    for r in report.failures() {
        eprintln!("  FAIL {} [{}] {}", r.claim, r.check, r.error.as_deref().unwrap_or(""));
    }
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match run(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error ({}): {e}", e.code());
            ExitCode::from(2)
        }
    }
}
