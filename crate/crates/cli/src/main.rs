//! Command-line entry point for the fractional posterior studies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracpost::experiments::{run_study, write_outputs, OutputFormats, StudyConfig, StudyKind};
use fracpost::Error;

#[derive(Parser)]
#[command(
    name = "fracpost",
    version,
    about = "Monte Carlo studies of fractional (alpha-) posteriors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the available studies.
    List,
    /// Parse and validate a config file, then print it with every parameter filled in.
    ValidateConfig { config: PathBuf },
    /// Credible-set coverage in the white noise model.
    GwnCoverage(RunArgs),
    /// BvM check for the white noise / conjugate normal alpha-posterior.
    GwnBvm(RunArgs),
    /// BvM check for the Dirichlet histogram alpha-posterior.
    HistBvm(RunArgs),
    /// Bias table and coverage contrast for the histogram counterexample.
    HistCounterexample(RunArgs),
    /// pCN/GP BvM comparison of a regular and a violating prior.
    DensityGpBvm(RunArgs),
    /// Posterior contraction slope against n alpha.
    ContractionSlope(RunArgs),
    /// Sup-norm posterior risk slope.
    SupnormSlope(RunArgs),
    /// Centering bias along n for breaching and respecting schedules.
    Prop31Boundary(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file with a `[study]` table; defaults are used when omitted.
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of replications (overrides the config).
    #[arg(long)]
    reps: Option<usize>,
    /// Write the JSON summary (only this, unless --csv is also given).
    #[arg(long)]
    json: bool,
    /// Write the CSV tables (only these, unless --json is also given).
    #[arg(long)]
    csv: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load_config(path: &Path) -> Result<StudyConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Config(format!(
            "config error in `config`: cannot read {}: {e}",
            path.display()
        ))
    })?;
    Ok(StudyConfig::from_toml(&text)?)
}

fn run(kind: StudyKind, args: RunArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => StudyConfig::default_for(kind),
    };
    if cfg.kind() != kind {
        return Err(Error::config(
            "kind",
            format!("config describes `{}`, not `{kind}`", cfg.kind()),
        )
        .into());
    }
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(reps) = args.reps {
        cfg.set_reps(reps)?;
    }
    cfg.validate()?;
    if args.threads == Some(0) {
        return Err(Error::config("threads", "must be at least 1").into());
    }
    let formats = if args.json || args.csv {
        OutputFormats {
            csv: args.csv,
            json: args.json,
        }
    } else {
        OutputFormats::default()
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let output = pool.install(|| run_study(&cfg))?;
    for path in write_outputs(&cfg, &output, &args.out, formats)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for kind in StudyKind::ALL {
                println!("{:<20} {}", kind.name(), kind.description());
            }
            Ok(())
        }
        Command::ValidateConfig { config } => {
            load_config(&config).map(|cfg| print!("{}", cfg.to_toml()))
        }
        Command::GwnCoverage(a) => run(StudyKind::GwnCoverage, a),
        Command::GwnBvm(a) => run(StudyKind::GwnBvm, a),
        Command::HistBvm(a) => run(StudyKind::HistBvm, a),
        Command::HistCounterexample(a) => run(StudyKind::HistCounterexample, a),
        Command::DensityGpBvm(a) => run(StudyKind::DensityGpBvm, a),
        Command::ContractionSlope(a) => run(StudyKind::ContractionSlope, a),
        Command::SupnormSlope(a) => run(StudyKind::SupnormSlope, a),
        Command::Prop31Boundary(a) => run(StudyKind::Prop31Boundary, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
