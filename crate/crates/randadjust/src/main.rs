use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use randadjust::analysis::{analyze, diagnose, leverage_histogram};
use randadjust::config::{ExperimentConfig, Profile};
use randadjust::dataset::Table;
use randadjust::harness::{run_experiment, Source};
use randadjust::oracle::{results_csv, run_suite};
use randadjust::output::{cells_csv, emit_csv};

#[derive(Parser)]
#[command(name = "randadjust", version, about = "Regression adjustment for completely randomized experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo grid and write metrics.csv and cells.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `full` sets n = 2000, 5000 replicates and 50 outer seeds.
        #[arg(long, value_enum, default_value = "desk")]
        profile: ProfileArg,
    },
    /// Estimate the treatment effect of an observed experiment.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        outcome: String,
        #[arg(long)]
        treat: String,
        /// Clip each covariate at these quantiles, e.g. `0.025,0.975`.
        #[arg(long, value_delimiter = ',')]
        trim: Option<Vec<f64>>,
        /// Comma-separated covariate columns (default: all other columns).
        #[arg(long, value_delimiter = ',')]
        covariates: Option<Vec<String>>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Leverage diagnostics of a covariate table.
    Diagnose {
        #[arg(long)]
        data: PathBuf,
        /// Columns to leave out (e.g. outcome and treatment).
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Where to write the leverage histogram CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Check sampling-without-replacement moments and concentration bounds.
    OracleCheck {
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value_t = 20_240_501)]
        seed: u64,
    },
}

fn trim_pair(trim: Option<Vec<f64>>) -> Result<Option<[f64; 2]>> {
    match trim.as_deref() {
        None => Ok(None),
        Some([l, u]) if 0.0 <= *l && l < u && *u <= 1.0 => Ok(Some([*l, *u])),
        Some(_) => bail!("--trim expects lower,upper with 0 <= lower < upper <= 1"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, out, profile } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let ProfileArg::Full = profile {
                cfg.apply_profile(Profile::Full);
                cfg.validate()?;
            }
            let source = Source::from_config(&cfg)?;
            let exp = run_experiment(&cfg, &source)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            emit_csv(&exp.rows, &out.join("metrics.csv"))?;
            let cells = out.join("cells.csv");
            std::fs::write(&cells, cells_csv(&exp.cells)).with_context(|| format!("writing {}", cells.display()))?;
            Ok(true)
        }
        Command::Analyze { data, outcome, treat, trim, covariates, level } => {
            let table = Table::read(&data)?;
            let report = analyze(&table, &outcome, &treat, covariates.as_deref(), trim_pair(trim)?, level)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
        Command::Diagnose { data, exclude, bins, histogram } => {
            let table = Table::read(&data)?;
            let exclude: Vec<&str> = exclude.iter().map(String::as_str).collect();
            let (report, h) = diagnose(&table, None, &exclude)?;
            if let Some(path) = histogram {
                std::fs::write(&path, leverage_histogram(&h, bins)).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
        Command::OracleCheck { fast, seed } => {
            let results = run_suite(fast, seed)?;
            print!("{}", results_csv(&results));
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
