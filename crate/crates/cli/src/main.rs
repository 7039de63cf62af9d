use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use loewner::experiment::{
    self, render, suite, suite_csv, write_text, ExperimentConfig, OutputFormat, Overrides, RunMode, SEED_ENV,
};
use loewner::verify::{property_run, Property, PropertyReport};
use loewner::Error;

#[derive(Parser, Debug)]
#[command(
    name = "loewner",
    version,
    about = "Loewner-order matrix concentration bounds and their numerical verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed; overrides the config file.
    #[arg(long, global = true, env = SEED_ENV)]
    seed: Option<u64>,

    /// Monte Carlo trials; overrides the config file (0 = oracle only).
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Confidence level of the exact binomial intervals.
    #[arg(long = "ci-level", global = true)]
    ci_level: Option<f64>,

    /// Output file; defaults to the config's `output`, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the bound formulas only.
    Bound { config: PathBuf },
    /// Bounds, exact oracle when available, and Monte Carlo.
    Verify { config: PathBuf },
    /// Bounds and the exact oracle only.
    Enumerate { config: PathBuf },
    /// Run the proof-step property checks.
    Properties {
        /// Properties to run (default: all).
        #[arg(long = "property", value_name = "NAME")]
        properties: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
    },
    /// Verify every `*.toml` config in a directory.
    Suite { dir: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the run completed but found a violation or failure.
fn dispatch(cli: &Cli) -> Result<bool, Error> {
    let overrides = Overrides { seed: cli.seed, trials: cli.trials, ci_level: cli.ci_level };
    let format = OutputFormat::from(cli.format);
    match &cli.command {
        Command::Bound { config } => single(cli, config, RunMode::Bound, &overrides, format),
        Command::Verify { config } => single(cli, config, RunMode::Verify, &overrides, format),
        Command::Enumerate { config } => single(cli, config, RunMode::Enumerate, &overrides, format),
        Command::Properties { properties, instances } => {
            let selected: Vec<Property> = if properties.is_empty() {
                Property::ALL.to_vec()
            } else {
                properties.iter().map(|p| p.parse()).collect::<Result<_, _>>()?
            };
            let seed = cli.seed.unwrap_or(experiment::DEFAULT_SEED);
            let reports =
                selected.into_iter().map(|p| property_run(p, *instances, seed)).collect::<Result<Vec<_>, _>>()?;
            for r in &reports {
                eprintln!(
                    "{:<30} {} instances={} failures={} worst_residual={:.3e}",
                    r.property.name(),
                    if r.passed { "PASS" } else { "FAIL" },
                    r.instances,
                    r.failures,
                    r.worst_residual
                );
            }
            output(cli.out.as_deref(), &properties_text(&reports, format)?)?;
            Ok(reports.iter().all(|r| r.passed))
        }
        Command::Suite { dir } => {
            let (agg, reports) = suite(dir, &overrides, cli.workers)?;
            for e in &agg.entries {
                match (&e.status, &e.error) {
                    (_, Some(err)) => eprintln!("{:<40} ERROR {err}", e.file),
                    (Some(s), None) => eprintln!("{:<40} {s}", e.file),
                    (None, None) => eprintln!("{:<40} no verdict", e.file),
                }
            }
            eprintln!("pass={} tight={} violation={} errors={}", agg.pass, agg.tight, agg.violation, agg.errors);
            let text = match format {
                OutputFormat::Csv => suite_csv(&agg, &reports),
                OutputFormat::Json => {
                    let mut s = serde_json::to_string_pretty(&agg).map_err(|e| Error::Io(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            output(cli.out.as_deref(), &text)?;
            Ok(agg.success())
        }
    }
}

fn single(cli: &Cli, config: &Path, mode: RunMode, overrides: &Overrides, format: OutputFormat) -> Result<bool, Error> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply(overrides);
    let report = experiment::run(&cfg, mode, cli.workers)?;
    let target = cli.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    output(target.as_deref(), &render(&report, format)?)?;
    if let Some(s) = report.status {
        eprintln!("{}: {s}", cfg.scenario);
    }
    Ok(!report.has_violation())
}

fn properties_text(reports: &[PropertyReport], format: OutputFormat) -> Result<String, Error> {
    Ok(match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from("property,instances,failures,worst_residual,passed\n");
            for r in reports {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.property.name(),
                    r.instances,
                    r.failures,
                    experiment::round_sig(r.worst_residual),
                    r.passed
                ));
            }
            s
        }
    })
}

fn output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
