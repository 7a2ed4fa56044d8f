//! Command-line front end: fit surrogates, estimate VaR/CVaR, run the
//! bi-fidelity pipeline and repeated-trial studies, export samples, and
//! validate configurations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 model-evaluation error,
//! 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddgpce::archive::SurrogateArchive;
use ddgpce::config::PipelineConfig;
use ddgpce::distributions::SampleScheme;
use ddgpce::error::{Error, Result};
use ddgpce::pipeline;
use ddgpce::risk::Estimator;

#[derive(Parser)]
#[command(
    name = "ddgpce",
    about = "VaR/CVaR estimation with dimensionally decomposed polynomial chaos surrogates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Fit a surrogate to the configured model and write an archive.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Archive output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write the human-readable fit report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Estimate VaR/CVaR from a fitted archive.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Surrogate archive to evaluate.
        #[arg(long)]
        archive: PathBuf,
        /// Report base path; writes <out>.csv and <out>.json.
        #[arg(long)]
        out: PathBuf,
        /// Export the empirical CDF of the output sample to this CSV file.
        #[arg(long)]
        cdf: Option<PathBuf>,
        /// Override the configured estimator (rockafellar, indicator).
        #[arg(long)]
        estimator: Option<String>,
    },
    /// Run the bi-fidelity pipeline and write the composite archive.
    Bifit {
        #[command(flatten)]
        common: Common,
        /// Composite archive output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Report base path; writes <report>.csv and <report>.json.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Repeated-trial study against a crude-MCS benchmark (MRD report).
    Trials {
        #[command(flatten)]
        common: Common,
        /// Report base path; writes <out>.csv and <out>.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a seeded input sample batch as CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override the sampling scheme (mcs, qmcs, lhs).
        #[arg(long)]
        scheme: Option<String>,
        /// Override the sample count.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Validate the configuration and report input-model diagnostics.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<(PipelineConfig, PathBuf)> {
    let mut config = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let base_dir = common
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok((config, base_dir))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_scheme(text: &str) -> Result<SampleScheme> {
    match text {
        "mcs" => Ok(SampleScheme::Mcs),
        "qmcs" => Ok(SampleScheme::Qmcs),
        "lhs" => Ok(SampleScheme::Lhs),
        other => Err(Error::InvalidArgument(format!(
            "unknown scheme {other:?}; expected mcs, qmcs, or lhs"
        ))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        CliCommand::Fit {
            common,
            out,
            report,
        } => {
            let (config, base_dir) = load_config(&common)?;
            let outcome = pipeline::cmd_fit(&config, &base_dir)?;
            outcome.archive.save(&out)?;
            if let Some(path) = report {
                write_file(&path, &format!("{}\n", outcome.report))?;
            }
            println!("{}", outcome.report);
            println!("archive written to {}", out.display());
        }
        CliCommand::Estimate {
            common,
            archive,
            out,
            cdf,
            estimator,
        } => {
            let (mut config, base_dir) = load_config(&common)?;
            if let Some(est) = estimator {
                config.estimator = est.parse::<Estimator>()?;
            }
            let archive = SurrogateArchive::load(&archive)?;
            let outcome = pipeline::cmd_estimate(&archive, &config, &base_dir, cdf.is_some())?;
            write_file(
                &out.with_extension("csv"),
                &pipeline::risk_rows_csv(&outcome.rows),
            )?;
            write_file(
                &out.with_extension("json"),
                &format!("{}\n", pipeline::rows_json(&outcome.rows)?),
            )?;
            if let (Some(path), Some(csv)) = (cdf, &outcome.cdf_csv) {
                write_file(&path, csv)?;
            }
            println!("{}", outcome.report);
        }
        CliCommand::Bifit {
            common,
            out,
            report,
        } => {
            let (config, base_dir) = load_config(&common)?;
            let outcome = pipeline::cmd_bifit(&config, &base_dir)?;
            outcome.archive.save(&out)?;
            if let Some(base) = report {
                write_file(
                    &base.with_extension("csv"),
                    &pipeline::risk_rows_csv(&outcome.rows),
                )?;
                write_file(
                    &base.with_extension("json"),
                    &format!("{}\n", pipeline::rows_json(&outcome.rows)?),
                )?;
            }
            println!("{}", outcome.report);
            println!("archive written to {}", out.display());
        }
        CliCommand::Trials { common, out } => {
            let (config, base_dir) = load_config(&common)?;
            let outcome = pipeline::cmd_trials(&config, &base_dir)?;
            write_file(
                &out.with_extension("csv"),
                &pipeline::trial_rows_csv(&outcome.rows),
            )?;
            write_file(
                &out.with_extension("json"),
                &format!("{}\n", pipeline::rows_json(&outcome.rows)?),
            )?;
            println!("{}", outcome.report);
        }
        CliCommand::Sample {
            common,
            out,
            scheme,
            count,
        } => {
            let (config, base_dir) = load_config(&common)?;
            let scheme = scheme.as_deref().map(parse_scheme).transpose()?;
            let batch = pipeline::cmd_sample(&config, &base_dir, scheme, count)?;
            let mut text = Vec::new();
            batch.to_csv(&mut text).map_err(|source| Error::Io {
                path: out.display().to_string(),
                source,
            })?;
            std::fs::write(&out, &text).map_err(|source| Error::Io {
                path: out.display().to_string(),
                source,
            })?;
            println!(
                "wrote {} samples ({} scheme) to {}",
                batch.count(),
                batch.scheme,
                out.display()
            );
        }
        CliCommand::Validate { common } => {
            let (config, base_dir) = load_config(&common)?;
            let report = pipeline::cmd_validate(&config, &base_dir)?;
            print!("{}", report.text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
