//! Command-line front end.
//!
//! ```text
//! corrmmse run    [--preset NAME] [--config FILE] [flags...]
//! corrmmse verify [--preset NAME] [--config FILE] [flags...]
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 more than 1% of trials skipped.

pub mod config;
pub mod run;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, BeamSource, ConfigError, ExperimentConfig, FadingKind};
pub use run::{run, RunOutput};
pub use verify::{verify, VerifyReport};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SKIPPED: i32 = 3;

/// Caps the number of Monte Carlo worker threads.
pub const THREADS_ENV: &str = "CORRMMSE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "corrmmse",
    version,
    about = "MMSE analysis of multibeam channels with full receive correlation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Monte Carlo sweep and write CSV, plot script and metadata.
    Run(ConfigArgs),
    /// Run the invariant battery at reduced trial counts.
    Verify(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Configuration file (key = value lines, # comments).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled parameter set: composite-fig2, rain-fig2 or unit.
    #[arg(long)]
    pub preset: Option<String>,
    /// SNR grid in dB as start:stop:points.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Monte Carlo trials (at least 2).
    #[arg(long)]
    pub trials: Option<String>,
    /// 64-bit master seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of synthetic beams.
    #[arg(long)]
    pub beams: Option<String>,
    /// Synthetic co-channel overlap in [0, 1).
    #[arg(long)]
    pub overlap: Option<String>,
    /// Beam-pattern CSV (K rows of K values).
    #[arg(long = "pattern-file")]
    pub pattern_file: Option<String>,
    /// composite, rain or unit.
    #[arg(long)]
    pub fading: Option<String>,
    /// Output path prefix.
    #[arg(long)]
    pub out: Option<String>,
    /// Rain attenuation dB conversion: on|off.
    #[arg(long = "db-conversion")]
    pub db_conversion: Option<String>,
    /// Units of the shadowing mean: natural|db.
    #[arg(long = "mu-units")]
    pub mu_units: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        [
            ("beams", &self.beams),
            ("overlap", &self.overlap),
            ("pattern_file", &self.pattern_file),
            ("fading", &self.fading),
            ("snr_db", &self.snr_db),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("db_conversion", &self.db_conversion),
            ("mu_units", &self.mu_units),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect()
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        parse_config(
            self.preset.as_deref(),
            self.config.as_deref(),
            &self.overrides(),
        )
    }
}

fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError {
                key: THREADS_ENV.into(),
                line: None,
                message: format!("expected a positive integer, got '{v}'"),
            }),
        },
    }
}

/// Parses `args` and executes; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (args, is_run) = match &cli.command {
        Command::Run(a) => (a, true),
        Command::Verify(a) => (a, false),
    };
    let (cfg, threads) = match args.resolve().and_then(|c| Ok((c, threads_from_env()?))) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("corrmmse: {e}");
            return EXIT_CONFIG;
        }
    };
    if is_run {
        match run(&cfg, threads) {
            Ok(out) => {
                if let Some(w) = &out.warning {
                    eprintln!("corrmmse: warning: {w}");
                }
                for p in [
                    &out.sweep_csv,
                    &out.crossings_csv,
                    &out.plot_script,
                    &out.meta,
                ] {
                    println!("wrote {}", p.display());
                }
                EXIT_OK
            }
            Err(e @ Error::ExcessiveSkips { .. }) => {
                eprintln!("corrmmse: {e}");
                EXIT_SKIPPED
            }
            Err(e) => {
                eprintln!("corrmmse: {}: {e}", e.kind());
                EXIT_RUNTIME
            }
        }
    } else {
        let report = verify(&cfg);
        print!("{report}");
        if report.all_passed() {
            EXIT_OK
        } else {
            for c in report.failed() {
                eprintln!("corrmmse: property failed: {}", c.name);
            }
            EXIT_RUNTIME
        }
    }
}
