use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use btq::config::{CheckId, RunConfig};
use btq::report::{exit_code, Status};
use btq::runner;

#[derive(Parser)]
#[command(name = "btq", version, about = "Berezin-Toeplitz quantization checks on model Kähler geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a JSON config and write summary.json plus CSV tables.
    Run {
        /// Config path (also accepted as the positional argument).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(value_name = "CONFIG", conflicts_with = "config")]
        config_positional: Option<PathBuf>,
        /// Report directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of check ids.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the check ids.
    ListChecks,
    /// Describe what a check measures.
    Describe { id: String },
}

fn code(status: Status) -> ExitCode {
    ExitCode::from(exit_code(status) as u8)
}

fn fail(msg: impl std::fmt::Display, status: Status) -> ExitCode {
    eprintln!("error: {msg}");
    code(status)
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("TOEPLITZ_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("TOEPLITZ_THREADS: expected a positive integer, got '{v}'"))?;
        if n == 0 {
            return Err("TOEPLITZ_THREADS: must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { code(Status::ConfigError) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::ListChecks => {
            for id in CheckId::ALL {
                println!("{id}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { id } => match id.parse::<CheckId>() {
            Ok(id) => {
                println!("{}", id.describe());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e, Status::ConfigError),
        },
        Command::Run { config, config_positional, out, checks, seed } => {
            if let Err(e) = configure_threads() {
                return fail(e, Status::ConfigError);
            }
            let Some(path) = config.or(config_positional) else {
                return fail("a config path is required (--config <path>)", Status::ConfigError);
            };
            let mut cfg = match RunConfig::load(&path) {
                Ok(c) => c,
                Err(e) => return fail(e, Status::ConfigError),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let only = match checks {
                Some(list) => match list.iter().map(|s| s.trim().parse::<CheckId>()).collect::<Result<Vec<_>, _>>() {
                    Ok(v) => Some(v),
                    Err(e) => return fail(e, Status::ConfigError),
                },
                None => None,
            };
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("btq-report"));
            match runner::run(&cfg, only.as_deref(), &dir) {
                Ok(report) => {
                    for rec in &report.checks {
                        println!("{}", rec.verdict_line());
                    }
                    println!("report: {}", dir.join("summary.json").display());
                    code(report.status)
                }
                Err(e) if e.is_numerical() => fail(e, Status::NumericalError),
                Err(e) => fail(e, Status::ConfigError),
            }
        }
    }
}
