//! `sojourn`: command-line front end for the estimators.

mod commands;
mod config;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::config::{Command, ConfigError};
use crate::output::{Document, SCHEMA_VERSION, TOOL_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] sojourn::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema mismatch: {0}")]
    Schema(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    output::write_to(path.map(PathBuf::as_path), text).map_err(|source| CliError::Io {
        path: path.cloned().unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    })
}

fn run(args: &[String], cancel: Arc<AtomicBool>) -> Result<(), CliError> {
    let cfg = config::parse_args(args)?;
    if cfg.command == Command::Report {
        let rows = report::load(&cfg.inputs)?;
        return write_output(cfg.out.as_ref(), &report::render(&rows));
    }
    // Fail on an unwritable destination before spending time on estimation.
    if let Some(p) = &cfg.out {
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|source| CliError::Io { path: p.clone(), source })?;
    }
    let digest = cfg.digest();
    log::info!("{} config digest {digest}", cfg.command.name());
    let ctx = commands::Context::new(cfg, cancel.clone())?;
    let mut out = commands::run(&ctx)?;
    out.partial |= cancel.load(Ordering::Relaxed);
    let cfg = &ctx.config;
    for r in &mut out.results {
        r.config_digest = digest.clone();
    }
    if out.partial {
        log::warn!("interrupted: writing partial results");
    }
    let text = if cfg.csv {
        output::to_csv(&out, cfg.seed, &digest).map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))?
    } else {
        output::to_json(&Document {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: cfg.command.name().to_string(),
            config_digest: digest,
            seed: cfg.seed,
            partial: out.partial,
            results: out.results,
            checks: out.checks,
            details: out.details,
        })
    };
    write_output(cfg.out.as_ref(), &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        None | Some("--help" | "-h" | "help") => {
            print!("{}", config::usage());
            return ExitCode::SUCCESS;
        }
        Some("--version" | "-V") => {
            println!("sojourn {TOOL_VERSION}");
            return ExitCode::SUCCESS;
        }
        Some(name) => {
            if let Some(c) = Command::parse(name) {
                if args[1..].iter().any(|a| a == "--help" || a == "-h") {
                    print!("{}", config::command_help(c));
                    return ExitCode::SUCCESS;
                }
            }
        }
    }
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    match run(&args, cancel) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Config(ConfigError::Usage(_))) {
                eprint!("\n{}", config::usage());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
