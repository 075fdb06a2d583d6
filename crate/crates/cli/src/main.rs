//! Scenario runner for the Cosserat kinematics and statics library.
//!
//! Exit codes: 0 all checks passed, 1 a declared check failed, 2 the
//! scenario could not be run (parse, validation, io, or numerical error).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use cosserat_cli::error::CliError;
use cosserat_cli::report::Report;
use cosserat_cli::{runner, scenario};

/// Relative output paths are joined under this directory when it is set;
/// it has no other effect.
const OUT_DIR_VAR: &str = "COSSERAT_OUT_DIR";

#[derive(Parser)]
#[command(name = "cosserat", version, about = "Run Cosserat scenario files")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Also write the report, in record form, to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report rendering on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Multiply every declared norm tolerance (not order bands).
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and judge its checks.
    Run { scenario: PathBuf },
    /// Refine a scenario's grid and report observed orders.
    Study {
        scenario: PathBuf,
        /// Number of refinement levels (>= 3).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Records,
}

fn load(path: &Path) -> Result<scenario::Scenario, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(path.display().to_string(), e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    scenario::parse_scenario(&name, &src)
}

fn out_path(requested: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if requested.is_relative() => PathBuf::from(dir).join(requested),
        _ => requested.to_path_buf(),
    }
}

fn emit(report: &Report, cli: &Cli, elapsed_ms: f64) -> Result<(), CliError> {
    match cli.format {
        Format::Table => print!("{}", report.render_table(elapsed_ms)),
        Format::Records => print!("{}", report.render_records(elapsed_ms)),
    }
    if let Some(requested) = &cli.out {
        let path = out_path(requested);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::io(parent.display().to_string(), e))?;
            }
        }
        std::fs::write(&path, report.render_records(elapsed_ms))
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    match &cli.cmd {
        Cmd::Run { scenario } => {
            let sc = load(scenario)?;
            let clock = Instant::now();
            let report = runner::execute(&sc, cli.tol_scale)?;
            emit(&report, cli, clock.elapsed().as_secs_f64() * 1e3)?;
            Ok(report.passed)
        }
        Cmd::Study { scenario, levels } => {
            let sc = load(scenario)?;
            let clock = Instant::now();
            let report = runner::execute_study(&sc, *levels, cli.tol_scale)?;
            emit(&report, cli, clock.elapsed().as_secs_f64() * 1e3)?;
            Ok(report.passed)
        }
        Cmd::Validate { scenario } => {
            let sc = load(scenario)?;
            println!(
                "ok: scenario '{}' (kind {}) with {} checks",
                sc.name,
                sc.kind.name(),
                sc.checks.len()
            );
            Ok(true)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
