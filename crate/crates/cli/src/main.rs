//! `cjt <task> --config <file> [--out <dir>] [--workers k] [--preset name]`
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 when a solver
//! or output step fails.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use cjt_core::config::{preset, ConfigError, RunConfig, Task, PRESETS};
use cjt_core::runner::{run, RunError};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cjt",
    version,
    about = "Cooperative Jahn-Teller chain simulator"
)]
struct Cli {
    /// geometry | modes | meanfield | fluctuations | ed | sweep | figure2 | figure3 | figure4
    task: String,

    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,

    /// Named parameter set instead of a config file.
    #[arg(long)]
    preset: Option<String>,

    /// Output directory (default: the config's `output.directory`, else `out/<task>`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    workers: Option<usize>,

    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let err = |path: &str, message: String| ConfigError {
        path: path.into(),
        message,
    };
    if let Some(name) = &cli.preset {
        return preset(name).ok_or_else(|| {
            err(
                "--preset",
                format!("unknown preset `{name}`; known: {}", PRESETS.join(", ")),
            )
        });
    }
    let path = cli
        .config
        .as_ref()
        .expect("clap enforces --config or --preset");
    let text = std::fs::read_to_string(path)
        .map_err(|e| err("--config", format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(task) = Task::parse(&cli.task) else {
        let names: Vec<_> = Task::ALL.iter().map(|t| t.name()).collect();
        eprintln!(
            "error: unknown task `{}`; expected one of {}",
            cli.task,
            names.join(", ")
        );
        return ExitCode::from(EXIT_CONFIG);
    };
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.dump_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(task.name()));

    match run(&cfg, task, &out, cli.workers).with_context(|| format!("task {}", task.name())) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            for w in report.summary["warnings"].as_array().into_iter().flatten() {
                eprintln!("warning: {}", w.as_str().unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<RunError>()
                .map_or(EXIT_SOLVER, |r| r.exit_code() as u8);
            ExitCode::from(code)
        }
    }
}
