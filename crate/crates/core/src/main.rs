use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rylab_core::cli::{execute, Document, ExitStatus, RunConfig};

#[derive(Parser)]
#[command(name = "rylab", version, about = "Curvature, RY-flow verification and conformal flow runs")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run the command described by a config file.
    Run {
        config: PathBuf,
        /// Override a key, e.g. `--set solver.dt=1e-4`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the canonical form of a config file (after overrides).
    Render {
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(path: &PathBuf, overrides: &[String]) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut doc = Document::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    for o in overrides {
        doc.apply_override(o).map_err(|e| format!("--set {o}: {e}"))?;
    }
    RunConfig::from_document(&doc).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, overrides, render_only) = match &cli.action {
        Action::Run { config, overrides } => (config, overrides, false),
        Action::Render { config, overrides } => (config, overrides, true),
    };
    let config = match load(path, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(ExitStatus::Usage.code());
        }
    };
    if render_only {
        print!("{}", config.render());
        return ExitCode::SUCCESS;
    }
    let outcome = execute(&config);
    let report = &outcome.report;
    if let Some(p) = &outcome.report_path {
        println!("report: {}", p.display());
    }
    for v in &report.verdicts {
        println!("{} {} {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    if let Some(a) = &report.abort {
        eprintln!("aborted: {} (last valid t = {})", a.reason, a.last_valid_t);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.status.code())
}
