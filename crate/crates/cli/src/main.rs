use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dlab_core::experiments::{
    list_experiments, locate_line, manifest_config_text, run_experiment, ExperimentConfig, EXIT_ERROR,
};
use dlab_core::{par, DlabError};

#[derive(Parser)]
#[command(name = "dlab", version, about = "Run dispersive-estimate experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its reports.
    Run {
        config: PathBuf,
        /// Override a field, e.g. `--set params.grid.M=128`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the experiment ids.
    List,
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(path: &PathBuf, overrides: &[String]) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = manifest_config_text(&text).unwrap_or(text);
    let describe = |e: DlabError| match &e {
        DlabError::Config { path: field, .. } => match locate_line(&text, field) {
            Some(line) => format!("{}:{line}: {e}", path.display()),
            None => format!("{}: {e}", path.display()),
        },
        _ => format!("{}: {e}", path.display()),
    };
    let mut cfg = ExperimentConfig::from_json(&text).map_err(describe)?;
    for o in overrides {
        cfg.apply_override(o).map_err(|e| format!("--set {o}: {e}"))?;
    }
    cfg.resolve().map_err(describe)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (id, description, anchor) in list_experiments() {
                println!("{id:<16} {description} [{anchor}]");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => match load(&config, &overrides) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.experiment);
                ExitCode::SUCCESS
            }
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(EXIT_ERROR as u8)
            }
        },
        Command::Run { config, overrides, jobs } => {
            if let Some(j) = jobs {
                if let Err(e) = par::set_threads(j) {
                    eprintln!("error: --jobs {j}: {e}");
                    return ExitCode::from(EXIT_ERROR as u8);
                }
            }
            let cfg = match load(&config, &overrides) {
                Ok(c) => c,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(EXIT_ERROR as u8);
                }
            };
            match run_experiment(&cfg) {
                Ok(outcome) => {
                    for r in &outcome.reports {
                        let slope = r.slope().map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
                        let verdict = if r.pass { "pass" } else { "FAIL" };
                        println!("{:<32} slope {slope:>8}  {verdict}", r.label);
                        for flag in &r.flags {
                            println!("    note: {flag}");
                        }
                    }
                    println!("wrote {} files to {}", outcome.files.len(), cfg.output_dir.display());
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_ERROR as u8)
                }
            }
        }
    }
}
