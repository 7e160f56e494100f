//! `noarb`: reproducible experiment runner.
//!
//! Exit codes: 0 on success, 2 when an experiment's acceptance checks fail
//! (or a manifest digest no longer verifies), 1 on any other error.

mod config;
mod experiments;
mod manifest;
mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use manifest::{Emitter, RunManifest, Versions};

#[derive(Parser)]
#[command(name = "noarb", version, about = "stochastic no-arbitrage laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        /// Path to the experiment config (JSON, strict schema).
        config: PathBuf,
        /// Output root; overrides $NOARB_OUT. The experiment writes into
        /// `<root>/<experiment-id>/`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the experiment catalog.
    List,
    /// Re-verify the digests recorded in a run manifest.
    Verify {
        /// Path to a manifest.json written by `noarb run`.
        manifest: PathBuf,
    },
}

fn output_root(cli_out: Option<PathBuf>) -> PathBuf {
    cli_out
        .or_else(|| std::env::var_os("NOARB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("noarb-out"))
}

fn run(config_path: &PathBuf, out: Option<PathBuf>) -> Result<bool> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read {}", config_path.display()))?;
    let config = ExperimentConfig::from_json(&text)?;
    let dir = match &config.output_dir {
        Some(d) => PathBuf::from(d),
        None => output_root(out).join(&config.experiment),
    };
    let mut emitter = Emitter::new(dir.clone())?;
    let started = Instant::now();
    let checks = experiments::run_experiment(&config, &mut emitter)?;
    let wall_clock_ms = started.elapsed().as_millis() as u64;
    let manifest = RunManifest {
        experiment: config.experiment.clone(),
        config,
        versions: Versions {
            core: noarb_core::VERSION.to_string(),
            cli: env!("CARGO_PKG_VERSION").to_string(),
        },
        wall_clock_ms,
        outputs: emitter.into_outputs(),
        checks,
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), &manifest_bytes)?;
    for c in &manifest.checks {
        println!(
            "[{}] {}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) }
        );
    }
    println!(
        "wrote {} files + manifest.json to {} in {} ms",
        manifest.outputs.len(),
        dir.display(),
        manifest.wall_clock_ms
    );
    Ok(manifest.all_checks_passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version pseudo-errors print and succeed
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Run { config, out } => match run(&config, out) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => {
                eprintln!("one or more acceptance checks failed");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Command::List => {
            for entry in experiments::catalog() {
                println!("{:32} {}", entry.id, entry.description);
            }
            ExitCode::SUCCESS
        }
        Command::Verify { manifest } => match manifest::verify_manifest(&manifest) {
            Ok((m, mismatched)) if mismatched.is_empty() => {
                println!(
                    "manifest for {:?} verifies: {} outputs intact, checks {}",
                    m.experiment,
                    m.outputs.len(),
                    if m.all_checks_passed() { "passed" } else { "FAILED at run time" }
                );
                ExitCode::SUCCESS
            }
            Ok((_, mismatched)) => {
                eprintln!("digest mismatch: {}", mismatched.join(", "));
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
