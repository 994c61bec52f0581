// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! `cvent`: phase diagrams, stochastic records, pipeline analysis and
//! threshold calculators, each run documented by a manifest.

mod commands;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use commands::Globals;
use error::{CliError, CliResult};
use output::{read_json, sha256_hex, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "cvent", version, about = "Steady-state entanglement of coupled collective modes")]
struct Cli {
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, env = "CVENT_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "CVENT_THREADS")]
    threads: Option<usize>,
    /// Overrides the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact witnesses over a G/κ × n_eff grid.
    PhaseDiagram {
        #[arg(long)]
        config: PathBuf,
    },
    /// Quantum and power-matched classical records.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs record files through the shared pipeline.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Record files or directories; appended to the config's inputs.
        inputs: Vec<PathBuf>,
    },
    /// Witness stderr against N_eff and threshold invariance across (T, B).
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Noise, occupancy, voltage and phase-diffusion calculators.
    Thresholds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-runs the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

fn parse<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    Ok(read_json(path)?.0)
}

fn from_value<T: DeserializeOwned>(path: &Path, v: serde_json::Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

fn replay(path: &Path, globals: &Globals) -> CliResult<RunManifest> {
    let manifest: RunManifest = parse(path)?;
    if manifest.schema_version != output::MANIFEST_SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "manifest schema {} is not supported",
            manifest.schema_version
        )));
    }
    for input in &manifest.inputs {
        let bytes = std::fs::read(&input.path).map_err(|e| CliError::io(&input.path, e))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Usage(format!("input {} changed since the recorded run", input.path)));
        }
    }
    let globals = Globals {
        seed: None,
        ..globals.clone()
    };
    let cfg = manifest.config;
    match manifest.command.as_str() {
        "phase-diagram" => commands::phase_diagram::run(from_value(path, cfg)?, &globals),
        "simulate" => commands::simulate::run(from_value(path, cfg)?, &globals),
        "analyze" => commands::analyze::run(from_value(path, cfg)?, &globals),
        "converge" => commands::converge::run(from_value(path, cfg)?, &globals),
        "thresholds" => commands::thresholds::run(from_value(path, cfg)?, &globals),
        other => Err(CliError::Usage(format!("unknown command {other:?} in manifest"))),
    }
}

fn run(cli: Cli) -> CliResult<RunManifest> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let globals = Globals {
        out_dir: cli.out_dir,
        seed: cli.seed,
    };
    match cli.command {
        Command::PhaseDiagram { config } => commands::phase_diagram::run(parse(&config)?, &globals),
        Command::Simulate { config } => commands::simulate::run(parse(&config)?, &globals),
        Command::Analyze { config, inputs } => {
            let mut cfg: commands::analyze::AnalyzeConfig = parse(&config)?;
            cfg.inputs.extend(inputs);
            commands::analyze::run(cfg, &globals)
        }
        Command::Converge { config } => commands::converge::run(parse(&config)?, &globals),
        Command::Thresholds { config } => commands::thresholds::run(parse(&config)?, &globals),
        Command::Replay { manifest } => replay(&manifest, &globals),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(manifest) => {
            println!("{}", manifest.outputs.iter().map(|o| o.path.as_str()).collect::<Vec<_>>().join("\n"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
