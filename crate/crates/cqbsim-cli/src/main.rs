// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! `cqb`: runs named cqbsim experiments and writes CSV/JSON results plus a
//! manifest. Errors go to stderr as one JSON object; the exit code encodes
//! the error class.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqbsim::experiment::{self, ExperimentConfig, ExperimentId};
use cqbsim::{Error, ErrorClass};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "cqb", version, about = "Composite-qubit simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Bundled spec name (cqb-a, cqb-b, two-cqb) or a JSON file.
    #[arg(long, global = true, env = "CQB_SPEC")]
    spec: Option<String>,
    #[arg(long, global = true, env = "CQB_SEED")]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "CQB_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output directory [default: out/<experiment>].
    #[arg(long, global = true, env = "CQB_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "CQB_SHOTS")]
    shots: Option<u32>,
    #[arg(long, global = true, env = "CQB_NOISELESS")]
    noiseless: bool,
    /// Parameter override, `key=value` with a JSON value; dots address
    /// nested fields. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Protocol {
    Ramsey,
    Echo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RbModeArg {
    Single,
    Simultaneous,
    TwoQubitInterleaved,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-pulse excitation map over amplitude and frequency.
    Scan2d,
    /// Full single-CQB tune-up.
    Calibrate,
    /// Randomized benchmarking.
    Rb {
        #[arg(long, value_enum)]
        mode: Option<RbModeArg>,
    },
    /// Ramsey or echo decay under flux noise.
    Coherence {
        #[arg(long, value_enum)]
        protocol: Option<Protocol>,
    },
    /// Landau–Zener initialization and ramped readout.
    Init,
    /// CZ calibration with frame resynchronization.
    Cz,
    /// Compiles a circuit file to waveforms.
    Compile {
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Convergence => 4,
        ErrorClass::Io => 5,
    }
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, Error> {
    let (id, extra): (ExperimentId, Option<(&str, Value)>) = match &cli.command {
        Command::Scan2d => (ExperimentId::Scan2d, None),
        Command::Calibrate => (ExperimentId::Calibrate, None),
        Command::Rb { mode } => (
            ExperimentId::Rb,
            mode.map(|m| {
                let name = match m {
                    RbModeArg::Single => "single",
                    RbModeArg::Simultaneous => "simultaneous",
                    RbModeArg::TwoQubitInterleaved => "two-qubit-interleaved",
                };
                ("mode", json!(name))
            }),
        ),
        Command::Coherence { protocol } => (
            ExperimentId::Coherence,
            protocol.map(|p| {
                let name = match p {
                    Protocol::Ramsey => "ramsey",
                    Protocol::Echo => "echo",
                };
                ("protocol", json!(name))
            }),
        ),
        Command::Init => (ExperimentId::Init, None),
        Command::Cz => (ExperimentId::Cz, None),
        Command::Compile { circuit } => {
            let text = match circuit {
                Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
                None => None,
            };
            (ExperimentId::Compile, text.map(|t| ("circuit", json!(t))))
        }
    };
    let c = cli.common;
    let mut cfg = ExperimentConfig::new(id, c.out.unwrap_or_else(|| PathBuf::from("out").join(id.name())));
    cfg.spec = c.spec;
    cfg.seed = c.seed;
    cfg.workers = c.workers;
    cfg.shots = c.shots;
    cfg.noiseless = c.noiseless;
    for o in &c.overrides {
        cfg.set_from_str(o)?;
    }
    if let Some((k, v)) = extra {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|cfg| experiment::run(&cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, manifest)) => {
            let summary = json!({
                "experiment": manifest.experiment,
                "out_dir": cfg.out_dir.display().to_string(),
                "config_hash": manifest.config_hash,
                "files": manifest.files.iter().map(|f| f.path.clone()).collect::<Vec<_>>(),
            });
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let class = e.class();
            eprintln!("{}", json!({"error": {"class": class, "message": e.to_string()}}));
            ExitCode::from(exit_code(class))
        }
    }
}
