//! Replay CLI: rebuild costmaps from a bundle under named configurations,
//! score them, evaluate depth accuracy, or dump a single grid.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use depthfuse_replay::bundle::load_bundle;
use depthfuse_replay::pipeline::{dump_grid, run_depth_eval, run_replay};
use depthfuse_replay::scenario::ConfigName;

#[derive(Parser)]
#[command(name = "replay", about = "Score costmap configurations against a recorded bundle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rebuild and score costmaps for one or more configurations.
    Run {
        /// Bundle directory produced by `synth gen`.
        #[arg(long)]
        bundle: PathBuf,
        /// Comma-separated config names (defaults to the scenario's list).
        #[arg(long)]
        configs: Option<String>,
        /// Report output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write per-frame wall-time build latency to timing.csv.
        #[arg(long)]
        timing: bool,
    },
    /// Depth accuracy of the calibrated and fused depth inside a band.
    EvalDepth {
        #[arg(long)]
        bundle: PathBuf,
        /// Evaluation band as `LO:HI` in meters, e.g. `0.3:1.0`.
        #[arg(long)]
        band: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one frame's costmap for one configuration as text.
    DumpGrid {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        config: String,
        #[arg(long)]
        frame: usize,
        /// Print the per-cell provenance bitmask instead of cell states.
        #[arg(long)]
        provenance: bool,
    },
}

fn parse_configs(list: &str) -> Result<Vec<ConfigName>, String> {
    let names: Result<Vec<ConfigName>, _> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(ConfigName::from_str)
        .collect();
    let names = names.map_err(|e| e.to_string())?;
    if names.is_empty() {
        return Err("empty config list".into());
    }
    Ok(names)
}

fn parse_band(spec: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| format!("band `{spec}` must look like LO:HI"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad band bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad band bound `{hi}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
        return Err(format!("band {lo}:{hi} is not a valid depth interval"));
    }
    Ok((lo, hi))
}

fn run(cli: Cli) -> Result<(), (i32, String)> {
    match cli.command {
        Command::Run {
            bundle,
            configs,
            out,
            timing,
        } => {
            let bundle = load_bundle(&bundle).map_err(|e| {
                let code = depthfuse_replay::PipelineError::from(e);
                (code.exit_code(), code.to_string())
            })?;
            let configs = match configs {
                Some(list) => parse_configs(&list).map_err(|m| (2, m))?,
                None => bundle
                    .manifest
                    .scenario
                    .default_configs()
                    .map_err(|e| (2, e.to_string()))?,
            };
            run_replay(&bundle, &configs, &out, timing)
                .map(|_| ())
                .map_err(|e| (e.exit_code(), e.to_string()))
        }
        Command::EvalDepth { bundle, band, out } => {
            let band = parse_band(&band).map_err(|m| (2, m))?;
            let bundle = load_bundle(&bundle).map_err(|e| {
                let code = depthfuse_replay::PipelineError::from(e);
                (code.exit_code(), code.to_string())
            })?;
            run_depth_eval(&bundle, band, &out)
                .map(|_| ())
                .map_err(|e| (e.exit_code(), e.to_string()))
        }
        Command::DumpGrid {
            bundle,
            config,
            frame,
            provenance,
        } => {
            let name = ConfigName::from_str(&config).map_err(|e| (2, e.to_string()))?;
            let text = dump_grid(&bundle, name, frame, provenance)
                .map_err(|e| (e.exit_code(), e.to_string()))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
