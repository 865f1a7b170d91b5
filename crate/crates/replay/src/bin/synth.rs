//! Sequence generator CLI: render a scenario into an on-disk frame bundle.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use depthfuse_replay::pipeline::generate_sequence;
use depthfuse_replay::presets;
use depthfuse_replay::scenario::Scenario;

#[derive(Parser)]
#[command(name = "synth", about = "Render synthetic sensor bundles from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a frame bundle from a scenario.
    Gen {
        /// Preset name (`corridor`, `pedestrian`) or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
        /// RNG seed driving sensor noise and dropout.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_scenario(spec: &str) -> Result<Scenario, (i32, String)> {
    let text = match presets::preset(spec) {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(spec)
            .map_err(|e| (2, format!("cannot read scenario `{spec}`: {e}")))?,
    };
    Scenario::from_json(&text).map_err(|e| (2, e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Gen { scenario, out, seed } = cli.command;
    let scenario = match load_scenario(&scenario) {
        Ok(s) => s,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code as u8);
        }
    };
    match generate_sequence(&scenario, seed, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
