use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gkp_sim::runner::{self, RunError, RunSettings, PRESET_NAMES};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "simulate", version, about = "Exact phase-space simulation of bred GKP states and cluster circuits")]
struct Cli {
    /// Worker threads (defaults to the config value, then to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fixed reduction order: results are bit-identical for any thread count.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Seed for outcome sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write CSVs plus a manifest.
    Run { config: PathBuf },
    /// Check a config and report its cost without running it.
    Validate { config: PathBuf },
    /// Run a built-in experiment.
    Preset {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// List the available presets.
        #[arg(long)]
        list: bool,
    },
}

fn report(err: RunError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(match err {
        RunError::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    })
}

fn execute(cfg: &runner::ExperimentConfig, settings: &RunSettings) -> ExitCode {
    match runner::run(cfg, settings) {
        Ok(s) => {
            println!("wrote {} rows to {}", s.rows, s.output.display());
            for f in &s.files {
                println!("  {}", f.display());
            }
            if s.failures > 0 {
                eprintln!("{} of {} rows failed; see the error column", s.failures, s.rows);
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => report(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut settings = RunSettings { threads: cli.threads, deterministic: cli.deterministic, seed: cli.seed, output: None };
    match cli.command {
        Command::Run { config } => match runner::load_config(&config) {
            Ok(cfg) => execute(&cfg, &settings),
            Err(e) => report(e),
        },
        Command::Validate { config } => match runner::load_config(&config) {
            Ok(cfg) => {
                let r = runner::inspect(&cfg);
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                if r.ok() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_CONFIG)
                }
            }
            Err(e) => report(e),
        },
        Command::Preset { list: true, .. } => {
            PRESET_NAMES.iter().for_each(|n| println!("{n}"));
            ExitCode::SUCCESS
        }
        Command::Preset { name, out, .. } => {
            let Some(name) = name else {
                eprintln!("error: missing preset name; available: {}", PRESET_NAMES.join(", "));
                return ExitCode::from(EXIT_CONFIG);
            };
            let out = out.unwrap_or_else(|| PathBuf::from(format!("results/{name}")));
            match runner::preset(&name, out.clone()) {
                Some(cfg) => {
                    settings.output = Some(out);
                    execute(&cfg, &settings)
                }
                None => {
                    eprintln!("error: unknown preset `{name}`; available: {}", PRESET_NAMES.join(", "));
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}
