use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otoc_lab::{execute, parse_config_with, parse_thread_cap, strategy_listing, write_csv, Overrides, Results};

#[derive(Parser)]
#[command(name = "otoc-lab", version, about = "Run OTOC distinguishing and learning-tree experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `samples` (or `trials` for distinguish).
        #[arg(long)]
        samples: Option<usize>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
        /// Also write `n,tv,ci_low,ci_high` rows (hardness-sweep only).
        #[arg(long)]
        csv: Option<String>,
    },
    /// List the built-in learning-tree strategies.
    ListStrategies {
        #[arg(long)]
        json: bool,
    },
    /// Print the JSON Schema of the run report.
    Schema {
        /// Print the config schema instead.
        #[arg(long)]
        config: bool,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("otoc-lab: {}", msg.trim_end());
            ExitCode::from(code)
        }
    }
}

fn real_main() -> Result<(), (u8, String)> {
    let cli = Cli::parse();
    match cli.command {
        Command::ListStrategies { json } => {
            if json {
                let list = serde_json::to_string_pretty(&otoc_core::tree::registry()).expect("serializes");
                println!("{list}");
            } else {
                print!("{}", strategy_listing());
            }
            Ok(())
        }
        Command::Schema { config } => {
            print!("{}", if config { otoc_lab::CONFIG_SCHEMA } else { otoc_lab::REPORT_SCHEMA });
            Ok(())
        }
        Command::Run {
            config,
            seed,
            samples,
            out,
            csv,
        } => {
            let threads = parse_thread_cap(std::env::var(otoc_lab::THREADS_VAR).ok().as_deref()).map_err(|e| (2, e))?;
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| (1, format!("thread pool: {e}")))?;
            }
            let source =
                fs::read_to_string(&config).map_err(|e| (2, format!("cannot read {}: {e}", config.display())))?;
            let overrides = Overrides {
                seed,
                samples,
                output_path: out,
                csv_path: csv,
            };
            let cfg = parse_config_with(&source, &overrides).map_err(|e| (2, e.to_string()))?;
            let report = execute(&cfg).map_err(|e| (1, e.to_string()))?;
            let json = report.to_json_pretty();
            match &cfg.output_path {
                Some(path) => fs::write(path, json + "\n").map_err(|e| (1, format!("cannot write {path}: {e}")))?,
                None => println!("{json}"),
            }
            if let (Some(path), Results::HardnessSweep(sweep)) = (&cfg.csv_path, &report.results) {
                let file = fs::File::create(path).map_err(|e| (1, format!("cannot write {path}: {e}")))?;
                write_csv(sweep, file).map_err(|e| (1, format!("cannot write {path}: {e}")))?;
            }
            Ok(())
        }
    }
}
