use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use microring_rc::experiment::{self, compare_baseline, ResultMap, RunOptions, WORKERS_ENV};
use microring_rc::mrr::Preset;

#[derive(Parser)]
#[command(name = "microring-rc", version, about = "Microring photonic neural network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    #[command(after_help = format!("Worker threads: set {WORKERS_ENV} (default: all cores)."))]
    Run {
        config: PathBuf,
        /// Also write per-cell time traces to <output>/trace/.
        #[arg(long)]
        dump_traces: bool,
    },
    /// Cellwise BER_in / BER_out of two maps on the same grid.
    Compare {
        /// Map from the processed output.
        out_map: PathBuf,
        /// Map from the unprocessed input.
        in_map: PathBuf,
        /// Write the ratio map here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Device presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

fn load_map(path: &PathBuf) -> microring_rc::Result<ResultMap> {
    ResultMap::read_csv(BufReader::new(File::open(path)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            dump_traces,
        } => experiment::run(
            &config,
            &RunOptions {
                dump_traces,
                workers: None,
            },
        )
        .map(|s| {
            println!(
                "{} cells ({} diverged) -> {}",
                s.map.cells.len(),
                s.diverged,
                s.output.display()
            );
        }),
        Command::Compare {
            out_map,
            in_map,
            output,
        } => (|| {
            let rb = compare_baseline(&load_map(&out_map)?, &load_map(&in_map)?)?;
            match output {
                Some(p) => std::fs::write(p, rb.to_csv_string()?)?,
                None => print!("{}", rb.to_csv_string()?),
            }
            Ok(())
        })(),
        Command::Presets { action: PresetAction::List } => {
            for p in Preset::ALL {
                println!("{:<14} {}", p.name(), p.describe());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
