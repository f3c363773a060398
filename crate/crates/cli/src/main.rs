use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fieldbridge::Exec;
use fieldbridge_cli::commands::{self, Globals};
use fieldbridge_cli::CliError;

/// Field transfer experiments on generated or loaded triangle meshes.
#[derive(Parser)]
#[command(name = "fieldbridge", version)]
struct Cli {
    /// Worker threads; more than one enables parallel execution with identical results.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for randomized inputs, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an iterated-transfer experiment and write one CSV per sweep value.
    Run { config: PathBuf },
    /// Write a generated mesh, e.g. `disk(1, 29)` or `square(8)`.
    GenerateMesh {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Random interior displacement, as a fraction of the local edge length.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
    },
    /// Coupled transfer through rendezvous ranks for several application rank counts.
    ScaleSweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let exec = if cli.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Exec::Parallel
    } else {
        Exec::Serial
    };
    let g = Globals { exec, threads: cli.threads, seed: cli.seed };
    match cli.command {
        Command::Run { config } => {
            for p in commands::run(&config, g)? {
                println!("{}", p.display());
            }
        }
        Command::GenerateMesh { spec, output, jitter } => {
            let n = commands::generate_mesh(&spec, &output, jitter, g)?;
            println!("{}: {n} elements", output.display());
        }
        Command::ScaleSweep { config, ranks } => {
            for r in commands::scale_sweep(&config, &ranks, g)? {
                println!(
                    "ranks {}: {} rounds, rdv bytes received {}, max deviation {:e}, stats in {}",
                    r.ranks,
                    r.rounds,
                    r.rdv_bytes_recv,
                    r.max_deviation,
                    r.stats_path.display()
                );
            }
        }
    }
    Ok(())
}
