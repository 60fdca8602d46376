use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclab::{parse_config, run_experiment, Experiment, RunOptions};

#[derive(Parser)]
#[command(name = "fraclab", version, about = "Fractional Laplacian laboratory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the experiments.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<28} {}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed, jobs } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let result = parse_config(&text).and_then(|cfg| {
                let opts = RunOptions { out, seed, jobs };
                let dir = fraclab::runner::output_dir(&cfg, &opts);
                run_experiment(&cfg, &opts).map(|m| (m, dir))
            });
            match result {
                Ok((m, dir)) => {
                    for c in &m.checks {
                        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    println!(
                        "{}: {} of {} checks passed; artifacts in {}",
                        m.experiment,
                        m.summary.total - m.summary.failed,
                        m.summary.total,
                        dir.display()
                    );
                    if m.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
