//! `amber`: regenerates the BER experiments as CSV files.

mod config;
mod experiments;

use clap::Parser;
use config::{Experiment, ExperimentConfig};
use experiments::RunError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "amber", version, about = "Ambient backscatter BER experiments")]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV output.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the `seed` key of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "AMBER_THREADS")]
    threads: Option<usize>,
}

fn usage(msg: String) -> ExitCode {
    eprintln!("amber: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    // clap exits with status 2 on bad arguments
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", cli.config.display())),
    };
    let mut cfg = match ExperimentConfig::parse(cli.experiment, &text) {
        Ok(c) => c,
        Err(e) => return usage(format!("{}: {e}", cli.config.display())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("amber: thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let artifact = match experiments::run(&cfg) {
        Ok(a) => a,
        Err(RunError::Usage(msg)) => return usage(msg),
        Err(RunError::Numeric(msg)) => {
            eprintln!("amber: numeric failure: {msg}");
            return ExitCode::from(1);
        }
    };
    let path = cli.out.join(&artifact.file_name);
    let written = std::fs::create_dir_all(&cli.out).and_then(|_| std::fs::write(&path, &artifact.contents));
    if let Err(e) = written {
        eprintln!("amber: cannot write {}: {e}", path.display());
        return ExitCode::from(1);
    }
    eprintln!("amber: wrote {}", path.display());
    if artifact.failures > 0 {
        eprintln!("amber: {} validation check(s) failed", artifact.failures);
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
