use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tempered_actrw_cli::config::ExperimentConfig;
use tempered_actrw_cli::{run_config, Overrides, RunError};

#[derive(Parser)]
#[command(name = "tempered-actrw", version, about = "Tempered aging random walk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment file and write results.csv, summary.json and plot.svg.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides output_dir in the file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Command::Run {
        config,
        seed,
        threads,
        out,
    } = cli.command;
    let result = (|| {
        if let Some(n) = threads {
            if n == 0 {
                return Err(RunError::Config("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| RunError::Config(e.to_string()))?;
        }
        let mut cfg = ExperimentConfig::load(&config)?;
        run_config(&mut cfg, &Overrides { seed, out })
    })();
    match result {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
