use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fblab::config::{Mode, RunConfig};
use fblab::run::{emit_figures, render, run, Run};

#[derive(Parser)]
#[command(name = "fblab", version, about = "Free-boundary laboratory for optimal spectral partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured pipeline, print the report and write artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the certified epiperimetric constants in d = 2.
    Constants,
    /// Run the configured pipeline and print only the checks.
    Check { config: PathBuf },
}

fn execute(cli: Cli) -> fblab::Result<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let r = run(&cfg)?;
            print!("{}", render(&r.report, cfg.verbosity));
            if let Some(dir) = out.or(cfg.output.clone()) {
                for p in emit_figures(&r, &dir, cfg.verbosity)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(r.report.passed())
        }
        Command::Constants => {
            let cfg = RunConfig::parse("run.mode = constants")?;
            debug_assert_eq!(cfg.mode, Mode::Constants);
            let r = run(&cfg)?;
            print!("{}", render(&r.report, 1));
            Ok(r.report.passed())
        }
        Command::Check { config } => {
            let cfg = RunConfig::load(&config)?;
            let Run { report, .. } = run(&cfg)?;
            for c in &report.checks {
                println!("{c}");
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
