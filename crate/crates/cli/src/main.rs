use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcfix::compare::write_comparison;
use lcfix::config::{load_config, ExperimentConfig};
use lcfix::runner::{run_experiment, RunStatus};
use lcfix::suite::{output_dir, run_suite, suite_status};

#[derive(Parser)]
#[command(name = "lcfix", version, about = "Fixed-point experiments over finite seminorm families")]
struct Cli {
    /// Override the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        config: PathBuf,
        /// Output directory (default: `output` from the config, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every *.toml config in a directory, one worker per config.
    Suite {
        dir: PathBuf,
        /// Root for outputs of configs without an `output` entry.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the implicit scheme with Krasnoselskii-Mann iteration.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, ExitCode> {
    match load_config(path) {
        Ok(mut cfg) => {
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.retraction.options.seed = s;
            }
            Ok(cfg)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(1))
        }
    }
}

fn code(s: RunStatus) -> ExitCode {
    ExitCode::from(s.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match load(&config, cli.seed) {
                Ok(c) => c,
                Err(c) => return c,
            };
            let dir = out.unwrap_or_else(|| output_dir(cfg.output.as_deref(), Path::new("out"), &cfg.name));
            match run_experiment(&cfg, &dir) {
                Ok(o) => {
                    if !cli.quiet {
                        println!("{}: {} (exit {}) -> {}", cfg.name, o.status.as_str(), o.status.code(), dir.display());
                    }
                    code(o.status)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Suite { dir, out } => match run_suite(&dir, &out, cli.seed) {
            Ok(entries) => {
                for e in &entries {
                    match &e.result {
                        Ok(o) if !cli.quiet => {
                            println!("{:<40} {:<8} {}", e.config.display(), o.status.as_str(), o.out_dir.display())
                        }
                        Ok(_) => {}
                        Err(err) => eprintln!("{}: error: {err}", e.config.display()),
                    }
                }
                if entries.is_empty() {
                    eprintln!("error: no *.toml configs in {}", dir.display());
                }
                code(suite_status(&entries))
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Compare { config, out } => {
            let cfg = match load(&config, cli.seed) {
                Ok(c) => c,
                Err(c) => return c,
            };
            let dir = out.unwrap_or_else(|| output_dir(cfg.output.as_deref(), Path::new("out"), &cfg.name));
            match write_comparison(&cfg, &dir) {
                Ok(p) => {
                    if !cli.quiet {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
