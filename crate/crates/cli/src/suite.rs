//! Batch execution of every `*.toml` config in a directory, one worker
//! thread per config.

use std::path::{Path, PathBuf};
use std::thread;

use crate::config::load_config;
use crate::error::RunError;
use crate::runner::{run_experiment, RunOutcome, RunStatus};

#[derive(Debug)]
pub struct SuiteEntry {
    pub config: PathBuf,
    pub result: Result<RunOutcome, RunError>,
}

impl SuiteEntry {
    pub fn status(&self) -> RunStatus {
        self.result.as_ref().map_or(RunStatus::Failed, |o| o.status)
    }
}

/// Config files in `dir`, sorted by name.
pub fn discover(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| RunError::io(dir, e))? {
        let p = entry.map_err(|e| RunError::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e == "toml") && p.is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Output directory for a config: `output` from the file, else
/// `<out_root>/<config stem>`.
pub fn output_dir(cfg_output: Option<&Path>, out_root: &Path, name: &str) -> PathBuf {
    cfg_output.map(Path::to_path_buf).unwrap_or_else(|| out_root.join(name))
}

pub fn run_suite(dir: &Path, out_root: &Path, seed: Option<u64>) -> Result<Vec<SuiteEntry>, RunError> {
    let configs = discover(dir)?;
    let entries = thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|path| {
                s.spawn(move || {
                    let result = load_config(path).map_err(RunError::from).and_then(|mut cfg| {
                        if let Some(seed) = seed {
                            cfg.seed = seed;
                            cfg.retraction.options.seed = seed;
                        }
                        let out = output_dir(cfg.output.as_deref(), out_root, &cfg.name);
                        run_experiment(&cfg, &out)
                    });
                    SuiteEntry { config: path.clone(), result }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("suite worker panicked")).collect()
    });
    Ok(entries)
}

/// Most severe status across a suite; an empty suite is a failure.
pub fn suite_status(entries: &[SuiteEntry]) -> RunStatus {
    if entries.is_empty() {
        return RunStatus::Failed;
    }
    entries.iter().fold(RunStatus::Ok, |acc, e| acc.worst(e.status()))
}
