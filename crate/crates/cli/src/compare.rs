//! Side-by-side residuals of the implicit scheme and the explicit
//! Krasnoselskii–Mann iteration `x_{n+1} = (1 − λ) x_n + λ T x_n`.
//!
//! Purely descriptive: nothing is claimed about the explicit scheme.

use std::path::{Path, PathBuf};

use lcfix_core::maps::{MapSpec, Operator};
use lcfix_core::viscosity::{run_implicit_scheme, Schedule};
use lcfix_core::Vector;

use crate::config::ExperimentConfig;
use crate::error::RunError;
use crate::report::{fmt_f64, write_csv};

pub const COMPARISON_CSV: &str = "comparison.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub n: u64,
    pub eps: f64,
    pub implicit_residual: Vec<f64>,
    pub mann_residual: Vec<f64>,
}

/// Implicit scheme along the configured schedule (with `f` from the config,
/// or the constant anchor map `x ↦ x₀` when absent) next to Mann iterates
/// from `x₀`. `x₀` is `compare.x0`, else the region center.
pub fn compare_schemes(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>, RunError> {
    let t = cfg.t();
    let x0 = cfg.compare.x0.clone().unwrap_or_else(|| cfg.region.center().clone());
    let (f, beta) = match &cfg.map_f {
        Some(f) => (f.map.clone(), cfg.beta),
        None => (MapSpec::constant(x0.clone()), 0.0),
    };
    let mut pairs = cfg.schedule.steps();
    pairs.truncate(cfg.compare.steps.unwrap_or(usize::MAX));
    let schedule = Schedule::explicit(pairs.iter().map(|(_, e)| *e).collect())?;
    let mut opts = cfg.viscosity;
    // Every step is reported, so the outer stopping rule is disabled.
    opts.stop.residual_tol = f64::NEG_INFINITY;
    opts.stop.stall_steps = usize::MAX;
    let traj = run_implicit_scheme(&t.map, &f, beta, &schedule, &cfg.family, &cfg.region, &opts)?;

    let op = t.map.compile();
    let lambda = cfg.compare.lambda;
    let mut x = x0;
    let mut rows = Vec::with_capacity(traj.steps.len());
    for (s, (n, _)) in traj.steps.iter().zip(&pairs) {
        let tx = op.apply_vec(&x);
        let mann_residual = cfg.family.values((&tx - &x).as_slice());
        rows.push(ComparisonRow { n: *n, eps: s.eps, implicit_residual: s.residuals.clone(), mann_residual });
        x = Vector::new(x.combine(1.0 - lambda, &tx, lambda).into_inner())?;
    }
    Ok(rows)
}

/// Runs [`compare_schemes`] and writes `comparison.csv` under `out_dir`.
pub fn write_comparison(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf, RunError> {
    let rows = compare_schemes(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let labels = cfg.family.labels();
    let mut header = vec!["n".to_string(), "eps".to_string()];
    header.extend(labels.iter().map(|l| format!("implicit_residual_{l}")));
    header.extend(labels.iter().map(|l| format!("mann_residual_{l}")));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.n.to_string(), fmt_f64(r.eps)];
            row.extend(r.implicit_residual.iter().map(|v| fmt_f64(*v)));
            row.extend(r.mann_residual.iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();
    let path = out_dir.join(COMPARISON_CSV);
    write_csv(&path, &header, &body)?;
    Ok(path)
}
