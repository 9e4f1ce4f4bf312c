//! Executes a validated experiment and writes its artifacts.
//!
//! Every mode writes `summary.json` and `audit.json`; trajectory modes write
//! `trajectory.csv`, the property suite writes `properties.csv`. CSV files
//! carry no timestamp, so reruns with the same seed are byte-identical.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lcfix_core::contraction::{check_descent_sequence, solve_contraction, PicardOptions, PicardStatus};
use lcfix_core::maps::{fixed_set_oracle, verify_modulus, DeclaredMap, MapSpec};
use lcfix_core::retraction::{check_sunny, check_uniqueness_against, check_variational_inequality, estimate_retraction};
use lcfix_core::viscosity::{
    check_hypotheses, check_step4_bound, oracle_implicit_step_affine, run_implicit_scheme, step4_tolerance, AuditStatus,
    HypothesisAudit, HypothesisCheck, ImplicitTrajectory,
};
use lcfix_core::SeminormFamily;
use serde_json::{json, Map, Value};

use crate::battery;
use crate::config::{ExperimentConfig, Mode};
use crate::error::RunError;
use crate::report::{self, fmt_f64, write_csv, write_json};

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Converged and every audit passed.
    Ok,
    /// Converged, but a hypothesis or diagnostic was flagged.
    Flagged,
    Failed,
}

impl RunStatus {
    pub fn code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::Failed => 1,
            Self::Flagged => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Flagged => "flagged",
            Self::Failed => "failed",
        }
    }

    /// The more severe of two statuses.
    pub fn worst(self, other: Self) -> Self {
        let rank = |s: Self| match s {
            Self::Ok => 0,
            Self::Flagged => 1,
            Self::Failed => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const PROPERTIES_CSV: &str = "properties.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const AUDIT_JSON: &str = "audit.json";

/// Runs `cfg`, writing artifacts under `out_dir` (created if missing).
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let mut art = Artifacts { dir: out_dir.to_path_buf(), files: Vec::new() };
    let (status, body, audit) = match cfg.mode {
        Mode::Viscosity | Mode::OracleCheck => run_viscosity(cfg, &mut art)?,
        Mode::Picard => run_picard(cfg, &mut art)?,
        Mode::RetractionAudit => run_retraction(cfg, &mut art)?,
        Mode::PropertySuite => run_properties(cfg, &mut art)?,
    };

    let mut summary = Map::new();
    summary.insert("name".into(), json!(cfg.name));
    summary.insert("mode".into(), json!(cfg.mode.as_str()));
    summary.insert("seed".into(), json!(cfg.seed));
    summary.insert("status".into(), json!(status.as_str()));
    summary.insert("exit_code".into(), json!(status.code()));
    summary.insert("seminorms".into(), json!(cfg.family.labels()));
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    summary.insert("timestamp_unix".into(), json!(stamp));
    if let Value::Object(extra) = body {
        summary.extend(extra);
    }
    let summary = Value::Object(summary);
    art.json(SUMMARY_JSON, &summary)?;
    art.json(AUDIT_JSON, &audit)?;
    Ok(RunOutcome { status, out_dir: out_dir.into(), files: art.files, summary })
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), RunError> {
        let p = self.dir.join(name);
        write_csv(&p, header, rows)?;
        self.files.push(p);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<(), RunError> {
        let p = self.dir.join(name);
        write_json(&p, v)?;
        self.files.push(p);
        Ok(())
    }
}

type ModeResult = Result<(RunStatus, Value, Value), RunError>;

fn audit_status(audit: &HypothesisAudit) -> RunStatus {
    if audit.all_pass() {
        RunStatus::Ok
    } else {
        RunStatus::Flagged
    }
}

fn coord_headers(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|i| format!("{prefix}{i}")).collect()
}

fn per_q_headers(prefix: &str, family: &SeminormFamily) -> Vec<String> {
    family.labels().iter().map(|l| format!("{prefix}_{l}")).collect()
}

fn trajectory_rows(traj: &ImplicitTrajectory, extra: &[Option<f64>]) -> Vec<Vec<String>> {
    traj.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = vec![s.n.to_string(), fmt_f64(s.eps), s.inner_iterations.to_string(), fmt_f64(s.beta_n)];
            row.extend(s.residuals.iter().map(|r| fmt_f64(*r)));
            row.extend(s.z.as_slice().iter().map(|z| fmt_f64(*z)));
            if let Some(e) = extra.get(i) {
                row.push(e.map(fmt_f64).unwrap_or_default());
            }
            row
        })
        .collect()
}

fn trajectory_header(cfg: &ExperimentConfig, extra: Option<&str>) -> Vec<String> {
    let mut h: Vec<String> = ["n", "eps", "inner_iters", "beta_n"].iter().map(|s| s.to_string()).collect();
    h.extend(per_q_headers("residual", &cfg.family));
    h.extend(coord_headers("z", cfg.dimension));
    if let Some(e) = extra {
        h.push(e.into());
    }
    h
}

fn run_viscosity(cfg: &ExperimentConfig, art: &mut Artifacts) -> ModeResult {
    let (t, f) = (cfg.t(), cfg.f());
    let audit = check_hypotheses(t, f, cfg.beta, &cfg.family, &cfg.region, cfg.audit_samples, cfg.seed)?;
    let traj = run_implicit_scheme(&t.map, &f.map, cfg.beta, &cfg.schedule, &cfg.family, &cfg.region, &cfg.viscosity)?;
    let tol = cfg.viscosity.tol_inner;
    let mut status = if traj.converged { audit_status(&audit) } else { RunStatus::Failed };

    // Residual law: q(Tz − z) ≤ ε q(fz − Tz) + 10 tol_inner.
    let mut residual_law_worst = f64::NEG_INFINITY;
    for s in &traj.steps {
        let fz = f.map.apply_map(&s.z)?;
        let tz = t.map.apply_map(&s.z)?;
        let gap = cfg.family.values((&fz - &tz).as_slice());
        for (r, g) in s.residuals.iter().zip(&gap) {
            residual_law_worst = residual_law_worst.max(r - s.eps * g - 10.0 * tol);
        }
    }
    let residual_law_ok = residual_law_worst <= 0.0;

    let limit = &traj.limit_estimate;
    let x_hat = f.map.apply_map(limit)?;
    let mut step4_worst = f64::NEG_INFINITY;
    for s in &traj.steps {
        let slacks = check_step4_bound(&s.z, limit, &x_hat, cfg.beta, &cfg.family)?;
        let dist = cfg.family.values((&s.z - limit).as_slice());
        for (sl, q) in slacks.iter().zip(&dist) {
            step4_worst = step4_worst.max(-sl / step4_tolerance(*q));
        }
    }
    let step4_ok = step4_worst <= 1.0;
    let tz = t.map.apply_map(limit)?;
    let limit_residual = cfg.family.values((&tz - limit).as_slice());

    let samples = fixed_set_oracle(&t.map).sample(&cfg.region, cfg.retraction.options.fixed_samples, cfg.seed);
    let vi = check_variational_inequality(limit, &x_hat, &samples, &cfg.family)?;

    let mut oracle = Value::Null;
    let mut devs: Vec<Option<f64>> = Vec::new();
    if cfg.mode == Mode::OracleCheck {
        for s in &traj.steps {
            let o = oracle_implicit_step_affine(&t.map, &f.map, s.eps)?;
            devs.push(Some(cfg.family.max_value((&s.z - &o).as_slice())));
        }
        let max_dev = devs.iter().flatten().fold(0.0f64, |m, d| m.max(*d));
        let ok = max_dev <= 10.0 * tol;
        if !ok {
            status = status.worst(RunStatus::Flagged);
        }
        oracle = json!({ "max_deviation": max_dev, "bound": 10.0 * tol, "passed": ok });
    }
    if audit.all_pass() && !(residual_law_ok && step4_ok) {
        status = status.worst(RunStatus::Flagged);
    }

    let header = trajectory_header(cfg, (cfg.mode == Mode::OracleCheck).then_some("oracle_dev"));
    art.csv(TRAJECTORY_CSV, &header, &trajectory_rows(&traj, &devs))?;

    let body = json!({
        "converged": traj.converged,
        "stop_reason": report::stop_reason(traj.stop_reason),
        "steps": traj.steps.len(),
        "beta": cfg.beta,
        "limit_estimate": report::vector(limit),
        "limit_residual": limit_residual,
        "anchor_estimate": report::vector(&x_hat),
        "anchor_variational_inequality": report::variational(&vi, cfg.tau_vi),
        "residual_law": { "worst_excess": residual_law_worst, "passed": residual_law_ok },
        "step4": { "worst_normalized_violation": step4_worst, "passed": step4_ok },
        "oracle": oracle,
        "hypotheses": report::audit(&audit),
    });
    let audit_json = json!({ "checks": report::audit(&audit), "all_pass": audit.all_pass() });
    Ok((status, body, audit_json))
}

fn run_picard(cfg: &ExperimentConfig, art: &mut Artifacts) -> ModeResult {
    let t = cfg.t();
    let k = t.max_modulus();
    let modulus = verify_modulus(t, &cfg.family, &cfg.region, cfg.audit_samples.max(2), cfg.seed)?;
    let sep = cfg.family.is_separated();
    let checks = vec![
        HypothesisCheck {
            name: "family_separated".into(),
            status: if sep { AuditStatus::Pass } else { AuditStatus::Flag },
            detail: if sep { "joint kernel is trivial".into() } else { "joint kernel is nontrivial".into() },
        },
        HypothesisCheck {
            name: "t_contraction".into(),
            status: if modulus.any_violation() { AuditStatus::Flag } else { AuditStatus::Pass },
            detail: format!("declared modulus {k}"),
        },
    ];
    let audit = HypothesisAudit { checks };

    let opts = PicardOptions { tol: cfg.picard.tol, max_iter: cfg.picard.max_iter, record_history: true };
    let r = solve_contraction(&t.map, k, &cfg.picard.x0, &cfg.family, &opts)?;
    let descent = check_descent_sequence(&r.iterates, &t.map, k, &cfg.family, Some(&r.limit))?;
    let converged = r.status == PicardStatus::Converged;
    let mut status = if converged { audit_status(&audit) } else { RunStatus::Failed };
    if audit.all_pass() && !(descent.premise_holds && descent.conclusion_holds) {
        status = status.worst(RunStatus::Flagged);
    }

    let mut header = vec!["n".to_string()];
    header.extend(per_q_headers("gap", &cfg.family));
    header.extend(per_q_headers("bound", &cfg.family));
    header.extend(coord_headers("x", cfg.dimension));
    let rows: Vec<Vec<String>> = r
        .iterates
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let mut row = vec![n.to_string()];
            match r.gap_history.get(n) {
                Some(g) => row.extend(g.iter().map(|v| fmt_f64(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), cfg.family.len())),
            }
            row.extend(r.bound_history[n].iter().map(|v| fmt_f64(*v)));
            row.extend(x.as_slice().iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();
    art.csv(TRAJECTORY_CSV, &header, &rows)?;

    let body = json!({
        "converged": converged,
        "k": k,
        "iterations": r.iterate_count,
        "limit": report::vector(&r.limit),
        "initial_gaps": r.initial_gaps,
        "final_bounds": r.final_bounds,
        "fixed_point_residual": r.fixed_point_residual,
        "descent": {
            "premise_holds": descent.premise_holds,
            "conclusion_holds": descent.conclusion_holds,
            "premise_worst": descent.premise_worst,
            "conclusion_worst": descent.conclusion_worst,
        },
        "hypotheses": report::audit(&audit),
    });
    let audit_json = json!({
        "checks": report::audit(&audit),
        "all_pass": audit.all_pass(),
        "modulus": report::modulus(&modulus),
    });
    Ok((status, body, audit_json))
}

fn run_retraction(cfg: &ExperimentConfig, art: &mut Artifacts) -> ModeResult {
    let t = cfg.t();
    let x = cfg.retraction.anchor.as_ref().expect("validated config has an anchor");
    let opts = &cfg.retraction.options;
    let f = DeclaredMap::uniform(MapSpec::constant(x.clone()), 0.0, cfg.family.len())?;
    let audit = check_hypotheses(t, &f, 0.0, &cfg.family, &cfg.region, cfg.audit_samples, cfg.seed)?;

    let est = estimate_retraction(&t.map, x, &cfg.family, &cfg.region, opts)?;
    let samples = fixed_set_oracle(&t.map).sample(&cfg.region, opts.fixed_samples, opts.seed);
    let vi = check_variational_inequality(&est.image, x, &samples, &cfg.family)?;
    let sunny = check_sunny(&t.map, x, &est.image, &cfg.retraction.t_grid, &cfg.family, &cfg.region, opts)?;
    let uniq = check_uniqueness_against(&est.trajectory, &t.map, x, &cfg.family, &cfg.region, opts)?;

    let verified = vi.passes(opts.tau) == Some(true) && sunny.passed() && uniq.passed;
    let status = if !est.reliable() {
        RunStatus::Failed
    } else if !audit.all_pass() || !verified {
        RunStatus::Flagged
    } else {
        RunStatus::Ok
    };

    art.csv(TRAJECTORY_CSV, &trajectory_header(cfg, None), &trajectory_rows(&est.trajectory, &[]))?;
    let body = json!({
        "converged": est.reliable(),
        "anchor": report::vector(x),
        "image": report::vector(&est.image),
        "stop_reason": report::stop_reason(est.trajectory.stop_reason),
        "steps": est.trajectory.steps.len(),
        "variational_inequality": report::variational(&vi, opts.tau),
        "sunny": report::sunny(&sunny),
        "uniqueness": report::uniqueness(&uniq),
        "hypotheses": report::audit(&audit),
    });
    let audit_json = json!({ "checks": report::audit(&audit), "all_pass": audit.all_pass() });
    Ok((status, body, audit_json))
}

fn run_properties(cfg: &ExperimentConfig, art: &mut Artifacts) -> ModeResult {
    let s = &cfg.property_suite;
    let results = battery::run_all(s.cases, &s.dimensions, cfg.seed);
    let header: Vec<String> = ["battery", "cases", "passed", "skipped", "worst"].iter().map(|h| h.to_string()).collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.name.into(), r.cases.to_string(), r.passed.to_string(), r.skipped.to_string(), fmt_f64(r.worst)])
        .collect();
    art.csv(PROPERTIES_CSV, &header, &rows)?;
    let ok = results.iter().all(|r| r.ok());
    let body = json!({ "batteries": results, "dimensions": s.dimensions });
    let audit_json = json!({ "checks": [], "all_pass": true });
    Ok((if ok { RunStatus::Ok } else { RunStatus::Failed }, body, audit_json))
}
