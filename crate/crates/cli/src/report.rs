//! CSV and JSON output helpers.

use std::fs::File;
use std::path::Path;

use lcfix_core::maps::ModulusReport;
use lcfix_core::retraction::{SunnyReport, UniquenessReport, VariationalReport};
use lcfix_core::viscosity::{AuditStatus, HypothesisAudit, StopReason};
use lcfix_core::Vector;
use serde_json::{json, Value};

use crate::error::RunError;

/// Round-trippable decimal form (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::io(path, e.into());
    let file = File::create(path).map_err(|e| RunError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n").map_err(|e| RunError::io(path, e))
}

pub fn vector(v: &Vector) -> Value {
    json!(v.as_slice())
}

pub fn status_str(s: AuditStatus) -> &'static str {
    match s {
        AuditStatus::Pass => "pass",
        AuditStatus::Flag => "flag",
        AuditStatus::Unverified => "unverified",
    }
}

pub fn audit(a: &HypothesisAudit) -> Value {
    Value::Array(
        a.checks
            .iter()
            .map(|c| json!({ "name": c.name, "status": status_str(c.status), "detail": c.detail }))
            .collect(),
    )
}

pub fn modulus(m: &ModulusReport) -> Value {
    Value::Array(
        m.per_seminorm
            .iter()
            .map(|s| {
                json!({
                    "seminorm": s.label,
                    "declared": s.declared,
                    "sampled": s.sampled,
                    "exact": s.exact.map(|e| if e.is_finite() { json!(e) } else { json!("inf") }),
                    "pairs_used": s.pairs_used,
                    "violated": s.violated,
                })
            })
            .collect(),
    )
}

pub fn stop_reason(r: StopReason) -> Value {
    match r {
        StopReason::ResidualTolerance => json!("residual_tolerance"),
        StopReason::Stalled => json!("stalled"),
        StopReason::ScheduleExhausted => json!("schedule_exhausted"),
        StopReason::StepFailed { n } => json!({ "step_failed": n }),
    }
}

pub fn variational(v: &VariationalReport, tau: f64) -> Value {
    json!({
        "samples": v.samples,
        "max_pairing": v.max_pairing,
        "max_normalized": v.max_normalized,
        "passed": v.passes(tau),
        "inconclusive": v.inconclusive(),
    })
}

pub fn sunny(s: &SunnyReport) -> Value {
    json!({
        "tolerance": s.tolerance,
        "passed": s.passed(),
        "inconclusive": s.inconclusive(),
        "entries": s.entries.iter().map(|e| json!({
            "t": e.t,
            "point": vector(&e.point),
            "admissible": e.admissible,
            "image": e.image.as_ref().map(vector),
            "deviation": e.deviation,
            "passed": e.passed,
        })).collect::<Vec<_>>(),
    })
}

pub fn uniqueness(u: &UniquenessReport) -> Value {
    json!({
        "anchor_image": vector(&u.anchor_image),
        "alternate_image": vector(&u.alternate_image),
        "difference": u.difference,
        "inconclusive": u.inconclusive,
        "passed": u.passed,
    })
}
