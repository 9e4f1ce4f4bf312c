//! The implicit scheme `z_n = ε_n f(z_n) + (1 − ε_n) T(z_n)`.
//!
//! Each `z_n` is the fixed point of `N_n = ε_n f + (1 − ε_n) T`, which is a
//! contraction with constant `β_n = 1 + ε_n(β − 1)` for every seminorm of the
//! family, and is computed with the certified Picard solver.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::contraction::{solve_contraction, PicardOptions, PicardReport, PicardStatus};
use crate::duality::duality_map;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix};
use crate::maps::{fixed_set_oracle, verify_modulus, DeclaredMap, FixedSetDescription, MapSpec, Operator};
use crate::sampling::{self, uniform_in_region};
use crate::space::{kernel_meets_difference_set, RegionSpec, SeminormFamily, Vector};

/// How `ε_n` depends on the index `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    /// `1 / (n + 1)`.
    Harmonic,
    /// `(n + 1)^(−p)` with `0 < p ≤ 1`.
    Power(f64),
    /// `1 / n`, used by the anchor scheme from `n = 2`.
    Anchor,
}

impl EpsilonRule {
    pub fn eps(self, n: u64) -> f64 {
        match self {
            Self::Harmonic => 1.0 / (n as f64 + 1.0),
            Self::Power(p) => libm::pow(n as f64 + 1.0, -p),
            Self::Anchor => 1.0 / n as f64,
        }
    }
}

/// Which indices of a rule are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSet {
    Consecutive { first: u64, count: u64 },
    /// About `count` indices spaced geometrically between `first` and `last`
    /// (both included, duplicates removed).
    Geometric { first: u64, last: u64, count: u64 },
}

impl IndexSet {
    pub fn indices(self) -> Vec<u64> {
        match self {
            Self::Consecutive { first, count } => (first..first + count).collect(),
            Self::Geometric { first, last, count } => {
                if count <= 1 || first == last {
                    return vec![last];
                }
                let ratio = last as f64 / first as f64;
                let mut out: Vec<u64> = Vec::with_capacity(count as usize);
                for i in 0..count {
                    let t = i as f64 / (count - 1) as f64;
                    let n = if i + 1 == count {
                        last
                    } else {
                        libm::round(first as f64 * libm::pow(ratio, t)) as u64
                    };
                    if out.last().is_none_or(|p| n > *p) {
                        out.push(n);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Rule { rule: EpsilonRule, indices: IndexSet },
    /// Explicit values, indexed from `n = 1`.
    Explicit(Vec<f64>),
}

impl Schedule {
    /// `ε_n = 1/(n+1)` for `n = 1..=len`.
    pub fn harmonic(len: u64) -> Result<Self> {
        Self::rule(EpsilonRule::Harmonic, IndexSet::Consecutive { first: 1, count: len })
    }

    /// `ε_n = (n+1)^(−p)` for `n = 1..=len`.
    pub fn power(p: f64, len: u64) -> Result<Self> {
        Self::rule(EpsilonRule::Power(p), IndexSet::Consecutive { first: 1, count: len })
    }

    /// `ε_n = 1/n` for `n = 2..=len+1`.
    pub fn anchor(len: u64) -> Result<Self> {
        Self::rule(EpsilonRule::Anchor, IndexSet::Consecutive { first: 2, count: len })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let s = Self::Explicit(values);
        s.validate()?;
        Ok(s)
    }

    pub fn rule(rule: EpsilonRule, indices: IndexSet) -> Result<Self> {
        let s = Self::Rule { rule, indices };
        s.validate()?;
        Ok(s)
    }

    /// `(n, ε_n)` pairs in visiting order.
    pub fn steps(&self) -> Vec<(u64, f64)> {
        match self {
            Self::Rule { rule, indices } => indices.indices().into_iter().map(|n| (n, rule.eps(n))).collect(),
            Self::Explicit(v) => v.iter().enumerate().map(|(i, e)| (i as u64 + 1, *e)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Rule { indices, .. } => indices.indices().len(),
            Self::Explicit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rule { rule, indices } => {
                if let EpsilonRule::Power(p) = rule {
                    if !(*p > 0.0 && *p <= 1.0) {
                        return Err(Error::Config(format!("power schedule exponent must lie in (0, 1], got {p}")));
                    }
                }
                match *indices {
                    IndexSet::Consecutive { count: 0, .. } | IndexSet::Geometric { count: 0, .. } => {
                        return Err(Error::Config("schedule must contain at least one step".into()));
                    }
                    IndexSet::Geometric { first, last, .. } if first > last => {
                        return Err(Error::Config(format!("geometric indices need first <= last, got {first} > {last}")));
                    }
                    _ => {}
                }
                let first = match *indices {
                    IndexSet::Consecutive { first, .. } | IndexSet::Geometric { first, .. } => first,
                };
                let min_first = if *rule == EpsilonRule::Anchor { 2 } else { 1 };
                if first < min_first {
                    return Err(Error::Config(format!("schedule index must start at {min_first} or later, got {first}")));
                }
                Ok(())
            }
            Self::Explicit(v) => {
                if v.is_empty() {
                    return Err(Error::Config("schedule must contain at least one step".into()));
                }
                if let Some(e) = v.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                    return Err(Error::Config(format!("every epsilon must lie in (0, 1), got {e}")));
                }
                if v.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::Config("explicit epsilons must be nonincreasing".into()));
                }
                Ok(())
            }
        }
    }
}

/// Outer stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Stop once `q(T z_n − z_n)` is at most this for every `q`.
    pub residual_tol: f64,
    pub stall_tol: f64,
    /// Stop after this many consecutive steps moving less than `stall_tol`.
    pub stall_steps: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { residual_tol: 1e-8, stall_tol: 1e-12, stall_steps: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityOptions {
    pub tol_inner: f64,
    pub max_inner_iter: usize,
    pub stop: StopRule,
}

impl Default for ViscosityOptions {
    fn default() -> Self {
        Self { tol_inner: 1e-10, max_inner_iter: 100_000, stop: StopRule::default() }
    }
}

/// Result of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolve {
    pub z: Vector,
    pub beta_n: f64,
    pub report: PicardReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitStep {
    pub n: u64,
    pub eps: f64,
    pub z: Vector,
    pub inner_iterations: usize,
    pub beta_n: f64,
    /// `q(T z_n − z_n)` per seminorm.
    pub residuals: Vec<f64>,
    /// Certified distance to the exact `z_n`, per seminorm.
    pub inner_bounds: Vec<f64>,
    /// `q(T z_n − z_n) / ε_n`, bounded along a convergent run.
    pub residual_over_eps: Vec<f64>,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ResidualTolerance,
    Stalled,
    ScheduleExhausted,
    StepFailed { n: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitTrajectory {
    pub steps: Vec<ImplicitStep>,
    pub limit_estimate: Vector,
    /// False when an inner solve hit its iteration limit.
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// `β_n = 1 + ε(β − 1)`.
pub fn inner_modulus(beta: f64, eps: f64) -> f64 {
    1.0 + eps * (beta - 1.0)
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::Config(format!("contraction modulus must be < 1 and nonnegative, got {beta}")))
    }
}

/// Fixed point of `N_ε = ε f + (1 − ε) T` by Picard iteration from
/// `warm_start`, certified to `tol_inner / 2` so the fixed-point residual stays
/// below `tol_inner`.
pub fn solve_implicit_step(
    t: &MapSpec,
    f: &MapSpec,
    beta: f64,
    eps: f64,
    warm_start: &Vector,
    family: &SeminormFamily,
    tol_inner: f64,
    max_iter: usize,
) -> Result<InnerSolve> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    check_beta(beta)?;
    check_dim(family.dim(), t.dim())?;
    check_dim(family.dim(), f.dim())?;
    let beta_n = inner_modulus(beta, eps);
    let n_map = MapSpec::convex_combo(vec![eps, 1.0 - eps], vec![f.clone(), t.clone()])?;
    let opts = PicardOptions { tol: tol_inner / 2.0, max_iter, record_history: false };
    let report = solve_contraction(&n_map, beta_n, warm_start, family, &opts)?;
    Ok(InnerSolve { z: report.limit.clone(), beta_n, report })
}

/// Runs the scheme along `schedule`, warm-starting each step from the
/// previous one and the first from the center of `region`.
pub fn run_implicit_scheme(
    t: &MapSpec,
    f: &MapSpec,
    beta: f64,
    schedule: &Schedule,
    family: &SeminormFamily,
    region: &RegionSpec,
    opts: &ViscosityOptions,
) -> Result<ImplicitTrajectory> {
    schedule.validate()?;
    check_beta(beta)?;
    check_dim(family.dim(), region.dim())?;
    let t_op = t.compile();
    let mut warm = region.center().clone();
    let mut steps: Vec<ImplicitStep> = Vec::new();
    let mut stall_run = 0usize;
    let mut stop_reason = StopReason::ScheduleExhausted;
    let mut tz = vec![0.0; family.dim()];

    for (n, eps) in schedule.steps() {
        let inner = solve_implicit_step(t, f, beta, eps, &warm, family, opts.tol_inner, opts.max_inner_iter)?;
        let z = inner.z;
        t_op.apply_into(z.as_slice(), &mut tz);
        let diff: Vec<f64> = tz.iter().zip(z.as_slice()).map(|(a, b)| a - b).collect();
        let residuals = family.values(&diff);
        let inner_converged = inner.report.status == PicardStatus::Converged;
        let moved = family.max_value((&z - &warm).as_slice());
        steps.push(ImplicitStep {
            n,
            eps,
            z: z.clone(),
            inner_iterations: inner.report.iterate_count,
            beta_n: inner.beta_n,
            residual_over_eps: residuals.iter().map(|r| r / eps).collect(),
            residuals: residuals.clone(),
            inner_bounds: inner.report.final_bounds,
            inner_converged,
        });
        if !inner_converged {
            stop_reason = StopReason::StepFailed { n };
            break;
        }
        if residuals.iter().all(|r| *r <= opts.stop.residual_tol) {
            stop_reason = StopReason::ResidualTolerance;
            break;
        }
        if steps.len() > 1 && moved <= opts.stop.stall_tol {
            stall_run += 1;
            if stall_run >= opts.stop.stall_steps {
                stop_reason = StopReason::Stalled;
                break;
            }
        } else {
            stall_run = 0;
        }
        warm = z;
    }

    let limit_estimate = steps.last().map(|s| s.z.clone()).unwrap_or(warm);
    Ok(ImplicitTrajectory {
        converged: !matches!(stop_reason, StopReason::StepFailed { .. }),
        steps,
        limit_estimate,
        stop_reason,
    })
}

/// Solves `(I − εF − (1 − ε)M) z = εc + (1 − ε)b` directly for affine
/// `T x = M x + b` and `f x = F x + c`.
pub fn oracle_implicit_step_affine(t: &MapSpec, f: &MapSpec, eps: f64) -> Result<Vector> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    check_dim(t.dim(), f.dim())?;
    let ta = t.as_affine().ok_or_else(|| Error::InvalidInput("oracle needs an affine T".into()))?;
    let fa = f.as_affine().ok_or_else(|| Error::InvalidInput("oracle needs an affine f".into()))?;
    let d = t.dim();
    let system = Matrix::identity(d).add_scaled(&fa.matrix, -eps)?.add_scaled(&ta.matrix, -(1.0 - eps))?;
    let rhs = fa.offset.combine(eps, &ta.offset, 1.0 - eps);
    let z = linalg::solve(&system, rhs.as_slice())?;
    Ok(Vector::from_raw(z))
}

/// `2/(1−β)·⟨x̂ − Px, J_q(z_n − Px)⟩ − q(z_n − Px)²` per seminorm.
pub fn check_step4_bound(
    z_n: &Vector,
    px: &Vector,
    x_anchor: &Vector,
    beta: f64,
    family: &SeminormFamily,
) -> Result<Vec<f64>> {
    check_beta(beta)?;
    check_dim(family.dim(), z_n.dim())?;
    check_dim(family.dim(), px.dim())?;
    check_dim(family.dim(), x_anchor.dim())?;
    let dz = z_n - px;
    let da = x_anchor - px;
    family
        .iter()
        .map(|q| {
            let qz = q.value(dz.as_slice());
            Ok(2.0 / (1.0 - beta) * duality_map(q, &dz)?.pair(&da) - qz * qz)
        })
        .collect()
}

/// Admissible negative slack for [`check_step4_bound`].
pub fn step4_tolerance(q_dist: f64) -> f64 {
    1e-6 * (1.0 + q_dist * q_dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Pass,
    Flag,
    /// Could not be decided (e.g. the fixed set is not computable).
    Unverified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: AuditStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisAudit {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisAudit {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == AuditStatus::Pass)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| c.status == AuditStatus::Flag)
    }

    pub fn any_flag(&self) -> bool {
        self.flagged().next().is_some()
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const HYP_SEPARATED: &str = "family_separated";
pub const HYP_KERNEL: &str = "kernel_meets_difference_set";
pub const HYP_T_NONEXPANSIVE: &str = "t_nonexpansive";
pub const HYP_F_CONTRACTION: &str = "f_contraction";
pub const HYP_T_INVARIANT: &str = "t_maps_region_into_itself";
pub const HYP_F_INVARIANT: &str = "f_maps_region_into_itself";
pub const HYP_FIXED_SET: &str = "fixed_set_nonempty";
pub const HYP_COMPACT: &str = "region_sequentially_compact";
pub const HYP_SINGLE_VALUED: &str = "duality_map_single_valued";

fn check(name: &str, status: AuditStatus, detail: String) -> HypothesisCheck {
    HypothesisCheck { name: name.into(), status, detail }
}

fn invariance(map: &MapSpec, region: &RegionSpec, n_samples: usize, seed: u64) -> (AuditStatus, String) {
    let mut rng = sampling::rng(seed);
    let op = map.compile();
    let tol = 1e-9 * (1.0 + region.circumradius());
    for _ in 0..n_samples {
        let x = uniform_in_region(&mut rng, region);
        let y = op.apply_vec(&x);
        if !region.contains(&y, tol) {
            return (AuditStatus::Flag, format!("image of {:?} leaves the region", x.as_slice()));
        }
    }
    (AuditStatus::Pass, format!("{n_samples} sampled points stay inside"))
}

/// Audits the hypotheses of the convergence theorem for one instance.
pub fn check_hypotheses(
    t: &DeclaredMap,
    f: &DeclaredMap,
    beta: f64,
    family: &SeminormFamily,
    region: &RegionSpec,
    n_samples: usize,
    seed: u64,
) -> Result<HypothesisAudit> {
    check_dim(family.dim(), region.dim())?;
    let mut checks = Vec::new();

    let sep = family.separation();
    checks.push(if sep.separated {
        check(HYP_SEPARATED, AuditStatus::Pass, "joint kernel is trivial".into())
    } else {
        check(HYP_SEPARATED, AuditStatus::Flag, format!("joint kernel has dimension {}", sep.kernel_basis.len()))
    });

    let meeting: Vec<&str> = family.iter().filter(|q| kernel_meets_difference_set(q, region)).map(|q| q.label()).collect();
    checks.push(if meeting.is_empty() {
        check(HYP_KERNEL, AuditStatus::Pass, "(C - C) meets every kernel only at 0".into())
    } else {
        check(HYP_KERNEL, AuditStatus::Flag, format!("(C - C) meets the kernel of {}", meeting.join(", ")))
    });

    let t_report = verify_modulus(t, family, region, n_samples, seed)?;
    let over: Vec<&str> = t_report.per_seminorm.iter().filter(|m| m.violated || m.declared > 1.0).map(|m| m.label.as_str()).collect();
    checks.push(if !over.is_empty() {
        check(HYP_T_NONEXPANSIVE, AuditStatus::Flag, format!("T expands in {}", over.join(", ")))
    } else if t_report.inconclusive() {
        check(HYP_T_NONEXPANSIVE, AuditStatus::Unverified, "no usable sample pairs".into())
    } else {
        check(HYP_T_NONEXPANSIVE, AuditStatus::Pass, "declared and sampled moduli are at most 1".into())
    });

    let f_report = verify_modulus(f, family, region, n_samples, seed.wrapping_add(1))?;
    let f_over: Vec<&str> = f_report
        .per_seminorm
        .iter()
        .filter(|m| m.violated || m.declared > beta + crate::maps::MODULUS_SLACK)
        .map(|m| m.label.as_str())
        .collect();
    checks.push(if !(beta < 1.0) || !f_over.is_empty() {
        check(HYP_F_CONTRACTION, AuditStatus::Flag, format!("f is not a {beta}-contraction in {}", f_over.join(", ")))
    } else if f_report.inconclusive() {
        check(HYP_F_CONTRACTION, AuditStatus::Unverified, "no usable sample pairs".into())
    } else {
        check(HYP_F_CONTRACTION, AuditStatus::Pass, format!("modulus at most {beta}"))
    });

    let (s, d) = invariance(&t.map, region, n_samples, seed.wrapping_add(2));
    checks.push(check(HYP_T_INVARIANT, s, d));
    let (s, d) = invariance(&f.map, region, n_samples, seed.wrapping_add(3));
    checks.push(check(HYP_F_INVARIANT, s, d));

    let fix = fixed_set_oracle(&t.map);
    checks.push(match &fix {
        FixedSetDescription::Unknown => check(HYP_FIXED_SET, AuditStatus::Unverified, "fixed set not computable".into()),
        FixedSetDescription::Empty => check(HYP_FIXED_SET, AuditStatus::Flag, "T has no fixed point".into()),
        _ if fix.sample(region, 1, seed).is_empty() => {
            check(HYP_FIXED_SET, AuditStatus::Flag, "fixed set misses the region".into())
        }
        _ => check(HYP_FIXED_SET, AuditStatus::Pass, "fixed set meets the region".into()),
    });

    checks.push(check(HYP_COMPACT, AuditStatus::Pass, "closed bounded region in finite dimension".into()));
    checks.push(check(HYP_SINGLE_VALUED, AuditStatus::Pass, "J_q x = A^T A x".into()));
    Ok(HypothesisAudit { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Seminorm;

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x).unwrap()
    }

    fn neg(d: usize) -> MapSpec {
        MapSpec::linear(Matrix::scaled_identity(d, -1.0)).unwrap()
    }

    fn eucl(d: usize) -> SeminormFamily {
        SeminormFamily::single(Seminorm::euclidean(d))
    }

    fn ball(d: usize, r: f64) -> RegionSpec {
        RegionSpec::ball(Vector::zeros(d), r).unwrap()
    }

    fn block_rotation() -> MapSpec {
        let rot = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        MapSpec::linear(Matrix::block_diagonal(&[rot, Matrix::identity(1)])).unwrap()
    }

    #[test]
    fn schedules() {
        let h = Schedule::harmonic(3).unwrap().steps();
        assert_eq!(h, vec![(1, 0.5), (2, 1.0 / 3.0), (3, 0.25)]);
        let a = Schedule::anchor(2).unwrap().steps();
        assert_eq!(a, vec![(2, 0.5), (3, 1.0 / 3.0)]);
        let g = IndexSet::Geometric { first: 2, last: 2000, count: 4 }.indices();
        assert_eq!(g, vec![2, 20, 200, 2000]);
        let g = IndexSet::Geometric { first: 1, last: 3, count: 10 }.indices();
        assert_eq!(g, vec![1, 2, 3]);
        assert!(Schedule::explicit(vec![0.5, 0.6]).is_err());
        assert!(Schedule::explicit(vec![1.0]).is_err());
        assert!(Schedule::power(1.5, 3).is_err());
        assert!(Schedule::rule(EpsilonRule::Anchor, IndexSet::Consecutive { first: 1, count: 3 }).is_err());
        for (_, e) in Schedule::power(0.7, 50).unwrap().steps() {
            assert!(e > 0.0 && e < 1.0);
        }
    }

    #[test]
    fn inner_step_closed_forms() {
        let c = MapSpec::constant(v(&[3.0, 0.0]));
        let s = solve_implicit_step(&neg(2), &c, 0.0, 0.5, &Vector::zeros(2), &eucl(2), 1e-12, 10_000).unwrap();
        assert!((&s.z - &v(&[1.0, 0.0])).norm() < 1e-12);
        assert_eq!(s.beta_n, 0.5);

        let eps = 1.0 / 101.0;
        let s = solve_implicit_step(&neg(2), &c, 0.0, eps, &Vector::zeros(2), &eucl(2), 1e-12, 100_000).unwrap();
        assert!((s.z[0] - 3.0 * eps / (2.0 - eps)).abs() < 1e-12);
        assert!((s.z[0] - 0.014925373134328358).abs() < 1e-12);

        let f = MapSpec::contraction_toward(v(&[1.0, -1.0]), 0.3).unwrap();
        let s = solve_implicit_step(&MapSpec::identity(2), &f, 0.3, 0.2, &Vector::zeros(2), &eucl(2), 1e-12, 100_000)
            .unwrap();
        assert!((&s.z - &v(&[1.0, -1.0])).norm() < 1e-12);

        assert!(solve_implicit_step(&neg(2), &c, 0.0, 1.0, &Vector::zeros(2), &eucl(2), 1e-12, 10).is_err());
    }

    #[test]
    fn oracle_examples() {
        let c = MapSpec::constant(v(&[3.0, 0.0]));
        let z = oracle_implicit_step_affine(&neg(2), &c, 0.5).unwrap();
        assert!((&z - &v(&[1.0, 0.0])).norm() < 1e-15);

        let f = MapSpec::contraction_toward(v(&[4.0, 5.0]), 0.5).unwrap();
        let z = oracle_implicit_step_affine(&neg(2), &f, 1.0).unwrap();
        assert!((&z - &v(&[4.0, 5.0])).norm() < 1e-14);

        let t = MapSpec::affine(Matrix::scaled_identity(1, 0.5), v(&[1.0])).unwrap();
        let z = oracle_implicit_step_affine(&t, &MapSpec::constant(v(&[0.0])), 0.5).unwrap();
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-15);

        // ε = 1 with f = I makes the system singular.
        assert!(matches!(
            oracle_implicit_step_affine(&neg(1), &MapSpec::identity(1), 1.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn neg_identity_trajectory() {
        let c = MapSpec::constant(v(&[3.0, 0.0]));
        let traj = run_implicit_scheme(
            &neg(2),
            &c,
            0.0,
            &Schedule::harmonic(50).unwrap(),
            &eucl(2),
            &ball(2, 10.0),
            &ViscosityOptions::default(),
        )
        .unwrap();
        assert!(traj.converged);
        assert_eq!(traj.stop_reason, StopReason::ScheduleExhausted);
        for s in &traj.steps {
            assert!((s.z[0] - 3.0 * s.eps / (2.0 - s.eps)).abs() < 1e-10);
            assert_eq!(s.beta_n, 1.0 - s.eps);
            assert!(s.residual_over_eps[0] < 6.0 + 1e-6);
        }
    }

    #[test]
    fn identity_t_gives_constant_trajectory() {
        let f = MapSpec::contraction_toward(v(&[1.0, 2.0]), 0.5).unwrap();
        let traj = run_implicit_scheme(
            &MapSpec::identity(2),
            &f,
            0.5,
            &Schedule::harmonic(20).unwrap(),
            &eucl(2),
            &ball(2, 5.0),
            &ViscosityOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.stop_reason, StopReason::ResidualTolerance);
        assert!((&traj.limit_estimate - &v(&[1.0, 2.0])).norm() < 1e-10);
    }

    #[test]
    fn block_rotation_third_coordinate() {
        let f = MapSpec::contraction_toward(v(&[1.0, 2.0, 3.0]), 0.5).unwrap();
        let sched = Schedule::explicit(vec![0.5, 0.1, 1e-2, 1e-3]).unwrap();
        let traj =
            run_implicit_scheme(&block_rotation(), &f, 0.5, &sched, &eucl(3), &ball(3, 10.0), &ViscosityOptions::default())
                .unwrap();
        assert!(traj.converged);
        for s in &traj.steps {
            let o = oracle_implicit_step_affine(&block_rotation(), &f, s.eps).unwrap();
            assert!((&s.z - &o).norm() < 1e-9);
            assert!((s.z[2] - 3.0).abs() < 1e-9);
        }
        let last = &traj.limit_estimate;
        assert!(libm::hypot(last[0], last[1]) < 1e-2);
    }

    #[test]
    fn inner_failure_marks_trajectory() {
        let c = MapSpec::constant(v(&[3.0, 0.0]));
        let opts = ViscosityOptions { max_inner_iter: 3, ..Default::default() };
        let traj =
            run_implicit_scheme(&neg(2), &c, 0.0, &Schedule::harmonic(10).unwrap(), &eucl(2), &ball(2, 10.0), &opts)
                .unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.stop_reason, StopReason::StepFailed { n: 1 });
    }

    #[test]
    fn step4_examples() {
        let fam = eucl(2);
        let p = v(&[0.0, 0.0]);
        let xa = v(&[3.0, 0.0]);
        assert_eq!(check_step4_bound(&p, &p, &xa, 0.0, &fam).unwrap(), vec![0.0]);
        let s = check_step4_bound(&v(&[1.0, 0.0]), &p, &xa, 0.0, &fam).unwrap();
        assert_eq!(s, vec![5.0]);
        assert!(s[0] >= -step4_tolerance(1.0));
        let s2 = check_step4_bound(&v(&[1.0, 0.0]), &p, &xa, 0.5, &fam).unwrap();
        assert!(s2[0] >= s[0]);
    }

    #[test]
    fn hypotheses_pass_for_euclidean_ball() {
        let t = DeclaredMap::uniform(neg(2), 1.0, 1).unwrap();
        let f = DeclaredMap::uniform(MapSpec::constant(v(&[3.0, 0.0])), 0.0, 1).unwrap();
        let audit = check_hypotheses(&t, &f, 0.0, &eucl(2), &ball(2, 10.0), 200, 1).unwrap();
        assert!(audit.all_pass(), "{audit:?}");
    }

    #[test]
    fn hypotheses_flag_kernel_and_rotation() {
        let fam = SeminormFamily::new(vec![
            Seminorm::coordinates("x12", 3, &[0, 1]).unwrap(),
            Seminorm::coordinates("x3", 3, &[2]).unwrap(),
        ])
        .unwrap();
        let t = DeclaredMap::uniform(MapSpec::identity(3), 1.0, 2).unwrap();
        let f = DeclaredMap::uniform(MapSpec::constant(Vector::zeros(3)), 0.0, 2).unwrap();
        let audit = check_hypotheses(&t, &f, 0.0, &fam, &ball(3, 1.0), 100, 2).unwrap();
        assert_eq!(audit.get(HYP_KERNEL).unwrap().status, AuditStatus::Flag);
        assert_eq!(audit.get(HYP_SEPARATED).unwrap().status, AuditStatus::Pass);

        let rot = MapSpec::linear(Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap()).unwrap();
        let fam = SeminormFamily::single(Seminorm::coordinates("x1", 2, &[0]).unwrap());
        let t = DeclaredMap::uniform(rot, 1.0, 1).unwrap();
        let f = DeclaredMap::uniform(MapSpec::constant(Vector::zeros(2)), 0.0, 1).unwrap();
        let audit = check_hypotheses(&t, &f, 0.0, &fam, &ball(2, 1.0), 100, 3).unwrap();
        assert_eq!(audit.get(HYP_T_NONEXPANSIVE).unwrap().status, AuditStatus::Flag);
        assert!(audit.any_flag());
    }

    #[test]
    fn hypotheses_flag_leaving_the_region() {
        let shift = MapSpec::affine(Matrix::identity(1), v(&[5.0])).unwrap();
        let t = DeclaredMap::uniform(shift, 1.0, 1).unwrap();
        let f = DeclaredMap::uniform(MapSpec::constant(v(&[0.0])), 0.0, 1).unwrap();
        let audit = check_hypotheses(&t, &f, 0.0, &eucl(1), &ball(1, 1.0), 50, 4).unwrap();
        assert_eq!(audit.get(HYP_T_INVARIANT).unwrap().status, AuditStatus::Flag);
        assert_eq!(audit.get(HYP_FIXED_SET).unwrap().status, AuditStatus::Flag);
    }
}
