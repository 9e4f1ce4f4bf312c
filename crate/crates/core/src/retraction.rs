//! Construction and verification of the sunny nonexpansive retraction onto
//! `Fix(T)` through the anchor scheme `z_n = (1/n) x + (1 − 1/n) T z_n`.

use alloc::vec::Vec;

use crate::duality::duality_map;
use crate::error::{check_dim, Result};
use crate::maps::{fixed_set_oracle, MapSpec};
use crate::space::{RegionSpec, SeminormFamily, Vector, TAU_MEM};
use crate::viscosity::{run_implicit_scheme, EpsilonRule, ImplicitTrajectory, IndexSet, Schedule, ViscosityOptions};

/// Tolerance for the variational inequality, sunny and uniqueness checks.
pub const TAU_VI: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RetractionOptions {
    /// Anchor schedule (`ε_n = 1/n`).
    pub schedule: Schedule,
    /// Second construction used by [`check_uniqueness`].
    pub alternate: Schedule,
    pub viscosity: ViscosityOptions,
    /// Number of fixed-set samples for the variational inequality.
    pub fixed_samples: usize,
    pub seed: u64,
    pub tau: f64,
}

impl Default for RetractionOptions {
    fn default() -> Self {
        Self {
            schedule: Schedule::Rule {
                rule: EpsilonRule::Anchor,
                indices: IndexSet::Geometric { first: 2, last: 4_000_000, count: 24 },
            },
            alternate: Schedule::Rule {
                rule: EpsilonRule::Power(0.7),
                indices: IndexSet::Geometric { first: 1, last: 3_000_000_000, count: 24 },
            },
            viscosity: ViscosityOptions { max_inner_iter: 1_000_000_000, ..ViscosityOptions::default() },
            fixed_samples: 100,
            seed: 0,
            tau: TAU_VI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetractionEstimate {
    pub anchor: Vector,
    pub image: Vector,
    pub trajectory: ImplicitTrajectory,
    /// Per seminorm `max_y ⟨x − Px, J_q(y − Px)⟩` over fixed-set samples;
    /// `None` when no sample was available.
    pub vi_max_violation: Option<Vec<f64>>,
}

impl RetractionEstimate {
    /// The anchor run finished without an inner failure.
    pub fn reliable(&self) -> bool {
        self.trajectory.converged
    }
}

fn run_with(t: &MapSpec, x: &Vector, family: &SeminormFamily, region: &RegionSpec, schedule: &Schedule, opts: &ViscosityOptions) -> Result<ImplicitTrajectory> {
    check_dim(family.dim(), x.dim())?;
    run_implicit_scheme(t, &MapSpec::constant(x.clone()), 0.0, schedule, family, region, opts)
}

/// Estimates `Px` as the limit of the anchor scheme.
pub fn estimate_retraction(
    t: &MapSpec,
    x: &Vector,
    family: &SeminormFamily,
    region: &RegionSpec,
    opts: &RetractionOptions,
) -> Result<RetractionEstimate> {
    let trajectory = run_with(t, x, family, region, &opts.schedule, &opts.viscosity)?;
    let image = trajectory.limit_estimate.clone();
    let samples = fixed_set_oracle(t).sample(region, opts.fixed_samples, opts.seed);
    let vi = check_variational_inequality(&image, x, &samples, family)?;
    Ok(RetractionEstimate { anchor: x.clone(), image, trajectory, vi_max_violation: vi.max_pairing })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    /// Per seminorm `max_y ⟨x − Px, J_q(y − Px)⟩`; `None` without samples.
    pub max_pairing: Option<Vec<f64>>,
    /// Same maximum after dividing by `1 + q(x − Px)·q(y − Px)`.
    pub max_normalized: Option<Vec<f64>>,
    pub samples: usize,
}

impl VariationalReport {
    pub fn inconclusive(&self) -> bool {
        self.max_pairing.is_none()
    }

    pub fn max_raw(&self) -> Option<f64> {
        self.max_pairing.as_ref().map(|v| v.iter().fold(f64::NEG_INFINITY, |m, p| m.max(*p)))
    }

    /// Passes when every normalized pairing is at most `tau`; `None` when
    /// inconclusive.
    pub fn passes(&self, tau: f64) -> Option<bool> {
        self.max_normalized.as_ref().map(|v| v.iter().all(|p| *p <= tau))
    }
}

pub fn check_variational_inequality(
    px: &Vector,
    x: &Vector,
    fix_samples: &[Vector],
    family: &SeminormFamily,
) -> Result<VariationalReport> {
    check_dim(family.dim(), px.dim())?;
    check_dim(family.dim(), x.dim())?;
    if fix_samples.is_empty() {
        return Ok(VariationalReport { max_pairing: None, max_normalized: None, samples: 0 });
    }
    let dx = x - px;
    let mut raw = Vec::with_capacity(family.len());
    let mut norm = Vec::with_capacity(family.len());
    for q in family.iter() {
        let qx = q.value(dx.as_slice());
        let mut best = f64::NEG_INFINITY;
        let mut best_n = f64::NEG_INFINITY;
        for y in fix_samples {
            check_dim(family.dim(), y.dim())?;
            let dy = y - px;
            let p = duality_map(q, &dy)?.pair(&dx);
            best = best.max(p);
            best_n = best_n.max(p / (1.0 + qx * q.value(dy.as_slice())));
        }
        raw.push(best);
        norm.push(best_n);
    }
    Ok(VariationalReport { max_pairing: Some(raw), max_normalized: Some(norm), samples: fix_samples.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SunnyEntry {
    pub t: f64,
    pub point: Vector,
    pub admissible: bool,
    pub image: Option<Vector>,
    /// `max_q q(P x_t − Px)`.
    pub deviation: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SunnyReport {
    pub entries: Vec<SunnyEntry>,
    pub tolerance: f64,
}

impl SunnyReport {
    pub fn inconclusive(&self) -> bool {
        !self.entries.iter().any(|e| e.admissible)
    }

    pub fn passed(&self) -> bool {
        !self.inconclusive() && self.entries.iter().all(|e| e.passed)
    }

    pub fn max_deviation(&self) -> Option<f64> {
        self.entries.iter().filter_map(|e| e.deviation).reduce(f64::max)
    }
}

/// Re-runs the anchor scheme from `Px + t(x − Px)` for every `t` whose ray
/// point lies in `region`, checking that the image is again `Px`.
pub fn check_sunny(
    t_map: &MapSpec,
    x: &Vector,
    px: &Vector,
    t_grid: &[f64],
    family: &SeminormFamily,
    region: &RegionSpec,
    opts: &RetractionOptions,
) -> Result<SunnyReport> {
    check_dim(family.dim(), x.dim())?;
    check_dim(family.dim(), px.dim())?;
    let tolerance = opts.tau * (1.0 + family.max_value(px.as_slice()));
    let dir = x - px;
    let mut entries = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let point = px.combine(1.0, &dir, t);
        if !(t >= 0.0) || !region.contains(&point, TAU_MEM) {
            entries.push(SunnyEntry { t, point, admissible: false, image: None, deviation: None, passed: true });
            continue;
        }
        let traj = run_with(t_map, &point, family, region, &opts.schedule, &opts.viscosity)?;
        let image = traj.limit_estimate;
        let deviation = family.max_value((&image - px).as_slice());
        entries.push(SunnyEntry {
            t,
            point,
            admissible: true,
            passed: traj.converged && deviation <= tolerance,
            image: Some(image),
            deviation: Some(deviation),
        });
    }
    Ok(SunnyReport { entries, tolerance })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub anchor_image: Vector,
    pub alternate_image: Vector,
    /// `max_q q(anchor − alternate)`.
    pub difference: f64,
    /// Either construction failed.
    pub inconclusive: bool,
    pub passed: bool,
}

/// Compares the anchor construction with the scheme `f ≡ x` under the
/// alternate schedule.
pub fn check_uniqueness(
    t: &MapSpec,
    x: &Vector,
    family: &SeminormFamily,
    region: &RegionSpec,
    opts: &RetractionOptions,
) -> Result<UniquenessReport> {
    let a = run_with(t, x, family, region, &opts.schedule, &opts.viscosity)?;
    let b = run_with(t, x, family, region, &opts.alternate, &opts.viscosity)?;
    Ok(compare_constructions(&a, &b, family, opts.tau))
}

/// [`check_uniqueness`] when the anchor trajectory is already available.
pub fn check_uniqueness_against(
    anchor: &ImplicitTrajectory,
    t: &MapSpec,
    x: &Vector,
    family: &SeminormFamily,
    region: &RegionSpec,
    opts: &RetractionOptions,
) -> Result<UniquenessReport> {
    let b = run_with(t, x, family, region, &opts.alternate, &opts.viscosity)?;
    Ok(compare_constructions(anchor, &b, family, opts.tau))
}

fn compare_constructions(a: &ImplicitTrajectory, b: &ImplicitTrajectory, family: &SeminormFamily, tau: f64) -> UniquenessReport {
    let difference = family.max_value((&a.limit_estimate - &b.limit_estimate).as_slice());
    let inconclusive = !(a.converged && b.converged);
    UniquenessReport {
        anchor_image: a.limit_estimate.clone(),
        alternate_image: b.limit_estimate.clone(),
        difference,
        inconclusive,
        passed: !inconclusive && difference <= tau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
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

    fn quick() -> RetractionOptions {
        RetractionOptions {
            schedule: Schedule::anchor(200).unwrap(),
            alternate: Schedule::power(0.7, 200).unwrap(),
            viscosity: ViscosityOptions { max_inner_iter: 10_000_000, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn neg_identity_anchor_closed_form() {
        let x = v(&[3.0, 0.0]);
        let est = estimate_retraction(&neg(2), &x, &eucl(2), &ball(2, 10.0), &quick()).unwrap();
        assert!(est.reliable());
        for s in &est.trajectory.steps {
            let n = s.n as f64;
            assert!((s.z[0] - 3.0 / (2.0 * n - 1.0)).abs() < 1e-10);
        }
        assert!(est.image.norm() < 3.0 / 400.0);
        let vi = est.vi_max_violation.unwrap();
        assert!(vi[0] <= 0.0);
    }

    #[test]
    fn fixed_anchor_is_returned() {
        let t = MapSpec::linear(Matrix::block_diagonal(&[
            Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap(),
            Matrix::identity(1),
        ]))
        .unwrap();
        let x = v(&[0.0, 0.0, 2.0]);
        let est = estimate_retraction(&t, &x, &eucl(3), &ball(3, 5.0), &quick()).unwrap();
        assert!((&est.image - &x).norm() < 1e-8);
    }

    #[test]
    fn variational_inequality_examples() {
        let fam = eucl(3);
        let px = v(&[0.0, 0.0, 3.0]);
        let x = v(&[1.0, 2.0, 3.0]);
        let ys: Vec<Vector> = [-2.0, 0.0, 3.0, 7.5].iter().map(|s| v(&[0.0, 0.0, *s])).collect();
        let r = check_variational_inequality(&px, &x, &ys, &fam).unwrap();
        assert_eq!(r.max_pairing, Some(alloc::vec![0.0]));
        assert_eq!(r.passes(TAU_VI), Some(true));

        let r = check_variational_inequality(&px, &x, &[], &fam).unwrap();
        assert!(r.inconclusive());
        assert_eq!(r.passes(TAU_VI), None);

        let r = check_variational_inequality(&Vector::zeros(2), &v(&[3.0, 0.0]), &[Vector::zeros(2)], &eucl(2)).unwrap();
        assert_eq!(r.max_raw(), Some(0.0));
    }

    #[test]
    fn sunny_filters_and_checks() {
        let x = v(&[3.0, 0.0]);
        let px = Vector::zeros(2);
        let r = check_sunny(&neg(2), &x, &px, &[0.0, 0.5, 1.0, 5.0], &eucl(2), &ball(2, 10.0), &quick()).unwrap();
        assert!(!r.entries[3].admissible);
        assert!(r.entries[..3].iter().all(|e| e.admissible));
        // 200 anchor steps only reach ~1e-2 accuracy here.
        assert!(r.max_deviation().unwrap() < 1e-2);

        let r = check_sunny(&neg(2), &x, &px, &[5.0], &eucl(2), &ball(2, 10.0), &quick()).unwrap();
        assert!(r.inconclusive() && !r.passed());
    }

    #[test]
    fn uniqueness_on_fixed_anchor() {
        let x = v(&[0.0, 0.0]);
        let r = check_uniqueness(&neg(2), &x, &eucl(2), &ball(2, 1.0), &quick()).unwrap();
        assert!(r.passed);
        assert_eq!(r.difference, 0.0);
    }
}
