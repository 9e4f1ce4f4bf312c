//! Picard iteration for Q-contractions with the a-priori certificate
//! `q(x_n − v) ≤ (1 − k)⁻¹ kⁿ q(x₀ − x₁)`.
//!
//! The stopping rule is the certificate itself: since every seminorm shares
//! the same `k`, the number of steps needed for `max_q` of the bound to drop
//! below the tolerance is known after the first step, and the loop runs
//! exactly that many steps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::maps::{MapSpec, Operator};
use crate::space::{SeminormFamily, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Target for the certified bound, in the max over the family.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep iterates, gaps and bounds for every step.
    pub record_history: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000, record_history: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    /// Contraction constant used for the certificate.
    pub k: f64,
    pub iterate_count: usize,
    pub limit: Vector,
    /// `q(x₀ − x₁)` per seminorm.
    pub initial_gaps: Vec<f64>,
    /// Certified bound at `iterate_count`, per seminorm.
    pub final_bounds: Vec<f64>,
    /// `[n][q] = q(x_n − x_{n+1})` for `n < iterate_count`; empty unless recorded.
    pub gap_history: Vec<Vec<f64>>,
    /// `[n][q]` certified bound for `n ≤ iterate_count`; empty unless recorded.
    pub bound_history: Vec<Vec<f64>>,
    /// `x_0 ..= x_{iterate_count}`; empty unless recorded.
    pub iterates: Vec<Vector>,
    /// `max_q q(T(limit) − limit)`.
    pub fixed_point_residual: f64,
    pub status: PicardStatus,
}

impl PicardReport {
    pub fn converged(&self) -> bool {
        self.status == PicardStatus::Converged
    }

    pub fn max_final_bound(&self) -> f64 {
        self.final_bounds.iter().fold(0.0, |m, b| m.max(*b))
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("contraction constant must lie in (0, 1), got {k}")))
    }
}

/// `(1 − k)⁻¹ kⁿ q_gap`.
pub fn certified_bound(k: f64, n: u64, q_gap: f64) -> Result<f64> {
    check_k(k)?;
    if !(q_gap >= 0.0) {
        return Err(Error::InvalidInput(format!("gap must be nonnegative, got {q_gap}")));
    }
    Ok(bound_unchecked(k, n, q_gap))
}

#[inline]
fn bound_unchecked(k: f64, n: u64, q_gap: f64) -> f64 {
    if q_gap == 0.0 {
        return 0.0;
    }
    libm::pow(k, n as f64) * q_gap / (1.0 - k)
}

/// Smallest `n` with `(1 − k)⁻¹ kⁿ gap ≤ tol`.
pub fn required_iterations(k: f64, gap: f64, tol: f64) -> u64 {
    if gap == 0.0 || bound_unchecked(k, 0, gap) <= tol {
        return 0;
    }
    let guess = libm::ceil(libm::log(tol * (1.0 - k) / gap) / libm::log(k)).max(0.0);
    let mut n = if guess.is_finite() && guess < u64::MAX as f64 { guess as u64 } else { u64::MAX / 2 };
    while n > 0 && bound_unchecked(k, n - 1, gap) <= tol {
        n -= 1;
    }
    while bound_unchecked(k, n, gap) > tol {
        n += 1;
    }
    n
}

/// Picard iteration `x_{n+1} = T(x_n)` on a declared Q-contraction with
/// constant `k`.
pub fn solve_contraction(
    map: &MapSpec,
    k: f64,
    x0: &Vector,
    family: &SeminormFamily,
    opts: &PicardOptions,
) -> Result<PicardReport> {
    check_dim(family.dim(), map.dim())?;
    solve_contraction_operator(&map.compile(), k, x0, family, opts)
}

/// [`solve_contraction`] for any [`Operator`].
pub fn solve_contraction_operator<O: Operator + ?Sized>(
    op: &O,
    k: f64,
    x0: &Vector,
    family: &SeminormFamily,
    opts: &PicardOptions,
) -> Result<PicardReport> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Config(format!("Picard iteration needs a contraction constant in (0, 1), got {k}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    check_dim(family.dim(), op.dim())?;
    check_dim(family.dim(), x0.dim())?;

    let d = x0.dim();
    let mut cur = x0.as_slice().to_vec();
    let mut next = vec![0.0; d];
    let mut diff = vec![0.0; d];

    op.apply_into(&cur, &mut next);
    for ((o, a), b) in diff.iter_mut().zip(&cur).zip(&next) {
        *o = a - b;
    }
    let initial_gaps = family.values(&diff);
    let max_gap = initial_gaps.iter().fold(0.0, |m: f64, g| m.max(*g));

    let needed = required_iterations(k, max_gap, opts.tol);
    let (steps, status) = if needed as u128 > opts.max_iter as u128 {
        (opts.max_iter, PicardStatus::MaxIterations)
    } else {
        (needed as usize, PicardStatus::Converged)
    };

    let mut gap_history = Vec::new();
    let mut iterates = Vec::new();
    if opts.record_history {
        iterates.reserve(steps + 1);
        gap_history.reserve(steps);
        iterates.push(x0.clone());
    }
    // `next` already holds x_1.
    for n in 0..steps {
        if n > 0 {
            op.apply_into(&cur, &mut next);
        }
        if opts.record_history {
            for ((o, a), b) in diff.iter_mut().zip(&cur).zip(&next) {
                *o = a - b;
            }
            gap_history.push(family.values(&diff));
            iterates.push(Vector::from_raw(next.clone()));
        }
        core::mem::swap(&mut cur, &mut next);
    }

    op.apply_into(&cur, &mut next);
    for ((o, a), b) in diff.iter_mut().zip(&next).zip(&cur) {
        *o = a - b;
    }
    let fixed_point_residual = family.max_value(&diff);

    let bound_history = if opts.record_history {
        (0..=steps as u64).map(|n| initial_gaps.iter().map(|g| bound_unchecked(k, n, *g)).collect()).collect()
    } else {
        Vec::new()
    };
    let final_bounds = initial_gaps.iter().map(|g| bound_unchecked(k, steps as u64, *g)).collect();

    let limit = Vector::new(cur).map_err(|_| Error::InvalidInput("Picard iteration diverged to non-finite values".into()))?;
    Ok(PicardReport {
        k,
        iterate_count: steps,
        limit,
        initial_gaps,
        final_bounds,
        gap_history,
        bound_history,
        iterates,
        fixed_point_residual,
        status,
    })
}

/// Relative slack used by [`check_descent_sequence`].
pub const DESCENT_SLACK: f64 = 1e-10;

/// Diagnostic for the descent-sequence lemma with
/// `φ_q(x) = (1 − k)⁻¹ q(x − T x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub pairs_checked: usize,
    /// `[n][q] = φ_q(x_n)`.
    pub phi: Vec<Vec<f64>>,
    /// Per seminorm, the largest `q(x_n − x_{n+1}) − (φ_q(x_n) − φ_q(x_{n+1}))`.
    pub premise_worst: Vec<f64>,
    /// Per seminorm, the largest `q(x_n − v) − (φ_q(x_n) − φ_q(v))`.
    pub conclusion_worst: Vec<f64>,
    pub premise_holds: bool,
    pub conclusion_holds: bool,
}

/// Checks `q(x_n − x_{n+1}) ≤ φ_q(x_n) − φ_q(x_{n+1})` along `xs` and the
/// conclusion `q(x_n − v) ≤ φ_q(x_n) − φ_q(v)` against `limit` (the last
/// element of `xs` when `None`). Violations are reported, never raised; the
/// allowed slack is `DESCENT_SLACK · (1 + φ_q(x₀))`.
pub fn check_descent_sequence(
    xs: &[Vector],
    map: &MapSpec,
    k: f64,
    family: &SeminormFamily,
    limit: Option<&Vector>,
) -> Result<DescentReport> {
    check_k(k)?;
    check_dim(family.dim(), map.dim())?;
    for x in xs {
        check_dim(family.dim(), x.dim())?;
    }
    let phi_of = |x: &Vector| -> Vec<f64> {
        let r = x - &map.apply_vec(x);
        family.values(r.as_slice()).into_iter().map(|v| v / (1.0 - k)).collect()
    };
    let phi: Vec<Vec<f64>> = xs.iter().map(phi_of).collect();
    let m = family.len();
    let mut premise_worst = vec![f64::NEG_INFINITY; m];
    let mut conclusion_worst = vec![f64::NEG_INFINITY; m];
    let mut premise_holds = true;
    let mut conclusion_holds = true;
    let slack: Vec<f64> = match phi.first() {
        Some(p0) => p0.iter().map(|p| DESCENT_SLACK * (1.0 + p)).collect(),
        None => vec![DESCENT_SLACK; m],
    };

    for n in 0..xs.len().saturating_sub(1) {
        let gaps = family.values((&xs[n] - &xs[n + 1]).as_slice());
        for i in 0..m {
            let excess = gaps[i] - (phi[n][i] - phi[n + 1][i]);
            premise_worst[i] = premise_worst[i].max(excess);
            if excess > slack[i] {
                premise_holds = false;
            }
        }
    }

    if xs.len() > 1 {
        let v = limit.unwrap_or(&xs[xs.len() - 1]);
        check_dim(family.dim(), v.dim())?;
        let phi_v = phi_of(v);
        for (x, phi_x) in xs.iter().zip(&phi) {
            let dist = family.values((x - v).as_slice());
            for i in 0..m {
                let excess = dist[i] - (phi_x[i] - phi_v[i]);
                conclusion_worst[i] = conclusion_worst[i].max(excess);
                if excess > slack[i] {
                    conclusion_holds = false;
                }
            }
        }
    }

    Ok(DescentReport {
        pairs_checked: xs.len().saturating_sub(1),
        phi,
        premise_worst,
        conclusion_worst,
        premise_holds,
        conclusion_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::space::Seminorm;

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x).unwrap()
    }

    fn half_plus_one() -> MapSpec {
        MapSpec::affine(Matrix::scaled_identity(1, 0.5), v(&[1.0])).unwrap()
    }

    fn abs1() -> SeminormFamily {
        SeminormFamily::single(Seminorm::euclidean(1))
    }

    #[test]
    fn certified_bound_examples() {
        assert_eq!(certified_bound(0.5, 0, 1.0).unwrap(), 2.0);
        assert_eq!(certified_bound(0.5, 3, 1.0).unwrap(), 0.25);
        assert_eq!(certified_bound(0.9, 17, 0.0).unwrap(), 0.0);
        assert!(certified_bound(1.0, 1, 1.0).is_err());
        assert!(certified_bound(0.0, 1, 1.0).is_err());
    }

    #[test]
    fn required_iterations_is_minimal() {
        for &(k, gap, tol) in &[(0.5, 1.0, 1e-10), (0.999, 3.0, 1e-8), (0.1, 1e-3, 1e-12), (0.5, 1.0, 10.0)] {
            let n = required_iterations(k, gap, tol);
            assert!(bound_unchecked(k, n, gap) <= tol);
            if n > 0 {
                assert!(bound_unchecked(k, n - 1, gap) > tol);
            }
        }
    }

    #[test]
    fn affine_scalar_limit_and_exact_certificate() {
        let opts = PicardOptions { tol: 1e-12, ..Default::default() };
        let r = solve_contraction(&half_plus_one(), 0.5, &v(&[0.0]), &abs1(), &opts).unwrap();
        assert!(r.converged());
        assert!((r.limit[0] - 2.0).abs() < 1e-12);
        for (n, x) in r.iterates.iter().enumerate() {
            let err = (x[0] - 2.0).abs();
            assert_eq!(err, 2.0 * 0.5f64.powi(n as i32));
            assert_eq!(err, r.bound_history[n][0]);
        }
    }

    #[test]
    fn starting_at_the_fixed_point_stops_immediately() {
        let r = solve_contraction(&half_plus_one(), 0.5, &v(&[2.0]), &abs1(), &PicardOptions::default()).unwrap();
        assert_eq!(r.iterate_count, 0);
        assert_eq!(r.final_bounds, vec![0.0]);
        assert_eq!(r.limit, v(&[2.0]));
    }

    #[test]
    fn contraction_toward_point() {
        let t = MapSpec::contraction_toward(v(&[3.0, 0.0]), 0.25).unwrap();
        let fam = SeminormFamily::single(Seminorm::euclidean(2));
        let r = solve_contraction(&t, 0.25, &Vector::zeros(2), &fam, &PicardOptions::default()).unwrap();
        for (n, x) in r.iterates.iter().enumerate() {
            let err = (x - &v(&[3.0, 0.0])).norm();
            assert!((err - 0.25f64.powi(n as i32) * 3.0).abs() < 1e-14);
        }
        assert!((&r.limit - &v(&[3.0, 0.0])).norm() < 1e-10);
    }

    #[test]
    fn max_iterations_reports_partial_result() {
        let opts = PicardOptions { tol: 1e-12, max_iter: 5, record_history: true };
        let r = solve_contraction(&half_plus_one(), 0.5, &v(&[0.0]), &abs1(), &opts).unwrap();
        assert_eq!(r.status, PicardStatus::MaxIterations);
        assert_eq!(r.iterate_count, 5);
        assert_eq!(r.iterates.len(), 6);
    }

    #[test]
    fn rejects_non_contraction_constant() {
        let err = solve_contraction(&half_plus_one(), 1.0, &v(&[0.0]), &abs1(), &PicardOptions::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn descent_examples() {
        let t = half_plus_one();
        let xs = [v(&[0.0]), v(&[1.0]), v(&[1.5])];
        let r = check_descent_sequence(&xs, &t, 0.5, &abs1(), None).unwrap();
        assert_eq!(r.phi, vec![vec![2.0], vec![1.0], vec![0.5]]);
        assert_eq!(r.premise_worst, vec![0.0]);
        assert!(r.premise_holds && r.conclusion_holds);

        let r = check_descent_sequence(&xs, &t, 0.5, &abs1(), Some(&v(&[2.0]))).unwrap();
        assert_eq!(r.conclusion_worst, vec![0.0]);
        assert!(r.conclusion_holds);

        let fixed = [v(&[2.0]), v(&[2.0]), v(&[2.0])];
        let r = check_descent_sequence(&fixed, &t, 0.5, &abs1(), None).unwrap();
        assert!(r.phi.iter().all(|p| p[0] == 0.0));
        assert!(r.premise_holds && r.conclusion_holds);

        let r = check_descent_sequence(&[v(&[7.0])], &t, 0.5, &abs1(), None).unwrap();
        assert_eq!(r.pairs_checked, 0);
        assert!(r.premise_holds && r.conclusion_holds);
    }

    #[test]
    fn descent_detects_a_wrong_constant() {
        // With k far below the true modulus the premise fails.
        let t = MapSpec::affine(Matrix::scaled_identity(1, 0.9), v(&[1.0])).unwrap();
        let r = solve_contraction(&t, 0.9, &v(&[0.0]), &abs1(), &PicardOptions { max_iter: 30, ..Default::default() })
            .unwrap();
        let rep = check_descent_sequence(&r.iterates, &t, 0.1, &abs1(), None).unwrap();
        assert!(!rep.premise_holds);
    }
}
