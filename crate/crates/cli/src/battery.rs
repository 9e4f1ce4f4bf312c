//! Seeded randomized batteries over the duality identities, the subgradient
//! inequality and the directional lemma.

use lcfix_core::duality::{check_directional_lemma, check_subgradient_inequality, identity_defects, subgradient_tolerance};
use lcfix_core::linalg::Matrix;
use lcfix_core::sampling::{self, normal_vector, standard_normal, SeededRng};
use lcfix_core::{Seminorm, Vector};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryResult {
    pub name: &'static str,
    pub cases: usize,
    pub passed: usize,
    /// Cases excluded by the battery's precondition.
    pub skipped: usize,
    /// Largest tolerance-normalized defect seen (≤ 1 means within tolerance);
    /// for the directional battery, the number of mismatches.
    pub worst: f64,
}

impl BatteryResult {
    pub fn ok(&self) -> bool {
        self.passed + self.skipped == self.cases
    }
}

/// Random seminorm on `ℝ^d`: 1..=d+1 Gaussian rows, a third of the time
/// with a duplicated row direction so the kernel is nontrivial.
pub fn random_seminorm(rng: &mut SeededRng, d: usize) -> Seminorm {
    let rows = 1 + (standard_normal(rng).abs() * d as f64) as usize % (d + 1);
    let mut data = normal_vector(rng, rows * d);
    if rows > 1 && standard_normal(rng) > 0.43 {
        let (head, tail) = data.split_at_mut((rows - 1) * d);
        for (t, h) in tail.iter_mut().zip(&head[..d]) {
            *t = -1.5 * h;
        }
    }
    Seminorm::new("q", Matrix::new(rows, d, data).expect("shape"))
}

pub fn random_vector(rng: &mut SeededRng, d: usize) -> Vector {
    let scale = (2.0 * standard_normal(rng)).exp();
    Vector::new(normal_vector(rng, d).into_iter().map(|v| v * scale).collect()).expect("finite")
}

fn pick_dim(dims: &[usize], i: usize) -> usize {
    dims[i % dims.len()]
}

/// `|⟨x, J_q x⟩ − q(x)²| ≤ 1e-10(1 + q(x)²)` and `|q*(J_q x) − q(x)| ≤ 1e-8(1 + q(x))`.
pub fn duality_identities(cases: usize, dims: &[usize], seed: u64) -> BatteryResult {
    let mut rng = sampling::rng(seed);
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let d = pick_dim(dims, i);
        let q = random_seminorm(&mut rng, d);
        let x = random_vector(&mut rng, d);
        let qx = q.value(x.as_slice());
        let (pair, dual) = identity_defects(&q, &x).expect("dimensions agree");
        let defect = (pair / (1e-10 * (1.0 + qx * qx))).max(dual / (1e-8 * (1.0 + qx)));
        worst = worst.max(defect);
        if defect <= 1.0 {
            passed += 1;
        }
    }
    BatteryResult { name: "duality_identities", cases, passed, skipped: 0, worst }
}

/// `q(x)² − q(y)² − 2⟨x − y, J_q y⟩ ≥ −1e-10(1 + q(x)² + q(y)²)` for `q(y) ≠ 0`.
pub fn subgradient(cases: usize, dims: &[usize], seed: u64) -> BatteryResult {
    let mut rng = sampling::rng(seed);
    let mut passed = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let d = pick_dim(dims, i);
        let q = random_seminorm(&mut rng, d);
        let x = random_vector(&mut rng, d);
        let y = random_vector(&mut rng, d);
        let qx = q.value(x.as_slice());
        let qy = q.value(y.as_slice());
        if qy == 0.0 {
            skipped += 1;
            continue;
        }
        let slack = check_subgradient_inequality(&q, &x, &y).expect("dimensions agree");
        let defect = -slack / subgradient_tolerance(qx, qy);
        worst = worst.max(defect);
        if defect <= 1.0 {
            passed += 1;
        }
    }
    BatteryResult { name: "subgradient", cases, passed, skipped, worst }
}

/// Both sides of the directional lemma on a log grid must agree; cases with
/// `q(x) = 0` or a pairing within `1e-6` of zero are skipped.
pub fn directional(cases: usize, dims: &[usize], seed: u64) -> BatteryResult {
    let grid: Vec<f64> = (0..40).map(|k| 10f64.powf(-8.0 + 0.25 * k as f64)).collect();
    let mut rng = sampling::rng(seed);
    let mut passed = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let d = pick_dim(dims, i);
        let q = random_seminorm(&mut rng, d);
        let x = random_vector(&mut rng, d);
        let y = random_vector(&mut rng, d);
        if q.value(x.as_slice()) == 0.0 {
            skipped += 1;
            continue;
        }
        let r = check_directional_lemma(&q, &x, &y, &grid).expect("precondition checked");
        if r.pairing.abs() <= 1e-6 * (1.0 + y.norm() * x.norm()) {
            skipped += 1;
            continue;
        }
        if r.consistent() {
            passed += 1;
        } else {
            worst += 1.0;
        }
    }
    BatteryResult { name: "directional", cases, passed, skipped, worst }
}

pub fn run_all(cases: usize, dims: &[usize], seed: u64) -> Vec<BatteryResult> {
    vec![
        duality_identities(cases, dims, seed),
        subgradient(cases, dims, seed.wrapping_add(1)),
        directional(cases, dims, seed.wrapping_add(2)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batteries_pass_and_are_seeded() {
        let a = run_all(500, &[1, 2, 3, 5], 9);
        assert!(a.iter().all(|r| r.ok()), "{a:?}");
        assert_eq!(a, run_all(500, &[1, 2, 3, 5], 9));
    }

    #[test]
    fn random_seminorms_are_sometimes_degenerate() {
        let mut rng = sampling::rng(1);
        let degenerate = (0..200).filter(|_| !random_seminorm(&mut rng, 3).is_norm()).count();
        assert!(degenerate > 20 && degenerate < 200);
    }
}
