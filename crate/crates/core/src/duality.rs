//! The q-duality mapping and the dual seminorm for `q(x) = ‖A x‖₂`.
//!
//! With `G = AᵀA`, the duality mapping is single valued and given by
//! `J_q x = G x`: it satisfies `⟨x, J_q x⟩ = q(x)²` and `q*(J_q x) = q(x)`,
//! and any other functional with both properties has to differ from `G x` by
//! a vector that is orthogonal to `x` yet has zero `G⁺`-length, i.e. zero.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::space::{Seminorm, Vector};

/// Relative threshold on the component of a functional outside the row space
/// of `A` beyond which `q*` is infinite.
pub const TAU_DUAL: f64 = 1e-10;

/// Sign tolerance for the directional lemma check.
pub const TAU_DIRECTIONAL: f64 = 1e-9;

/// Linear functional represented by its coordinate vector, paired with
/// vectors through the dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional {
    pub riesz: Vector,
    pub seminorm_label: String,
}

impl DualFunctional {
    pub fn pair(&self, x: &Vector) -> f64 {
        self.riesz.dot(x)
    }
}

/// Value of the dual seminorm; infinite for functionals not bounded on the
/// unit ball of `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualNorm {
    Finite(f64),
    Infinite,
}

impl DualNorm {
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `q*(j) = sup{|⟨y, j⟩| : q(y) ≤ 1}`.
///
/// Computed as `sqrt(jᵀ G⁺ j)` from the eigen-decomposition of `G = AᵀA`;
/// reported infinite when the component of `j` in `ker G` exceeds
/// `TAU_DUAL · ‖j‖`.
pub fn dual_seminorm(q: &Seminorm, j: &Vector) -> Result<DualNorm> {
    check_dim(q.dim(), j.dim())?;
    let eig = q.gram_eigen();
    let cut = eig.cutoff();
    let mut range = 0.0;
    let mut outside = 0.0;
    for (k, &lambda) in eig.values.iter().enumerate() {
        let c = linalg::dot(&eig.vector(k), j.as_slice());
        if lambda > cut {
            range += c * c / lambda;
        } else {
            outside += c * c;
        }
    }
    if libm::sqrt(outside) > TAU_DUAL * j.norm() {
        Ok(DualNorm::Infinite)
    } else {
        Ok(DualNorm::Finite(libm::sqrt(range)))
    }
}

/// `J_q x = AᵀA x`; the zero functional when `q(x) = 0`.
pub fn duality_map(q: &Seminorm, x: &Vector) -> Result<DualFunctional> {
    check_dim(q.dim(), x.dim())?;
    let riesz = if q.value(x.as_slice()) == 0.0 {
        Vector::zeros(x.dim())
    } else {
        Vector::from_raw(q.apply_gram(x.as_slice()))
    };
    Ok(DualFunctional { riesz, seminorm_label: q.label().into() })
}

/// Both sides of the directional lemma evaluated on a grid of `t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalReport {
    /// `min_t q(x + t y) − q(x)` over grid points with `q(x + t y) ≠ 0`.
    pub growth_min: f64,
    /// `⟨y, J_q x⟩`.
    pub pairing: f64,
    pub growth_holds: bool,
    pub pairing_holds: bool,
    /// Grid points actually used.
    pub evaluated: usize,
}

impl DirectionalReport {
    /// `(b) ⇒ (a)` on the grid.
    pub fn pairing_implies_growth(&self) -> bool {
        !self.pairing_holds || self.growth_holds
    }

    /// `(a) ⇒ (b)` on the grid.
    pub fn growth_implies_pairing(&self) -> bool {
        !self.growth_holds || self.pairing_holds
    }

    pub fn consistent(&self) -> bool {
        self.growth_holds == self.pairing_holds
    }
}

pub fn check_directional_lemma(q: &Seminorm, x: &Vector, y: &Vector, t_grid: &[f64]) -> Result<DirectionalReport> {
    check_dim(q.dim(), x.dim())?;
    check_dim(q.dim(), y.dim())?;
    let qx = q.value(x.as_slice());
    if qx == 0.0 {
        return Err(Error::Precondition("directional lemma requires q(x) != 0".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidInput(alloc::format!("grid values must be positive, got {t}")));
    }
    let mut growth_min = f64::INFINITY;
    let mut evaluated = 0;
    for &t in t_grid {
        let qt = q.value(x.combine(1.0, y, t).as_slice());
        if qt == 0.0 {
            continue;
        }
        evaluated += 1;
        growth_min = growth_min.min(qt - qx);
    }
    let pairing = duality_map(q, x)?.pair(y);
    Ok(DirectionalReport {
        growth_min,
        pairing,
        growth_holds: growth_min >= -TAU_DIRECTIONAL,
        pairing_holds: pairing >= -TAU_DIRECTIONAL,
        evaluated,
    })
}

/// Slack `q(x)² − q(y)² − 2⟨x − y, J_q y⟩`, nonnegative in exact arithmetic.
pub fn check_subgradient_inequality(q: &Seminorm, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(q.dim(), x.dim())?;
    check_dim(q.dim(), y.dim())?;
    let qx = q.value(x.as_slice());
    let qy = q.value(y.as_slice());
    let j = duality_map(q, y)?;
    Ok(qx * qx - qy * qy - 2.0 * j.pair(&(x - y)))
}

/// Admissible negative slack for [`check_subgradient_inequality`].
pub fn subgradient_tolerance(qx: f64, qy: f64) -> f64 {
    1e-10 * (1.0 + qx * qx + qy * qy)
}

/// `(|⟨x, J_q x⟩ − q(x)²|, |q*(J_q x) − q(x)|)`.
pub fn identity_defects(q: &Seminorm, x: &Vector) -> Result<(f64, f64)> {
    let qx = q.eval(x)?;
    let j = duality_map(q, x)?;
    let pairing_defect = (j.pair(x) - qx * qx).abs();
    let dual_defect = (dual_seminorm(q, &j.riesz)?.value() - qx).abs();
    Ok((pairing_defect, dual_defect))
}

/// Pairings `⟨e_i, J_q x⟩` against the standard basis.
pub fn basis_pairings(q: &Seminorm, x: &Vector) -> Result<Vec<f64>> {
    Ok(duality_map(q, x)?.riesz.into_inner())
}
