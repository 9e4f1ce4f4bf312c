//! The finite-dimensional stand-in for a locally convex space: `ℝ^d` with a
//! finite family of seminorms `q(x) = ‖A x‖₂`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, symmetric_eigen, Matrix, SymmetricEigen};

/// Absolute tolerance used by region membership tests.
pub const TAU_MEM: f64 = 1e-10;

/// Dense real coordinate vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    /// Wraps coordinates produced by internal arithmetic on finite inputs.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        linalg::dot(&self.0, &other.0)
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.0)
    }

    pub fn scale(&self, s: f64) -> Vector {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    /// `a · self + b · other`.
    pub fn combine(&self, a: f64, other: &Vector, b: f64) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl<'a> Add<&'a Vector> for &'a Vector {
    type Output = Vector;
    fn add(self, rhs: &'a Vector) -> Vector {
        self.combine(1.0, rhs, 1.0)
    }
}

impl<'a> Sub<&'a Vector> for &'a Vector {
    type Output = Vector;
    fn sub(self, rhs: &'a Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector(self.0.iter().zip(&rhs.0).map(|(x, y)| x - y).collect())
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|v| -v).collect())
    }
}

/// Seminorm `q(x) = ‖A x‖₂` given by a matrix with `d` columns.
///
/// The kernel `{x : q(x) = 0}` is the nullspace of `A`. The eigen-decomposition
/// of `AᵀA` is cached since the dual seminorm, kernel queries and modulus
/// computations all need it.
#[derive(Debug, Clone)]
pub struct Seminorm {
    label: String,
    matrix: Matrix,
    gram: Matrix,
    gram_eigen: SymmetricEigen,
}

impl PartialEq for Seminorm {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.matrix == other.matrix
    }
}

impl Seminorm {
    pub fn new(label: impl Into<String>, matrix: Matrix) -> Self {
        let gram = matrix.gram();
        let gram_eigen = symmetric_eigen(&gram);
        Self { label: label.into(), matrix, gram, gram_eigen }
    }

    /// The Euclidean norm on `ℝ^d`.
    pub fn euclidean(dim: usize) -> Self {
        Self::new("euclidean", Matrix::identity(dim))
    }

    /// `x ↦ ‖(x_i)_{i ∈ coords}‖₂`. A single index gives `|x_i|`.
    pub fn coordinates(label: impl Into<String>, dim: usize, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("coordinate seminorm needs at least one index".into()));
        }
        let mut m = Matrix::zeros(coords.len(), dim);
        for (r, &c) in coords.iter().enumerate() {
            if c >= dim {
                return Err(Error::InvalidInput(format!("coordinate index {c} out of range for dimension {dim}")));
            }
            m.set(r, c, 1.0);
        }
        Ok(Self::new(label, m))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `AᵀA`.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub(crate) fn gram_eigen(&self) -> &SymmetricEigen {
        &self.gram_eigen
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// `‖A x‖₂` with the dimension check.
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.value(x.as_slice()))
    }

    /// `‖A x‖₂` without the dimension check; panics on mismatch.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for row in 0..self.matrix.rows() {
            let r: f64 = linalg::dot(self.matrix.row(row), x);
            s += r * r;
        }
        libm::sqrt(s)
    }

    /// `AᵀA x`.
    pub fn apply_gram(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.tr_mul_vec(&self.matrix.mul_vec(x))
    }

    /// Orthonormal basis of the kernel.
    pub fn kernel_basis(&self) -> Vec<Vector> {
        self.gram_eigen.kernel().into_iter().map(Vector::from_raw).collect()
    }

    pub fn is_norm(&self) -> bool {
        self.gram_eigen.rank() == self.dim()
    }
}

/// Outcome of the separation test for a family.
#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    pub separated: bool,
    /// Orthonormal basis of the joint kernel `⋂ ker q`; empty when separated.
    pub kernel_basis: Vec<Vector>,
}

/// Nonempty ordered family of seminorms on a common `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormFamily {
    members: Vec<Seminorm>,
    dim: usize,
    separation: Separation,
}

impl SeminormFamily {
    pub fn new(members: Vec<Seminorm>) -> Result<Self> {
        let dim = members
            .first()
            .ok_or_else(|| Error::InvalidInput("seminorm family must be nonempty".into()))?
            .dim();
        for q in &members {
            if q.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "seminorm '{}' acts on dimension {}, family dimension is {}",
                    q.label(),
                    q.dim(),
                    dim
                )));
            }
        }
        let separation = joint_kernel(&members);
        Ok(Self { members, dim, separation })
    }

    pub fn single(q: Seminorm) -> Self {
        Self::new(vec![q]).expect("single seminorm family")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Seminorm] {
        &self.members
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Seminorm> {
        self.members.iter()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(|q| q.label()).collect()
    }

    /// Separation audit: true iff the joint kernel is `{0}`; otherwise the
    /// report carries a basis of the joint kernel.
    pub fn separation(&self) -> &Separation {
        &self.separation
    }

    pub fn is_separated(&self) -> bool {
        self.separation.separated
    }

    /// Per-member values `q(x)`. Panics on dimension mismatch.
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.members.iter().map(|q| q.value(x)).collect()
    }

    /// `max_q q(x)` without requiring separation. It is only a norm when the
    /// family is separated.
    pub fn max_value(&self, x: &[f64]) -> f64 {
        self.members.iter().fold(0.0, |m, q| m.max(q.value(x)))
    }

    /// The sup-seminorm, a norm on separated families.
    pub fn sup_seminorm(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        if !self.separation.separated {
            return Err(Error::Config("sup-seminorm requested on a family that is not separated".into()));
        }
        Ok(self.max_value(x.as_slice()))
    }
}

fn joint_kernel(members: &[Seminorm]) -> Separation {
    let mats: Vec<&Matrix> = members.iter().map(|q| q.matrix()).collect();
    let stacked = Matrix::stack(&mats).expect("members share a dimension");
    let eig = symmetric_eigen(&stacked.gram());
    let kernel: Vec<Vector> = eig.kernel().into_iter().map(Vector::from_raw).collect();
    Separation { separated: kernel.is_empty(), kernel_basis: kernel }
}

/// Closed bounded convex region: Euclidean ball or axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec {
    Ball { center: Vector, radius: f64 },
    Box { center: Vector, halfwidths: Vec<f64> },
}

impl RegionSpec {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn boxed(center: Vector, halfwidths: Vec<f64>) -> Result<Self> {
        check_dim(center.dim(), halfwidths.len())?;
        if let Some(h) = halfwidths.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidInput(format!("box halfwidths must be positive, got {h}")));
        }
        Ok(Self::Box { center, halfwidths })
    }

    pub fn dim(&self) -> usize {
        self.center().dim()
    }

    pub fn center(&self) -> &Vector {
        match self {
            Self::Ball { center, .. } | Self::Box { center, .. } => center,
        }
    }

    /// Radius of the smallest Euclidean ball around the center containing
    /// the region.
    pub fn circumradius(&self) -> f64 {
        match self {
            Self::Ball { radius, .. } => *radius,
            Self::Box { halfwidths, .. } => linalg::norm2(halfwidths),
        }
    }

    /// Membership up to absolute tolerance `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match self {
            Self::Ball { center, radius } => (x - center).norm() <= radius + tol,
            Self::Box { center, halfwidths } => x
                .as_slice()
                .iter()
                .zip(center.as_slice())
                .zip(halfwidths)
                .all(|((xi, ci), h)| (xi - ci).abs() <= h + tol),
        }
    }

    /// Euclidean metric projection onto the region.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.project_raw(x.as_slice()))
    }

    pub(crate) fn project_raw(&self, x: &[f64]) -> Vector {
        match self {
            Self::Ball { center, radius } => {
                let diff: Vec<f64> = x.iter().zip(center.as_slice()).map(|(a, c)| a - c).collect();
                let r = linalg::norm2(&diff);
                if r <= *radius {
                    return Vector::from_raw(x.to_vec());
                }
                let s = radius / r;
                Vector::from_raw(diff.iter().zip(center.as_slice()).map(|(d, c)| c + s * d).collect())
            }
            Self::Box { center, halfwidths } => Vector::from_raw(
                x.iter()
                    .zip(center.as_slice())
                    .zip(halfwidths)
                    .map(|((xi, ci), h)| xi.clamp(ci - h, ci + h))
                    .collect(),
            ),
        }
    }

    /// Basis of `span(C − C)`. Balls and boxes with positive extents are
    /// full-dimensional.
    pub fn difference_span(&self) -> Vec<Vector> {
        (0..self.dim()).map(|i| Vector::basis(self.dim(), i)).collect()
    }
}

/// True iff `span(C − C) ∩ ker(q) ≠ {0}`.
pub fn kernel_meets_difference_set(q: &Seminorm, region: &RegionSpec) -> bool {
    let ker = q.kernel_basis();
    if ker.is_empty() {
        return false;
    }
    let span = region.difference_span();
    let d = q.dim();
    let mut all: Vec<Vec<f64>> = ker.iter().map(|v| v.as_slice().to_vec()).collect();
    all.extend(span.iter().map(|v| v.as_slice().to_vec()));
    let joint = linalg::rank_of(&all, d);
    joint < ker.len() + linalg::rank_of(&span.iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>(), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x).unwrap()
    }

    #[test]
    fn seminorm_eval_examples() {
        assert_eq!(Seminorm::euclidean(2).eval(&v(&[3.0, 4.0])).unwrap(), 5.0);
        let q1 = Seminorm::new("x1", Matrix::from_rows(&[[1.0, 0.0]]).unwrap());
        assert_eq!(q1.eval(&v(&[2.0, 7.0])).unwrap(), 2.0);
        let q3 = Seminorm::new("x3", Matrix::from_rows(&[[0.0, 0.0, 1.0]]).unwrap());
        assert_eq!(q3.eval(&v(&[5.0, -3.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_eval_dimension_mismatch() {
        let q = Seminorm::euclidean(3);
        assert_eq!(q.eval(&v(&[1.0, 2.0])), Err(Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert_eq!(Vector::new(vec![1.0, f64::INFINITY]), Err(Error::NonFinite(1)));
    }

    #[test]
    fn separation_examples() {
        let fam = SeminormFamily::new(vec![
            Seminorm::coordinates("x1", 2, &[0]).unwrap(),
            Seminorm::coordinates("x2", 2, &[1]).unwrap(),
        ])
        .unwrap();
        assert!(fam.is_separated());

        let fam = SeminormFamily::single(Seminorm::coordinates("x1", 2, &[0]).unwrap());
        let sep = fam.separation();
        assert!(!sep.separated);
        assert_eq!(sep.kernel_basis.len(), 1);
        let k = &sep.kernel_basis[0];
        assert!(k[0].abs() < 1e-15 && (k[1].abs() - 1.0).abs() < 1e-15);

        let fam = SeminormFamily::new(vec![
            Seminorm::coordinates("x12", 3, &[0, 1]).unwrap(),
            Seminorm::coordinates("x3", 3, &[2]).unwrap(),
        ])
        .unwrap();
        assert!(fam.is_separated());
    }

    #[test]
    fn sup_seminorm_examples() {
        let fam = SeminormFamily::new(vec![
            Seminorm::coordinates("x1", 2, &[0]).unwrap(),
            Seminorm::coordinates("x2", 2, &[1]).unwrap(),
        ])
        .unwrap();
        assert_eq!(fam.sup_seminorm(&v(&[2.0, -5.0])).unwrap(), 5.0);
        assert_eq!(fam.sup_seminorm(&Vector::zeros(2)).unwrap(), 0.0);

        let fam = SeminormFamily::new(vec![
            Seminorm::coordinates("x12", 3, &[0, 1]).unwrap(),
            Seminorm::coordinates("x3", 3, &[2]).unwrap(),
        ])
        .unwrap();
        assert_eq!(fam.sup_seminorm(&v(&[3.0, 4.0, 1.0])).unwrap(), 5.0);
    }

    #[test]
    fn sup_seminorm_requires_separation() {
        let fam = SeminormFamily::single(Seminorm::coordinates("x1", 2, &[0]).unwrap());
        assert!(matches!(fam.sup_seminorm(&v(&[1.0, 1.0])), Err(Error::Config(_))));
    }

    #[test]
    fn family_rejects_mixed_dimensions() {
        let r = SeminormFamily::new(vec![Seminorm::euclidean(2), Seminorm::euclidean(3)]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        assert!(SeminormFamily::new(vec![]).is_err());
    }

    #[test]
    fn region_projection_examples() {
        let ball = RegionSpec::ball(Vector::zeros(2), 1.0).unwrap();
        let p = ball.project(&v(&[3.0, 4.0])).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);

        let bx = RegionSpec::boxed(Vector::zeros(2), vec![1.0, 1.0]).unwrap();
        assert_eq!(bx.project(&v(&[0.5, 2.0])).unwrap(), v(&[0.5, 1.0]));

        let inside = v(&[0.1, -0.3]);
        assert_eq!(ball.project(&inside).unwrap(), inside);
        assert_eq!(bx.project(&inside).unwrap(), inside);
    }

    #[test]
    fn region_validation() {
        assert!(RegionSpec::ball(Vector::zeros(2), 0.0).is_err());
        assert!(RegionSpec::boxed(Vector::zeros(2), vec![1.0]).is_err());
        assert!(RegionSpec::boxed(Vector::zeros(2), vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn kernel_meets_full_dimensional_region() {
        let ball = RegionSpec::ball(Vector::zeros(3), 1.0).unwrap();
        assert!(!kernel_meets_difference_set(&Seminorm::euclidean(3), &ball));
        let q = Seminorm::coordinates("x12", 3, &[0, 1]).unwrap();
        assert!(kernel_meets_difference_set(&q, &ball));
    }
}
