//! Declarative operators: affine maps, metric projections, compositions,
//! convex combinations and contractions toward a point.
//!
//! Each map carries declared Lipschitz moduli per seminorm ([`DeclaredMap`]);
//! [`verify_modulus`] checks the declaration by sampling and, for maps with an
//! affine representation, by an exact operator-bound computation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, solve, symmetric_eigen, Matrix};
use crate::sampling::{self, uniform_in_region};
use crate::space::{RegionSpec, Seminorm, SeminormFamily, Vector, TAU_MEM};

/// Pairs with `q(x − y)` below this are skipped when estimating a modulus.
pub const MIN_PAIR_SEPARATION: f64 = 1e-12;

/// Slack allowed above a declared modulus before flagging a violation.
pub const MODULUS_SLACK: f64 = 1e-9;

/// Anything that maps `ℝ^d` into itself.
pub trait Operator {
    fn dim(&self) -> usize;

    /// `out = T(x)`; both slices have length `dim()`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    fn apply_vec(&self, x: &Vector) -> Vector {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x.as_slice(), &mut out);
        Vector::from_raw(out)
    }
}

/// `x ↦ M x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Vector,
}

impl AffineMap {
    pub fn new(matrix: Matrix, offset: Vector) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput(format!(
                "affine map needs a square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        check_dim(matrix.cols(), offset.dim())?;
        Ok(Self { matrix, offset })
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        let d = matrix.cols();
        Self::new(matrix, Vector::zeros(d))
    }
}

impl Operator for AffineMap {
    fn dim(&self) -> usize {
        self.offset.dim()
    }

    #[inline]
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec_into(x, out);
        for (o, b) in out.iter_mut().zip(self.offset.as_slice()) {
            *o += b;
        }
    }
}

/// A declared operator.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Affine(AffineMap),
    /// Euclidean metric projection onto a region.
    Projection(RegionSpec),
    /// Composition applied in list order: the first map acts first.
    Compose(Vec<MapSpec>),
    ConvexCombo { weights: Vec<f64>, maps: Vec<MapSpec> },
    /// `x ↦ β x + (1 − β) c`.
    ContractionToward { center: Vector, beta: f64 },
}

impl MapSpec {
    pub fn affine(matrix: Matrix, offset: Vector) -> Result<Self> {
        Ok(Self::Affine(AffineMap::new(matrix, offset)?))
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        Ok(Self::Affine(AffineMap::linear(matrix)?))
    }

    pub fn identity(dim: usize) -> Self {
        Self::Affine(AffineMap { matrix: Matrix::identity(dim), offset: Vector::zeros(dim) })
    }

    pub fn projection(region: RegionSpec) -> Self {
        Self::Projection(region)
    }

    /// The constant map `x ↦ c`.
    pub fn constant(c: Vector) -> Self {
        Self::ContractionToward { center: c, beta: 0.0 }
    }

    pub fn contraction_toward(center: Vector, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!("contraction factor must lie in [0, 1), got {beta}")));
        }
        Ok(Self::ContractionToward { center, beta })
    }

    pub fn compose(maps: Vec<MapSpec>) -> Result<Self> {
        common_dim(&maps)?;
        Ok(Self::Compose(maps))
    }

    pub fn convex_combo(weights: Vec<f64>, maps: Vec<MapSpec>) -> Result<Self> {
        common_dim(&maps)?;
        if weights.len() != maps.len() {
            return Err(Error::DimensionMismatch { expected: maps.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("convex weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("convex weights must sum to 1, got {total}")));
        }
        Ok(Self::ConvexCombo { weights, maps })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Affine(a) => a.dim(),
            Self::Projection(r) => r.dim(),
            Self::Compose(maps) | Self::ConvexCombo { maps, .. } => maps[0].dim(),
            Self::ContractionToward { center, .. } => center.dim(),
        }
    }

    /// Evaluates the map with a dimension check.
    pub fn apply_map(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.apply_vec(x))
    }

    /// Collapses the map to `x ↦ M x + b` when every component is affine.
    pub fn as_affine(&self) -> Option<AffineMap> {
        match self {
            Self::Affine(a) => Some(a.clone()),
            Self::Projection(_) => None,
            Self::ContractionToward { center, beta } => Some(AffineMap {
                matrix: Matrix::scaled_identity(center.dim(), *beta),
                offset: center.scale(1.0 - beta),
            }),
            Self::Compose(maps) => {
                let d = self.dim();
                let mut acc = AffineMap { matrix: Matrix::identity(d), offset: Vector::zeros(d) };
                for m in maps {
                    let a = m.as_affine()?;
                    let matrix = a.matrix.matmul(&acc.matrix).ok()?;
                    let offset = Vector::from_raw(a.matrix.mul_vec(acc.offset.as_slice())).combine(1.0, &a.offset, 1.0);
                    acc = AffineMap { matrix, offset };
                }
                Some(acc)
            }
            Self::ConvexCombo { weights, maps } => {
                let d = self.dim();
                let mut matrix = Matrix::zeros(d, d);
                let mut offset = Vector::zeros(d);
                for (w, m) in weights.iter().zip(maps) {
                    let a = m.as_affine()?;
                    matrix = matrix.add_scaled(&a.matrix, *w).ok()?;
                    offset = offset.combine(1.0, &a.offset, *w);
                }
                Some(AffineMap { matrix, offset })
            }
        }
    }

    /// Affine maps become a single `M x + b`; anything else is evaluated
    /// structurally.
    pub fn compile(&self) -> CompiledMap<'_> {
        match self.as_affine() {
            Some(a) => CompiledMap::Affine(a),
            None => CompiledMap::General(self),
        }
    }
}

fn common_dim(maps: &[MapSpec]) -> Result<usize> {
    let d = maps.first().ok_or_else(|| Error::InvalidInput("map list must be nonempty".into()))?.dim();
    for m in maps {
        check_dim(d, m.dim())?;
    }
    Ok(d)
}

impl Operator for MapSpec {
    fn dim(&self) -> usize {
        MapSpec::dim(self)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Affine(a) => a.apply_into(x, out),
            Self::Projection(r) => out.copy_from_slice(r.project_raw(x).as_slice()),
            Self::Compose(maps) => {
                let mut cur = x.to_vec();
                let mut next = vec![0.0; x.len()];
                for m in maps {
                    m.apply_into(&cur, &mut next);
                    core::mem::swap(&mut cur, &mut next);
                }
                out.copy_from_slice(&cur);
            }
            Self::ConvexCombo { weights, maps } => {
                let mut tmp = vec![0.0; x.len()];
                out.fill(0.0);
                for (w, m) in weights.iter().zip(maps) {
                    m.apply_into(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += w * t;
                    }
                }
            }
            Self::ContractionToward { center, beta } => {
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(center.as_slice()) {
                    *o = beta * xi + (1.0 - beta) * ci;
                }
            }
        }
    }
}

/// Evaluation form produced by [`MapSpec::compile`].
#[derive(Debug, Clone)]
pub enum CompiledMap<'a> {
    Affine(AffineMap),
    General(&'a MapSpec),
}

impl Operator for CompiledMap<'_> {
    fn dim(&self) -> usize {
        match self {
            Self::Affine(a) => a.dim(),
            Self::General(m) => m.dim(),
        }
    }

    #[inline]
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Affine(a) => a.apply_into(x, out),
            Self::General(m) => m.apply_into(x, out),
        }
    }
}

/// A map together with its declared Lipschitz modulus for each member of a
/// seminorm family (same order as the family).
#[derive(Debug, Clone, PartialEq)]
pub struct DeclaredMap {
    pub map: MapSpec,
    pub moduli: Vec<f64>,
}

impl DeclaredMap {
    pub fn new(map: MapSpec, moduli: Vec<f64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidInput("at least one declared modulus is required".into()));
        }
        if let Some(l) = moduli.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidInput(format!("declared modulus must be finite and nonnegative, got {l}")));
        }
        Ok(Self { map, moduli })
    }

    /// Same declared modulus for each of `family_len` seminorms.
    pub fn uniform(map: MapSpec, modulus: f64, family_len: usize) -> Result<Self> {
        Self::new(map, vec![modulus; family_len])
    }

    pub fn max_modulus(&self) -> f64 {
        self.moduli.iter().fold(0.0, |m, l| m.max(*l))
    }

    /// Every declared modulus is at most 1.
    pub fn is_nonexpansive(&self) -> bool {
        self.moduli.iter().all(|l| *l <= 1.0)
    }

    /// The uniform contraction constant, if the declaration is a contraction.
    pub fn contraction_modulus(&self) -> Option<f64> {
        let b = self.max_modulus();
        (b < 1.0).then_some(b)
    }
}

/// Modulus estimates for one seminorm.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormModulus {
    pub label: String,
    pub declared: f64,
    /// Largest sampled ratio `q(Tx − Ty) / q(x − y)`; `None` when every pair
    /// was skipped.
    pub sampled: Option<f64>,
    /// Exact operator bound for affine maps (may be `+∞`).
    pub exact: Option<f64>,
    pub pairs_used: usize,
    pub violated: bool,
}

impl SeminormModulus {
    /// No sample survived and no exact value is available.
    pub fn inconclusive(&self) -> bool {
        self.sampled.is_none() && self.exact.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    pub per_seminorm: Vec<SeminormModulus>,
}

impl ModulusReport {
    pub fn any_violation(&self) -> bool {
        self.per_seminorm.iter().any(|m| m.violated)
    }

    pub fn inconclusive(&self) -> bool {
        self.per_seminorm.iter().any(|m| m.inconclusive())
    }
}

/// Exact Lipschitz modulus of `x ↦ M x` with respect to `q = ‖A·‖₂`.
///
/// Infinite when `M` does not map `ker A` into itself; otherwise the largest
/// singular value of `A M V_r Λ_r^{-1/2}` where `AᵀA = V Λ Vᵀ` restricted to
/// its range.
pub fn exact_linear_modulus(q: &Seminorm, m: &Matrix) -> Result<f64> {
    check_dim(q.dim(), m.rows())?;
    let a = q.matrix();
    let am = a.matmul(m)?;
    let eig = q.gram_eigen();
    let rank = eig.rank();
    if rank == 0 {
        return Ok(0.0);
    }
    let scale = (a.spectral_norm() * m.spectral_norm()).max(f64::MIN_POSITIVE);
    for k in eig.kernel() {
        if linalg::norm2(&am.mul_vec(&k)) > 1e-6 * scale {
            return Ok(f64::INFINITY);
        }
    }
    let d = q.dim();
    let mut w = Matrix::zeros(d, rank);
    for (c, lambda) in eig.values.iter().take(rank).enumerate() {
        let s = 1.0 / libm::sqrt(*lambda);
        for (r, vr) in eig.vector(c).iter().enumerate() {
            w.set(r, c, vr * s);
        }
    }
    Ok(am.matmul(&w)?.spectral_norm())
}

/// Estimates the modulus of `declared.map` with respect to each seminorm from
/// `n_samples` seeded pairs drawn uniformly from `region`, adding the exact
/// bound when the map is affine. A seminorm is flagged when either value
/// exceeds its declared modulus by more than [`MODULUS_SLACK`].
pub fn verify_modulus(
    declared: &DeclaredMap,
    family: &SeminormFamily,
    region: &RegionSpec,
    n_samples: usize,
    seed: u64,
) -> Result<ModulusReport> {
    if n_samples < 2 {
        return Err(Error::InvalidInput("verify_modulus needs at least two samples".into()));
    }
    check_dim(family.dim(), declared.map.dim())?;
    check_dim(family.dim(), region.dim())?;
    check_dim(family.len(), declared.moduli.len())?;

    let compiled = declared.map.compile();
    let exact_matrix = declared.map.as_affine().map(|a| a.matrix);
    let mut rng = sampling::rng(seed);
    let mut sampled = vec![None::<f64>; family.len()];
    let mut used = vec![0usize; family.len()];
    for _ in 0..n_samples {
        let x = uniform_in_region(&mut rng, region);
        let y = uniform_in_region(&mut rng, region);
        let diff = &x - &y;
        let image_diff = &compiled.apply_vec(&x) - &compiled.apply_vec(&y);
        for (i, q) in family.iter().enumerate() {
            let den = q.value(diff.as_slice());
            if den < MIN_PAIR_SEPARATION {
                continue;
            }
            let ratio = q.value(image_diff.as_slice()) / den;
            used[i] += 1;
            sampled[i] = Some(sampled[i].map_or(ratio, |s: f64| s.max(ratio)));
        }
    }

    let mut per_seminorm = Vec::with_capacity(family.len());
    for (i, q) in family.iter().enumerate() {
        let exact = match &exact_matrix {
            Some(m) => Some(exact_linear_modulus(q, m)?),
            None => None,
        };
        let limit = declared.moduli[i] + MODULUS_SLACK;
        let violated = sampled[i].is_some_and(|s| s > limit) || exact.is_some_and(|e| e > limit);
        per_seminorm.push(SeminormModulus {
            label: q.label().into(),
            declared: declared.moduli[i],
            sampled: sampled[i],
            exact,
            pairs_used: used[i],
            violated,
        });
    }
    Ok(ModulusReport { per_seminorm })
}

/// Description of `Fix(T)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedSetDescription {
    ExplicitPoint(Vector),
    /// `basepoint + span(basis)` with an orthonormal basis.
    AffineSubspace { basepoint: Vector, basis: Vec<Vector> },
    Region(RegionSpec),
    /// The fixed-point equation is inconsistent.
    Empty,
    Unknown,
}

impl FixedSetDescription {
    pub fn is_known(&self) -> bool {
        !matches!(self, Self::Unknown)
    }

    /// Up to `count` seeded samples from `Fix(T) ∩ region`; empty when the
    /// set is unknown, empty, or misses the region.
    pub fn sample(&self, region: &RegionSpec, count: usize, seed: u64) -> Vec<Vector> {
        let mut rng = sampling::rng(seed);
        match self {
            Self::ExplicitPoint(p) => {
                if region.contains(p, TAU_MEM) {
                    vec![p.clone(); count]
                } else {
                    Vec::new()
                }
            }
            Self::Region(r) => {
                let mut out = Vec::with_capacity(count);
                let mut tries = 0;
                while out.len() < count && tries < 1000 * count.max(1) {
                    tries += 1;
                    let p = uniform_in_region(&mut rng, r);
                    if region.contains(&p, TAU_MEM) {
                        out.push(p);
                    }
                }
                out
            }
            Self::AffineSubspace { basepoint, basis } => sample_subspace(basepoint, basis, region, count, &mut rng),
            Self::Empty | Self::Unknown => Vec::new(),
        }
    }
}

fn sample_subspace(
    basepoint: &Vector,
    basis: &[Vector],
    region: &RegionSpec,
    count: usize,
    rng: &mut sampling::SeededRng,
) -> Vec<Vector> {
    let k = basis.len();
    let center = region.center();
    // Foot of the perpendicular from the region center onto the subspace.
    let offset = center - basepoint;
    let mut foot = basepoint.clone();
    for b in basis {
        foot = foot.combine(1.0, b, b.dot(&offset));
    }
    let dist = (center - &foot).norm();
    let point = |coeffs: &[f64]| {
        let mut p = foot.clone();
        for (b, c) in basis.iter().zip(coeffs) {
            p = p.combine(1.0, b, *c);
        }
        p
    };
    match region {
        RegionSpec::Ball { radius, .. } => {
            if dist > radius + TAU_MEM {
                return Vec::new();
            }
            let slice_radius = libm::sqrt((radius * radius - dist * dist).max(0.0));
            (0..count).map(|_| point(&sampling::uniform_in_ball(rng, k, slice_radius))).collect()
        }
        RegionSpec::Box { .. } => {
            use rand::Rng;
            let reach = region.circumradius() + dist;
            let mut out = Vec::with_capacity(count);
            let mut tries = 0;
            while out.len() < count && tries < 1000 * count.max(1) {
                tries += 1;
                let coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(-reach..=reach)).collect();
                let p = point(&coeffs);
                if region.contains(&p, TAU_MEM) {
                    out.push(p);
                }
            }
            out
        }
    }
}

/// Describes `Fix(T)` for the map kinds where it is computable.
pub fn fixed_set_oracle(map: &MapSpec) -> FixedSetDescription {
    match map {
        MapSpec::ContractionToward { center, .. } => FixedSetDescription::ExplicitPoint(center.clone()),
        MapSpec::Projection(r) => FixedSetDescription::Region(r.clone()),
        MapSpec::Affine(a) => affine_fixed_set(a),
        MapSpec::Compose(maps) | MapSpec::ConvexCombo { maps, .. } => {
            if let Some(a) = map.as_affine() {
                return affine_fixed_set(&a);
            }
            let first = fixed_set_oracle(&maps[0]);
            if first.is_known() && maps[1..].iter().all(|m| fixed_set_oracle(m) == first) {
                first
            } else {
                FixedSetDescription::Unknown
            }
        }
    }
}

fn affine_fixed_set(a: &AffineMap) -> FixedSetDescription {
    let d = a.dim();
    let n = Matrix::identity(d).add_scaled(&a.matrix, -1.0).expect("square");
    let b = a.offset.as_slice();
    let eig = symmetric_eigen(&n.gram());
    let kernel = eig.kernel();
    if kernel.is_empty() {
        if let Ok(z) = solve(&n, b) {
            return FixedSetDescription::ExplicitPoint(Vector::from_raw(z));
        }
    }
    // Minimum-norm least-squares solution of (I − M) z = b.
    let ntb = n.tr_mul_vec(b);
    let rank = eig.rank();
    let mut z = vec![0.0; d];
    for k in 0..rank {
        let v = eig.vector(k);
        let c = linalg::dot(&v, &ntb) / eig.values[k];
        for (zi, vi) in z.iter_mut().zip(&v) {
            *zi += c * vi;
        }
    }
    let resid: Vec<f64> = n.mul_vec(&z).iter().zip(b).map(|(l, r)| l - r).collect();
    if linalg::norm2(&resid) > 1e-9 * (1.0 + linalg::norm2(b)) {
        return FixedSetDescription::Empty;
    }
    let basepoint = Vector::from_raw(z);
    if kernel.is_empty() {
        FixedSetDescription::ExplicitPoint(basepoint)
    } else {
        FixedSetDescription::AffineSubspace { basepoint, basis: kernel.into_iter().map(Vector::from_raw).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x).unwrap()
    }

    fn rot90() -> Matrix {
        Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap()
    }

    fn block_rotation() -> MapSpec {
        MapSpec::linear(Matrix::block_diagonal(&[rot90(), Matrix::identity(1)])).unwrap()
    }

    #[test]
    fn apply_map_examples() {
        let neg = MapSpec::linear(Matrix::scaled_identity(2, -1.0)).unwrap();
        assert_eq!(neg.apply_map(&v(&[1.0, 2.0])).unwrap(), v(&[-1.0, -2.0]));

        let f = MapSpec::contraction_toward(v(&[1.0, 2.0, 3.0]), 0.5).unwrap();
        assert_eq!(f.apply_map(&Vector::zeros(3)).unwrap(), v(&[0.5, 1.0, 1.5]));

        let p = MapSpec::projection(RegionSpec::ball(Vector::zeros(2), 1.0).unwrap());
        let y = p.apply_map(&v(&[3.0, 4.0])).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);

        assert!(matches!(neg.apply_map(&Vector::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_applies_in_list_order() {
        let shift = MapSpec::affine(Matrix::identity(1), v(&[1.0])).unwrap();
        let double = MapSpec::linear(Matrix::scaled_identity(1, 2.0)).unwrap();
        let c = MapSpec::compose(vec![shift, double]).unwrap();
        assert_eq!(c.apply_map(&v(&[1.0])).unwrap(), v(&[4.0]));
        let a = c.as_affine().unwrap();
        assert_eq!(a.apply_vec(&v(&[1.0])), v(&[4.0]));
    }

    #[test]
    fn convex_combo_validation() {
        let id = MapSpec::identity(2);
        assert!(MapSpec::convex_combo(vec![0.5, 0.6], vec![id.clone(), id.clone()]).is_err());
        assert!(MapSpec::convex_combo(vec![0.5], vec![id.clone(), id.clone()]).is_err());
        assert!(MapSpec::convex_combo(vec![-0.5, 1.5], vec![id.clone(), id.clone()]).is_err());
        assert!(MapSpec::compose(vec![id.clone(), MapSpec::identity(3)]).is_err());
        assert!(MapSpec::contraction_toward(v(&[0.0]), 1.0).is_err());
    }

    #[test]
    fn modulus_of_rotation_in_euclidean_norm() {
        let t = DeclaredMap::uniform(MapSpec::linear(rot90()).unwrap(), 1.0, 1).unwrap();
        let fam = SeminormFamily::single(Seminorm::euclidean(2));
        let ball = RegionSpec::ball(Vector::zeros(2), 1.0).unwrap();
        let r = verify_modulus(&t, &fam, &ball, 2000, 1).unwrap();
        let m = &r.per_seminorm[0];
        assert!((m.exact.unwrap() - 1.0).abs() < 1e-14);
        assert!((m.sampled.unwrap() - 1.0).abs() < 1e-12);
        assert!(!r.any_violation());
    }

    #[test]
    fn rotation_is_not_nonexpansive_for_a_coordinate_seminorm() {
        let q = Seminorm::coordinates("x1", 2, &[0]).unwrap();
        // x − y = (0, 1) has q = 0 but maps to (−1, 0) with q = 1.
        let r90 = MapSpec::linear(rot90()).unwrap();
        let img = r90.apply_map(&v(&[0.0, 1.0])).unwrap();
        assert_eq!(q.eval(&img).unwrap(), 1.0);

        let t = DeclaredMap::uniform(r90, 1.0, 1).unwrap();
        let fam = SeminormFamily::single(q);
        let ball = RegionSpec::ball(Vector::zeros(2), 1.0).unwrap();
        let r = verify_modulus(&t, &fam, &ball, 2000, 2).unwrap();
        let m = &r.per_seminorm[0];
        assert!(m.sampled.unwrap() > 1.0);
        assert_eq!(m.exact, Some(f64::INFINITY));
        assert!(r.any_violation());
    }

    #[test]
    fn contraction_toward_has_modulus_beta() {
        let f = DeclaredMap::uniform(MapSpec::contraction_toward(v(&[1.0, -2.0]), 0.5).unwrap(), 0.5, 2).unwrap();
        let fam = SeminormFamily::new(vec![
            Seminorm::euclidean(2),
            Seminorm::new("m", Matrix::from_rows(&[[1.0, 3.0]]).unwrap()),
        ])
        .unwrap();
        let bx = RegionSpec::boxed(Vector::zeros(2), vec![2.0, 1.0]).unwrap();
        let r = verify_modulus(&f, &fam, &bx, 500, 9).unwrap();
        for m in &r.per_seminorm {
            assert!((m.sampled.unwrap() - 0.5).abs() < 1e-12);
            assert!((m.exact.unwrap() - 0.5).abs() < 1e-12);
        }
        assert!(!r.any_violation());
    }

    #[test]
    fn zero_seminorm_is_inconclusive_by_sampling() {
        let zero = Seminorm::new("zero", Matrix::zeros(1, 2));
        let fam = SeminormFamily::single(zero);
        let p = DeclaredMap::uniform(MapSpec::projection(RegionSpec::ball(Vector::zeros(2), 1.0).unwrap()), 1.0, 1)
            .unwrap();
        let ball = RegionSpec::ball(Vector::zeros(2), 2.0).unwrap();
        let r = verify_modulus(&p, &fam, &ball, 10, 0).unwrap();
        assert!(r.inconclusive());
        assert!(verify_modulus(&p, &fam, &ball, 1, 0).is_err());
    }

    #[test]
    fn fixed_set_examples() {
        let neg = MapSpec::linear(Matrix::scaled_identity(3, -1.0)).unwrap();
        assert_eq!(fixed_set_oracle(&neg), FixedSetDescription::ExplicitPoint(Vector::zeros(3)));

        match fixed_set_oracle(&block_rotation()) {
            FixedSetDescription::AffineSubspace { basepoint, basis } => {
                assert!(basepoint.norm() < 1e-15);
                assert_eq!(basis.len(), 1);
                assert!(basis[0][0].abs() < 1e-15 && basis[0][1].abs() < 1e-15);
                assert!((basis[0][2].abs() - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }

        let bx = RegionSpec::boxed(Vector::zeros(2), vec![1.0, 1.0]).unwrap();
        assert_eq!(fixed_set_oracle(&MapSpec::projection(bx.clone())), FixedSetDescription::Region(bx));
    }

    #[test]
    fn inconsistent_affine_map_has_empty_fixed_set() {
        // x ↦ x + 1 has no fixed point.
        let shift = MapSpec::affine(Matrix::identity(1), v(&[1.0])).unwrap();
        assert_eq!(fixed_set_oracle(&shift), FixedSetDescription::Empty);
    }

    #[test]
    fn compose_of_same_projection_shares_fixed_set() {
        let ball = RegionSpec::ball(Vector::zeros(2), 1.0).unwrap();
        let p = MapSpec::projection(ball.clone());
        let c = MapSpec::compose(vec![p.clone(), p.clone()]).unwrap();
        assert_eq!(fixed_set_oracle(&c), FixedSetDescription::Region(ball.clone()));
        let other = MapSpec::projection(RegionSpec::ball(Vector::zeros(2), 2.0).unwrap());
        let mixed = MapSpec::compose(vec![p, other]).unwrap();
        assert_eq!(fixed_set_oracle(&mixed), FixedSetDescription::Unknown);
    }

    #[test]
    fn subspace_samples_are_fixed_and_inside() {
        let t = block_rotation();
        let desc = fixed_set_oracle(&t);
        let ball = RegionSpec::ball(Vector::zeros(3), 10.0).unwrap();
        let samples = desc.sample(&ball, 100, 4);
        assert_eq!(samples.len(), 100);
        for z in &samples {
            assert!(ball.contains(z, TAU_MEM));
            assert!((&t.apply_vec(z) - z).norm() <= 1e-9 * (1.0 + z.norm()));
        }
        let bx = RegionSpec::boxed(Vector::zeros(3), vec![1.0, 1.0, 2.0]).unwrap();
        let samples = desc.sample(&bx, 50, 4);
        assert_eq!(samples.len(), 50);
        assert!(samples.iter().all(|z| bx.contains(z, TAU_MEM)));
    }
}
