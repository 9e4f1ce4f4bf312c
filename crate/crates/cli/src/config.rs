//! Experiment configuration: TOML on disk, validated into [`ExperimentConfig`].
//!
//! Matrices are row-major arrays of rows. Every validation problem is
//! collected, so a broken file reports all of its errors at once.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use lcfix_core::linalg::Matrix;
use lcfix_core::maps::{DeclaredMap, MapSpec};
use lcfix_core::retraction::{RetractionOptions, TAU_VI};
use lcfix_core::viscosity::{EpsilonRule, IndexSet, Schedule, StopRule, ViscosityOptions};
use lcfix_core::{RegionSpec, Seminorm, SeminormFamily, Vector};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Viscosity,
    Picard,
    RetractionAudit,
    PropertySuite,
    OracleCheck,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Viscosity => "viscosity",
            Self::Picard => "picard",
            Self::RetractionAudit => "retraction_audit",
            Self::PropertySuite => "property_suite",
            Self::OracleCheck => "oracle_check",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    mode: Mode,
    dimension: usize,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    #[serde(default)]
    seminorms: Vec<RawSeminorm>,
    region: Option<RawRegion>,
    map_t: Option<RawDeclared>,
    map_f: Option<RawDeclared>,
    schedule: Option<RawSchedule>,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    picard: RawPicard,
    #[serde(default)]
    retraction: RawRetraction,
    #[serde(default)]
    audit: RawAudit,
    #[serde(default)]
    compare: RawCompare,
    #[serde(default)]
    property_suite: RawPropertySuite,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeminorm {
    label: String,
    kind: Option<String>,
    matrix: Option<Vec<Vec<f64>>>,
    coordinates: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawRegion {
    Ball { center: Option<Vec<f64>>, radius: f64 },
    Box { center: Option<Vec<f64>>, halfwidths: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawMap {
    Affine { matrix: Vec<Vec<f64>>, offset: Option<Vec<f64>> },
    Linear { matrix: Vec<Vec<f64>> },
    Identity,
    Projection { region: RawRegion },
    ContractionToward { center: Vec<f64>, beta: f64 },
    Constant { point: Vec<f64> },
    Compose { maps: Vec<RawMap> },
    ConvexCombo { weights: Vec<f64>, maps: Vec<RawMap> },
}

#[derive(Debug, Deserialize)]
struct RawDeclared {
    #[serde(flatten)]
    map: RawMap,
    modulus: Option<f64>,
    moduli: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    kind: String,
    length: Option<u64>,
    p: Option<f64>,
    values: Option<Vec<f64>>,
    indices: Option<String>,
    first: Option<u64>,
    last: Option<u64>,
    count: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    tol_inner: Option<f64>,
    residual_tol: Option<f64>,
    tau_vi: Option<f64>,
    stall_tol: Option<f64>,
    stall_steps: Option<usize>,
    max_inner_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPicard {
    x0: Option<Vec<f64>>,
    tol: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRetraction {
    anchor: Option<Vec<f64>>,
    t_grid: Option<Vec<f64>>,
    fixed_samples: Option<usize>,
    schedule: Option<RawSchedule>,
    alternate: Option<RawSchedule>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAudit {
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    lambda: Option<f64>,
    steps: Option<usize>,
    x0: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropertySuite {
    cases: Option<usize>,
    dimensions: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSettings {
    pub x0: Vector,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetractionSettings {
    pub anchor: Option<Vector>,
    pub t_grid: Vec<f64>,
    pub options: RetractionOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSettings {
    pub lambda: f64,
    pub steps: Option<usize>,
    pub x0: Option<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertySuiteSettings {
    pub cases: usize,
    pub dimensions: Vec<usize>,
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    pub dimension: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub family: SeminormFamily,
    pub region: RegionSpec,
    pub map_t: Option<DeclaredMap>,
    pub map_f: Option<DeclaredMap>,
    /// Contraction modulus of `f` (largest declared modulus).
    pub beta: f64,
    pub schedule: Schedule,
    pub viscosity: ViscosityOptions,
    pub tau_vi: f64,
    pub picard: PicardSettings,
    pub retraction: RetractionSettings,
    pub audit_samples: usize,
    pub compare: CompareSettings,
    pub property_suite: PropertySuiteSettings,
}

impl ExperimentConfig {
    pub fn t(&self) -> &DeclaredMap {
        self.map_t.as_ref().expect("validated config has map_t")
    }

    pub fn f(&self) -> &DeclaredMap {
        self.map_f.as_ref().expect("validated config has map_f")
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, message: String },
    Invalid { path: PathBuf, errors: Vec<String> },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            Self::Parse { path, message } => write!(f, "cannot parse {}: {message}", path.display()),
            Self::Invalid { path, errors } => {
                write!(f, "{} has {} error(s):", path.display(), errors.len())?;
                for e in errors {
                    write!(f, "\n  - {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl ConfigError {
    pub fn errors(&self) -> Vec<String> {
        match self {
            Self::Invalid { errors, .. } => errors.clone(),
            other => vec![other.to_string()],
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "experiment".into());
    parse_config(&text, &name).map_err(|e| match e {
        ParseFailure::Syntax(message) => ConfigError::Parse { path: path.into(), message },
        ParseFailure::Invalid(errors) => ConfigError::Invalid { path: path.into(), errors },
    })
}

#[derive(Debug)]
pub enum ParseFailure {
    Syntax(String),
    Invalid(Vec<String>),
}

/// Parses and validates config text; `name` labels the experiment.
pub fn parse_config(text: &str, name: &str) -> Result<ExperimentConfig, ParseFailure> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ParseFailure::Syntax(e.to_string()))?;
    let mut v = Validator { errors: Vec::new(), dim: raw.dimension };
    let cfg = v.build(raw, name);
    match cfg {
        Some(cfg) if v.errors.is_empty() => Ok(cfg),
        _ => Err(ParseFailure::Invalid(v.errors)),
    }
}

struct Validator {
    errors: Vec<String>,
    dim: usize,
}

impl Validator {
    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn build(&mut self, raw: RawConfig, name: &str) -> Option<ExperimentConfig> {
        if raw.schema_version != SCHEMA_VERSION {
            self.err(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", raw.schema_version));
        }
        if raw.dimension == 0 {
            self.err("dimension must be at least 1");
            return None;
        }
        let suite_only = raw.mode == Mode::PropertySuite;
        let family = if suite_only && raw.seminorms.is_empty() {
            Some(SeminormFamily::single(Seminorm::euclidean(self.dim)))
        } else {
            self.family(&raw.seminorms)
        };
        let region = match &raw.region {
            Some(r) => self.region(r, "region"),
            None if suite_only => RegionSpec::ball(Vector::zeros(self.dim), 1.0).ok(),
            None => {
                self.err("missing [region]");
                None
            }
        };
        let family_len = family.as_ref().map_or(raw.seminorms.len().max(1), |f| f.len());

        let needs_t = raw.mode != Mode::PropertySuite;
        let needs_f = matches!(raw.mode, Mode::Viscosity | Mode::OracleCheck);
        let map_t = match &raw.map_t {
            Some(m) => self.declared(m, "map_t", family_len, Some(1.0)),
            None if needs_t => {
                self.err("missing [map_t]");
                None
            }
            None => None,
        };
        let map_f = match &raw.map_f {
            Some(m) => self.declared(m, "map_f", family_len, None),
            None if needs_f => {
                self.err("missing [map_f]");
                None
            }
            None => None,
        };

        let mut beta = 0.0;
        if let Some(f) = &map_f {
            beta = f.max_modulus();
            if beta >= 1.0 {
                self.err(format!("map_f: contraction modulus must be < 1, got {beta}"));
            }
        }
        if let Some(t) = &map_t {
            if raw.mode == Mode::Picard {
                if t.max_modulus() >= 1.0 || t.max_modulus() <= 0.0 {
                    self.err(format!("map_t: contraction modulus must be < 1 and positive for picard mode, got {}", t.max_modulus()));
                }
            } else if !t.is_nonexpansive() {
                self.err(format!("map_t: declared moduli must lie in [0, 1], got {:?}", t.moduli));
            }
        }
        if raw.mode == Mode::OracleCheck {
            let affine = |m: &Option<DeclaredMap>| m.as_ref().is_none_or(|d| d.map.as_affine().is_some());
            if !affine(&map_t) || !affine(&map_f) {
                self.err("oracle_check needs affine map_t and map_f");
            }
        }

        let schedule = match &raw.schedule {
            Some(s) => self.schedule(s, "schedule"),
            None => Schedule::harmonic(100).ok(),
        };

        let defaults = ViscosityOptions::default();
        let tol = &raw.tolerances;
        let viscosity = ViscosityOptions {
            tol_inner: tol.tol_inner.unwrap_or(defaults.tol_inner),
            max_inner_iter: tol.max_inner_iter.unwrap_or(defaults.max_inner_iter),
            stop: StopRule {
                residual_tol: tol.residual_tol.unwrap_or(defaults.stop.residual_tol),
                stall_tol: tol.stall_tol.unwrap_or(defaults.stop.stall_tol),
                stall_steps: tol.stall_steps.unwrap_or(defaults.stop.stall_steps),
            },
        };
        for (label, value) in [
            ("tol_inner", viscosity.tol_inner),
            ("residual_tol", viscosity.stop.residual_tol),
            ("stall_tol", viscosity.stop.stall_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                self.err(format!("tolerances.{label} must be positive, got {value}"));
            }
        }
        let tau_vi = tol.tau_vi.unwrap_or(TAU_VI);
        if !(tau_vi > 0.0) {
            self.err(format!("tolerances.tau_vi must be positive, got {tau_vi}"));
        }

        let center = region.as_ref().map(|r| r.center().clone()).unwrap_or_else(|| Vector::zeros(self.dim));
        let picard = PicardSettings {
            x0: match &raw.picard.x0 {
                Some(x) => self.vector(x, "picard.x0").unwrap_or_else(|| center.clone()),
                None => center.clone(),
            },
            tol: raw.picard.tol.unwrap_or(1e-10),
            max_iter: raw.picard.max_iter.unwrap_or(100_000),
        };
        if !(picard.tol > 0.0) {
            self.err(format!("picard.tol must be positive, got {}", picard.tol));
        }

        let rdef = RetractionOptions::default();
        let anchor = raw.retraction.anchor.as_ref().and_then(|a| self.vector(a, "retraction.anchor"));
        if raw.mode == Mode::RetractionAudit && raw.retraction.anchor.is_none() {
            self.err("retraction_audit needs retraction.anchor");
        }
        let retraction = RetractionSettings {
            anchor,
            t_grid: raw.retraction.t_grid.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]),
            options: RetractionOptions {
                schedule: match &raw.retraction.schedule {
                    Some(s) => self.schedule(s, "retraction.schedule").unwrap_or(rdef.schedule.clone()),
                    None => rdef.schedule.clone(),
                },
                alternate: match &raw.retraction.alternate {
                    Some(s) => self.schedule(s, "retraction.alternate").unwrap_or(rdef.alternate.clone()),
                    None => rdef.alternate.clone(),
                },
                viscosity: ViscosityOptions {
                    max_inner_iter: tol.max_inner_iter.unwrap_or(rdef.viscosity.max_inner_iter),
                    ..viscosity
                },
                fixed_samples: raw.retraction.fixed_samples.unwrap_or(rdef.fixed_samples),
                seed: raw.seed,
                tau: tau_vi,
            },
        };
        if retraction.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            self.err("retraction.t_grid values must be finite and nonnegative");
        }

        let compare = CompareSettings {
            lambda: raw.compare.lambda.unwrap_or(0.5),
            steps: raw.compare.steps,
            x0: raw.compare.x0.as_ref().and_then(|x| self.vector(x, "compare.x0")),
        };
        if !(compare.lambda > 0.0 && compare.lambda <= 1.0) {
            self.err(format!("compare.lambda must lie in (0, 1], got {}", compare.lambda));
        }

        let property_suite = PropertySuiteSettings {
            cases: raw.property_suite.cases.unwrap_or(10_000),
            dimensions: raw.property_suite.dimensions.clone().unwrap_or_else(|| vec![1, 2, 3, 5]),
        };
        if property_suite.dimensions.is_empty() || property_suite.dimensions.contains(&0) {
            self.err("property_suite.dimensions must be a nonempty list of positive integers");
        }

        Some(ExperimentConfig {
            name: name.into(),
            mode: raw.mode,
            dimension: raw.dimension,
            seed: raw.seed,
            output: raw.output,
            family: family?,
            region: region?,
            map_t,
            map_f,
            beta,
            schedule: schedule?,
            viscosity,
            tau_vi,
            picard,
            retraction,
            audit_samples: raw.audit.samples.unwrap_or(200),
            compare,
            property_suite,
        })
    }

    fn vector(&mut self, v: &[f64], what: &str) -> Option<Vector> {
        if v.len() != self.dim {
            self.err(format!("{what}: dimension mismatch, has {} entries, expected {}", v.len(), self.dim));
            return None;
        }
        match Vector::from_slice(v) {
            Ok(x) => Some(x),
            Err(e) => {
                self.err(format!("{what}: {e}"));
                None
            }
        }
    }

    fn matrix(&mut self, rows: &[Vec<f64>], what: &str, expect_rows: Option<usize>) -> Option<Matrix> {
        if rows.is_empty() {
            self.err(format!("{what}: matrix has no rows"));
            return None;
        }
        let mut ok = true;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != self.dim {
                self.err(format!("{what}: dimension mismatch, row {i} has {} columns, expected {}", r.len(), self.dim));
                ok = false;
            }
        }
        if let Some(n) = expect_rows {
            if rows.len() != n {
                self.err(format!("{what}: matrix must be square, has {} rows, expected {n}", rows.len()));
                ok = false;
            }
        }
        if !ok {
            return None;
        }
        match Matrix::from_rows(rows) {
            Ok(m) => Some(m),
            Err(e) => {
                self.err(format!("{what}: {e}"));
                None
            }
        }
    }

    fn family(&mut self, raw: &[RawSeminorm]) -> Option<SeminormFamily> {
        if raw.is_empty() {
            self.err("at least one [[seminorms]] entry is required");
            return None;
        }
        let mut members = Vec::new();
        for s in raw {
            let what = format!("seminorm '{}'", s.label);
            let q = match (s.kind.as_deref(), &s.matrix, &s.coordinates) {
                (Some("euclidean"), None, None) => Some(Seminorm::new(s.label.clone(), Matrix::identity(self.dim))),
                (None | Some("matrix"), Some(m), None) => self.matrix(m, &what, None).map(|m| Seminorm::new(s.label.clone(), m)),
                (None | Some("coordinates"), None, Some(c)) => match Seminorm::coordinates(s.label.clone(), self.dim, c) {
                    Ok(q) => Some(q),
                    Err(e) => {
                        self.err(format!("{what}: {e}"));
                        None
                    }
                },
                _ => {
                    self.err(format!("{what}: give exactly one of kind = \"euclidean\", matrix, or coordinates"));
                    None
                }
            };
            if let Some(q) = q {
                members.push(q);
            }
        }
        if members.len() != raw.len() {
            return None;
        }
        SeminormFamily::new(members).map_err(|e| self.err(format!("seminorms: {e}"))).ok()
    }

    fn region(&mut self, raw: &RawRegion, what: &str) -> Option<RegionSpec> {
        let center = |v: &mut Self, c: &Option<Vec<f64>>| match c {
            Some(c) => v.vector(c, &format!("{what}.center")),
            None => Some(Vector::zeros(v.dim)),
        };
        let r = match raw {
            RawRegion::Ball { center: c, radius } => RegionSpec::ball(center(self, c)?, *radius),
            RawRegion::Box { center: c, halfwidths } => {
                let c = center(self, c)?;
                if halfwidths.len() != self.dim {
                    self.err(format!("{what}.halfwidths: dimension mismatch, has {} entries, expected {}", halfwidths.len(), self.dim));
                    return None;
                }
                RegionSpec::boxed(c, halfwidths.clone())
            }
        };
        r.map_err(|e| self.err(format!("{what}: {e}"))).ok()
    }

    fn map(&mut self, raw: &RawMap, what: &str) -> Option<MapSpec> {
        let d = self.dim;
        let r = match raw {
            RawMap::Affine { matrix, offset } => {
                let m = self.matrix(matrix, &format!("{what}.matrix"), Some(d));
                let b = match offset {
                    Some(o) => self.vector(o, &format!("{what}.offset")),
                    None => Some(Vector::zeros(d)),
                };
                MapSpec::affine(m?, b?)
            }
            RawMap::Linear { matrix } => MapSpec::linear(self.matrix(matrix, &format!("{what}.matrix"), Some(d))?),
            RawMap::Identity => Ok(MapSpec::identity(d)),
            RawMap::Projection { region } => Ok(MapSpec::projection(self.region(region, &format!("{what}.region"))?)),
            RawMap::ContractionToward { center, beta } => {
                MapSpec::contraction_toward(self.vector(center, &format!("{what}.center"))?, *beta)
            }
            RawMap::Constant { point } => Ok(MapSpec::constant(self.vector(point, &format!("{what}.point"))?)),
            RawMap::Compose { maps } => {
                let parts: Vec<Option<MapSpec>> =
                    maps.iter().enumerate().map(|(i, m)| self.map(m, &format!("{what}.maps[{i}]"))).collect();
                MapSpec::compose(parts.into_iter().collect::<Option<Vec<_>>>()?)
            }
            RawMap::ConvexCombo { weights, maps } => {
                let parts: Vec<Option<MapSpec>> =
                    maps.iter().enumerate().map(|(i, m)| self.map(m, &format!("{what}.maps[{i}]"))).collect();
                MapSpec::convex_combo(weights.clone(), parts.into_iter().collect::<Option<Vec<_>>>()?)
            }
        };
        r.map_err(|e| self.err(format!("{what}: {e}"))).ok()
    }

    fn declared(&mut self, raw: &RawDeclared, what: &str, family_len: usize, default: Option<f64>) -> Option<DeclaredMap> {
        let map = self.map(&raw.map, what);
        let implied = match &raw.map {
            RawMap::ContractionToward { beta, .. } => Some(*beta),
            RawMap::Constant { .. } => Some(0.0),
            _ => default,
        };
        let moduli = match (&raw.modulus, &raw.moduli) {
            (Some(_), Some(_)) => {
                self.err(format!("{what}: give either modulus or moduli, not both"));
                return None;
            }
            (Some(m), None) => vec![*m; family_len],
            (None, Some(ms)) => {
                if ms.len() != family_len {
                    self.err(format!("{what}.moduli: has {} entries, expected one per seminorm ({family_len})", ms.len()));
                    return None;
                }
                ms.clone()
            }
            (None, None) => match implied {
                Some(m) => vec![m; family_len],
                None => {
                    self.err(format!("{what}: a declared modulus is required"));
                    return None;
                }
            },
        };
        DeclaredMap::new(map?, moduli).map_err(|e| self.err(format!("{what}: {e}"))).ok()
    }

    fn schedule(&mut self, raw: &RawSchedule, what: &str) -> Option<Schedule> {
        let rule = match raw.kind.as_str() {
            "harmonic" => EpsilonRule::Harmonic,
            "anchor" => EpsilonRule::Anchor,
            "power" => match raw.p {
                Some(p) => EpsilonRule::Power(p),
                None => {
                    self.err(format!("{what}: power schedule needs p"));
                    return None;
                }
            },
            "explicit" => {
                return match &raw.values {
                    Some(v) => Schedule::explicit(v.clone()).map_err(|e| self.err(format!("{what}: {e}"))).ok(),
                    None => {
                        self.err(format!("{what}: explicit schedule needs values"));
                        None
                    }
                };
            }
            other => {
                self.err(format!("{what}: unknown schedule kind '{other}'"));
                return None;
            }
        };
        let default_first = if rule == EpsilonRule::Anchor { 2 } else { 1 };
        let first = raw.first.unwrap_or(default_first);
        let indices = match raw.indices.as_deref().unwrap_or("consecutive") {
            "consecutive" => match raw.length {
                Some(count) => IndexSet::Consecutive { first, count },
                None => {
                    self.err(format!("{what}: length is required"));
                    return None;
                }
            },
            "geometric" => match (raw.last, raw.count) {
                (Some(last), Some(count)) => IndexSet::Geometric { first, last, count },
                _ => {
                    self.err(format!("{what}: geometric indices need last and count"));
                    return None;
                }
            },
            other => {
                self.err(format!("{what}: unknown index set '{other}'"));
                return None;
            }
        };
        Schedule::rule(rule, indices).map_err(|e| self.err(format!("{what}: {e}"))).ok()
    }
}
