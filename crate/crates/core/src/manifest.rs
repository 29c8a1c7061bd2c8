//! Manifest loading and hashing.
//!
//! A manifest is the JSON description that drives the command-line tool: a
//! `manifold` block defining the chart, a `fields` block naming vector
//! fields by their component expressions, and an optional `run` block with
//! numerical parameters. The schema is strict — unknown keys anywhere are
//! rejected — and every expression is parsed before any computation starts,
//! so a bad manifest fails fast with the offending expression named.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::CatalogEntry;
use crate::geometry::{ChartManifold, ChartSpec, GeometryError};
use crate::operators::{FieldSpec, FieldSpecError, Thresholds};
use crate::sampling::GridSpec;

/// Default seed for the pseudo-random sample streams.
pub const DEFAULT_SEED: u64 = 7;
/// Default quadrature nodes per dimension.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;
/// Default integrator step.
pub const DEFAULT_INTEGRATOR_STEP: f64 = 1e-3;
/// Default number of random sample points for pointwise checks.
pub const DEFAULT_SAMPLE_POINTS: usize = 100;
/// Default number of random geodesics for the geodesic-equation check.
pub const DEFAULT_GEODESIC_PROBES: usize = 10;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest chart: {0}")]
    Chart(#[from] GeometryError),
    #[error("manifest field {name:?}: {source}")]
    Field {
        name: String,
        source: FieldSpecError,
    },
    #[error("manifest: {0}")]
    Invalid(String),
}

/// Which suite checks to run; the manifest `run.checks` list selects a
/// subset, absent means every check applicable to the chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Classification booleans match the expected values (built-in charts).
    Classification,
    /// The deviation operator is symmetric in its two lower slots.
    Symmetry,
    /// The deviation operator agrees with the connection Lie derivative.
    OperatorEquivalence,
    /// Metric-preserving fields are geodesic-preserving and divergence-free.
    KillingImplications,
    /// Geodesic-preserving fields have constant divergence.
    DivergenceConstancy,
    /// The divergence integrates to zero over a compact chart.
    DivergenceIntegral,
    /// The three-term integral identity vanishes on a compact chart.
    IntegralIdentity,
    /// On compact charts, geodesic-preserving fields preserve the metric.
    CompactJacobiImpliesKilling,
    /// Flow probes: metric/volume/geodesic preservation residuals.
    FlowPreservation,
    /// Fields pass the geodesic-deviation equation along random geodesics.
    JacobiOde,
}

impl CheckKind {
    /// The snake_case name used in reports and summaries.
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Classification => "classification",
            CheckKind::Symmetry => "symmetry",
            CheckKind::OperatorEquivalence => "operator_equivalence",
            CheckKind::KillingImplications => "killing_implications",
            CheckKind::DivergenceConstancy => "divergence_constancy",
            CheckKind::DivergenceIntegral => "divergence_integral",
            CheckKind::IntegralIdentity => "integral_identity",
            CheckKind::CompactJacobiImpliesKilling => "compact_jacobi_implies_killing",
            CheckKind::FlowPreservation => "flow_preservation",
            CheckKind::JacobiOde => "jacobi_ode",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One flow-preservation probe: integrate the named field's flow from
/// `point` for `time` and measure how well it preserves the metric, the
/// volume form, and (when an initial `velocity` is given) geodesics.
///
/// The optional `max_*`/`min_*` bounds turn measured residuals into
/// pass/fail expectations; absent bounds leave the residual informational.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowProbe {
    pub field: String,
    pub point: Vec<f64>,
    pub time: f64,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
    /// Affine span of the probe geodesic (defaults to 1 when a velocity is
    /// given).
    #[serde(default)]
    pub geodesic_span: Option<f64>,
    #[serde(default)]
    pub max_metric_residual: Option<f64>,
    #[serde(default)]
    pub min_metric_residual: Option<f64>,
    #[serde(default)]
    pub max_volume_residual: Option<f64>,
    #[serde(default)]
    pub min_volume_residual: Option<f64>,
    #[serde(default)]
    pub max_geodesic_residual: Option<f64>,
    #[serde(default)]
    pub min_geodesic_residual: Option<f64>,
}

impl FlowProbe {
    /// A probe with no expectations: residuals are reported but not judged.
    pub fn new(field: impl Into<String>, point: Vec<f64>, time: f64) -> FlowProbe {
        FlowProbe {
            field: field.into(),
            point,
            time,
            velocity: None,
            geodesic_span: None,
            max_metric_residual: None,
            min_metric_residual: None,
            max_volume_residual: None,
            min_volume_residual: None,
            max_geodesic_residual: None,
            min_geodesic_residual: None,
        }
    }

    /// Also probe geodesic preservation: flow the geodesic with this initial
    /// velocity over the given affine span.
    pub fn with_velocity(mut self, velocity: Vec<f64>, span: f64) -> FlowProbe {
        self.velocity = Some(velocity);
        self.geodesic_span = Some(span);
        self
    }

    pub fn metric_at_most(mut self, bound: f64) -> FlowProbe {
        self.max_metric_residual = Some(bound);
        self
    }

    pub fn metric_at_least(mut self, floor: f64) -> FlowProbe {
        self.min_metric_residual = Some(floor);
        self
    }

    /// Expect the metric residual inside `value ± tolerance`.
    pub fn metric_near(self, value: f64, tolerance: f64) -> FlowProbe {
        self.metric_at_least(value - tolerance).metric_at_most(value + tolerance)
    }

    pub fn volume_at_most(mut self, bound: f64) -> FlowProbe {
        self.max_volume_residual = Some(bound);
        self
    }

    pub fn volume_at_least(mut self, floor: f64) -> FlowProbe {
        self.min_volume_residual = Some(floor);
        self
    }

    /// Expect the volume residual inside `value ± tolerance`.
    pub fn volume_near(self, value: f64, tolerance: f64) -> FlowProbe {
        self.volume_at_least(value - tolerance).volume_at_most(value + tolerance)
    }

    pub fn geodesic_at_most(mut self, bound: f64) -> FlowProbe {
        self.max_geodesic_residual = Some(bound);
        self
    }

    pub fn geodesic_at_least(mut self, floor: f64) -> FlowProbe {
        self.min_geodesic_residual = Some(floor);
        self
    }
}

/// The `manifold` block: a single-chart Riemannian manifold.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldBlock {
    pub name: String,
    pub coordinates: Vec<String>,
    /// Row-major metric entries as expressions in the coordinates.
    pub metric: Vec<Vec<String>>,
    /// Per-coordinate open interval [lo, hi].
    pub domain: Vec<[f64; 2]>,
    pub periodic: Vec<bool>,
    /// Working-interior inset from each non-periodic boundary.
    pub margins: Vec<f64>,
    pub compact: bool,
}

/// The `run` block: numerical parameters and check selection. Every field
/// has a default, so the block (or any part of it) may be omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    /// Classification sample grid.
    pub grid: GridSpec,
    /// Classification residual thresholds.
    pub thresholds: Thresholds,
    /// Quadrature nodes per dimension for volume integrals.
    pub quadrature_nodes: usize,
    /// Fixed step for geodesic and flow integration.
    pub integrator_step: f64,
    /// Random sample points for pointwise operator checks.
    pub sample_points: usize,
    /// Random geodesics per field for the geodesic-deviation check.
    pub geodesic_probes: usize,
    /// Seed for the pseudo-random streams.
    pub seed: u64,
    /// Subset of checks to run (absent = all applicable).
    pub checks: Option<Vec<CheckKind>>,
    /// Flow-preservation probes.
    pub flow_probes: Vec<FlowProbe>,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            grid: GridSpec::default(),
            thresholds: Thresholds::default(),
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            integrator_step: DEFAULT_INTEGRATOR_STEP,
            sample_points: DEFAULT_SAMPLE_POINTS,
            geodesic_probes: DEFAULT_GEODESIC_PROBES,
            seed: DEFAULT_SEED,
            checks: None,
            flow_probes: Vec::new(),
        }
    }
}

/// A full manifest: chart, named fields, and run parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifold: ManifoldBlock,
    /// Field name → component expressions (one per coordinate).
    pub fields: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub run: RunBlock,
}

impl Manifest {
    /// Parse a manifest from JSON text and validate everything that can be
    /// validated without numerics: schema, dimensions, expressions.
    pub fn from_json(text: &str) -> Result<Manifest, ManifestError> {
        let manifest: Manifest = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Read and parse a manifest file.
    pub fn from_path(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Manifest::from_json(&text)
    }

    /// Build a manifest describing a catalog entry with default run
    /// parameters. Round-trips: building the result reproduces the entry's
    /// chart and fields.
    pub fn from_catalog(entry: &CatalogEntry) -> Manifest {
        let m = &entry.manifold;
        Manifest {
            manifold: ManifoldBlock {
                name: m.name().to_string(),
                coordinates: m.coordinates().to_vec(),
                metric: m.metric_text().to_vec(),
                domain: m.domain().iter().map(|&(lo, hi)| [lo, hi]).collect(),
                periodic: m.periodic().to_vec(),
                margins: m.boundary_margin().to_vec(),
                compact: m.is_compact(),
            },
            fields: entry
                .fields
                .iter()
                .map(|f| (f.name.clone(), f.spec.text().to_vec()))
                .collect(),
            run: RunBlock::default(),
        }
    }

    /// Structural validation beyond what serde enforces. Expression-level
    /// validation happens in [`Manifest::build`]; this checks counts and
    /// run parameters so errors point at the manifest, not at numerics.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let dim = self.manifold.coordinates.len();
        let bad = |message: String| Err(ManifestError::Invalid(message));
        if dim == 0 {
            return bad("manifold.coordinates must not be empty".into());
        }
        if self.manifold.metric.len() != dim
            || self.manifold.metric.iter().any(|row| row.len() != dim)
        {
            return bad(format!("manifold.metric must be a {dim}x{dim} matrix of expressions"));
        }
        for (name, len) in [
            ("domain", self.manifold.domain.len()),
            ("periodic", self.manifold.periodic.len()),
            ("margins", self.manifold.margins.len()),
        ] {
            if len != dim {
                return bad(format!("manifold.{name} must list {dim} entries, got {len}"));
            }
        }
        for (name, components) in &self.fields {
            if components.len() != dim {
                return bad(format!(
                    "field {name:?} must have {dim} components, got {}",
                    components.len()
                ));
            }
        }
        let run = &self.run;
        if run.grid.lattice_per_dim < 2 {
            return bad("run.grid.lattice_per_dim must be at least 2".into());
        }
        if run.quadrature_nodes == 0 {
            return bad("run.quadrature_nodes must be positive".into());
        }
        if !(run.integrator_step > 0.0) || !run.integrator_step.is_finite() {
            return bad(format!(
                "run.integrator_step must be positive and finite, got {}",
                run.integrator_step
            ));
        }
        for (name, value) in [
            ("killing", run.thresholds.killing),
            ("jacobi", run.thresholds.jacobi),
            ("solenoidal", run.thresholds.solenoidal),
            ("divergence_constancy", run.thresholds.divergence_constancy),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return bad(format!(
                    "run.thresholds.{name} must be positive and finite, got {value}"
                ));
            }
        }
        for (index, probe) in run.flow_probes.iter().enumerate() {
            if !self.fields.contains_key(&probe.field) {
                return bad(format!(
                    "run.flow_probes[{index}] names unknown field {:?}",
                    probe.field
                ));
            }
            if probe.point.len() != dim {
                return bad(format!(
                    "run.flow_probes[{index}].point must have {dim} coordinates, got {}",
                    probe.point.len()
                ));
            }
            if !probe.time.is_finite() {
                return bad(format!("run.flow_probes[{index}].time must be finite"));
            }
            if let Some(velocity) = &probe.velocity {
                if velocity.len() != dim {
                    return bad(format!(
                        "run.flow_probes[{index}].velocity must have {dim} components, got {}",
                        velocity.len()
                    ));
                }
            } else if probe.geodesic_span.is_some()
                || probe.max_geodesic_residual.is_some()
                || probe.min_geodesic_residual.is_some()
            {
                return bad(format!(
                    "run.flow_probes[{index}] sets geodesic bounds but no velocity"
                ));
            }
        }
        Ok(())
    }

    /// The chart description in the form the geometry layer expects.
    pub fn chart_spec(&self) -> ChartSpec {
        ChartSpec {
            name: self.manifold.name.clone(),
            coordinates: self.manifold.coordinates.clone(),
            metric: self.manifold.metric.clone(),
            domain: self.manifold.domain.iter().map(|&[lo, hi]| (lo, hi)).collect(),
            periodic: self.manifold.periodic.clone(),
            boundary_margin: self.manifold.margins.clone(),
            compact: self.manifold.compact,
        }
    }

    /// Construct the chart and parse every field. All expressions are
    /// checked here, before any numerical work; failures name the offending
    /// expression.
    pub fn build(&self) -> Result<(ChartManifold, Vec<(String, FieldSpec)>), ManifestError> {
        self.validate()?;
        let manifold = ChartManifold::new(self.chart_spec())?;
        let mut fields = Vec::with_capacity(self.fields.len());
        for (name, components) in &self.fields {
            let spec = FieldSpec::parse(components, manifold.coordinates()).map_err(|source| {
                ManifestError::Field {
                    name: name.clone(),
                    source,
                }
            })?;
            fields.push((name.clone(), spec));
        }
        Ok((manifold, fields))
    }

    /// Canonical JSON serialization: compact separators, struct fields in
    /// declaration order, map keys sorted. The manifest hash is the SHA-256
    /// of exactly these bytes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serialization cannot fail")
    }

    /// Hex SHA-256 of [`Manifest::canonical_json`], identifying the input in
    /// reports.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use fmt::Write;
            write!(out, "{byte:02x}").expect("writing to a String cannot fail");
        }
        out
    }
}
