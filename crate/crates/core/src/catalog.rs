//! Built-in charts and vector fields with their expected classifications.
//!
//! The four charts cover the interesting combinations: a non-compact flat
//! plane, a compact flat torus, the compact round sphere, and the non-compact
//! hyperbolic half-plane. Each field carries the classification it should
//! receive and a short rationale; the verification suite recomputes the
//! classifications numerically and compares.

use crate::geometry::{ChartManifold, ChartSpec};
use crate::operators::FieldSpec;
use serde::Serialize;
use thiserror::Error;

/// Expected classification of a catalog field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpectedClassification {
    pub killing: bool,
    pub global_jacobi: bool,
    pub solenoidal: bool,
    /// The divergence value when it should be constant over the chart,
    /// `None` when it should vary.
    pub constant_divergence: Option<f64>,
}

/// A named vector field with its expected classification.
#[derive(Clone, Debug)]
pub struct CatalogField {
    pub name: String,
    pub spec: FieldSpec,
    pub expected: ExpectedClassification,
    pub rationale: String,
}

/// A chart together with its example fields.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub manifold: ChartManifold,
    pub fields: Vec<CatalogField>,
    pub description: String,
}

impl CatalogEntry {
    pub fn field(&self, name: &str) -> Option<&CatalogField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown builtin chart {name:?}; available: {}", BUILTIN_NAMES.join(", "))]
    UnknownEntry { name: String },
}

/// Names of the built-in charts, in catalog order.
pub const BUILTIN_NAMES: [&str; 4] = ["euclidean2", "flat_torus2", "sphere2", "hyperbolic2"];

/// Look up a built-in chart by name.
pub fn builtin(name: &str) -> Result<CatalogEntry, CatalogError> {
    match name {
        "euclidean2" => Ok(euclidean2()),
        "flat_torus2" => Ok(flat_torus2()),
        "sphere2" => Ok(sphere2()),
        "hyperbolic2" => Ok(hyperbolic2()),
        _ => Err(CatalogError::UnknownEntry { name: name.to_string() }),
    }
}

/// All built-in charts, in catalog order.
pub fn all() -> Vec<CatalogEntry> {
    BUILTIN_NAMES
        .iter()
        .map(|name| builtin(name).expect("builtin names are exhaustive"))
        .collect()
}

struct FieldDef {
    name: &'static str,
    components: &'static [&'static str],
    expected: ExpectedClassification,
    rationale: &'static str,
}

fn build(spec: ChartSpec, description: &str, fields: &[FieldDef]) -> CatalogEntry {
    let manifold = ChartManifold::new(spec).expect("builtin charts are valid");
    let fields = fields
        .iter()
        .map(|def| {
            let components: Vec<String> = def.components.iter().map(|s| s.to_string()).collect();
            CatalogField {
                name: def.name.to_string(),
                spec: FieldSpec::parse(&components, manifold.coordinates())
                    .expect("builtin fields are valid"),
                expected: def.expected,
                rationale: def.rationale.to_string(),
            }
        })
        .collect();
    CatalogEntry { manifold, fields, description: description.to_string() }
}

const fn expect(
    killing: bool,
    global_jacobi: bool,
    solenoidal: bool,
    constant_divergence: Option<f64>,
) -> ExpectedClassification {
    ExpectedClassification { killing, global_jacobi, solenoidal, constant_divergence }
}

fn euclidean2() -> CatalogEntry {
    build(
        ChartSpec {
            name: "euclidean2".into(),
            coordinates: vec!["x".into(), "y".into()],
            metric: vec![vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]],
            domain: vec![(-5.0, 5.0), (-5.0, 5.0)],
            periodic: vec![false, false],
            boundary_margin: vec![0.1, 0.1],
            compact: false,
        },
        "Flat plane window: non-compact, zero curvature.",
        &[
            FieldDef {
                name: "translation",
                components: &["1", "0"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Translations are isometries of the plane, so the field is Killing \
                            and inherits the other two properties.",
            },
            FieldDef {
                name: "rotation",
                components: &["0 - y", "x"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Rotations about the origin are isometries of the plane.",
            },
            FieldDef {
                name: "dilation",
                components: &["x", "y"],
                expected: expect(false, true, false, Some(2.0)),
                rationale: "Scaling is affine (it preserves straight lines and the connection) \
                            but stretches the metric and expands area at constant rate 2.",
            },
            FieldDef {
                name: "saddle",
                components: &["x", "0 - y"],
                expected: expect(false, true, true, Some(0.0)),
                rationale: "The saddle flow (x, y) -> (e^t x, e^-t y) is affine and \
                            area-preserving yet stretches the metric: on a non-compact chart a \
                            field can be geodesic-preserving and divergence-free without being \
                            Killing.",
            },
            FieldDef {
                name: "quadratic",
                components: &["x*x", "0"],
                expected: expect(false, false, false, None),
                rationale: "A genuinely nonlinear field: its flow bends straight lines, \
                            stretches the metric, and its divergence 2x varies over the chart.",
            },
        ],
    )
}

fn flat_torus2() -> CatalogEntry {
    const TAU: f64 = std::f64::consts::TAU;
    build(
        ChartSpec {
            name: "flat_torus2".into(),
            coordinates: vec!["x".into(), "y".into()],
            metric: vec![vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]],
            domain: vec![(0.0, TAU), (0.0, TAU)],
            periodic: vec![true, true],
            boundary_margin: vec![0.0, 0.0],
            compact: true,
        },
        "Flat square torus: compact, zero curvature, both coordinates periodic.",
        &[
            FieldDef {
                name: "translation",
                components: &["1", "0"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Rigid translation around the torus is an isometry.",
            },
            FieldDef {
                name: "sinx",
                components: &["sin(x)", "0"],
                expected: expect(false, false, false, None),
                rationale: "A compressible wave: divergence cos(x) averages to zero over the \
                            torus but varies pointwise, and the flow distorts both metric and \
                            geodesics.",
            },
            FieldDef {
                name: "sinx_cosy",
                components: &["sin(x) * cos(y)", "0 - cos(x) * sin(y)"],
                expected: expect(false, false, true, Some(0.0)),
                rationale: "A cellular stirring flow: exactly divergence-free, yet it shears \
                            the metric and bends geodesics, so volume preservation alone \
                            implies neither of the stronger properties even on a compact \
                            manifold.",
            },
        ],
    )
}

fn sphere2() -> CatalogEntry {
    build(
        ChartSpec {
            name: "sphere2".into(),
            coordinates: vec!["theta".into(), "phi".into()],
            metric: vec![
                vec!["1".into(), "0".into()],
                vec!["0".into(), "sin(theta)^2".into()],
            ],
            domain: vec![(0.0, std::f64::consts::PI), (0.0, std::f64::consts::TAU)],
            periodic: vec![false, true],
            boundary_margin: vec![0.05, 0.0],
            compact: true,
        },
        "Unit sphere in polar coordinates: compact, constant curvature +1; the chart \
         stays away from the poles by the boundary margin.",
        &[
            FieldDef {
                name: "azimuthal",
                components: &["0", "1"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Rotation about the polar axis is an isometry of the sphere.",
            },
            FieldDef {
                name: "tilted",
                components: &["cos(phi)", "0 - (cos(theta)/sin(theta)) * sin(phi)"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Rotation about an equatorial axis, written in polar coordinates; \
                            an isometry whose components are not constant in this chart.",
            },
        ],
    )
}

fn hyperbolic2() -> CatalogEntry {
    build(
        ChartSpec {
            name: "hyperbolic2".into(),
            coordinates: vec!["x".into(), "y".into()],
            metric: vec![
                vec!["1/(y*y)".into(), "0".into()],
                vec!["0".into(), "1/(y*y)".into()],
            ],
            domain: vec![(-5.0, 5.0), (0.1, 10.0)],
            periodic: vec![false, false],
            boundary_margin: vec![0.1, 0.05],
            compact: false,
        },
        "Hyperbolic upper half-plane window: non-compact, constant curvature -1.",
        &[
            FieldDef {
                name: "translation",
                components: &["1", "0"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Horizontal translation is a hyperbolic isometry.",
            },
            FieldDef {
                name: "dilation",
                components: &["x", "y"],
                expected: expect(true, true, true, Some(0.0)),
                rationale: "Scaling from the boundary origin is a hyperbolic isometry, even \
                            though the same field on the flat plane is only affine.",
            },
        ],
    )
}
