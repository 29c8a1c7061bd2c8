//! The verification suite behind `check-theorems`.
//!
//! Each check is a standalone function from (chart, fields, parameters) to a
//! [`CheckResult`]; the binary and the integration tests compose them. The
//! checks verify *implications* — e.g. "every field that preserves the
//! metric also has vanishing deviation operator" — so they apply to any
//! manifest, not just the built-in catalog: a field that satisfies no
//! hypothesis passes vacuously, and expected classifications (available for
//! catalog entries) add exactness checks on top.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::ExpectedClassification;
use crate::dynamics::{
    geodesic_preservation_residual, jacobi_ode_residual, metric_preservation_residual,
    volume_preservation_residual, DynamicsError, IntegratorOptions,
};
use crate::geometry::{ChartManifold, GeometryError};
use crate::manifest::{CheckKind, FlowProbe};
use crate::operators::{
    classify, connection_lie_derivative, jacobi_operator, ClassifyOptions, FieldSpec,
    OperatorError,
};
use crate::quadrature::{verify_divergence_integral, verify_integral_identity, QuadratureError};
use crate::report::{
    CheckResult, FieldClassification, FlowProbeReport, IdentityReport, RunParameters,
};
use crate::sampling::{random_interior_points, sampling_box, SplitMix64};

/// Residual below which a field counts as exactly satisfying an equation
/// (the hypothesis side of an implication).
pub const TRIGGER_RESIDUAL: f64 = 1e-9;
/// Residual the implied equation must then stay under.
pub const IMPLIED_RESIDUAL: f64 = 1e-8;
/// Pointwise tolerance for operator symmetry and operator equivalence on
/// random samples.
pub const POINTWISE_TOL: f64 = 1e-9;
/// |∫ div X dvol| must stay below this times the chart volume.
pub const DIVERGENCE_INTEGRAL_TOL: f64 = 1e-8;
/// Allowed integral-identity defect, relative to the sum of term magnitudes.
pub const IDENTITY_RELATIVE_TOL: f64 = 1e-8;
/// Absolute defect floor for fields whose three identity terms all vanish
/// (for them the relative defect is 0/0).
pub const IDENTITY_ABSOLUTE_FLOOR: f64 = 1e-9;
/// Geodesic-deviation-equation residual allowed along geodesics of a field
/// whose deviation operator vanishes on the grid.
pub const GEODESIC_RESIDUAL_TOL: f64 = 1e-8;
/// Residual a field with expected non-vanishing deviation operator must
/// exceed on at least one sampled geodesic.
pub const GEODESIC_VIOLATION_FLOOR: f64 = 1e-2;
/// Affine span of sampled geodesics.
pub const GEODESIC_SPAN: f64 = 0.5;
/// Contraction of geodesic start points toward the box center along
/// non-periodic coordinates, so short geodesics stay inside the chart.
pub const GEODESIC_START_CONTRACTION: f64 = 0.65;

/// Errors from running suite checks.
#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    /// Misconfiguration detected while setting a check up (not a numerical
    /// failure).
    #[error("{0}")]
    Setup(String),
}

/// A named field with its expected classification, when one is known
/// (catalog entries ship expectations; manifest fields usually do not).
#[derive(Clone, Debug)]
pub struct SuiteField {
    pub name: String,
    pub spec: FieldSpec,
    pub expected: Option<ExpectedClassification>,
}

/// Everything a check can produce: the verdict plus any report sections it
/// filled along the way.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutput {
    pub result: CheckResult,
    pub classifications: Vec<FieldClassification>,
    pub identities: Vec<IdentityReport>,
    pub flows: Vec<FlowProbeReport>,
}

impl CheckOutput {
    fn bare(result: CheckResult) -> CheckOutput {
        CheckOutput {
            result,
            classifications: Vec::new(),
            identities: Vec::new(),
            flows: Vec::new(),
        }
    }
}

fn check_result(
    kind: CheckKind,
    passed: bool,
    detail: String,
    worst: Option<f64>,
    threshold: Option<f64>,
) -> CheckResult {
    CheckResult {
        name: kind.name().to_string(),
        passed,
        detail,
        worst,
        threshold,
    }
}

/// Classify every field and attach expectations.
pub fn classify_fields(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<Vec<FieldClassification>, SuiteError> {
    let options = ClassifyOptions {
        grid: params.grid,
        thresholds: params.thresholds,
    };
    fields
        .iter()
        .map(|field| {
            let classification = classify(manifold, &field.spec, &options)?;
            let matches_expected = field
                .expected
                .as_ref()
                .map(|expected| FieldClassification::matches(&classification, expected));
            Ok(FieldClassification {
                name: field.name.clone(),
                classification,
                expected: field.expected,
                matches_expected,
            })
        })
        .collect()
}

/// Check that measured classifications match the expected ones.
pub fn classification_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let classifications = classify_fields(manifold, fields, params)?;
    let with_expectation = classifications
        .iter()
        .filter(|f| f.expected.is_some())
        .count();
    let mismatches: Vec<&str> = classifications
        .iter()
        .filter(|f| f.matches_expected == Some(false))
        .map(|f| f.name.as_str())
        .collect();
    let passed = mismatches.is_empty();
    let detail = if with_expectation == 0 {
        "no expected classifications configured; nothing to compare".to_string()
    } else if passed {
        format!(
            "{} of {} fields carry expectations; all match",
            with_expectation,
            classifications.len()
        )
    } else {
        format!("classification mismatches: {}", mismatches.join(", "))
    };
    Ok(CheckOutput {
        result: check_result(CheckKind::Classification, passed, detail, None, None),
        classifications,
        identities: Vec::new(),
        flows: Vec::new(),
    })
}

fn shared_sample(manifold: &ChartManifold, params: &RunParameters) -> Vec<Vec<f64>> {
    random_interior_points(manifold, params.sample_points, params.seed)
}

/// Max |A[i][j][k] − A[i][k][j]| of the deviation operator over random
/// points: the operator must be symmetric in its two argument slots.
pub fn symmetry_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let points = shared_sample(manifold, params);
    let mut worst = 0.0f64;
    let mut worst_field = fields.first().map(|f| f.name.as_str()).unwrap_or("none");
    for field in fields {
        for point in &points {
            let geo = manifold.geometry_jet(point)?;
            let jet = field.spec.jet(point)?;
            let dev = jacobi_operator(&geo, &jet);
            let dim = manifold.dim();
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..j {
                        let asym = (dev[[i, j, k]] - dev[[i, k, j]]).abs();
                        if asym > worst {
                            worst = asym;
                            worst_field = &field.name;
                        }
                    }
                }
            }
        }
    }
    let passed = worst <= POINTWISE_TOL;
    let detail = format!(
        "max slot asymmetry {worst:.3e} (field {worst_field:?}) over {} fields x {} points, bound {POINTWISE_TOL:.0e}",
        fields.len(),
        points.len(),
    );
    Ok(CheckOutput::bare(check_result(
        CheckKind::Symmetry,
        passed,
        detail,
        Some(worst),
        Some(POINTWISE_TOL),
    )))
}

/// Max |deviation operator − connection Lie derivative| over random points:
/// the two coordinate formulas must agree identically.
pub fn operator_equivalence_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let points = shared_sample(manifold, params);
    let mut worst = 0.0f64;
    let mut worst_field = fields.first().map(|f| f.name.as_str()).unwrap_or("none");
    for field in fields {
        for point in &points {
            let geo = manifold.geometry_jet(point)?;
            let jet = field.spec.jet(point)?;
            let dev = jacobi_operator(&geo, &jet);
            let lie = connection_lie_derivative(&geo, &jet);
            let dim = manifold.dim();
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        let diff = (dev[[i, j, k]] - lie[[i, j, k]]).abs();
                        if diff > worst {
                            worst = diff;
                            worst_field = &field.name;
                        }
                    }
                }
            }
        }
    }
    let passed = worst <= POINTWISE_TOL;
    let detail = format!(
        "max operator difference {worst:.3e} (field {worst_field:?}) over {} fields x {} points, bound {POINTWISE_TOL:.0e}",
        fields.len(),
        points.len(),
    );
    Ok(CheckOutput::bare(check_result(
        CheckKind::OperatorEquivalence,
        passed,
        detail,
        Some(worst),
        Some(POINTWISE_TOL),
    )))
}

/// Every metric-preserving field must have vanishing deviation operator and
/// vanishing divergence.
pub fn killing_implications_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let classifications = classify_fields(manifold, fields, params)?;
    let mut triggered = 0usize;
    let mut worst = 0.0f64;
    let mut failures: Vec<String> = Vec::new();
    for field in &classifications {
        let c = &field.classification;
        if c.killing_residual > TRIGGER_RESIDUAL {
            continue;
        }
        triggered += 1;
        worst = worst.max(c.jacobi_residual).max(c.divergence_sup);
        if c.jacobi_residual > IMPLIED_RESIDUAL {
            failures.push(format!(
                "{}: deviation residual {:.3e}",
                field.name, c.jacobi_residual
            ));
        }
        if c.divergence_sup > IMPLIED_RESIDUAL {
            failures.push(format!(
                "{}: divergence sup {:.3e}",
                field.name, c.divergence_sup
            ));
        }
    }
    let passed = failures.is_empty();
    let detail = if triggered == 0 {
        "no field has metric-deformation residual below the trigger; implication vacuous".into()
    } else if passed {
        format!(
            "{triggered} metric-preserving field(s); worst implied residual {worst:.3e}, bound {IMPLIED_RESIDUAL:.0e}"
        )
    } else {
        failures.join("; ")
    };
    Ok(CheckOutput::bare(check_result(
        CheckKind::KillingImplications,
        passed,
        detail,
        Some(worst),
        Some(IMPLIED_RESIDUAL),
    )))
}

/// Every field with vanishing deviation operator must have constant
/// divergence over the grid.
pub fn divergence_constancy_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let classifications = classify_fields(manifold, fields, params)?;
    let mut triggered = 0usize;
    let mut worst = 0.0f64;
    let mut summaries: Vec<String> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for field in &classifications {
        let c = &field.classification;
        if c.jacobi_residual > TRIGGER_RESIDUAL {
            continue;
        }
        triggered += 1;
        worst = worst.max(c.divergence.spread);
        if c.divergence.spread <= IMPLIED_RESIDUAL {
            summaries.push(format!("{}={:+.3}", field.name, c.divergence.mean));
        } else {
            failures.push(format!(
                "{}: divergence spread {:.3e}",
                field.name, c.divergence.spread
            ));
        }
    }
    let passed = failures.is_empty();
    let detail = if triggered == 0 {
        "no field has deviation residual below the trigger; implication vacuous".into()
    } else if passed {
        format!(
            "{triggered} field(s) with vanishing deviation operator; divergence constant ({}), worst spread {worst:.3e}",
            summaries.join(", ")
        )
    } else {
        failures.join("; ")
    };
    Ok(CheckOutput::bare(check_result(
        CheckKind::DivergenceConstancy,
        passed,
        detail,
        Some(worst),
        Some(IMPLIED_RESIDUAL),
    )))
}

/// ∫ div X dvol must vanish on a compact chart, for every field.
pub fn divergence_integral_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let mut worst = 0.0f64;
    let mut worst_field = fields.first().map(|f| f.name.as_str()).unwrap_or("none");
    let mut volume = 0.0f64;
    for field in fields {
        let result = verify_divergence_integral(manifold, &field.spec, params.quadrature_nodes)?;
        volume = result.volume;
        let relative = result.integral.abs() / result.volume;
        if relative > worst {
            worst = relative;
            worst_field = &field.name;
        }
    }
    let passed = worst <= DIVERGENCE_INTEGRAL_TOL;
    let detail = format!(
        "max |divergence integral| / volume = {worst:.3e} (field {worst_field:?}, volume {volume:.6}), bound {DIVERGENCE_INTEGRAL_TOL:.0e}"
    );
    Ok(CheckOutput::bare(check_result(
        CheckKind::DivergenceIntegral,
        passed,
        detail,
        Some(worst),
        Some(DIVERGENCE_INTEGRAL_TOL),
    )))
}

/// The three-term integral identity must vanish on a compact chart, for
/// every field: the defect is bounded relative to the term magnitudes, with
/// an absolute floor for fields where all three terms vanish.
pub fn integral_identity_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let mut identities = Vec::with_capacity(fields.len());
    let mut worst: Option<(f64, &str, f64)> = None;
    for field in fields {
        let breakdown = verify_integral_identity(manifold, &field.spec, params.quadrature_nodes)?;
        let magnitudes =
            breakdown.term_jacobi.abs() + breakdown.term_killing.abs() + breakdown.term_div.abs();
        let allowance = IDENTITY_RELATIVE_TOL * magnitudes + IDENTITY_ABSOLUTE_FLOOR;
        let ratio = breakdown.total.abs() / allowance;
        if worst.map_or(true, |(r, _, _)| ratio > r) {
            worst = Some((ratio, &field.name, breakdown.total));
        }
        identities.push(IdentityReport {
            field: field.name.clone(),
            breakdown,
        });
    }
    let (worst_ratio, worst_field, worst_total) = worst.unwrap_or((0.0, "none", 0.0));
    let passed = worst_ratio <= 1.0;
    let detail = format!(
        "max defect/allowance = {worst_ratio:.3e} (field {worst_field:?}, total {worst_total:+.3e}); allowance = {IDENTITY_RELATIVE_TOL:.0e} x term magnitudes + {IDENTITY_ABSOLUTE_FLOOR:.0e}"
    );
    Ok(CheckOutput {
        result: check_result(
            CheckKind::IntegralIdentity,
            passed,
            detail,
            Some(worst_ratio),
            Some(1.0),
        ),
        classifications: Vec::new(),
        identities,
        flows: Vec::new(),
    })
}

/// On a compact chart, every field with vanishing deviation operator must
/// also preserve the metric.
pub fn compact_jacobi_implies_killing_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    if !manifold.is_compact() {
        return Err(SuiteError::Setup(format!(
            "chart {:?} is not compact; the compactness implication does not apply",
            manifold.name()
        )));
    }
    let classifications = classify_fields(manifold, fields, params)?;
    let mut triggered = 0usize;
    let mut worst = 0.0f64;
    let mut failures: Vec<String> = Vec::new();
    for field in &classifications {
        let c = &field.classification;
        if c.jacobi_residual > TRIGGER_RESIDUAL {
            continue;
        }
        triggered += 1;
        worst = worst.max(c.killing_residual);
        if c.killing_residual > IMPLIED_RESIDUAL {
            failures.push(format!(
                "{}: metric-deformation residual {:.3e}",
                field.name, c.killing_residual
            ));
        }
    }
    let passed = failures.is_empty();
    let detail = if triggered == 0 {
        "no field has deviation residual below the trigger; implication vacuous".into()
    } else if passed {
        format!(
            "{triggered} field(s) with vanishing deviation operator; worst metric-deformation residual {worst:.3e}, bound {IMPLIED_RESIDUAL:.0e}"
        )
    } else {
        failures.join("; ")
    };
    Ok(CheckOutput::bare(check_result(
        CheckKind::CompactJacobiImpliesKilling,
        passed,
        detail,
        Some(worst),
        Some(IMPLIED_RESIDUAL),
    )))
}

/// Evaluate one flow probe.
fn run_flow_probe(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    probe: &FlowProbe,
    options: &IntegratorOptions,
) -> Result<FlowProbeReport, SuiteError> {
    let field = fields
        .iter()
        .find(|f| f.name == probe.field)
        .ok_or_else(|| SuiteError::Setup(format!("flow probe names unknown field {:?}", probe.field)))?;
    let metric =
        metric_preservation_residual(manifold, &field.spec, &probe.point, probe.time, options)?;
    let volume =
        volume_preservation_residual(manifold, &field.spec, &probe.point, probe.time, options)?;
    let geodesic = match &probe.velocity {
        Some(velocity) => Some(geodesic_preservation_residual(
            manifold,
            &field.spec,
            &probe.point,
            velocity,
            probe.time,
            probe.geodesic_span.unwrap_or(1.0),
            options,
        )?),
        None => None,
    };

    let mut violations: Vec<String> = Vec::new();
    let mut bound = |label: &str, value: Option<f64>, max: Option<f64>, min: Option<f64>| {
        let Some(value) = value else { return };
        if let Some(max) = max {
            if !(value <= max) {
                violations.push(format!("{label} residual {value:.3e} exceeds bound {max:.3e}"));
            }
        }
        if let Some(min) = min {
            if !(value >= min) {
                violations.push(format!("{label} residual {value:.3e} below floor {min:.3e}"));
            }
        }
    };
    bound(
        "metric",
        Some(metric),
        probe.max_metric_residual,
        probe.min_metric_residual,
    );
    bound(
        "volume",
        Some(volume),
        probe.max_volume_residual,
        probe.min_volume_residual,
    );
    bound(
        "geodesic",
        geodesic,
        probe.max_geodesic_residual,
        probe.min_geodesic_residual,
    );

    Ok(FlowProbeReport {
        field: probe.field.clone(),
        point: probe.point.clone(),
        time: probe.time,
        metric_residual: metric,
        volume_residual: volume,
        geodesic_residual: geodesic,
        passed: violations.is_empty(),
        violations,
    })
}

/// Run every flow probe and check its residual bounds.
pub fn flow_preservation_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    probes: &[FlowProbe],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let options = IntegratorOptions {
        step: params.integrator_step,
    };
    let mut flows = Vec::with_capacity(probes.len());
    for probe in probes {
        flows.push(run_flow_probe(manifold, fields, probe, &options)?);
    }
    let failed: Vec<&str> = flows
        .iter()
        .filter(|f| !f.passed)
        .map(|f| f.field.as_str())
        .collect();
    let passed = failed.is_empty();
    let detail = if probes.is_empty() {
        "no flow probes configured".to_string()
    } else if passed {
        format!("{} probe(s), all residual bounds hold", flows.len())
    } else {
        format!("probes violating bounds: {}", failed.join(", "))
    };
    Ok(CheckOutput {
        result: check_result(CheckKind::FlowPreservation, passed, detail, None, None),
        classifications: Vec::new(),
        identities: Vec::new(),
        flows,
    })
}

/// Deterministic random geodesic initial data: interior points (contracted
/// toward the box center along non-periodic coordinates) with unit-speed
/// velocities in the chart metric.
pub fn random_geodesic_starts(
    manifold: &ChartManifold,
    count: usize,
    seed: u64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, SuiteError> {
    let boxes = sampling_box(manifold);
    let dim = manifold.dim();
    // Offset the seed so geodesic starts differ from the pointwise sample
    // stream even with the same configured seed.
    let mut rng = SplitMix64::new(seed.wrapping_add(0x67656f64));
    let mut starts = Vec::with_capacity(count);
    while starts.len() < count {
        let point: Vec<f64> = boxes
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi))| {
                let raw = rng.in_range(lo, hi);
                if manifold.periodic()[k] {
                    raw
                } else {
                    let center = 0.5 * (lo + hi);
                    center + GEODESIC_START_CONTRACTION * (raw - center)
                }
            })
            .collect();
        let direction: Vec<f64> = (0..dim).map(|_| rng.in_range(-1.0, 1.0)).collect();
        let euclidean: f64 = direction.iter().map(|v| v * v).sum();
        if euclidean < 1e-6 {
            continue; // degenerate direction; draw again
        }
        let (g, _) = manifold.metric_values(&point)?;
        let mut speed_sq = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                speed_sq += g[[i, j]] * direction[i] * direction[j];
            }
        }
        let scale = speed_sq.sqrt().recip();
        let velocity: Vec<f64> = direction.iter().map(|v| v * scale).collect();
        starts.push((point, velocity));
    }
    Ok(starts)
}

/// Evaluate the geodesic-deviation residual along one geodesic, shrinking
/// the affine span when the geodesic would leave the chart (the check is
/// local, so a shorter arc tests the same statement).
pub fn bounded_jacobi_ode_residual(
    manifold: &ChartManifold,
    field: &FieldSpec,
    start: &[f64],
    velocity: &[f64],
    options: &IntegratorOptions,
) -> Result<f64, SuiteError> {
    let mut span = GEODESIC_SPAN;
    for _ in 0..12 {
        match jacobi_ode_residual(manifold, field, start, velocity, span, options) {
            Err(DynamicsError::LeftChart { .. }) => span *= 0.5,
            other => return Ok(other?),
        }
    }
    Ok(jacobi_ode_residual(manifold, field, start, velocity, span, options)?)
}

/// Along random geodesics, fields with vanishing deviation operator must
/// satisfy the geodesic-deviation equation; fields expected to have
/// non-vanishing deviation operator must violate it somewhere.
pub fn jacobi_ode_check(
    manifold: &ChartManifold,
    fields: &[SuiteField],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    let classifications = classify_fields(manifold, fields, params)?;
    let starts = random_geodesic_starts(manifold, params.geodesic_probes, params.seed)?;
    let options = IntegratorOptions {
        step: params.integrator_step,
    };
    let mut checked = 0usize;
    let mut violated = 0usize;
    let mut worst = 0.0f64;
    let mut failures: Vec<String> = Vec::new();
    for (field, classified) in fields.iter().zip(&classifications) {
        let vanishing = classified.classification.jacobi_residual <= TRIGGER_RESIDUAL;
        let expected_nonvanishing = field
            .expected
            .map(|expected| !expected.global_jacobi)
            .unwrap_or(false);
        if !vanishing && !expected_nonvanishing {
            continue; // no hypothesis to test for this field
        }
        let mut field_max = 0.0f64;
        for (start, velocity) in &starts {
            let residual =
                bounded_jacobi_ode_residual(manifold, &field.spec, start, velocity, &options)?;
            field_max = field_max.max(residual);
        }
        if vanishing {
            checked += 1;
            worst = worst.max(field_max);
            if field_max > GEODESIC_RESIDUAL_TOL {
                failures.push(format!(
                    "{}: deviation-equation residual {field_max:.3e} along a geodesic",
                    field.name
                ));
            }
        } else {
            // expected non-vanishing: the equation must fail visibly somewhere
            violated += 1;
            if field_max <= GEODESIC_VIOLATION_FLOOR {
                failures.push(format!(
                    "{}: expected a deviation-equation violation above {GEODESIC_VIOLATION_FLOOR:.0e}, max residual {field_max:.3e}",
                    field.name
                ));
            }
        }
    }
    let passed = failures.is_empty();
    let detail = if checked + violated == 0 {
        "no field qualifies for the geodesic-deviation check".into()
    } else if passed {
        format!(
            "{checked} field(s) satisfy the deviation equation along {} geodesic(s) (worst residual {worst:.3e}); {violated} field(s) visibly violate it as expected",
            starts.len()
        )
    } else {
        failures.join("; ")
    };
    Ok(CheckOutput::bare(check_result(
        CheckKind::JacobiOde,
        passed,
        detail,
        Some(worst),
        Some(GEODESIC_RESIDUAL_TOL),
    )))
}

/// The checks that apply to a chart, in canonical report order.
pub fn applicable_checks(compact: bool, has_expectations: bool) -> Vec<CheckKind> {
    let mut kinds = Vec::new();
    if has_expectations {
        kinds.push(CheckKind::Classification);
    }
    kinds.extend([
        CheckKind::Symmetry,
        CheckKind::OperatorEquivalence,
        CheckKind::KillingImplications,
        CheckKind::DivergenceConstancy,
    ]);
    if compact {
        kinds.extend([
            CheckKind::DivergenceIntegral,
            CheckKind::IntegralIdentity,
            CheckKind::CompactJacobiImpliesKilling,
        ]);
    }
    kinds.extend([CheckKind::FlowPreservation, CheckKind::JacobiOde]);
    kinds
}

/// Dispatch a single check by kind.
pub fn run_check(
    kind: CheckKind,
    manifold: &ChartManifold,
    fields: &[SuiteField],
    probes: &[FlowProbe],
    params: &RunParameters,
) -> Result<CheckOutput, SuiteError> {
    match kind {
        CheckKind::Classification => classification_check(manifold, fields, params),
        CheckKind::Symmetry => symmetry_check(manifold, fields, params),
        CheckKind::OperatorEquivalence => operator_equivalence_check(manifold, fields, params),
        CheckKind::KillingImplications => killing_implications_check(manifold, fields, params),
        CheckKind::DivergenceConstancy => divergence_constancy_check(manifold, fields, params),
        CheckKind::DivergenceIntegral => divergence_integral_check(manifold, fields, params),
        CheckKind::IntegralIdentity => integral_identity_check(manifold, fields, params),
        CheckKind::CompactJacobiImpliesKilling => {
            compact_jacobi_implies_killing_check(manifold, fields, params)
        }
        CheckKind::FlowPreservation => flow_preservation_check(manifold, fields, probes, params),
        CheckKind::JacobiOde => jacobi_ode_check(manifold, fields, params),
    }
}

/// e² − 1: the metric/volume stretch of the dilation and saddle flows on the
/// flat plane after unit time.
const E_SQUARED_MINUS_ONE: f64 = 6.389056098930650;

/// Default flow probes for the built-in charts. Bounds follow the closed
/// forms of the probed flows (unit-time dilation stretches the metric by
/// e² − 1; isometric flows must preserve it to integrator accuracy).
pub fn builtin_flow_probes(name: &str) -> Vec<FlowProbe> {
    match name {
        "euclidean2" => vec![
            FlowProbe::new("translation", vec![-2.0, 3.0], 2.0)
                .metric_at_most(1e-12)
                .volume_at_most(1e-12),
            FlowProbe::new("rotation", vec![0.7, -0.3], 1.0)
                .metric_at_most(1e-9)
                .volume_at_most(1e-9),
            FlowProbe::new("dilation", vec![1.0, 0.0], 1.0)
                .with_velocity(vec![0.0, 1.0], 1.0)
                .volume_near(E_SQUARED_MINUS_ONE, 1e-4)
                .geodesic_at_most(1e-8),
            FlowProbe::new("saddle", vec![1.0, 1.0], 1.0)
                .metric_near(E_SQUARED_MINUS_ONE, 1e-4)
                .volume_at_most(1e-9),
            FlowProbe::new("quadratic", vec![1.0, 0.0], 0.1)
                .with_velocity(vec![1.0, 0.0], 1.0)
                .geodesic_at_least(1e-3),
        ],
        "flat_torus2" => vec![
            FlowProbe::new("translation", vec![1.0, 2.0], 1.0)
                .metric_at_most(1e-12)
                .volume_at_most(1e-12),
            FlowProbe::new("sinx", vec![1.0, 0.0], 0.5).metric_at_least(1e-3),
            FlowProbe::new("sinx_cosy", vec![1.0, 1.0], 0.5)
                .metric_at_least(1e-4)
                .volume_at_most(1e-8),
        ],
        "sphere2" => {
            let pairs: [([f64; 2], f64); 5] = [
                ([std::f64::consts::FRAC_PI_3, 0.2], 0.7),
                ([1.0, 5.0], 0.3),
                ([2.0, 1.5], 1.0),
                ([std::f64::consts::FRAC_PI_2, 3.0], 1.5),
                ([0.8, 2.2], 2.0),
            ];
            let mut probes: Vec<FlowProbe> = pairs
                .iter()
                .map(|(point, time)| {
                    FlowProbe::new("azimuthal", point.to_vec(), *time)
                        .metric_at_most(1e-6)
                        .volume_at_most(1e-6)
                })
                .collect();
            probes.push(
                FlowProbe::new("tilted", vec![1.1, 0.4], 0.8)
                    .with_velocity(vec![0.3, 0.5], 0.5)
                    .metric_at_most(1e-6)
                    .volume_at_most(1e-6)
                    .geodesic_at_most(1e-6),
            );
            probes
        }
        "hyperbolic2" => vec![
            FlowProbe::new("translation", vec![0.0, 1.0], 1.5)
                .metric_at_most(1e-12)
                .volume_at_most(1e-12),
            FlowProbe::new("dilation", vec![1.0, 2.0], 0.5)
                .metric_at_most(1e-8)
                .volume_at_most(1e-8),
            FlowProbe::new("dilation", vec![0.0, 1.0], 0.5)
                .with_velocity(vec![0.0, 1.0], 0.5)
                .geodesic_at_most(1e-6),
        ],
        _ => Vec::new(),
    }
}
