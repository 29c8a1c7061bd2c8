//! Report types for the command-line tool.
//!
//! A report is a single JSON document with a fixed key order: tool identity,
//! the manifest hash, the resolved numerical parameters, then the result
//! sections (classifications, identity breakdowns, flow probes, checks).
//! Everything except `timing_ms` is deterministic for a given manifest and
//! tool version, so two runs on the same input produce byte-identical
//! reports once the timing map is dropped.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::catalog::ExpectedClassification;
use crate::operators::{ClassificationReport, Thresholds};
use crate::quadrature::IdentityBreakdown;
use crate::sampling::GridSpec;

/// Name and version of the binary that produced a report.
#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> ToolInfo {
        ToolInfo {
            name: "chartfield",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// The numerical parameters a run actually used, after flag overrides.
#[derive(Clone, Debug, Serialize)]
pub struct RunParameters {
    pub grid: GridSpec,
    pub thresholds: Thresholds,
    pub quadrature_nodes: usize,
    pub integrator_step: f64,
    pub sample_points: usize,
    pub geodesic_probes: usize,
    pub seed: u64,
}

/// Classification of one named field, with the expected values when the
/// chart is a built-in catalog entry.
#[derive(Clone, Debug, Serialize)]
pub struct FieldClassification {
    pub name: String,
    pub classification: ClassificationReport,
    pub expected: Option<ExpectedClassification>,
    /// Whether the measured booleans (and constant divergence, within
    /// 1e-6) match `expected`; `None` when there is no expectation.
    pub matches_expected: Option<bool>,
}

impl FieldClassification {
    /// Compare a classification against an expectation.
    pub fn matches(report: &ClassificationReport, expected: &ExpectedClassification) -> bool {
        let booleans = report.is_killing == expected.killing
            && report.is_global_jacobi == expected.global_jacobi
            && report.is_solenoidal == expected.solenoidal;
        let divergence = match (report.constant_divergence, expected.constant_divergence) {
            (Some(measured), Some(wanted)) => (measured - wanted).abs() <= 1e-6,
            (None, None) => true,
            _ => false,
        };
        booleans && divergence
    }
}

/// The integral-identity breakdown for one named field.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub field: String,
    pub breakdown: IdentityBreakdown,
}

/// Measured residuals for one flow probe, with the bounds it was checked
/// against and any violations.
#[derive(Clone, Debug, Serialize)]
pub struct FlowProbeReport {
    pub field: String,
    pub point: Vec<f64>,
    pub time: f64,
    pub metric_residual: f64,
    pub volume_residual: f64,
    /// Present when the probe carried an initial geodesic velocity.
    pub geodesic_residual: Option<f64>,
    pub passed: bool,
    /// Human-readable descriptions of violated bounds (empty when passed).
    pub violations: Vec<String>,
}

/// Outcome of one suite check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// What was measured, worst offender first.
    pub detail: String,
    /// The extreme residual the check observed, when meaningful.
    pub worst: Option<f64>,
    /// The bound `worst` was compared against, when meaningful.
    pub threshold: Option<f64>,
}

/// The complete output of one command invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub command: String,
    pub manifold: String,
    pub manifest_hash: String,
    pub parameters: RunParameters,
    pub classifications: Vec<FieldClassification>,
    pub identities: Vec<IdentityReport>,
    pub flows: Vec<FlowProbeReport>,
    pub checks: Vec<CheckResult>,
    /// True iff every configured expectation held.
    pub passed: bool,
    /// Wall-clock milliseconds per check plus `"total"`. The only
    /// nondeterministic part of the report.
    pub timing_ms: BTreeMap<String, f64>,
}

impl Report {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }

    /// Names of the checks that failed, in report order.
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|check| !check.passed)
            .map(|check| check.name.as_str())
            .collect()
    }

    /// The human-readable summary printed to standard output.
    pub fn render_summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.tool.name, self.tool.version);
        let _ = writeln!(
            out,
            "chart {} · manifest sha256:{}",
            self.manifold,
            &self.manifest_hash[..12.min(self.manifest_hash.len())]
        );
        let p = &self.parameters;
        let _ = writeln!(
            out,
            "parameters: grid {}^d+{}, nodes {}, step {:e}, thresholds k={:e} j={:e} s={:e}, seed {}",
            p.grid.lattice_per_dim,
            p.grid.quasi_random,
            p.quadrature_nodes,
            p.integrator_step,
            p.thresholds.killing,
            p.thresholds.jacobi,
            p.thresholds.solenoidal,
            p.seed,
        );

        if !self.classifications.is_empty() {
            let _ = writeln!(out, "\nclassification");
            let width = self
                .classifications
                .iter()
                .map(|f| f.name.len())
                .max()
                .unwrap_or(0);
            for field in &self.classifications {
                let c = &field.classification;
                let flag = |b: bool| if b { "yes" } else { "no " };
                let divergence = match c.constant_divergence {
                    Some(value) => format!("div const {value:+.6}"),
                    None => format!("div varies [{:+.3}, {:+.3}]", c.divergence.min, c.divergence.max),
                };
                let verdict = match field.matches_expected {
                    Some(true) => "  [matches expected]",
                    Some(false) => "  [MISMATCH vs expected]",
                    None => "",
                };
                let _ = writeln!(
                    out,
                    "  {:width$}  killing={} jacobi={} solenoidal={}  {}  (residuals k={:.2e} j={:.2e} div_sup={:.2e}){}",
                    field.name,
                    flag(c.is_killing),
                    flag(c.is_global_jacobi),
                    flag(c.is_solenoidal),
                    divergence,
                    c.killing_residual,
                    c.jacobi_residual,
                    c.divergence_sup,
                    verdict,
                );
            }
        }

        if !self.identities.is_empty() {
            let nodes = self.identities[0].breakdown.nodes_per_dim;
            let _ = writeln!(out, "\nintegral identity ({nodes} nodes per dimension)");
            for identity in &self.identities {
                let b = &identity.breakdown;
                let _ = writeln!(
                    out,
                    "  {}  jacobi_term={:+.9} killing_term={:+.9} div_term={:+.9} total={:+.3e} defect={:.3e}",
                    identity.field, b.term_jacobi, b.term_killing, b.term_div, b.total, b.relative_defect,
                );
            }
        }

        if !self.flows.is_empty() {
            let _ = writeln!(out, "\nflow probes");
            for probe in &self.flows {
                let geodesic = match probe.geodesic_residual {
                    Some(r) => format!(" geodesic={:.3e}", r),
                    None => String::new(),
                };
                let _ = writeln!(
                    out,
                    "  [{}] {} at {:?} t={}  metric={:.3e} volume={:.3e}{}",
                    if probe.passed { "PASS" } else { "FAIL" },
                    probe.field,
                    probe.point,
                    probe.time,
                    probe.metric_residual,
                    probe.volume_residual,
                    geodesic,
                );
                for violation in &probe.violations {
                    let _ = writeln!(out, "         {violation}");
                }
            }
        }

        if !self.checks.is_empty() {
            let _ = writeln!(out, "\nchecks");
            let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for check in &self.checks {
                let timing = self
                    .timing_ms
                    .get(&check.name)
                    .map(|ms| format!("  ({ms:.0} ms)"))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "  [{}] {:width$}  {}{}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail,
                    timing,
                );
            }
        }

        let failed = self.failed_checks();
        let mismatches: Vec<&str> = self
            .classifications
            .iter()
            .filter(|f| f.matches_expected == Some(false))
            .map(|f| f.name.as_str())
            .collect();
        if self.passed {
            let _ = writeln!(out, "\nresult: PASS");
        } else {
            let mut reasons: Vec<String> = Vec::new();
            if !failed.is_empty() {
                reasons.push(format!("failed checks: {}", failed.join(", ")));
            }
            if !mismatches.is_empty() {
                reasons.push(format!("classification mismatches: {}", mismatches.join(", ")));
            }
            let _ = writeln!(out, "\nresult: FAIL ({})", reasons.join("; "));
        }
        out
    }
}
