//! Command-line front end: argument types, command execution, error → exit
//! code mapping.
//!
//! Exit codes: 0 when every configured expectation holds, 1 when a check or
//! expectation fails, 2 for input errors (bad manifest, unknown names, bad
//! flags), 3 for numerical domain errors hit during computation (evaluation
//! outside the chart, metric not positive definite, trajectory leaving the
//! chart). Checks run concurrently; report assembly is single-threaded and
//! the report layout is fixed, so repeated runs produce byte-identical
//! reports apart from the timing map.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::{self, CatalogError};
use crate::dynamics::{integrate_flow, integrate_geodesic, DynamicsError, IntegratorOptions};
use crate::geometry::{ChartManifold, GeometryError};
use crate::manifest::{CheckKind, FlowProbe, Manifest, ManifestError};
use crate::operators::{OperatorError, Thresholds};
use crate::quadrature::QuadratureError;
use crate::report::{Report, RunParameters, ToolInfo};
use crate::suite::{self, CheckOutput, SuiteError, SuiteField};

/// How a failed invocation exits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: manifest, schema, flags, unknown names. Exit 2.
    Usage,
    /// Numerical domain failure during computation. Exit 3.
    Numerical,
}

/// A classified failure, carrying the message printed to stderr.
#[derive(Debug)]
pub struct ToolError {
    pub class: ErrorClass,
    pub message: String,
}

impl ToolError {
    fn usage(message: impl Into<String>) -> ToolError {
        ToolError {
            class: ErrorClass::Usage,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> ToolError {
        ToolError {
            class: ErrorClass::Numerical,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Usage => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

impl fmt::Display for ToolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<GeometryError> for ToolError {
    fn from(err: GeometryError) -> ToolError {
        match &err {
            GeometryError::InvalidChart { .. } => ToolError::usage(err.to_string()),
            _ => ToolError::numerical(err.to_string()),
        }
    }
}

impl From<OperatorError> for ToolError {
    fn from(err: OperatorError) -> ToolError {
        match err {
            OperatorError::Geometry(inner) => inner.into(),
            OperatorError::FieldEval { .. } => ToolError::numerical(err.to_string()),
        }
    }
}

impl From<DynamicsError> for ToolError {
    fn from(err: DynamicsError) -> ToolError {
        match err {
            DynamicsError::Geometry(inner) => inner.into(),
            DynamicsError::Operator(inner) => inner.into(),
            DynamicsError::InvalidSetup { .. } => ToolError::usage(err.to_string()),
            DynamicsError::LeftChart { .. } => ToolError::numerical(err.to_string()),
        }
    }
}

impl From<QuadratureError> for ToolError {
    fn from(err: QuadratureError) -> ToolError {
        match err {
            QuadratureError::Geometry(inner) => inner.into(),
            QuadratureError::Operator(inner) => inner.into(),
            QuadratureError::NotCompact { .. } | QuadratureError::InvalidRule { .. } => {
                ToolError::usage(err.to_string())
            }
        }
    }
}

impl From<SuiteError> for ToolError {
    fn from(err: SuiteError) -> ToolError {
        match err {
            SuiteError::Geometry(inner) => inner.into(),
            SuiteError::Operator(inner) => inner.into(),
            SuiteError::Dynamics(inner) => inner.into(),
            SuiteError::Quadrature(inner) => inner.into(),
            SuiteError::Setup(message) => ToolError::usage(message),
        }
    }
}

impl From<ManifestError> for ToolError {
    fn from(err: ManifestError) -> ToolError {
        ToolError::usage(err.to_string())
    }
}

impl From<CatalogError> for ToolError {
    fn from(err: CatalogError) -> ToolError {
        ToolError::usage(err.to_string())
    }
}

/// Where the chart and fields come from: a built-in catalog entry or a
/// manifest file. Exactly one must be given.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Built-in chart: euclidean2, flat_torus2, sphere2, hyperbolic2.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Path to a manifest JSON file.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Numerical overrides. Unset flags fall back to the manifest run block
/// (or its defaults).
#[derive(Args, Debug, Default)]
pub struct Tuning {
    /// Lattice points per dimension for the classification grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Quadrature nodes per dimension for volume integrals.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Fixed integrator step for geodesics and flows.
    #[arg(long)]
    pub step: Option<f64>,
    /// Uniform residual threshold for classification.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the JSON report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Arguments shared by the report-producing commands.
#[derive(Args, Debug)]
pub struct SuiteArgs {
    #[command(flatten)]
    pub source: Source,
    /// Restrict to the named fields (repeatable).
    #[arg(long = "field")]
    pub fields: Vec<String>,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrajectoryKind {
    Geodesic,
    Flow,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    #[command(flatten)]
    pub source: Source,
    /// Trajectory kind.
    #[arg(long, value_enum)]
    pub kind: TrajectoryKind,
    /// Field name (flow trajectories).
    #[arg(long)]
    pub field: Option<String>,
    /// Comma-separated start coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub start: Vec<f64>,
    /// Comma-separated initial velocity (geodesic trajectories).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub velocity: Option<Vec<f64>>,
    /// Integration time span.
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    /// Integrator step.
    #[arg(long)]
    pub step: Option<f64>,
    /// Write the JSON lines to this path instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub source: Source,
    /// Write the manifest JSON to this path instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify each field as metric-, geodesic-, and volume-preserving.
    Classify(SuiteArgs),
    /// Evaluate the three-term integral identity on a compact chart.
    VerifyIdentity(SuiteArgs),
    /// Measure metric/volume/geodesic preservation along configured flows.
    CheckFlows(SuiteArgs),
    /// Run every verification check applicable to the chart.
    CheckTheorems(SuiteArgs),
    /// Integrate one geodesic or flow and emit samples as JSON lines.
    DumpTrajectory(DumpArgs),
    /// Emit the manifest JSON for a chart (canonical form for built-ins).
    ExportManifest(ExportArgs),
}

/// Classify vector fields on chart-defined Riemannian manifolds and verify
/// the relations between metric-, geodesic-, and volume-preserving fields.
#[derive(Parser, Debug)]
#[command(name = "chartfield", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// What an invocation produced: text for standard output and the overall
/// verdict.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub passed: bool,
}

/// A loaded problem: chart, fields (with expectations when built-in),
/// probes, resolved parameters.
struct Loaded {
    manifold: ChartManifold,
    fields: Vec<SuiteField>,
    probes: Vec<FlowProbe>,
    params: RunParameters,
    selected_checks: Option<Vec<CheckKind>>,
    manifest_hash: String,
}

fn load(source: &Source, tuning: &Tuning, field_filter: &[String]) -> Result<Loaded, ToolError> {
    let (manifest, manifold, mut fields, probes) = match (&source.builtin, &source.manifest) {
        (Some(name), None) => {
            let entry = catalog::builtin(name)?;
            let manifest = Manifest::from_catalog(&entry);
            let fields: Vec<SuiteField> = entry
                .fields
                .iter()
                .map(|f| SuiteField {
                    name: f.name.clone(),
                    spec: f.spec.clone(),
                    expected: Some(f.expected),
                })
                .collect();
            let probes = suite::builtin_flow_probes(entry.manifold.name());
            (manifest, entry.manifold, fields, probes)
        }
        (None, Some(path)) => {
            let manifest = Manifest::from_path(path)?;
            let (manifold, named) = manifest.build()?;
            let fields = named
                .into_iter()
                .map(|(name, spec)| SuiteField {
                    name,
                    spec,
                    expected: None,
                })
                .collect();
            let probes = manifest.run.flow_probes.clone();
            (manifest, manifold, fields, probes)
        }
        // clap's required group makes these unreachable from the CLI.
        _ => return Err(ToolError::usage("exactly one of --builtin or --manifest is required")),
    };

    if !field_filter.is_empty() {
        let available: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
        for name in field_filter {
            if !available.contains(&name.as_str()) {
                return Err(ToolError::usage(format!(
                    "unknown field {name:?} on chart {:?}; available: {}",
                    manifold.name(),
                    available.join(", ")
                )));
            }
        }
        fields.retain(|f| field_filter.contains(&f.name));
    }
    let probes = probes
        .into_iter()
        .filter(|p| fields.iter().any(|f| f.name == p.field))
        .collect();

    let run = &manifest.run;
    let mut grid = run.grid;
    if let Some(lattice) = tuning.grid {
        if lattice < 2 {
            return Err(ToolError::usage("--grid must be at least 2"));
        }
        grid.lattice_per_dim = lattice;
    }
    let thresholds = match tuning.tol {
        Some(tol) if tol > 0.0 && tol.is_finite() => Thresholds::uniform(tol),
        Some(tol) => {
            return Err(ToolError::usage(format!(
                "--tol must be positive and finite, got {tol}"
            )))
        }
        None => run.thresholds,
    };
    let quadrature_nodes = match tuning.nodes {
        Some(0) => return Err(ToolError::usage("--nodes must be positive")),
        Some(nodes) => nodes,
        None => run.quadrature_nodes,
    };
    let integrator_step = match tuning.step {
        Some(step) if step > 0.0 && step.is_finite() => step,
        Some(step) => {
            return Err(ToolError::usage(format!(
                "--step must be positive and finite, got {step}"
            )))
        }
        None => run.integrator_step,
    };

    let params = RunParameters {
        grid,
        thresholds,
        quadrature_nodes,
        integrator_step,
        sample_points: run.sample_points,
        geodesic_probes: run.geodesic_probes,
        seed: run.seed,
    };
    let manifest_hash = manifest.hash();
    Ok(Loaded {
        manifold,
        fields,
        probes,
        params,
        selected_checks: manifest.run.checks.clone(),
        manifest_hash,
    })
}

fn empty_report(command: &str, loaded: &Loaded) -> Report {
    Report {
        tool: ToolInfo::current(),
        command: command.to_string(),
        manifold: loaded.manifold.name().to_string(),
        manifest_hash: loaded.manifest_hash.clone(),
        parameters: loaded.params.clone(),
        classifications: Vec::new(),
        identities: Vec::new(),
        flows: Vec::new(),
        checks: Vec::new(),
        passed: true,
        timing_ms: BTreeMap::new(),
    }
}

/// Run the given checks concurrently and fold their outputs into the
/// report in canonical order.
fn run_checks(kinds: &[CheckKind], loaded: &Loaded, report: &mut Report) -> Result<(), ToolError> {
    let manifold = &loaded.manifold;
    let fields = &loaded.fields;
    let probes = &loaded.probes;
    let params = &loaded.params;
    let total_start = Instant::now();
    let outputs: Vec<(CheckKind, Result<CheckOutput, SuiteError>, f64)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = kinds
                .iter()
                .map(|&kind| {
                    scope.spawn(move || {
                        let start = Instant::now();
                        let output = suite::run_check(kind, manifold, fields, probes, params);
                        (kind, output, start.elapsed().as_secs_f64() * 1e3)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|handle| handle.join().expect("check thread panicked"))
                .collect()
        });

    for (kind, output, elapsed_ms) in outputs {
        let output = output.map_err(ToolError::from)?;
        report.timing_ms.insert(kind.name().to_string(), elapsed_ms);
        report.classifications.extend(output.classifications);
        report.identities.extend(output.identities);
        report.flows.extend(output.flows);
        if !output.result.passed {
            report.passed = false;
        }
        report.checks.push(output.result);
    }
    report
        .timing_ms
        .insert("total".to_string(), total_start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn finish_report(report: Report, out: &Option<PathBuf>) -> Result<Outcome, ToolError> {
    if let Some(path) = out {
        std::fs::write(path, report.to_json()).map_err(|err| {
            ToolError::usage(format!("cannot write report to {}: {err}", path.display()))
        })?;
    }
    Ok(Outcome {
        stdout: report.render_summary(),
        passed: report.passed,
    })
}

fn run_suite_command(
    command: &str,
    kinds: &[CheckKind],
    args: &SuiteArgs,
) -> Result<Outcome, ToolError> {
    let loaded = load(&args.source, &args.tuning, &args.fields)?;
    let mut report = empty_report(command, &loaded);
    run_checks(kinds, &loaded, &mut report)?;
    finish_report(report, &args.tuning.out)
}

/// The compact-only checks, which cannot run on a non-compact chart.
fn requires_compact(kind: CheckKind) -> bool {
    matches!(
        kind,
        CheckKind::DivergenceIntegral
            | CheckKind::IntegralIdentity
            | CheckKind::CompactJacobiImpliesKilling
    )
}

fn check_theorems(args: &SuiteArgs) -> Result<Outcome, ToolError> {
    let loaded = load(&args.source, &args.tuning, &args.fields)?;
    let has_expectations = loaded.fields.iter().any(|f| f.expected.is_some());
    let kinds: Vec<CheckKind> = match &loaded.selected_checks {
        None => suite::applicable_checks(loaded.manifold.is_compact(), has_expectations),
        Some(selected) => {
            // Honor the manifest's selection, in canonical order.
            let canonical = suite::applicable_checks(true, true);
            let mut kinds = Vec::new();
            for kind in canonical {
                if !selected.contains(&kind) {
                    continue;
                }
                if requires_compact(kind) && !loaded.manifold.is_compact() {
                    return Err(ToolError::usage(format!(
                        "check {kind} requires a compact chart, and {:?} is not compact",
                        loaded.manifold.name()
                    )));
                }
                kinds.push(kind);
            }
            kinds
        }
    };
    let mut report = empty_report("check-theorems", &loaded);
    run_checks(&kinds, &loaded, &mut report)?;
    finish_report(report, &args.tuning.out)
}

fn dump_trajectory(args: &DumpArgs) -> Result<Outcome, ToolError> {
    let loaded = load(
        &args.source,
        &Tuning {
            step: args.step,
            ..Tuning::default()
        },
        &[],
    )?;
    let dim = loaded.manifold.dim();
    if args.start.len() != dim {
        return Err(ToolError::usage(format!(
            "--start must have {dim} coordinates, got {}",
            args.start.len()
        )));
    }
    let options = IntegratorOptions {
        step: loaded.params.integrator_step,
    };
    let mut lines = String::new();
    match args.kind {
        TrajectoryKind::Geodesic => {
            let velocity = args.velocity.as_ref().ok_or_else(|| {
                ToolError::usage("--velocity is required for geodesic trajectories")
            })?;
            if velocity.len() != dim {
                return Err(ToolError::usage(format!(
                    "--velocity must have {dim} components, got {}",
                    velocity.len()
                )));
            }
            let trajectory = integrate_geodesic(
                &loaded.manifold,
                &args.start,
                velocity,
                args.time,
                &options,
            )?;
            for sample in &trajectory.samples {
                lines.push_str(&serde_json::to_string(sample).expect("sample serializes"));
                lines.push('\n');
            }
        }
        TrajectoryKind::Flow => {
            let name = args.field.as_ref().ok_or_else(|| {
                ToolError::usage("--field is required for flow trajectories")
            })?;
            let field = loaded
                .fields
                .iter()
                .find(|f| &f.name == name)
                .ok_or_else(|| {
                    let available: Vec<&str> =
                        loaded.fields.iter().map(|f| f.name.as_str()).collect();
                    ToolError::usage(format!(
                        "unknown field {name:?} on chart {:?}; available: {}",
                        loaded.manifold.name(),
                        available.join(", ")
                    ))
                })?;
            let trajectory = integrate_flow(
                &loaded.manifold,
                &field.spec,
                &args.start,
                args.time,
                &options,
            )?;
            for sample in &trajectory.samples {
                lines.push_str(&serde_json::to_string(sample).expect("sample serializes"));
                lines.push('\n');
            }
        }
    }
    if let Some(path) = &args.out {
        std::fs::write(path, &lines).map_err(|err| {
            ToolError::usage(format!("cannot write trajectory to {}: {err}", path.display()))
        })?;
        Ok(Outcome {
            stdout: String::new(),
            passed: true,
        })
    } else {
        Ok(Outcome {
            stdout: lines,
            passed: true,
        })
    }
}

fn export_manifest(args: &ExportArgs) -> Result<Outcome, ToolError> {
    let manifest = match (&args.source.builtin, &args.source.manifest) {
        (Some(name), None) => Manifest::from_catalog(&catalog::builtin(name)?),
        (None, Some(path)) => Manifest::from_path(path)?,
        _ => return Err(ToolError::usage("exactly one of --builtin or --manifest is required")),
    };
    let mut text =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    text.push('\n');
    if let Some(path) = &args.out {
        std::fs::write(path, &text).map_err(|err| {
            ToolError::usage(format!("cannot write manifest to {}: {err}", path.display()))
        })?;
        Ok(Outcome {
            stdout: String::new(),
            passed: true,
        })
    } else {
        Ok(Outcome {
            stdout: text,
            passed: true,
        })
    }
}

/// Execute a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome, ToolError> {
    match &cli.command {
        Command::Classify(args) => {
            run_suite_command("classify", &[CheckKind::Classification], args)
        }
        Command::VerifyIdentity(args) => {
            run_suite_command("verify-identity", &[CheckKind::IntegralIdentity], args)
        }
        Command::CheckFlows(args) => {
            run_suite_command("check-flows", &[CheckKind::FlowPreservation], args)
        }
        Command::CheckTheorems(args) => check_theorems(args),
        Command::DumpTrajectory(args) => dump_trajectory(args),
        Command::ExportManifest(args) => export_manifest(args),
    }
}

/// Parse arguments, execute, print, and return the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.passed {
                0
            } else {
                1
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn parse(argv: &[&str]) -> Cli {
        Cli::try_parse_from(argv).expect("arguments parse")
    }

    #[test]
    fn cli_structure_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn classify_builtin_field_passes() {
        let cli = parse(&[
            "chartfield",
            "classify",
            "--builtin",
            "euclidean2",
            "--field",
            "saddle",
        ]);
        let outcome = execute(&cli).unwrap();
        assert!(outcome.passed);
        assert!(outcome.stdout.contains("saddle"));
        assert!(outcome.stdout.contains("killing=no "));
        assert!(outcome.stdout.contains("jacobi=yes"));
        assert!(outcome.stdout.contains("solenoidal=yes"));
        assert!(outcome.stdout.contains("result: PASS"));
    }

    #[test]
    fn unknown_builtin_is_usage_error() {
        let cli = parse(&["chartfield", "classify", "--builtin", "nowhere"]);
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.class, ErrorClass::Usage);
        assert!(err.message.contains("euclidean2"), "{}", err.message);
    }

    #[test]
    fn unknown_field_is_usage_error() {
        let cli = parse(&[
            "chartfield",
            "classify",
            "--builtin",
            "euclidean2",
            "--field",
            "ghost",
        ]);
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.class, ErrorClass::Usage);
        assert!(err.message.contains("available"), "{}", err.message);
    }

    #[test]
    fn identity_on_open_chart_is_usage_error() {
        let cli = parse(&["chartfield", "verify-identity", "--builtin", "euclidean2"]);
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.class, ErrorClass::Usage);
    }

    #[test]
    fn trajectory_outside_chart_is_numerical_error() {
        let cli = parse(&[
            "chartfield",
            "dump-trajectory",
            "--builtin",
            "euclidean2",
            "--kind",
            "geodesic",
            "--start",
            "9,0",
            "--velocity",
            "1,0",
        ]);
        let err = execute(&cli).unwrap_err();
        assert_eq!(err.class, ErrorClass::Numerical);
        assert!(err.message.contains('9'), "{}", err.message);
    }

    #[test]
    fn bad_tuning_flags_are_usage_errors() {
        for argv in [
            vec!["chartfield", "classify", "--builtin", "euclidean2", "--tol=-1"],
            vec!["chartfield", "classify", "--builtin", "euclidean2", "--grid", "1"],
            vec!["chartfield", "check-theorems", "--builtin", "flat_torus2", "--step", "0"],
            vec!["chartfield", "verify-identity", "--builtin", "flat_torus2", "--nodes", "0"],
        ] {
            let err = execute(&parse(&argv)).unwrap_err();
            assert_eq!(err.class, ErrorClass::Usage, "{argv:?}");
        }
    }

    #[test]
    fn source_group_requires_exactly_one() {
        assert!(Cli::try_parse_from(["chartfield", "classify"]).is_err());
        assert!(Cli::try_parse_from([
            "chartfield",
            "classify",
            "--builtin",
            "euclidean2",
            "--manifest",
            "x.json"
        ])
        .is_err());
    }
}
