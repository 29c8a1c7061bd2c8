//! End-to-end tests of the command-line binary: exit codes, report
//! structure, determinism, and error messages.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chartfield"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, expected: i32) {
    let code = output.status.code().expect("no signal");
    assert_eq!(
        code,
        expected,
        "expected exit {expected}, got {code}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn scratch(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chartfield-cli-{}-{test}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn read_report(path: &PathBuf) -> Value {
    let text = std::fs::read_to_string(path).expect("report file exists");
    serde_json::from_str(&text).expect("report is valid JSON")
}

#[test]
fn classify_reports_expected_booleans() {
    let dir = scratch("classify");
    let out = dir.join("report.json");
    let output = run(&[
        "classify",
        "--builtin",
        "euclidean2",
        "--field",
        "saddle",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    assert!(stdout_of(&output).contains("result: PASS"));

    let report = read_report(&out);
    assert_eq!(report["manifold"], "euclidean2");
    assert_eq!(report["passed"], true);
    let classifications = report["classifications"].as_array().unwrap();
    assert_eq!(classifications.len(), 1);
    let saddle = &classifications[0];
    assert_eq!(saddle["name"], "saddle");
    assert_eq!(saddle["classification"]["is_killing"], false);
    assert_eq!(saddle["classification"]["is_global_jacobi"], true);
    assert_eq!(saddle["classification"]["is_solenoidal"], true);
    assert_eq!(saddle["matches_expected"], true);
}

#[test]
fn check_theorems_passes_on_the_sphere() {
    let output = run(&["check-theorems", "--builtin", "sphere2"]);
    assert_exit(&output, 0);
    let text = stdout_of(&output);
    assert!(text.contains("result: PASS"), "stdout:\n{text}");
    for check in [
        "symmetry",
        "operator_equivalence",
        "divergence_integral",
        "integral_identity",
        "compact_jacobi_implies_killing",
        "flow_preservation",
        "jacobi_ode",
    ] {
        assert!(text.contains(check), "missing check {check} in:\n{text}");
    }
}

#[test]
fn identity_terms_match_their_closed_forms() {
    let dir = scratch("identity");
    let out = dir.join("report.json");
    let output = run(&[
        "verify-identity",
        "--builtin",
        "flat_torus2",
        "--field",
        "sinx",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);

    let report = read_report(&out);
    let identities = report["identities"].as_array().unwrap();
    assert_eq!(identities.len(), 1);
    let breakdown = &identities[0]["breakdown"];
    let two_pi_sq = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    let term_killing = breakdown["term_killing"].as_f64().unwrap();
    assert!(
        (term_killing - 2.0 * two_pi_sq).abs() < 1e-6,
        "term_killing = {term_killing}"
    );
    let term_jacobi = breakdown["term_jacobi"].as_f64().unwrap();
    assert!((term_jacobi + two_pi_sq).abs() < 1e-6, "term_jacobi = {term_jacobi}");
    let term_div = breakdown["term_div"].as_f64().unwrap();
    assert!((term_div - two_pi_sq).abs() < 1e-6, "term_div = {term_div}");
    let total = breakdown["total"].as_f64().unwrap();
    assert!(total.abs() < 1e-7, "total = {total}");
}

#[test]
fn loose_tolerance_breaks_expectations() {
    let output = run(&["classify", "--builtin", "euclidean2", "--tol", "100"]);
    assert_exit(&output, 1);
    let text = stdout_of(&output);
    assert!(text.contains("result: FAIL"), "stdout:\n{text}");
}

#[test]
fn unknown_builtin_is_a_usage_error() {
    let output = run(&["classify", "--builtin", "moebius9"]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    for name in ["euclidean2", "flat_torus2", "sphere2", "hyperbolic2"] {
        assert!(err.contains(name), "stderr should list {name}:\n{err}");
    }
}

#[test]
fn unknown_field_is_a_usage_error() {
    let output = run(&["classify", "--builtin", "sphere2", "--field", "vortex"]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    assert!(err.contains("vortex"), "stderr:\n{err}");
    assert!(err.contains("azimuthal"), "stderr should list available fields:\n{err}");
}

#[test]
fn identity_requires_a_compact_chart() {
    let output = run(&["verify-identity", "--builtin", "euclidean2"]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    assert!(err.contains("compact"), "stderr:\n{err}");
}

fn plane_manifest(fields: &str, run: &str) -> String {
    format!(
        r#"{{
  "manifold": {{
    "name": "plane",
    "coordinates": ["x", "y"],
    "metric": [["1", "0"], ["0", "1"]],
    "domain": [[-4.0, 4.0], [-4.0, 4.0]],
    "periodic": [false, false],
    "margins": [0.5, 0.5],
    "compact": false
  }},
  "fields": {{ {fields} }}{run}
}}"#
    )
}

#[test]
fn unknown_manifest_keys_are_rejected() {
    let dir = scratch("unknown-key");
    let path = dir.join("bad.json");
    let text = plane_manifest(r#""spin": ["(-1) * y", "x"]"#, "")
        .replace(r#""compact": false"#, r#""compact": false, "volume": 3"#);
    std::fs::write(&path, text).unwrap();
    let output = run(&["classify", "--manifest", path.to_str().unwrap()]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    assert!(err.contains("volume"), "stderr should name the unknown key:\n{err}");
}

#[test]
fn undeclared_coordinates_are_rejected_with_the_expression() {
    let dir = scratch("undeclared");

    let path = dir.join("bad-field.json");
    std::fs::write(&path, plane_manifest(r#""bad": ["sin(q) * x", "0"]"#, "")).unwrap();
    let output = run(&["classify", "--manifest", path.to_str().unwrap()]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    assert!(err.contains("sin(q) * x"), "stderr should quote the expression:\n{err}");
    assert!(err.contains("bad"), "stderr should name the field:\n{err}");

    let path = dir.join("bad-metric.json");
    let text = plane_manifest(r#""spin": ["(-1) * y", "x"]"#, "")
        .replace(r#"["0", "1"]"#, r#"["0", "exp(2 * u)"]"#);
    std::fs::write(&path, text).unwrap();
    let output = run(&["classify", "--manifest", path.to_str().unwrap()]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    assert!(err.contains("exp(2 * u)"), "stderr should quote the metric entry:\n{err}");
}

#[test]
fn compact_only_checks_fail_on_open_charts() {
    let dir = scratch("compact-only");
    let path = dir.join("plane.json");
    let run_block = r#",
  "run": { "checks": ["divergence_integral"] }"#;
    std::fs::write(
        &path,
        plane_manifest(r#""spin": ["(-1) * y", "x"]"#, run_block),
    )
    .unwrap();
    let output = run(&["check-theorems", "--manifest", path.to_str().unwrap()]);
    assert_exit(&output, 2);
    let err = stderr_of(&output);
    assert!(err.contains("compact"), "stderr:\n{err}");
}

#[test]
fn manifest_check_selection_runs_exactly_those_checks() {
    let dir = scratch("selection");
    let path = dir.join("plane.json");
    let run_block = r#",
  "run": {
    "grid": { "lattice_per_dim": 7, "quasi_random": 40 },
    "sample_points": 20,
    "checks": ["symmetry", "operator_equivalence"]
  }"#;
    std::fs::write(
        &path,
        plane_manifest(r#""spin": ["(-1) * y", "x"]"#, run_block),
    )
    .unwrap();
    let out = dir.join("report.json");
    let output = run(&[
        "check-theorems",
        "--manifest",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let report = read_report(&out);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["symmetry", "operator_equivalence"]);
}

#[test]
fn trajectories_that_leave_the_chart_exit_3() {
    let output = run(&[
        "dump-trajectory",
        "--builtin",
        "euclidean2",
        "--kind",
        "flow",
        "--field",
        "quadratic",
        "--start",
        "4,0",
        "--time",
        "1",
    ]);
    assert_exit(&output, 3);
    let err = stderr_of(&output);
    assert!(err.contains("left the chart"), "stderr:\n{err}");
    assert!(err.contains("[4."), "stderr should name the exit point:\n{err}");
}

#[test]
fn trajectory_dumps_are_json_lines_with_increasing_time() {
    let output = run(&[
        "dump-trajectory",
        "--builtin",
        "sphere2",
        "--kind",
        "geodesic",
        "--start",
        "1.3,0.4",
        "--velocity",
        "0.3,0.5",
        "--time",
        "0.5",
        "--step",
        "0.01",
    ]);
    assert_exit(&output, 0);
    let text = stdout_of(&output);
    let mut previous = f64::NEG_INFINITY;
    let mut count = 0;
    for line in text.lines() {
        let sample: Value = serde_json::from_str(line).expect("each line is JSON");
        let t = sample["t"].as_f64().unwrap();
        assert!(t > previous, "time must increase strictly: {previous} then {t}");
        previous = t;
        assert!(sample["position"].as_array().unwrap().len() == 2);
        assert!(sample["velocity"].as_array().unwrap().len() == 2);
        count += 1;
    }
    assert!(count > 40, "expected a dense dump, got {count} lines");
    assert!((previous - 0.5).abs() < 1e-12, "last sample at t = {previous}");
}

#[test]
fn geodesic_dump_requires_a_velocity() {
    let output = run(&[
        "dump-trajectory",
        "--builtin",
        "sphere2",
        "--kind",
        "geodesic",
        "--start",
        "1.3,0.4",
    ]);
    assert_exit(&output, 2);
    assert!(stderr_of(&output).contains("velocity"));
}

#[test]
fn reports_are_byte_identical_up_to_timing() {
    let dir = scratch("determinism");
    let first = dir.join("first.json");
    let second = dir.join("second.json");
    for path in [&first, &second] {
        let output = run(&[
            "check-theorems",
            "--builtin",
            "euclidean2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_exit(&output, 0);
    }
    let a = std::fs::read_to_string(&first).unwrap();
    let b = std::fs::read_to_string(&second).unwrap();

    // The timing block is serialized last, so everything before it must
    // agree byte for byte.
    let cut_a = a.find("\"timing_ms\"").expect("timing key present");
    let cut_b = b.find("\"timing_ms\"").expect("timing key present");
    assert_eq!(&a[..cut_a], &b[..cut_b], "report prefixes differ");

    let mut va: Value = serde_json::from_str(&a).unwrap();
    let mut vb: Value = serde_json::from_str(&b).unwrap();
    va.as_object_mut().unwrap().remove("timing_ms");
    vb.as_object_mut().unwrap().remove("timing_ms");
    assert_eq!(va, vb, "reports differ beyond timing");
}

#[test]
fn exported_manifests_round_trip() {
    let dir = scratch("export");
    let manifest = dir.join("torus.json");
    let output = run(&[
        "export-manifest",
        "--builtin",
        "flat_torus2",
        "--out",
        manifest.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);

    // The exported manifest drives the tool exactly like the built-in.
    let out = dir.join("report.json");
    let output = run(&[
        "classify",
        "--manifest",
        manifest.to_str().unwrap(),
        "--field",
        "sinx",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let report = read_report(&out);
    let classifications = report["classifications"].as_array().unwrap();
    assert_eq!(classifications[0]["name"], "sinx");
    assert_eq!(classifications[0]["classification"]["is_killing"], false);
    assert_eq!(classifications[0]["classification"]["is_global_jacobi"], false);
    assert_eq!(classifications[0]["classification"]["is_solenoidal"], false);

    // Exporting the exported manifest is the identity.
    let again = dir.join("torus-again.json");
    let output = run(&[
        "export-manifest",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let a = std::fs::read(&manifest).unwrap();
    let b = std::fs::read(&again).unwrap();
    assert_eq!(a, b, "export is not idempotent");
}
