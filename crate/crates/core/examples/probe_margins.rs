//! Prints measured suite-check values on every builtin, for bound calibration.
use chartfield::catalog;
use chartfield::manifest::RunBlock;
use chartfield::report::RunParameters;
use chartfield::suite::{self, SuiteField};

fn main() {
    let run = RunBlock::default();
    let params = RunParameters {
        grid: chartfield::sampling::GridSpec::default(),
        thresholds: run.thresholds,
        quadrature_nodes: run.quadrature_nodes,
        integrator_step: run.integrator_step,
        sample_points: run.sample_points,
        geodesic_probes: run.geodesic_probes,
        seed: run.seed,
    };
    for entry in catalog::all() {
        let manifold = &entry.manifold;
        println!("== {}", manifold.name());
        let fields: Vec<SuiteField> = entry
            .fields
            .iter()
            .map(|f| SuiteField { name: f.name.clone(), spec: f.spec.clone(), expected: Some(f.expected) })
            .collect();
        let probes = suite::builtin_flow_probes(manifold.name());
        for kind in suite::applicable_checks(manifold.is_compact(), true) {
            let out = suite::run_check(kind, manifold, &fields, &probes, &params).unwrap();
            println!("  [{}] {}: {}", if out.result.passed { "PASS" } else { "FAIL" }, kind, out.result.detail);
            for flow in &out.flows {
                println!(
                    "      {} at {:?} t={}: metric={:.3e} volume={:.3e} geodesic={:?}",
                    flow.field, flow.point, flow.time, flow.metric_residual, flow.volume_residual,
                    flow.geodesic_residual.map(|r| format!("{r:.3e}")),
                );
            }
            for id in &out.identities {
                let b = &id.breakdown;
                println!(
                    "      {}: tj={:+.6e} tk={:+.6e} td={:+.6e} total={:+.3e} defect={:.3e}",
                    id.field, b.term_jacobi, b.term_killing, b.term_div, b.total, b.relative_defect
                );
            }
        }
    }
}
