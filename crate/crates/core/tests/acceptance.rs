//! Acceptance gate: the numbered end-to-end criteria this toolkit must
//! satisfy, each printing one `criterion NN [PASS|FAIL]` line. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line.

use std::time::{Duration, Instant};

use chartfield::catalog;
use chartfield::dynamics::{
    geodesic_preservation_residual, integrate_geodesic, metric_preservation_residual,
    volume_preservation_residual, IntegratorOptions,
};
use chartfield::geometry::ChartManifold;
use chartfield::operators::{
    classify, connection_lie_derivative, jacobi_operator, ClassificationReport, ClassifyOptions,
    FieldSpec,
};
use chartfield::quadrature::{verify_divergence_integral, verify_integral_identity};
use chartfield::sampling::random_interior_points;
use chartfield::suite::{bounded_jacobi_ode_residual, random_geodesic_starts};

const SEED: u64 = 7;
const SAMPLE_POINTS: usize = 100;
const GEODESIC_PROBES: usize = 10;
const QUADRATURE_NODES: usize = 64;
const TRIGGER: f64 = 1e-9;
const IMPLIED: f64 = 1e-8;

/// Collects sub-checks of one criterion and prints its single verdict line.
struct Criterion {
    number: u32,
    title: &'static str,
    failures: Vec<String>,
    started: Instant,
}

impl Criterion {
    fn new(number: u32, title: &'static str) -> Criterion {
        Criterion {
            number,
            title,
            failures: Vec::new(),
            started: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }

    fn check_le(&mut self, label: impl std::fmt::Display, value: f64, bound: f64) {
        self.check(value <= bound, || {
            format!("{label} = {value:.6e}, bound {bound:.1e}")
        });
    }

    fn check_gt(&mut self, label: impl std::fmt::Display, value: f64, floor: f64) {
        self.check(value > floor, || {
            format!("{label} = {value:.6e}, required above {floor:.1e}")
        });
    }

    fn check_near(&mut self, label: impl std::fmt::Display, value: f64, target: f64, tol: f64) {
        self.check((value - target).abs() <= tol, || {
            format!("{label} = {value:.9e}, expected {target:.9e} +- {tol:.1e}")
        });
    }

    fn check_runtime(&mut self, budget: Duration) {
        let elapsed = self.started.elapsed();
        self.check(elapsed < budget, || {
            format!("runtime {elapsed:?} exceeds budget {budget:?}")
        });
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:02} [{}] {}", self.number, status, self.title);
        assert!(
            self.failures.is_empty(),
            "criterion {:02} ({}) failed:\n  {}",
            self.number,
            self.title,
            self.failures.join("\n  ")
        );
    }
}

fn classify_default(manifold: &ChartManifold, field: &FieldSpec) -> ClassificationReport {
    classify(manifold, field, &ClassifyOptions::default()).expect("classification succeeds")
}

fn entry(name: &str) -> catalog::CatalogEntry {
    catalog::builtin(name).expect("builtin exists")
}

fn booleans(report: &ClassificationReport) -> (bool, bool, bool) {
    (report.is_killing, report.is_global_jacobi, report.is_solenoidal)
}

#[test]
fn criterion_01_plane_counterexamples() {
    let mut c = Criterion::new(
        1,
        "plane dilation is geodesic-preserving with divergence 2 but neither volume- nor metric-preserving; saddle adds volume preservation",
    );
    let entry = entry("euclidean2");
    let dilation = classify_default(&entry.manifold, &entry.field("dilation").unwrap().spec);
    c.check(booleans(&dilation) == (false, true, false), || {
        format!("dilation booleans (killing, jacobi, solenoidal) = {:?}", booleans(&dilation))
    });
    c.check_le("dilation divergence spread", dilation.divergence.spread, 1e-10);
    c.check_near("dilation divergence min", dilation.divergence.min, 2.0, 1e-10);
    c.check_near("dilation divergence max", dilation.divergence.max, 2.0, 1e-10);
    let saddle = classify_default(&entry.manifold, &entry.field("saddle").unwrap().spec);
    c.check(booleans(&saddle) == (false, true, true), || {
        format!("saddle booleans (killing, jacobi, solenoidal) = {:?}", booleans(&saddle))
    });
    c.check_runtime(Duration::from_secs(5));
    c.finish();
}

#[test]
fn criterion_02_metric_preservers_are_geodesic_and_volume_preserving() {
    let mut c = Criterion::new(
        2,
        "every catalog field that preserves the metric also preserves geodesics and volume",
    );
    for entry in catalog::all() {
        for field in &entry.fields {
            let report = classify_default(&entry.manifold, &field.spec);
            if report.killing_residual > TRIGGER {
                continue;
            }
            let label = format!("{}/{}", entry.manifold.name(), field.name);
            c.check_le(format!("{label} deviation residual"), report.jacobi_residual, IMPLIED);
            c.check_le(format!("{label} divergence sup"), report.divergence_sup, IMPLIED);
        }
    }
    c.check_runtime(Duration::from_secs(30));
    c.finish();
}

#[test]
fn criterion_03_deviation_operator_is_symmetric() {
    let mut c = Criterion::new(
        3,
        "the deviation operator is symmetric in its two argument slots at random points",
    );
    for entry in catalog::all() {
        let points = random_interior_points(&entry.manifold, SAMPLE_POINTS, SEED);
        for field in &entry.fields {
            let mut worst = 0.0f64;
            for point in &points {
                let geo = entry.manifold.geometry_jet(point).unwrap();
                let jet = field.spec.jet(point).unwrap();
                let dev = jacobi_operator(&geo, &jet);
                let dim = entry.manifold.dim();
                for i in 0..dim {
                    for j in 0..dim {
                        for k in 0..j {
                            worst = worst.max((dev[[i, j, k]] - dev[[i, k, j]]).abs());
                        }
                    }
                }
            }
            c.check_le(
                format!("{}/{} asymmetry", entry.manifold.name(), field.name),
                worst,
                1e-9,
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_04_deviation_operator_equals_connection_lie_derivative() {
    let mut c = Criterion::new(
        4,
        "the deviation operator agrees with the connection Lie derivative at random points",
    );
    for entry in catalog::all() {
        let points = random_interior_points(&entry.manifold, SAMPLE_POINTS, SEED);
        for field in &entry.fields {
            let mut worst = 0.0f64;
            for point in &points {
                let geo = entry.manifold.geometry_jet(point).unwrap();
                let jet = field.spec.jet(point).unwrap();
                let dev = jacobi_operator(&geo, &jet);
                let lie = connection_lie_derivative(&geo, &jet);
                let dim = entry.manifold.dim();
                for i in 0..dim {
                    for j in 0..dim {
                        for k in 0..dim {
                            worst = worst.max((dev[[i, j, k]] - lie[[i, j, k]]).abs());
                        }
                    }
                }
            }
            c.check_le(
                format!("{}/{} operator difference", entry.manifold.name(), field.name),
                worst,
                1e-9,
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_05_geodesic_preservers_have_constant_divergence() {
    let mut c = Criterion::new(
        5,
        "every geodesic-preserving catalog field has constant divergence, including the open-plane dilation with divergence 2",
    );
    for entry in catalog::all() {
        for field in &entry.fields {
            let report = classify_default(&entry.manifold, &field.spec);
            if report.jacobi_residual > TRIGGER {
                continue;
            }
            let label = format!("{}/{}", entry.manifold.name(), field.name);
            c.check_le(
                format!("{label} divergence spread"),
                report.divergence.spread,
                IMPLIED,
            );
            if entry.manifold.name() == "euclidean2" && field.name == "dilation" {
                match report.constant_divergence {
                    Some(value) => c.check_near("dilation constant divergence", value, 2.0, 1e-8),
                    None => c.check(false, || "dilation divergence not constant".to_string()),
                }
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_06_divergence_integrates_to_zero_on_compact_charts() {
    let mut c = Criterion::new(
        6,
        "the divergence of every catalog field integrates to zero over the compact charts",
    );
    for name in ["flat_torus2", "sphere2"] {
        let entry = entry(name);
        for field in &entry.fields {
            let result =
                verify_divergence_integral(&entry.manifold, &field.spec, QUADRATURE_NODES)
                    .expect("integration succeeds");
            c.check_le(
                format!("{name}/{} |divergence integral| / volume", field.name),
                result.integral.abs() / result.volume,
                1e-8,
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_07_integral_identity_closed_form_on_torus() {
    let mut c = Criterion::new(
        7,
        "the three-term integral identity on the torus sine field matches its closed forms and sums to zero",
    );
    let entry = entry("flat_torus2");
    let field = &entry.field("sinx").unwrap().spec;
    let breakdown = verify_integral_identity(&entry.manifold, field, QUADRATURE_NODES)
        .expect("integration succeeds");
    let two_pi_sq = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    c.check_near(
        "deviation term",
        breakdown.term_jacobi,
        -two_pi_sq,
        1e-8 * two_pi_sq,
    );
    c.check_near(
        "deformation term",
        breakdown.term_killing,
        2.0 * two_pi_sq,
        1e-8 * 2.0 * two_pi_sq,
    );
    c.check_near("divergence term", breakdown.term_div, two_pi_sq, 1e-8 * two_pi_sq);
    let magnitudes = breakdown.term_jacobi.abs() + breakdown.term_killing.abs()
        + breakdown.term_div.abs();
    c.check_le("identity total", breakdown.total.abs(), 1e-8 * magnitudes);
    c.check(breakdown.nodes_per_dim == QUADRATURE_NODES, || {
        format!("expected {QUADRATURE_NODES} nodes per dim, got {}", breakdown.nodes_per_dim)
    });
    c.check_runtime(Duration::from_secs(10));
    c.finish();
}

#[test]
fn criterion_08_geodesic_preservers_are_metric_preserving_on_compact_charts() {
    let mut c = Criterion::new(
        8,
        "on the compact charts, every geodesic-preserving catalog field also preserves the metric",
    );
    for name in ["flat_torus2", "sphere2"] {
        let entry = entry(name);
        for field in &entry.fields {
            let report = classify_default(&entry.manifold, &field.spec);
            if report.jacobi_residual > TRIGGER {
                continue;
            }
            c.check_le(
                format!("{name}/{} metric-deformation residual", field.name),
                report.killing_residual,
                IMPLIED,
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_09_flow_preservation_residuals() {
    let mut c = Criterion::new(
        9,
        "flows preserve exactly the structures their classification predicts, with closed-form stretches elsewhere",
    );
    let options = IntegratorOptions::default();
    let e2m1 = std::f64::consts::E.powi(2) - 1.0;

    let sphere = entry("sphere2");
    let azimuthal = &sphere.field("azimuthal").unwrap().spec;
    let pairs: [([f64; 2], f64); 5] = [
        ([std::f64::consts::FRAC_PI_3, 0.2], 0.7),
        ([1.0, 5.0], 0.3),
        ([2.0, 1.5], 1.0),
        ([std::f64::consts::FRAC_PI_2, 3.0], 1.5),
        ([0.8, 2.2], 2.0),
    ];
    for (point, t) in &pairs {
        let residual =
            metric_preservation_residual(&sphere.manifold, azimuthal, point, *t, &options)
                .expect("flow stays interior");
        c.check_le(
            format!("sphere rotation metric residual at {point:?}, t={t}"),
            residual,
            1e-6,
        );
    }

    let plane = entry("euclidean2");
    let saddle = &plane.field("saddle").unwrap().spec;
    let volume = volume_preservation_residual(&plane.manifold, saddle, &[1.0, 1.0], 1.0, &options)
        .expect("flow stays interior");
    c.check_le("saddle volume residual", volume, 1e-9);
    let metric = metric_preservation_residual(&plane.manifold, saddle, &[1.0, 1.0], 1.0, &options)
        .expect("flow stays interior");
    c.check_near("saddle metric residual", metric, e2m1, 1e-4);

    let dilation = &plane.field("dilation").unwrap().spec;
    let volume =
        volume_preservation_residual(&plane.manifold, dilation, &[1.0, 0.0], 1.0, &options)
            .expect("flow stays interior");
    c.check_near("dilation volume residual", volume, e2m1, 1e-4);
    let geodesic = geodesic_preservation_residual(
        &plane.manifold,
        dilation,
        &[1.0, 0.0],
        &[0.0, 1.0],
        1.0,
        1.0,
        &options,
    )
    .expect("flow stays interior");
    c.check_le("dilation geodesic residual", geodesic, 1e-8);

    let quadratic = &plane.field("quadratic").unwrap().spec;
    let geodesic = geodesic_preservation_residual(
        &plane.manifold,
        quadratic,
        &[1.0, 0.0],
        &[1.0, 0.0],
        0.1,
        1.0,
        &options,
    )
    .expect("flow stays interior");
    c.check_gt("quadratic geodesic residual", geodesic, 1e-3);

    c.finish();
}

#[test]
fn criterion_10_deviation_equation_along_random_geodesics() {
    let mut c = Criterion::new(
        10,
        "geodesic-preserving fields satisfy the deviation equation along random geodesics; the quadratic field visibly violates it",
    );
    let options = IntegratorOptions::default();
    for entry in catalog::all() {
        let starts = random_geodesic_starts(&entry.manifold, GEODESIC_PROBES, SEED)
            .expect("starts sample");
        for field in &entry.fields {
            let report = classify_default(&entry.manifold, &field.spec);
            let is_quadratic = entry.manifold.name() == "euclidean2" && field.name == "quadratic";
            if report.jacobi_residual > TRIGGER && !is_quadratic {
                continue;
            }
            let mut worst = 0.0f64;
            for (start, velocity) in &starts {
                let residual = bounded_jacobi_ode_residual(
                    &entry.manifold,
                    &field.spec,
                    start,
                    velocity,
                    &options,
                )
                .expect("geodesic integrates");
                worst = worst.max(residual);
            }
            let label = format!("{}/{}", entry.manifold.name(), field.name);
            if is_quadratic {
                c.check_gt(format!("{label} max deviation-equation residual"), worst, 1e-2);
            } else {
                c.check_le(format!("{label} deviation-equation residual"), worst, IMPLIED);
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_11_numerical_hygiene() {
    let mut c = Criterion::new(
        11,
        "exact jets match finite differences; geodesic energy drift is fourth-order small and shrinks at least 15x when the step halves",
    );

    // Exact jets vs central finite differences on a curved chart.
    let sphere = entry("sphere2");
    let manifold = &sphere.manifold;
    let field = &sphere.field("tilted").unwrap().spec;
    let p = [1.1, 0.7];
    let h = 1e-5;
    let mixed_tol = |exact: f64| 1e-6 * (1.0 + exact.abs());
    let dim = manifold.dim();

    let jet = field.jet(&p).expect("jet evaluates");
    for i in 0..dim {
        for k in 0..dim {
            let mut plus = p;
            let mut minus = p;
            plus[k] += h;
            minus[k] -= h;
            let fd = (field.values(&plus).unwrap()[i] - field.values(&minus).unwrap()[i])
                / (2.0 * h);
            let exact = jet.dx[[i, k]];
            c.check(
                (exact - fd).abs() <= mixed_tol(exact),
                || format!("field first derivative [{i}][{k}]: exact {exact:.9e}, fd {fd:.9e}"),
            );
            for l in 0..dim {
                let mut pp = p;
                pp[k] += h;
                pp[l] += h;
                let mut pm = p;
                pm[k] += h;
                pm[l] -= h;
                let mut mp = p;
                mp[k] -= h;
                mp[l] += h;
                let mut mm = p;
                mm[k] -= h;
                mm[l] -= h;
                let fd = (field.values(&pp).unwrap()[i] - field.values(&pm).unwrap()[i]
                    - field.values(&mp).unwrap()[i]
                    + field.values(&mm).unwrap()[i])
                    / (4.0 * h * h);
                let exact = jet.ddx[[i, k, l]];
                c.check((exact - fd).abs() <= mixed_tol(exact), || {
                    format!("field second derivative [{i}][{k}][{l}]: exact {exact:.9e}, fd {fd:.9e}")
                });
            }
        }
    }

    let geo = manifold.geometry_jet(&p).expect("geometry jet evaluates");
    for m in 0..dim {
        let mut plus = p;
        let mut minus = p;
        plus[m] += h;
        minus[m] -= h;
        let geo_plus = manifold.geometry_jet(&plus).unwrap();
        let geo_minus = manifold.geometry_jet(&minus).unwrap();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let fd = (geo_plus.gamma[[i, j, k]] - geo_minus.gamma[[i, j, k]]) / (2.0 * h);
                    let exact = geo.dgamma[[i, j, k, m]];
                    c.check((exact - fd).abs() <= mixed_tol(exact), || {
                        format!(
                            "connection derivative [{i}][{j}][{k}][{m}]: exact {exact:.9e}, fd {fd:.9e}"
                        )
                    });
                }
            }
        }
    }

    // Energy drift of a fast geodesic over unit time, and its step scaling.
    let start = [1.3f64, 0.4];
    let velocity = [2.2, 3.4 / start[0].sin()];
    let coarse = integrate_geodesic(
        manifold,
        &start,
        &velocity,
        1.0,
        &IntegratorOptions { step: 1e-3 },
    )
    .expect("geodesic integrates");
    c.check_le("energy drift at step 1e-3", coarse.energy_drift, 1e-9);
    let fine = integrate_geodesic(
        manifold,
        &start,
        &velocity,
        1.0,
        &IntegratorOptions { step: 5e-4 },
    )
    .expect("geodesic integrates");
    c.check(fine.energy_drift > 0.0, || "fine drift vanished; ratio undefined".into());
    let ratio = coarse.energy_drift / fine.energy_drift;
    c.check_gt("drift reduction factor on halving the step", ratio, 15.0);

    c.finish();
}
