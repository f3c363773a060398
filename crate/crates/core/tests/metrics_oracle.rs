use std::sync::Arc;

use fieldbridge::mesh::{generate, Shape};
use fieldbridge::metrics::{conservation_error, run_iteration_experiment, ErrorSeries, Experiment, GroundTruth, Method};
use fieldbridge::pointwise::{FitSpec, RadialBasis, RbfKind, Selection};
use fieldbridge::mesh::DofLocation;
use fieldbridge::pointwise::{transfer_pointwise, transfer_values, SourceIndex};
use fieldbridge::{Exec, Field, Point2};
use fieldbridge_oracles::{integrate_mesh, integrate_vertex_field};

fn sincos(p: Point2) -> f64 {
    p.x.sin() * p.y.cos() + 2.0
}

fn spec(mesh: &fieldbridge::Mesh) -> FitSpec {
    FitSpec::new(1, RadialBasis::new(RbfKind::C4, 2.0).unwrap(), Selection::FixedRadius {
        cutoff: 2.0 * mesh.mean_edge_length(),
    })
}

#[test]
fn one_iteration_conservation_matches_refined_quadrature() {
    let m = Arc::new(generate::disk(1.0, 16).unwrap());
    let f = Field::from_fn(m.clone(), Shape::Linear, sincos);
    let series = run_iteration_experiment(&f, None, &Experiment::new(Method::Pointwise(spec(&m)), 1)).unwrap();

    // recompute the mapped field and both integrals independently
    let mapped = {
        let mid = transfer_pointwise(&f, &m.centroids(), &spec(&m), Exec::Serial).unwrap();
        let idx = SourceIndex::from_mesh(m.clone(), DofLocation::Centroids).unwrap();
        transfer_values(&idx, &mid, m.vertices(), &spec(&m), Exec::Serial).unwrap()
    };
    let i_star = integrate_vertex_field(&m, f.values());
    let i_f = integrate_vertex_field(&m, &mapped);
    let oracle = (i_f - i_star).abs() / i_star.abs();
    assert!((series.records[0].conservation_error - oracle).abs() < 1e-8);
    let g = Field::new(m.clone(), Shape::Linear, mapped).unwrap();
    assert!((conservation_error(&g, &f, 2).unwrap() - oracle).abs() < 1e-8);
}

#[test]
fn analytic_ground_truth_uses_the_analytic_integral() {
    let m = Arc::new(generate::disk(1.0, 10).unwrap());
    let f = Field::from_fn(m.clone(), Shape::Linear, sincos);
    let mut exp = Experiment::new(Method::conservative(), 2);
    exp.ground_truth = GroundTruth::Analytic;
    let series = run_iteration_experiment(&f, Some(&sincos), &exp).unwrap();
    // conservative round trips preserve the discrete integral, so what remains is the
    // interpolation error of the initial field against the analytic one
    let exact = integrate_mesh(&m, &sincos, 2);
    let discrete = integrate_vertex_field(&m, f.values());
    for r in &series.records {
        assert!((r.conservation_error - (discrete - exact).abs() / exact).abs() < 1e-9);
    }
}

#[test]
fn csv_survives_a_file_round_trip() {
    let m = Arc::new(generate::disk(1.0, 6).unwrap());
    let f = Field::from_fn(m.clone(), Shape::Linear, sincos);
    let series = run_iteration_experiment(&f, None, &Experiment::new(Method::Pointwise(spec(&m)), 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, series.to_csv()).unwrap();
    let back = ErrorSeries::from_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.accuracy(), series.accuracy());
    assert_eq!(back.conservation(), series.conservation());
}
