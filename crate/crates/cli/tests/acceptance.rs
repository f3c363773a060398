//! Acceptance suite. Runs every criterion in sequence, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fieldbridge::conservative::{assemble_mass, build_supermesh, transfer_conservative, ConservativeOptions};
use fieldbridge::locate::{locate, UniformGrid, DEFAULT_TOL};
use fieldbridge::mesh::{generate, integrate_field, BBox, DofLocation, Shape};
use fieldbridge::metrics::{accuracy_error, run_iteration_experiment, Experiment, Method};
use fieldbridge::pointwise::{transfer_pointwise, FitSpec, RadialBasis, RbfKind, Selection};
use fieldbridge::rendezvous::{
    build_rdv_partition, coupled_transfer, exchange, plan_forward, plan_reverse, rcb_partition, CoupledMethod, Role,
};
use fieldbridge::{build_mesh, Exec, Field, Mesh, Point2};
use fieldbridge_oracles::{brute_locate, children_by_centroid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn sincos(p: Point2) -> f64 {
    p.x.sin() * p.y.cos() + 2.0
}

/// About 5k elements.
fn disk() -> Arc<Mesh> {
    Arc::new(generate::disk(1.0, 29).unwrap())
}

fn c4(degree: usize, cutoff: f64) -> FitSpec {
    FitSpec::new(degree, RadialBasis::new(RbfKind::C4, 2.0).unwrap(), Selection::FixedRadius { cutoff })
}

fn within(limit: Duration, t: Duration) -> Result<(), String> {
    if t < limit {
        Ok(())
    } else {
        Err(format!("took {:.2}s, limit {}s", t.as_secs_f64(), limit.as_secs()))
    }
}

fn polynomial_reproduction() -> Check {
    let t0 = Instant::now();
    let mesh = disk();
    let targets = mesh.centroids();
    let polys: [(usize, fn(Point2) -> f64); 3] = [
        (0, |_| 1.7),
        (1, |p| 3.0 * p.x - 2.0 * p.y + 0.5),
        (2, |p| 1.5 * p.x * p.x - p.x * p.y + 0.75 * p.y * p.y + p.x - 0.3),
    ];
    let mut worst: f64 = 0.0;
    for kind in RbfKind::ALL {
        for &(d, q) in &polys {
            let f = Field::from_fn(mesh.clone(), Shape::Linear, q);
            let spec = FitSpec::new(d, RadialBasis::new(kind, 2.0).unwrap(), Selection::FixedRadius {
                cutoff: 3.0 * mesh.mean_edge_length(),
            });
            let got = transfer_pointwise(&f, &targets, &spec, Exec::Serial).map_err(|e| format!("{kind:?} d={d}: {e}"))?;
            let want: Vec<f64> = targets.iter().map(|&p| q(p)).collect();
            let err = accuracy_error(&got, &want).unwrap();
            if !(err < 1e-10) {
                return Err(format!("{kind:?} degree {d}: accuracy error {err:e}"));
            }
            worst = worst.max(err);
        }
    }
    within(Duration::from_secs(10), t0.elapsed())?;
    Ok(format!("8 kinds x degrees 0..=2, worst accuracy error {worst:.1e}"))
}

fn l2_conservation() -> Check {
    let t0 = Instant::now();
    let a = disk();
    let b = Arc::new(generate::graded(1.0, 20, 29, 1.0).unwrap());
    let mut worst: f64 = 0.0;
    for (src, tgt) in [(&a, &b), (&b, &a)] {
        let f = Field::from_fn(src.clone(), Shape::Linear, sincos);
        let out = transfer_conservative(&f, tgt.clone(), &ConservativeOptions::default()).map_err(|e| e.to_string())?;
        let is = integrate_field(&f, 2).unwrap();
        let it = integrate_field(&out.field, 2).unwrap();
        let err = (it - is).abs() / is.abs();
        if !(err <= 1e-10) {
            return Err(format!("{} -> {} elements: conservation error {err:e}", src.n_elems(), tgt.n_elems()));
        }
        worst = worst.max(err);
    }
    within(Duration::from_secs(30), t0.elapsed())?;
    Ok(format!("{} <-> {} elements, worst conservation error {worst:.1e}", a.n_elems(), b.n_elems()))
}

fn method_ordering() -> Check {
    let a = Arc::new(generate::graded(1.0, 15, 29, 1.5).unwrap());
    let b = disk();
    let f = Field::from_fn(a.clone(), Shape::Linear, sincos);
    let first = |method| {
        let mut exp = Experiment::new(method, 1);
        exp.partner = Some(b.clone());
        run_iteration_experiment(&f, None, &exp).map(|s| s.records[0]).map_err(|e| e.to_string())
    };
    let cons = first(Method::conservative())?;
    let rbf = first(Method::Pointwise(c4(1, 2.0 * a.mean_edge_length())))?;
    let detail = format!(
        "accuracy {:.2e} vs {:.2e}, conservation {:.2e} vs {:.2e} (conservative vs C4 degree 1)",
        cons.accuracy_error, rbf.accuracy_error, cons.conservation_error, rbf.conservation_error
    );
    if cons.accuracy_error < rbf.accuracy_error && cons.conservation_error < rbf.conservation_error {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn iterated_shape() -> Check {
    let mesh = disk();
    let f = Field::from_fn(mesh.clone(), Shape::Linear, sincos);
    let mut first = Vec::new();
    for degree in [1, 2] {
        let exp = Experiment::new(Method::Pointwise(c4(degree, 2.0 * mesh.mean_edge_length())), 20);
        let acc = run_iteration_experiment(&f, None, &exp).map_err(|e| e.to_string())?.accuracy();
        // acc[k] belongs to iteration k + 1
        if let Some(k) = (1..acc.len() - 1).find(|&k| acc[k + 1] < acc[k]) {
            return Err(format!("degree {degree}: error drops from {:e} to {:e} at iteration {}", acc[k], acc[k + 1], k + 2));
        }
        first.push((acc[0], acc[19]));
    }
    let detail = format!(
        "iteration 1: linear {:.2e}, quadratic {:.2e}; iteration 20: linear {:.2e}, quadratic {:.2e}",
        first[0].0, first[1].0, first[0].1, first[1].1
    );
    if first[1].0 < first[0].0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn localization() -> Check {
    let t0 = Instant::now();
    let mesh = disk();
    let b = mesh.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pts: Vec<Point2> = (0..10_000)
        .map(|_| Point2::new(rng.random_range(b.min.x..b.max.x), rng.random_range(b.min.y..b.max.y)))
        .collect();
    pts.extend_from_slice(mesh.vertices());
    pts.extend(mesh.edges().iter().map(|&[p, q]| mesh.vertex(p).lerp(mesh.vertex(q), 0.5)));
    pts.extend(mesh.centroids());
    let grid = UniformGrid::build(&mesh, 1.0).map_err(|e| e.to_string())?;
    let mut inside = 0;
    for &p in &pts {
        match (locate(&grid, &mesh, p, DEFAULT_TOL), brute_locate(&mesh, p, DEFAULT_TOL)) {
            (None, None) => {}
            (Some(f), Some(s)) => {
                if (f.entity_dim, f.entity_id) != (s.entity_dim, s.entity_id) {
                    return Err(format!("{p:?}: ({}, {}) vs ({}, {})", f.entity_dim, f.entity_id, s.entity_dim, s.entity_id));
                }
                // equal entities on different elements have different barycentrics
                if f.elem == s.elem && (0..3).any(|k| (f.barycentric[k] - s.barycentric[k]).abs() >= 1e-9) {
                    return Err(format!("{p:?}: barycentric {:?} vs {:?}", f.barycentric, s.barycentric));
                }
                if f.elem != s.elem && f.entity_dim == 2 {
                    return Err(format!("{p:?}: interior point in element {} vs {}", f.elem, s.elem));
                }
                inside += 1;
            }
            (f, s) => return Err(format!("{p:?}: containment differs, {f:?} vs {s:?}")),
        }
    }
    within(Duration::from_secs(5), t0.elapsed())?;
    Ok(format!("{} points ({inside} inside) on {} elements", pts.len(), mesh.n_elems()))
}

fn supermesh_closure() -> Check {
    let m = generate::jitter(&generate::disk(1.0, 29).unwrap(), 0.3, 6).map_err(|e| e.to_string())?;
    let sm = build_supermesh(&m, &m, Exec::Serial);
    let rel = (sm.total_area() - m.total_area()).abs() / m.total_area();
    if !(rel <= 1e-12) {
        return Err(format!("self-overlap area off by {rel:e} (relative)"));
    }
    for n in [2, 5, 8] {
        let coarse = generate::square(n).unwrap();
        let fine = generate::square(2 * n).unwrap();
        let sm = build_supermesh(&fine, &coarse, Exec::Serial);
        for (c, kids) in children_by_centroid(&coarse, &fine).iter().enumerate() {
            let mut got: Vec<usize> = sm.cells().iter().filter(|s| s.target_elem == c).map(|s| s.source_elem).collect();
            got.sort_unstable();
            if kids.len() != 4 || &got != kids {
                return Err(format!("square({n}) element {c}: supermesh children {got:?}, expected {kids:?}"));
            }
        }
    }
    let tri = build_mesh(
        vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
        vec![[0, 1, 2]],
        None,
    )
    .map_err(|e| e.to_string())?;
    if tri.element_area(0) != 0.5 {
        return Err(format!("unit triangle area {}", tri.element_area(0)));
    }
    let mass = assemble_mass(&tri, Shape::Linear);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 } else { 1.0 } / 24.0;
            worst = worst.max((mass.get(i, j) - want).abs());
        }
    }
    if !(worst < 1e-14) {
        return Err(format!("mass matrix entry off by {worst:e}"));
    }
    Ok(format!("closure {rel:.1e}, refined squares 4 children each, mass deviation {worst:.1e}"))
}

fn partition_independence() -> Check {
    let a = Arc::new(generate::jitter(&generate::disk(1.0, 20).unwrap(), 0.2, 1).unwrap());
    let b = Arc::new(generate::jitter(&generate::graded(1.0, 14, 20, 1.4).unwrap(), 0.2, 2).unwrap());
    let f = Field::from_fn(a.clone(), Shape::Linear, sincos);
    let mut bb: BBox = a.bbox();
    bb.include(b.bbox().min);
    bb.include(b.bbox().max);

    let spec = c4(1, 2.0 * a.mean_edge_length());
    let opts = ConservativeOptions::default();
    let methods = [
        ("pointwise", CoupledMethod::Pointwise { spec, target: DofLocation::Vertices }),
        ("conservative", CoupledMethod::Conservative(opts)),
    ];
    let serial = [
        transfer_pointwise(&f, b.vertices(), &spec, Exec::Serial).map_err(|e| e.to_string())?,
        transfer_conservative(&f, b.clone(), &opts).map_err(|e| e.to_string())?.field.values().to_vec(),
    ];
    let fixed_rdv = build_rdv_partition(bb, 4, 4, 4).unwrap();
    let mut worst: f64 = 0.0;
    let mut bytes = Vec::new();
    for (side, ranks) in [(1, 1), (2, 4), (4, 16)] {
        let pa = rcb_partition(&a, ranks).map_err(|e| e.to_string())?;
        let pb = rcb_partition(&b, ranks).map_err(|e| e.to_string())?;

        let plan = plan_forward(&a, &pa, &fixed_rdv).map_err(|e| e.to_string())?;
        let payload: Vec<Vec<f64>> =
            plan.src_layout().iter().map(|l| l.iter().map(|&e| sincos(a.centroid(e)) / (1.0 + e as f64)).collect()).collect();
        let there = exchange(&plan, &payload).map_err(|e| e.to_string())?;
        let back = exchange(&plan_reverse(&plan), &there.into_buffers()).map_err(|e| e.to_string())?;
        if back.into_buffers() != payload {
            return Err(format!("{ranks} ranks: round trip is not bitwise"));
        }

        // application ranks vary against a fixed rendezvous, and the rendezvous grid
        // follows the same 1, 2x2, 4x4 progression
        let grid_rdv = build_rdv_partition(bb, side, side, ranks).unwrap();
        for ((name, m), want) in methods.iter().zip(&serial) {
            for rdv in [&fixed_rdv, &grid_rdv] {
                let out = coupled_transfer(&f, &pa, &b, &pb, rdv, m, Exec::Serial).map_err(|e| format!("{name}: {e}"))?;
                let dev = out.field.values().iter().zip(want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                if !(dev <= 1e-12) {
                    return Err(format!("{name}, {ranks} app ranks: deviation {dev:e} from serial"));
                }
                worst = worst.max(dev);
                if std::ptr::eq(rdv, &fixed_rdv) {
                    bytes.push((*name, ranks, out.stats.total(Role::Rdv, |t| t.bytes_recv)));
                }
            }
        }
    }
    for name in ["pointwise", "conservative"] {
        let per: Vec<(usize, usize)> = bytes.iter().filter(|b| b.0 == name).map(|b| (b.1, b.2)).collect();
        if per.iter().any(|p| p.1 != per[0].1) {
            return Err(format!("{name}: rendezvous bytes vary with app ranks {per:?}"));
        }
    }
    let pw = bytes.iter().find(|b| b.0 == "pointwise").unwrap().2;
    let cs = bytes.iter().find(|b| b.0 == "conservative").unwrap().2;
    Ok(format!("worst deviation {worst:.1e}; rendezvous receives {pw} B (pointwise), {cs} B (conservative) at 1, 4, 16 ranks"))
}

const DET_POINTWISE: &str = r#"
output = "out"
seed = 11
iterations = 6

[mesh]
generate = "disk(1, 14)"
jitter = 0.25

[field]
analytic = "sincos2"

[method]
kind = "pointwise"
degree = 2
radii = [2.5, 3.5]
"#;

const DET_CONSERVATIVE: &str = r#"
output = "out"
seed = 12
iterations = 3
ground_truth = "analytic"

[mesh]
generate = "graded(1, 10, 14, 1.5)"
jitter = 0.2

[partner]
generate = "disk(1, 14)"

[field]
analytic = "sincos2"

[method]
kind = "conservative"

[rendezvous]
grid = [3, 2]
ranks = 3
rounds = 2
"#;

fn csv_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_determinism() -> Check {
    let mut total = 0;
    for (body, sweep) in [(DET_POINTWISE, false), (DET_CONSERVATIVE, true)] {
        let mut snapshots = Vec::new();
        for flags in [&[][..], &[][..], &["--threads", "4"][..], &["--threads", "4"][..]] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let cfg = dir.path().join("c.toml");
            std::fs::write(&cfg, body).map_err(|e| e.to_string())?;
            let cfg = cfg.to_str().unwrap();
            let mut runs = vec![vec!["run", cfg]];
            if sweep {
                runs.push(vec!["scale-sweep", cfg, "--ranks", "1,2,4"]);
            }
            for args in runs {
                let out = Command::new(env!("CARGO_BIN_EXE_fieldbridge"))
                    .args(flags)
                    .args(&args)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !out.status.success() {
                    return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
                }
            }
            snapshots.push(csv_snapshot(dir.path()));
        }
        if snapshots.iter().any(|s| s != &snapshots[0]) {
            return Err("CSV outputs differ between repeated runs".into());
        }
        total += snapshots[0].len();
    }
    Ok(format!("{total} CSVs identical across 2 serial and 2 four-thread runs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("polynomial reproduction", polynomial_reproduction),
        ("L2 projection conservation", l2_conservation),
        ("method ordering", method_ordering),
        ("iterated mapping shape", iterated_shape),
        ("localization oracle", localization),
        ("supermesh closure", supermesh_closure),
        ("rendezvous partition independence", partition_independence),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = check();
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.2}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
