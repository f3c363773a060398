use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use fieldbridge::conservative::{transfer_conservative, ConservativeOptions};
use fieldbridge::mesh::generate;
use fieldbridge::mesh::{write_mesh, DofLocation};
use fieldbridge::metrics::{run_iteration_experiment, Experiment, Method, MetricsError};
use fieldbridge::pointwise::{transfer_pointwise, Selection};
use fieldbridge::rendezvous::{
    build_rdv_partition, coupled_transfer, rcb_partition, CouplingStats, CoupledMethod, Role, StatsRow, Traffic,
};
use fieldbridge::{Exec, Mesh};
use serde::Serialize;

use crate::config::{build_field, build_mesh_source, load_config, Config, LoadedMesh};
use crate::error::CliError;
use crate::specs::parse_mesh_spec;

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub exec: Exec,
    pub threads: usize,
    pub seed: Option<u64>,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn metrics_err(e: MetricsError) -> CliError {
    match e {
        MetricsError::InvalidExperiment(m) => CliError::Config(m),
        other => CliError::Numerical(other.to_string()),
    }
}

pub fn generate_mesh(spec: &str, out: &Path, jitter: f64, g: Globals) -> Result<usize, CliError> {
    let mesh = generate::generate(&parse_mesh_spec(spec)?)?;
    let mesh = if jitter > 0.0 { generate::jitter(&mesh, jitter, g.seed.unwrap_or(0))? } else { mesh };
    write(out, &write_mesh(&mesh))?;
    Ok(mesh.n_elems())
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    threads: usize,
    iterations: usize,
    ground_truth: &'static str,
    mesh: MeshEntry,
    partner: Option<MeshEntry>,
    field: String,
    method: &'static str,
    outputs: Vec<OutputEntry>,
}

#[derive(Serialize)]
struct MeshEntry {
    source: String,
    jitter: f64,
    vertices: usize,
    elements: usize,
    mean_edge_length: f64,
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sweep_value: f64,
    parameters: Vec<(String, String)>,
}

fn mesh_entry(m: &LoadedMesh, jitter: f64) -> MeshEntry {
    MeshEntry {
        source: m.source.clone(),
        jitter,
        vertices: m.mesh.n_vertices(),
        elements: m.mesh.n_elems(),
        mean_edge_length: m.mesh.mean_edge_length(),
    }
}

fn describe(method: &Method) -> Vec<(String, String)> {
    let mut p = Vec::new();
    match method {
        Method::Pointwise(s) => {
            p.push(("degree".into(), s.degree.to_string()));
            p.push(("rbf".into(), s.basis.kind.name().into()));
            p.push(("shape".into(), format!("{:e}", s.basis.shape)));
            p.push(("lambda".into(), format!("{:e}", s.lambda)));
            p.push(("centering".into(), s.centering.to_string()));
            match s.selection {
                Selection::FixedRadius { cutoff } => {
                    p.push(("selection".into(), "fixed".into()));
                    p.push(("cutoff".into(), format!("{cutoff:e}")));
                }
                Selection::AdaptiveRadius { min_points, initial_radius, growth } => {
                    p.push(("selection".into(), "adaptive".into()));
                    p.push(("min_points".into(), min_points.to_string()));
                    p.push(("initial_radius".into(), format!("{initial_radius:e}")));
                    p.push(("growth".into(), format!("{growth:e}")));
                }
                Selection::ElementPatch { layers } => {
                    p.push(("selection".into(), "patch".into()));
                    p.push(("layers".into(), layers.to_string()));
                }
            }
        }
        Method::Conservative { rel_tol } => p.push(("rel_tol".into(), format!("{rel_tol:e}"))),
    }
    p
}

struct Resolved {
    cfg: Config,
    seed: u64,
    mesh: LoadedMesh,
    partner: Option<LoadedMesh>,
    field: fieldbridge::Field,
    analytic: Option<crate::specs::AnalyticField>,
    field_desc: String,
    output: PathBuf,
}

fn resolve(config: &Path, g: Globals) -> Result<Resolved, CliError> {
    let (cfg, base) = load_config(config)?;
    let seed = g.seed.unwrap_or(cfg.seed);
    let mesh = build_mesh_source(&cfg.mesh, &base, seed)?;
    let partner = cfg.partner.as_ref().map(|p| build_mesh_source(p, &base, seed.wrapping_add(1))).transpose()?;
    let (field, analytic, field_desc) = build_field(&cfg.field, &base, &mesh.mesh)?;
    let output = if cfg.output.is_absolute() { cfg.output.clone() } else { base.join(&cfg.output) };
    std::fs::create_dir_all(&output).map_err(|e| CliError::io(&output, e))?;
    Ok(Resolved { cfg, seed, mesh, partner, field, analytic, field_desc, output })
}

/// Runs every sweep value of the config and returns the written CSV paths.
pub fn run(config: &Path, g: Globals) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve(config, g)?;
    let sweep = r.cfg.sweep(r.mesh.mesh.mean_edge_length())?;
    let analytic = r.analytic;
    let analytic_fn = analytic.map(|a| move |p| a.eval(p));
    let mut outputs = Vec::new();
    let mut entries = Vec::new();
    for point in &sweep {
        let exp = Experiment {
            method: point.method,
            iterations: r.cfg.iterations,
            ground_truth: r.cfg.truth(),
            partner: r.partner.as_ref().map(|p| p.mesh.clone()),
            exec: g.exec,
        };
        let f_ref = analytic_fn.as_ref().map(|f| f as &dyn Fn(fieldbridge::Point2) -> f64);
        let series = run_iteration_experiment(&r.field, f_ref, &exp).map_err(metrics_err)?;
        let name = format!("{}_{}.csv", r.cfg.method_name(), point.label);
        let path = r.output.join(&name);
        write(&path, &series.to_csv())?;
        entries.push(OutputEntry { file: name, sweep_value: point.value, parameters: describe(&point.method) });
        outputs.push(path);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: r.seed,
        threads: g.threads,
        iterations: r.cfg.iterations,
        ground_truth: r.cfg.truth().name(),
        mesh: mesh_entry(&r.mesh, r.cfg.mesh.jitter),
        partner: r.partner.as_ref().map(|p| mesh_entry(p, r.cfg.partner.as_ref().map_or(0.0, |s| s.jitter))),
        field: r.field_desc.clone(),
        method: r.cfg.method_name(),
        outputs: entries,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    write(&r.output.join("manifest.toml"), &text)?;
    Ok(outputs)
}

/// Per-rank-count results of a scaling sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub ranks: usize,
    pub stats_path: PathBuf,
    pub rounds: usize,
    pub rdv_bytes_recv: usize,
    pub max_deviation: f64,
}

fn joint_box(a: &Mesh, b: &Mesh) -> fieldbridge::mesh::BBox {
    let mut bb = a.bbox();
    bb.include(b.bbox().min);
    bb.include(b.bbox().max);
    bb
}

/// Collapses the exchange phases of one coupling round into one row per role and rank.
fn fold_round(round: usize, stats: &CouplingStats, out: &mut Vec<StatsRow>) {
    let mut rows: Vec<StatsRow> = Vec::new();
    for r in &stats.rows {
        match rows.iter_mut().find(|x| x.role == r.role && x.rank == r.rank) {
            Some(x) => {
                let t: &mut Traffic = &mut x.traffic;
                t.msgs_sent += r.traffic.msgs_sent;
                t.msgs_recv += r.traffic.msgs_recv;
                t.bytes_sent += r.traffic.bytes_sent;
                t.bytes_recv += r.traffic.bytes_recv;
            }
            None => rows.push(StatsRow { round, ..*r }),
        }
    }
    rows.sort_by_key(|r| (r.role, r.rank));
    out.extend(rows);
}

/// Runs the coupled transfer from the config's mesh to its partner (or to a copy of the
/// mesh) for each application rank count, over the configured number of rounds.
pub fn scale_sweep(config: &Path, ranks: &[usize], g: Globals) -> Result<Vec<SweepRun>, CliError> {
    if ranks.is_empty() {
        return Err(CliError::Usage("--ranks needs at least one rank count".into()));
    }
    if let Some(&bad) = ranks.iter().find(|&&n| n == 0 || !n.is_power_of_two()) {
        return Err(CliError::Usage(format!("rank counts must be powers of two, got {bad}")));
    }
    let r = resolve(config, g)?;
    let target: Arc<Mesh> = r.partner.as_ref().map_or_else(|| Arc::new(Mesh::clone(&r.mesh.mesh)), |p| p.mesh.clone());
    let rdv_cfg = &r.cfg.rendezvous;
    if rdv_cfg.rounds == 0 {
        return Err(CliError::Config("rendezvous.rounds must be at least 1".into()));
    }
    let rdv = build_rdv_partition(joint_box(&r.mesh.mesh, &target), rdv_cfg.grid[0], rdv_cfg.grid[1], rdv_cfg.ranks)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let point = r.cfg.sweep(r.mesh.mesh.mean_edge_length())?.remove(0);
    let (method, serial) = match point.method {
        Method::Pointwise(spec) => {
            let v = transfer_pointwise(&r.field, target.vertices(), &spec, g.exec)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            (CoupledMethod::Pointwise { spec, target: DofLocation::Vertices }, v)
        }
        Method::Conservative { rel_tol } => {
            let opts = ConservativeOptions { rel_tol, exec: g.exec, ..Default::default() };
            let v = transfer_conservative(&r.field, target.clone(), &opts)
                .map_err(|e| CliError::Numerical(e.to_string()))?
                .field
                .into_values();
            (CoupledMethod::Conservative(opts), v)
        }
    };

    let mut runs = Vec::new();
    let mut times = String::from("ranks,round,seconds\n");
    for &n in ranks {
        let num = |e: fieldbridge::rendezvous::RdvError| CliError::Numerical(e.to_string());
        let pa = rcb_partition(&r.mesh.mesh, n).map_err(num)?;
        let pb = rcb_partition(&target, n).map_err(num)?;
        let mut rows = Vec::new();
        let mut max_dev: f64 = 0.0;
        for round in 0..rdv_cfg.rounds {
            let t0 = Instant::now();
            let out = coupled_transfer(&r.field, &pa, &target, &pb, &rdv, &method, g.exec).map_err(num)?;
            let dt = t0.elapsed().as_secs_f64();
            let _ = writeln!(times, "{n},{round},{dt:e}");
            let dev = out.field.values().iter().zip(&serial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if !(dev <= 1e-12) {
                return Err(CliError::Numerical(format!(
                    "{n} ranks, round {round}: coupled result deviates from the serial transfer by {dev:e}"
                )));
            }
            max_dev = max_dev.max(dev);
            fold_round(round, &out.stats, &mut rows);
        }
        let stats = CouplingStats { rows };
        let path = r.output.join(format!("stats_ranks{n}.csv"));
        write(&path, &stats.to_csv())?;
        runs.push(SweepRun {
            ranks: n,
            stats_path: path,
            rounds: stats.n_rounds(),
            rdv_bytes_recv: stats.total(Role::Rdv, |t| t.bytes_recv),
            max_deviation: max_dev,
        });
    }
    let mut summary = String::from("ranks,rounds,rdv_bytes_recv,max_deviation\n");
    for s in &runs {
        let _ = writeln!(summary, "{},{},{},{:e}", s.ranks, s.rounds, s.rdv_bytes_recv, s.max_deviation);
    }
    write(&r.output.join("scale_summary.csv"), &summary)?;
    write(&r.output.join("wall_times.txt"), &times)?;
    Ok(runs)
}
