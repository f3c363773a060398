//! Accuracy and conservation errors and the iterated round-trip mapping experiment.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::conservative::{
    build_supermesh, transfer_conservative_on, ConservativeError, ConservativeOptions, SuperMesh, DEFAULT_REL_TOL,
};
use crate::mesh::{integrate_field, DofLocation, Field, Mesh, MeshError, Point2, Shape};
use crate::pointwise::{transfer_values, FitError, FitSpec, SourceIndex, TransferError};
use crate::quadrature::QuadratureRule;
use crate::Exec;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("ground truth has zero norm; relative accuracy error is undefined")]
    ZeroNorm,
    #[error("ground truth integrates to zero; relative conservation error is undefined")]
    ZeroIntegral,
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("fields live on different meshes or dof layouts")]
    LayoutMismatch,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("iteration {iteration}: {source}")]
    Pointwise { iteration: usize, source: TransferError },
    #[error("iteration {iteration}: {source}")]
    Conservative { iteration: usize, source: ConservativeError },
    #[error("building source index: {0}")]
    Index(#[from] FitError),
    #[error("malformed error series csv at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// `||f - f*|| / ||f*||` with the Euclidean norm over dofs.
pub fn accuracy_error(f: &[f64], f_star: &[f64]) -> Result<f64, MetricsError> {
    if f.len() != f_star.len() {
        return Err(MetricsError::LengthMismatch { expected: f_star.len(), found: f.len() });
    }
    let den = f_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(MetricsError::ZeroNorm);
    }
    let num = f.iter().zip(f_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(num / den)
}

/// `|∫(f - f*)| / |∫f*|`, both fields integrated with a rule of `quad_degree` on their
/// common mesh.
pub fn conservation_error(f: &Field, f_star: &Field, quad_degree: usize) -> Result<f64, MetricsError> {
    if !Arc::ptr_eq(f.mesh(), f_star.mesh()) && f.mesh() != f_star.mesh() || f.shape() != f_star.shape() {
        return Err(MetricsError::LayoutMismatch);
    }
    let i_star = integrate_field(f_star, quad_degree)?;
    relative_integral_error(integrate_field(f, quad_degree)?, i_star)
}

fn relative_integral_error(i: f64, i_star: f64) -> Result<f64, MetricsError> {
    if i_star == 0.0 {
        return Err(MetricsError::ZeroIntegral);
    }
    Ok((i - i_star).abs() / i_star.abs())
}

/// Integral of an analytic function over a mesh with the degree-4 rule.
pub fn integrate_analytic(mesh: &Mesh, f: &dyn Fn(Point2) -> f64) -> f64 {
    let rule = QuadratureRule::for_degree(4).expect("degree 4 is tabulated");
    (0..mesh.n_elems()).map(|e| rule.integrate(mesh.triangle_points(e), mesh.element_area(e), f)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub iteration: usize,
    pub accuracy_error: f64,
    pub conservation_error: f64,
}

/// Which reference the errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundTruth {
    /// The vertex field before any mapping.
    #[default]
    Discrete,
    /// The analytic function: sampled at vertices for accuracy, integrated with the
    /// degree-4 rule for conservation.
    Analytic,
}

impl GroundTruth {
    pub fn name(&self) -> &'static str {
        match self {
            GroundTruth::Discrete => "discrete",
            GroundTruth::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    pub field: String,
    pub method: String,
    pub ground_truth: GroundTruth,
    /// Free-form `(key, value)` parameters of the run.
    pub params: Vec<(String, String)>,
    pub records: Vec<ErrorRecord>,
}

pub const CSV_HEADER: &str = "iteration,accuracy_error,conservation_error";

impl ErrorSeries {
    pub fn accuracy(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.accuracy_error).collect()
    }

    pub fn conservation(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.conservation_error).collect()
    }

    /// CSV with one row per iteration. Values use the shortest representation that
    /// parses back to the same bits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(s, "{},{:e},{:e}", r.iteration, r.accuracy_error, r.conservation_error);
        }
        s
    }

    /// Parses the records of [`ErrorSeries::to_csv`]; metadata is left empty.
    pub fn from_csv(text: &str) -> Result<ErrorSeries, MetricsError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(MetricsError::Csv { line: 1, msg: format!("expected header `{CSV_HEADER}`") }),
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| MetricsError::Csv { line: i + 1, msg: msg.to_string() };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad("expected 3 columns"));
            }
            records.push(ErrorRecord {
                iteration: cols[0].trim().parse().map_err(|_| bad("bad iteration"))?,
                accuracy_error: cols[1].trim().parse().map_err(|_| bad("bad accuracy error"))?,
                conservation_error: cols[2].trim().parse().map_err(|_| bad("bad conservation error"))?,
            });
        }
        Ok(ErrorSeries { records, ..Default::default() })
    }
}

/// Transfer method of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Pointwise(FitSpec),
    Conservative { rel_tol: f64 },
}

impl Method {
    pub fn conservative() -> Method {
        Method::Conservative { rel_tol: DEFAULT_REL_TOL }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Pointwise(_) => "pointwise",
            Method::Conservative { .. } => "conservative",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub method: Method,
    pub iterations: usize,
    pub ground_truth: GroundTruth,
    /// Mesh the field visits and returns from in each iteration. Without one, pointwise
    /// maps between the vertices and centroids of the source mesh and conservative maps
    /// onto an identical copy of it.
    pub partner: Option<Arc<Mesh>>,
    pub exec: Exec,
}

impl Experiment {
    pub fn new(method: Method, iterations: usize) -> Experiment {
        Experiment { method, iterations, ground_truth: GroundTruth::Discrete, partner: None, exec: Exec::Serial }
    }
}

enum Stepper {
    Pointwise { spec: FitSpec, there: SourceIndex, there_targets: Vec<Point2>, back: SourceIndex, back_targets: Vec<Point2> },
    Conservative { rel_tol: f64, partner: Arc<Mesh>, forward: SuperMesh, backward: SuperMesh },
}

impl Stepper {
    fn new(mesh: &Arc<Mesh>, exp: &Experiment) -> Result<Stepper, MetricsError> {
        Ok(match exp.method {
            Method::Pointwise(spec) => {
                let (mid_mesh, mid_loc) = match &exp.partner {
                    Some(p) => (p.clone(), DofLocation::Vertices),
                    None => (mesh.clone(), DofLocation::Centroids),
                };
                Stepper::Pointwise {
                    spec,
                    there: SourceIndex::from_mesh(mesh.clone(), DofLocation::Vertices)?,
                    there_targets: mid_loc.points(&mid_mesh),
                    back: SourceIndex::from_mesh(mid_mesh, mid_loc)?,
                    back_targets: mesh.vertices().to_vec(),
                }
            }
            Method::Conservative { rel_tol } => {
                let partner = exp.partner.clone().unwrap_or_else(|| Arc::new(Mesh::clone(mesh)));
                Stepper::Conservative {
                    rel_tol,
                    forward: build_supermesh(mesh, &partner, exp.exec),
                    backward: build_supermesh(&partner, mesh, exp.exec),
                    partner,
                }
            }
        })
    }

    fn step(&self, f: &Field, iteration: usize, exec: Exec) -> Result<Field, MetricsError> {
        match self {
            Stepper::Pointwise { spec, there, there_targets, back, back_targets } => {
                let pw = |source| MetricsError::Pointwise { iteration, source };
                let mid = transfer_values(there, f.values(), there_targets, spec, exec).map_err(pw)?;
                let out = transfer_values(back, &mid, back_targets, spec, exec).map_err(pw)?;
                Ok(Field::new(f.mesh().clone(), Shape::Linear, out)?)
            }
            Stepper::Conservative { rel_tol, partner, forward, backward } => {
                let cf = |source| MetricsError::Conservative { iteration, source };
                let opts = ConservativeOptions { rel_tol: *rel_tol, exec, ..Default::default() };
                let mid = transfer_conservative_on(f, partner.clone(), forward, &opts).map_err(cf)?;
                let out = transfer_conservative_on(&mid.field, f.mesh().clone(), backward, &opts).map_err(cf)?;
                Ok(out.field)
            }
        }
    }
}

/// Runs `exp.iterations` round trips starting from the vertex field `initial` and reports
/// the errors of the field after each full cycle.
///
/// `analytic` is required for [`GroundTruth::Analytic`].
pub fn run_iteration_experiment(
    initial: &Field,
    analytic: Option<&dyn Fn(Point2) -> f64>,
    exp: &Experiment,
) -> Result<ErrorSeries, MetricsError> {
    if exp.iterations == 0 {
        return Err(MetricsError::InvalidExperiment("at least one iteration is required".into()));
    }
    if initial.shape() != Shape::Linear {
        return Err(MetricsError::InvalidExperiment("the initial field must live on vertices".into()));
    }
    let mesh = initial.mesh().clone();
    let (truth, truth_integral) = match exp.ground_truth {
        GroundTruth::Discrete => (initial.values().to_vec(), integrate_field(initial, 2)?),
        GroundTruth::Analytic => {
            let f = analytic
                .ok_or_else(|| MetricsError::InvalidExperiment("analytic ground truth needs the analytic field".into()))?;
            (mesh.vertices().iter().map(|&p| f(p)).collect(), integrate_analytic(&mesh, f))
        }
    };
    let stepper = Stepper::new(&mesh, exp)?;
    let mut records = Vec::with_capacity(exp.iterations);
    let mut f = initial.clone();
    for k in 1..=exp.iterations {
        f = stepper.step(&f, k, exp.exec)?;
        records.push(ErrorRecord {
            iteration: k,
            accuracy_error: accuracy_error(f.values(), &truth)?,
            conservation_error: relative_integral_error(integrate_field(&f, 2)?, truth_integral)?,
        });
    }
    let mut params = Vec::new();
    if let Method::Pointwise(spec) = &exp.method {
        params.push(("degree".to_string(), spec.degree.to_string()));
        params.push(("rbf".to_string(), spec.basis.kind.name().to_string()));
        params.push(("lambda".to_string(), format!("{:e}", spec.lambda)));
    }
    Ok(ErrorSeries {
        field: initial.name().to_string(),
        method: exp.method.name().to_string(),
        ground_truth: exp.ground_truth,
        params,
        records,
    })
}
