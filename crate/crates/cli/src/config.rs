//! Experiment configuration files.
//!
//! A config is TOML with a few flat sections. Paths are relative to the config file.
//!
//! ```toml
//! output = "out"          # directory for CSVs and the manifest
//! seed = 7                # drives mesh jitter; overridden by --seed
//! iterations = 20
//! ground_truth = "discrete"   # or "analytic"
//!
//! [mesh]
//! generate = "disk(1, 29)"    # or: file = "mesh.txt"
//! jitter = 0.0                # optional random interior displacement
//!
//! [partner]                   # optional second mesh
//! generate = "graded(1, 15, 29, 1.5)"
//!
//! [field]
//! analytic = "sincos2"        # sincos2, constant(c), linear(a, b, c); or: file = "f.txt"
//!
//! [method]
//! kind = "pointwise"          # or "conservative"
//! degree = 1
//! rbf = "c4"
//! selection = "fixed"         # fixed, adaptive or patch
//! radii = [1.5, 2.0, 3.0]     # multiples of the mesh's mean edge length
//!
//! [rendezvous]                # used by scale-sweep
//! grid = [4, 4]
//! ranks = 4
//! rounds = 10
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fieldbridge::mesh::generate::{self, MeshSpec};
use fieldbridge::mesh::{parse_field, parse_mesh};
use fieldbridge::metrics::{GroundTruth, Method};
use fieldbridge::pointwise::{FitSpec, RadialBasis, RbfKind, Selection, DEFAULT_GROWTH};
use fieldbridge::{Field, Mesh};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::specs::{parse_mesh_spec, AnalyticField};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub ground_truth: TruthName,
    pub mesh: MeshSource,
    pub partner: Option<MeshSource>,
    pub field: FieldSource,
    pub method: MethodConfig,
    #[serde(default)]
    pub rendezvous: RendezvousConfig,
}

fn default_iterations() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TruthName {
    #[default]
    Discrete,
    Analytic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSource {
    pub generate: Option<String>,
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub jitter: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSource {
    pub analytic: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MethodConfig {
    Pointwise {
        degree: usize,
        #[serde(default = "default_rbf")]
        rbf: String,
        #[serde(default = "default_shape")]
        shape: f64,
        #[serde(default = "default_selection")]
        selection: String,
        #[serde(default)]
        radii: Vec<f64>,
        min_points: Option<usize>,
        #[serde(default = "default_growth")]
        growth: f64,
        #[serde(default)]
        layers: Vec<usize>,
        #[serde(default)]
        lambda: f64,
        #[serde(default = "default_true")]
        centering: bool,
    },
    Conservative {
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
}

fn default_rbf() -> String {
    "c4".into()
}
fn default_shape() -> f64 {
    2.0
}
fn default_selection() -> String {
    "fixed".into()
}
fn default_growth() -> f64 {
    DEFAULT_GROWTH
}
fn default_true() -> bool {
    true
}
fn default_rel_tol() -> f64 {
    fieldbridge::conservative::DEFAULT_REL_TOL
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RendezvousConfig {
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_rdv_ranks")]
    pub ranks: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
}

fn default_grid() -> [usize; 2] {
    [4, 4]
}
fn default_rdv_ranks() -> usize {
    4
}
fn default_rounds() -> usize {
    10
}

impl Default for RendezvousConfig {
    fn default() -> Self {
        RendezvousConfig { grid: default_grid(), ranks: default_rdv_ranks(), rounds: default_rounds() }
    }
}

pub fn load_config(path: &Path) -> Result<(Config, PathBuf), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg: Config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A mesh together with the text it was built from, for the manifest.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: Arc<Mesh>,
    pub source: String,
}

pub fn build_mesh_source(src: &MeshSource, base: &Path, seed: u64) -> Result<LoadedMesh, CliError> {
    let (mesh, source) = match (&src.generate, &src.file) {
        (Some(g), None) => {
            let spec: MeshSpec = parse_mesh_spec(g)?;
            (generate::generate(&spec)?, g.clone())
        }
        (None, Some(f)) => {
            let path = resolve(base, f);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let mesh = parse_mesh(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (mesh, path.display().to_string())
        }
        _ => return Err(CliError::Config("a mesh needs exactly one of `generate` or `file`".into())),
    };
    let mesh = if src.jitter > 0.0 { generate::jitter(&mesh, src.jitter, seed)? } else { mesh };
    Ok(LoadedMesh { mesh: Arc::new(mesh), source })
}

/// Initial field and, when it is analytic, the function itself.
pub fn build_field(src: &FieldSource, base: &Path, mesh: &Arc<Mesh>) -> Result<(Field, Option<AnalyticField>, String), CliError> {
    match (&src.analytic, &src.file) {
        (Some(a), None) => {
            let f = AnalyticField::parse(a)?;
            let field = Field::from_fn(mesh.clone(), fieldbridge::mesh::Shape::Linear, |p| f.eval(p)).with_name(f.name());
            Ok((field, Some(f), a.clone()))
        }
        (None, Some(p)) => {
            let path = resolve(base, p);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let field =
                parse_field(&text, mesh.clone()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok((field, None, path.display().to_string()))
        }
        _ => Err(CliError::Config("the field needs exactly one of `analytic` or `file`".into())),
    }
}

/// One point of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// File-name label, e.g. `r2` or `l1`.
    pub label: String,
    pub method: Method,
    /// Value swept over, as written in the config.
    pub value: f64,
}

impl Config {
    pub fn truth(&self) -> GroundTruth {
        match self.ground_truth {
            TruthName::Discrete => GroundTruth::Discrete,
            TruthName::Analytic => GroundTruth::Analytic,
        }
    }

    /// Expands the method section into one method per sweep value. Radii are scaled by
    /// `mean_edge`.
    pub fn sweep(&self, mean_edge: f64) -> Result<Vec<SweepPoint>, CliError> {
        let cfg = |m: String| CliError::Config(m);
        match &self.method {
            MethodConfig::Conservative { rel_tol } => {
                if !(*rel_tol > 0.0) {
                    return Err(cfg(format!("rel_tol must be positive, got {rel_tol}")));
                }
                Ok(vec![SweepPoint { label: "l2".into(), method: Method::Conservative { rel_tol: *rel_tol }, value: *rel_tol }])
            }
            MethodConfig::Pointwise { degree, rbf, shape, selection, radii, min_points, growth, layers, lambda, centering } => {
                let kind = RbfKind::from_name(rbf).ok_or_else(|| cfg(format!("unknown rbf `{rbf}`")))?;
                let basis = RadialBasis::new(kind, *shape).map_err(|e| cfg(e.to_string()))?;
                let spec = |sel: Selection| -> Result<FitSpec, CliError> {
                    let s = FitSpec::new(*degree, basis, sel).with_lambda(*lambda).with_centering(*centering);
                    s.validate().map_err(|e| cfg(e.to_string()))?;
                    Ok(s)
                };
                let points: Vec<SweepPoint> = match selection.as_str() {
                    "fixed" | "adaptive" => {
                        if radii.is_empty() {
                            return Err(cfg("`radii` must list at least one radius".into()));
                        }
                        radii
                            .iter()
                            .map(|&r| {
                                let sel = if selection == "fixed" {
                                    Selection::FixedRadius { cutoff: r * mean_edge }
                                } else {
                                    let min_points = min_points.ok_or_else(|| cfg("adaptive selection needs `min_points`".into()))?;
                                    Selection::AdaptiveRadius { min_points, initial_radius: r * mean_edge, growth: *growth }
                                };
                                Ok(SweepPoint { label: format!("r{r}"), method: Method::Pointwise(spec(sel)?), value: r })
                            })
                            .collect::<Result<_, CliError>>()?
                    }
                    "patch" => {
                        if layers.is_empty() {
                            return Err(cfg("`layers` must list at least one layer count".into()));
                        }
                        layers
                            .iter()
                            .map(|&l| {
                                let sel = Selection::ElementPatch { layers: l };
                                Ok(SweepPoint { label: format!("l{l}"), method: Method::Pointwise(spec(sel)?), value: l as f64 })
                            })
                            .collect::<Result<_, CliError>>()?
                    }
                    other => return Err(cfg(format!("unknown selection `{other}`"))),
                };
                Ok(points)
            }
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            MethodConfig::Pointwise { .. } => "pointwise",
            MethodConfig::Conservative { .. } => "conservative",
        }
    }
}
