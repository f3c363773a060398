//! Conservative transfer by L2 projection over the supermesh of source and target.
//!
//! The target values solve `M f_t = b` with `M_AB = ∫ N_A N_B` and `b_A = ∫ N_A f_s`,
//! both integrated over the part of each target element covered by the source mesh. The
//! integrals are evaluated on the fan subdivision of every source/target intersection
//! polygon, so the source field is never interpolated.

mod clip;
mod sparse;
mod supermesh;

use std::sync::Arc;

use rayon::prelude::*;

pub use clip::{clip_triangles, ConvexPolygon};
pub use sparse::{solve_spd, Solution, SparseSpd};
pub(crate) use supermesh::clip_pair;
pub use supermesh::{build_supermesh, build_supermesh_with_grid, sliver_threshold, SuperCell, SuperMesh, SLIVER_FRACTION};

use crate::mesh::{barycentric, from_barycentric, orient2d, Field, Mesh, MeshError, Point2, Shape};
use crate::quadrature::{QuadratureError, QuadratureRule};
use crate::Exec;

pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Quadrature points may fall this far outside a parent element, in barycentric units,
/// before the assembly reports an inconsistency.
const PARENT_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum ConservativeError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("quadrature point of intersection (source {source_elem}, target {target_elem}) lies outside its parent elements")]
    Inconsistent { source_elem: usize, target_elem: usize },
    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservativeOptions {
    /// Target field shape; linear (vertex) targets are the default.
    pub target_shape: Shape,
    pub rel_tol: f64,
    /// Defaults to ten times the target dof count.
    pub max_iter: Option<usize>,
    pub exec: Exec,
}

impl Default for ConservativeOptions {
    fn default() -> Self {
        ConservativeOptions { target_shape: Shape::Linear, rel_tol: DEFAULT_REL_TOL, max_iter: None, exec: Exec::Serial }
    }
}

fn n_local(shape: Shape) -> usize {
    match shape {
        Shape::Constant => 1,
        Shape::Linear => 3,
    }
}

fn basis(shape: Shape, bary: [f64; 3]) -> [f64; 3] {
    match shape {
        Shape::Constant => [1.0, 0.0, 0.0],
        Shape::Linear => bary,
    }
}

/// Target dofs of element `e`, padded with `usize::MAX` for constant shapes.
pub(crate) fn element_dofs(mesh: &Mesh, shape: Shape, e: usize) -> [usize; 3] {
    match shape {
        Shape::Constant => [e, usize::MAX, usize::MAX],
        Shape::Linear => mesh.triangle(e),
    }
}

/// Source values on element `e` in the order of its local dofs.
pub(crate) fn element_values(field: &Field, e: usize) -> [f64; 3] {
    let v = field.values();
    match field.shape() {
        Shape::Constant => [v[e], 0.0, 0.0],
        Shape::Linear => field.mesh().triangle(e).map(|k| v[k]),
    }
}

/// Quadrature rules for one source/target shape pair.
#[derive(Debug, Clone)]
pub(crate) struct PairRules {
    rhs: QuadratureRule,
    mass: QuadratureRule,
}

impl PairRules {
    pub(crate) fn new(source: Shape, target: Shape) -> Result<PairRules, QuadratureError> {
        Ok(PairRules {
            rhs: QuadratureRule::for_degree(source.degree() + target.degree())?,
            mass: QuadratureRule::for_degree(2 * target.degree())?,
        })
    }
}

/// Geometry and data of one source/target element pair, independent of any mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairInput {
    pub source_elem: usize,
    pub target_elem: usize,
    pub source_tri: [Point2; 3],
    pub source_values: [f64; 3],
    pub source_shape: Shape,
    pub target_tri: [Point2; 3],
    pub target_shape: Shape,
}

/// Integrals of one intersection polygon against the target element's local basis.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PairContribution {
    pub target_elem: usize,
    pub source_elem: usize,
    pub area: f64,
    pub source_integral: f64,
    pub mass: [[f64; 3]; 3],
    pub rhs: [f64; 3],
}

fn inside(b: [f64; 3]) -> bool {
    b.iter().all(|&x| x >= -PARENT_TOL)
}

/// The single routine that integrates an intersection; every assembly path goes through it.
pub(crate) fn pair_contribution(
    input: &PairInput,
    polygon: &ConvexPolygon,
    rules: &PairRules,
) -> Result<PairContribution, ConservativeError> {
    let nl = n_local(input.target_shape);
    let mut out = PairContribution {
        target_elem: input.target_elem,
        source_elem: input.source_elem,
        area: polygon.area(),
        source_integral: 0.0,
        mass: [[0.0; 3]; 3],
        rhs: [0.0; 3],
    };
    let inconsistent = || ConservativeError::Inconsistent { source_elem: input.source_elem, target_elem: input.target_elem };
    for tri in polygon.triangles() {
        let area = 0.5 * orient2d(tri[0], tri[1], tri[2]);
        for (qp, &w) in rules.rhs.points().iter().zip(rules.rhs.weights()) {
            let x = from_barycentric(tri, *qp);
            let bs = barycentric(input.source_tri, x);
            let bt = barycentric(input.target_tri, x);
            if !inside(bs) || !inside(bt) {
                return Err(inconsistent());
            }
            let fs = match input.source_shape {
                Shape::Constant => input.source_values[0],
                Shape::Linear => bs[0] * input.source_values[0] + bs[1] * input.source_values[1] + bs[2] * input.source_values[2],
            };
            let n = basis(input.target_shape, bt);
            let wa = w * area;
            out.source_integral += wa * fs;
            for a in 0..nl {
                out.rhs[a] += wa * n[a] * fs;
            }
        }
        for (qp, &w) in rules.mass.points().iter().zip(rules.mass.weights()) {
            let x = from_barycentric(tri, *qp);
            let bt = barycentric(input.target_tri, x);
            if !inside(bt) {
                return Err(inconsistent());
            }
            let n = basis(input.target_shape, bt);
            let wa = w * area;
            for a in 0..nl {
                for b in 0..nl {
                    out.mass[a][b] += wa * n[a] * n[b];
                }
            }
        }
    }
    Ok(out)
}

/// Assembled overlap system.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct System {
    pub mass: SparseSpd,
    pub rhs: Vec<f64>,
    /// Dofs whose basis support misses the source domain; they get identity rows.
    pub uncovered: Vec<usize>,
    pub source_integral: f64,
    pub overlap_area: f64,
}

/// Sums contributions in the order given. Callers pass them sorted by
/// `(target_elem, source_elem)` so every path produces the same floating-point sums.
pub(crate) fn assemble_system(target: &Mesh, shape: Shape, contributions: &[PairContribution]) -> System {
    let n = shape.location().count(target);
    let nl = n_local(shape);
    let mut trip = Vec::with_capacity(contributions.len() * nl * nl + n);
    let mut rhs = vec![0.0; n];
    let mut covered = vec![false; n];
    let mut source_integral = 0.0;
    let mut overlap_area = 0.0;
    for c in contributions {
        let dofs = element_dofs(target, shape, c.target_elem);
        for a in 0..nl {
            covered[dofs[a]] = true;
            rhs[dofs[a]] += c.rhs[a];
            for b in 0..nl {
                trip.push((dofs[a], dofs[b], c.mass[a][b]));
            }
        }
        source_integral += c.source_integral;
        overlap_area += c.area;
    }
    let uncovered: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
    trip.extend(uncovered.iter().map(|&i| (i, i, 1.0)));
    System { mass: SparseSpd::from_triplets(n, &trip), rhs, uncovered, source_integral, overlap_area }
}

fn contributions(
    source: &Field,
    target: &Mesh,
    target_shape: Shape,
    supermesh: &SuperMesh,
    exec: Exec,
) -> Result<Vec<PairContribution>, ConservativeError> {
    let rules = PairRules::new(source.shape(), target_shape)?;
    let smesh = source.mesh();
    let one = |c: &SuperCell| {
        let input = PairInput {
            source_elem: c.source_elem,
            target_elem: c.target_elem,
            source_tri: smesh.triangle_points(c.source_elem),
            source_values: element_values(source, c.source_elem),
            source_shape: source.shape(),
            target_tri: target.triangle_points(c.target_elem),
            target_shape,
        };
        pair_contribution(&input, &c.polygon, &rules)
    };
    match exec {
        Exec::Serial => supermesh.cells().iter().map(one).collect(),
        Exec::Parallel => supermesh.cells().par_iter().map(one).collect(),
    }
}

/// Consistent mass matrix of `shape` on whole target elements. Linear elements use the
/// closed form `area / 12 * [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn assemble_mass(target: &Mesh, shape: Shape) -> SparseSpd {
    let n = shape.location().count(target);
    let mut trip = Vec::new();
    for e in 0..target.n_elems() {
        let a = target.element_area(e);
        match shape {
            Shape::Constant => trip.push((e, e, a)),
            Shape::Linear => {
                let t = target.triangle(e);
                for i in 0..3 {
                    for j in 0..3 {
                        trip.push((t[i], t[j], a * if i == j { 2.0 } else { 1.0 } / 12.0));
                    }
                }
            }
        }
    }
    SparseSpd::from_triplets(n, &trip)
}

/// Mass matrix integrated only over the part of each target element covered by the
/// supermesh. Rows of uncovered dofs are empty.
pub fn assemble_overlap_mass(supermesh: &SuperMesh, target: &Mesh, shape: Shape) -> Result<SparseSpd, ConservativeError> {
    let rules = QuadratureRule::for_degree(2 * shape.degree())?;
    let nl = n_local(shape);
    let mut trip = Vec::new();
    for c in supermesh.cells() {
        let tt = target.triangle_points(c.target_elem);
        let dofs = element_dofs(target, shape, c.target_elem);
        for tri in c.triangles() {
            let area = 0.5 * orient2d(tri[0], tri[1], tri[2]);
            let mut m = [[0.0; 3]; 3];
            for (qp, &w) in rules.points().iter().zip(rules.weights()) {
                let nb = basis(shape, barycentric(tt, from_barycentric(tri, *qp)));
                for a in 0..nl {
                    for b in 0..nl {
                        m[a][b] += w * area * nb[a] * nb[b];
                    }
                }
            }
            for a in 0..nl {
                for b in 0..nl {
                    trip.push((dofs[a], dofs[b], m[a][b]));
                }
            }
        }
    }
    Ok(SparseSpd::from_triplets(shape.location().count(target), &trip))
}

/// Load vector `b_A = ∫ N_A f_s` over the supermesh, with quadrature of degree
/// `source degree + target degree`.
pub fn assemble_rhs(supermesh: &SuperMesh, source: &Field, target: &Mesh, shape: Shape) -> Result<Vec<f64>, ConservativeError> {
    let c = contributions(source, target, shape, supermesh, Exec::Serial)?;
    Ok(assemble_system(target, shape, &c).rhs)
}

/// Result of a conservative transfer.
#[derive(Debug, Clone)]
pub struct ConservativeTransfer {
    pub field: Field,
    /// Target dofs outside the source domain, set to zero.
    pub uncovered: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
    /// Area of the source/target overlap.
    pub overlap_area: f64,
    /// `∫ f_s` over the overlap.
    pub source_integral: f64,
    /// `∫ f_t` over the overlap.
    pub target_integral: f64,
}

/// Solves an assembled system and packages the result.
pub(crate) fn finish(
    system: System,
    target: Arc<Mesh>,
    shape: Shape,
    rel_tol: f64,
    max_iter: Option<usize>,
) -> Result<ConservativeTransfer, ConservativeError> {
    let sol = solve_spd(&system.mass, &system.rhs, rel_tol, max_iter)?;
    let mut row_sums = system.mass.row_sums();
    for &i in &system.uncovered {
        row_sums[i] = 0.0;
    }
    // Σ_B N_B = 1 on every element, so ∫_overlap f_t = Σ_A f_A Σ_B M_AB
    let target_integral = sol.x.iter().zip(&row_sums).map(|(x, s)| x * s).sum();
    let field = Field::new(target, shape, sol.x)?;
    Ok(ConservativeTransfer {
        field,
        uncovered: system.uncovered,
        iterations: sol.iterations,
        residual: sol.residual,
        overlap_area: system.overlap_area,
        source_integral: system.source_integral,
        target_integral,
    })
}

/// L2 projection of `source` onto `target`.
pub fn transfer_conservative(
    source: &Field,
    target: Arc<Mesh>,
    opts: &ConservativeOptions,
) -> Result<ConservativeTransfer, ConservativeError> {
    let supermesh = build_supermesh(source.mesh(), &target, opts.exec);
    transfer_conservative_on(source, target, &supermesh, opts)
}

/// [`transfer_conservative`] reusing a supermesh built for the same mesh pair.
pub fn transfer_conservative_on(
    source: &Field,
    target: Arc<Mesh>,
    supermesh: &SuperMesh,
    opts: &ConservativeOptions,
) -> Result<ConservativeTransfer, ConservativeError> {
    let contribs = contributions(source, &target, opts.target_shape, supermesh, opts.exec)?;
    let system = assemble_system(&target, opts.target_shape, &contribs);
    finish(system, target, opts.target_shape, opts.rel_tol, opts.max_iter)
}
