//! Uniform-grid point localization.
//!
//! A query returns the containing element, the barycentric coordinates of the point in
//! it, and the lowest-dimension mesh entity the point lies on. Every element whose
//! closure contains the point (within tolerance) is examined; the winner is the entity
//! with the smallest `(dimension, global id)`, and among elements that see that entity
//! the smallest element index. The answer therefore does not depend on traversal order
//! or on grid resolution.

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{BBox, Mesh, Point2};

/// Default barycentric tolerance. Barycentric coordinates measure distance in units of
/// the element's altitudes, so this is a tolerance relative to element size.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocateError {
    #[error("cells_per_element must be positive and finite, got {0}")]
    InvalidSizing(f64),
    #[error("mesh has no elements")]
    EmptyMesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    bbox: BBox,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    offsets: Vec<usize>,
    ids: Vec<usize>,
    max_diameter: f64,
}

impl UniformGrid {
    /// Builds a grid with roughly `cells_per_element * n_elems` cells shaped to the
    /// mesh bounding box. Each cell lists, ascending, every element whose bounding box
    /// overlaps it.
    pub fn build(mesh: &Mesh, cells_per_element: f64) -> Result<UniformGrid, LocateError> {
        if !(cells_per_element > 0.0 && cells_per_element.is_finite()) {
            return Err(LocateError::InvalidSizing(cells_per_element));
        }
        if mesh.n_elems() == 0 {
            return Err(LocateError::EmptyMesh);
        }
        let bbox = mesh.bbox();
        let target = (cells_per_element * mesh.n_elems() as f64).round().max(1.0);
        let aspect = bbox.width() / bbox.height();
        let nx = ((target * aspect).sqrt().round() as usize).max(1);
        let ny = ((target / nx as f64).round() as usize).max(1);
        let mut grid = UniformGrid {
            bbox,
            nx,
            ny,
            dx: bbox.width() / nx as f64,
            dy: bbox.height() / ny as f64,
            offsets: vec![0; nx * ny + 1],
            ids: Vec::new(),
            max_diameter: 0.0,
        };

        let ranges: Vec<_> = (0..mesh.n_elems()).map(|e| grid.cell_range(&mesh.element_bbox(e))).collect();
        for &(i0, i1, j0, j1) in &ranges {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.offsets[j * nx + i + 1] += 1;
                }
            }
        }
        for c in 0..nx * ny {
            grid.offsets[c + 1] += grid.offsets[c];
        }
        let mut fill = grid.offsets.clone();
        grid.ids = vec![0; grid.offsets[nx * ny]];
        // elements are visited in ascending order, so each cell list comes out sorted
        for (e, &(i0, i1, j0, j1)) in ranges.iter().enumerate() {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let c = j * nx + i;
                    grid.ids[fill[c]] = e;
                    fill[c] += 1;
                }
            }
        }
        grid.max_diameter = (0..mesh.n_elems()).map(|e| mesh.element_diameter(e)).fold(0.0, f64::max);
        Ok(grid)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Candidate elements of cell `(i, j)`, ascending.
    pub fn cell(&self, i: usize, j: usize) -> &[usize] {
        let c = j * self.nx + i;
        &self.ids[self.offsets[c]..self.offsets[c + 1]]
    }

    fn index_x(&self, x: f64) -> usize {
        let f = ((x - self.bbox.min.x) / self.dx).floor();
        (f.max(0.0) as usize).min(self.nx - 1)
    }

    fn index_y(&self, y: f64) -> usize {
        let f = ((y - self.bbox.min.y) / self.dy).floor();
        (f.max(0.0) as usize).min(self.ny - 1)
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: Point2) -> (usize, usize) {
        (self.index_x(p.x), self.index_y(p.y))
    }

    fn cell_range(&self, b: &BBox) -> (usize, usize, usize, usize) {
        (self.index_x(b.min.x), self.index_x(b.max.x), self.index_y(b.min.y), self.index_y(b.max.y))
    }

    /// All elements listed in cells overlapping `b`, ascending and deduplicated.
    pub fn candidates(&self, b: &BBox) -> Vec<usize> {
        if !b.overlaps(&self.bbox) {
            return Vec::new();
        }
        let (i0, i1, j0, j1) = self.cell_range(b);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(self.cell(i, j));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Outcome of a successful localization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub elem: usize,
    /// 0 = vertex, 1 = edge, 2 = element interior.
    pub entity_dim: u8,
    /// Local index of the classified vertex, edge or element.
    pub entity: usize,
    /// Global id of the classified entity.
    pub entity_id: u64,
    pub barycentric: [f64; 3],
}

/// Classifies barycentric coordinates already known to lie in `[-tol, 1 + tol]`.
/// Returns the entity dimension and the local vertex (dim 0) or the local vertex
/// opposite the edge (dim 1).
pub fn classify_barycentric(b: [f64; 3], tol: f64) -> (u8, usize) {
    let small: Vec<usize> = (0..3).filter(|&i| b[i] <= tol).collect();
    match small.len() {
        0 => (2, 0),
        1 => (1, small[0]),
        _ => {
            let big = (0..3).max_by(|&i, &j| b[i].total_cmp(&b[j])).unwrap();
            (0, big)
        }
    }
}

fn classify_in(mesh: &Mesh, e: usize, b: [f64; 3], tol: f64) -> Option<Location> {
    if b.iter().any(|&l| !(l >= -tol)) {
        return None;
    }
    let (dim, local) = classify_barycentric(b, tol);
    let (entity, entity_id) = match dim {
        0 => {
            let v = mesh.triangle(e)[local];
            (v, mesh.vertex_gid(v))
        }
        1 => {
            let ed = mesh.elem_edge(e, local);
            (ed, mesh.edge_gid(ed))
        }
        _ => (e, mesh.elem_gid(e)),
    };
    Some(Location { elem: e, entity_dim: dim, entity, entity_id, barycentric: b })
}

/// Picks the winning location among candidates visited in ascending element order.
fn better(best: Option<Location>, cand: Location) -> Option<Location> {
    match best {
        Some(b) if (b.entity_dim, b.entity_id) <= (cand.entity_dim, cand.entity_id) => Some(b),
        _ => Some(cand),
    }
}

/// Locates `p`; `None` when it lies outside every element's closure.
pub fn locate(grid: &UniformGrid, mesh: &Mesh, p: Point2, tol: f64) -> Option<Location> {
    let margin = tol.max(0.0) * grid.max_diameter;
    let query = BBox { min: p, max: p }.expanded(margin);
    let mut best = None;
    for e in grid.candidates(&query) {
        if let Some(loc) = classify_in(mesh, e, mesh.barycentric(e, p), tol) {
            best = better(best, loc);
        }
    }
    best
}

pub fn locate_many(grid: &UniformGrid, mesh: &Mesh, points: &[Point2], tol: f64) -> Vec<Option<Location>> {
    points.iter().map(|&p| locate(grid, mesh, p, tol)).collect()
}

/// Parallel [`locate_many`]; results are identical and in input order.
pub fn locate_many_par(grid: &UniformGrid, mesh: &Mesh, points: &[Point2], tol: f64) -> Vec<Option<Location>> {
    points.par_iter().map(|&p| locate(grid, mesh, p, tol)).collect()
}
