use rayon::prelude::*;

use super::clip::{clip_triangles, ConvexPolygon};
use crate::locate::UniformGrid;
use crate::mesh::{Mesh, Point2};
use crate::Exec;

/// Relative area below which an intersection polygon is discarded.
pub const SLIVER_FRACTION: f64 = 1e-12;

/// One nonempty intersection of a source and a target element.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperCell {
    pub source_elem: usize,
    pub target_elem: usize,
    pub polygon: ConvexPolygon,
}

impl SuperCell {
    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    /// Fan subdivision of the polygon.
    pub fn triangles(&self) -> Vec<[Point2; 3]> {
        self.polygon.triangles()
    }
}

/// Common refinement of two meshes, cells ordered by `(target_elem, source_elem)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperMesh {
    cells: Vec<SuperCell>,
    total_area: f64,
}

impl SuperMesh {
    pub fn cells(&self) -> &[SuperCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Overlap area per target element.
    pub fn target_areas(&self, n_target_elems: usize) -> Vec<f64> {
        let mut a = vec![0.0; n_target_elems];
        for c in &self.cells {
            a[c.target_elem] += c.area();
        }
        a
    }
}

/// Area threshold for a mesh pair: a fraction of the smaller mean element area.
pub fn sliver_threshold(source: &Mesh, target: &Mesh) -> f64 {
    SLIVER_FRACTION * source.mean_element_area().min(target.mean_element_area())
}

/// Clips one source triangle against one target triangle, dropping slivers.
pub(crate) fn clip_pair(src: [Point2; 3], tgt: [Point2; 3], sliver: f64) -> Option<ConvexPolygon> {
    let poly = clip_triangles(src, tgt);
    (!poly.is_empty() && poly.area() >= sliver).then_some(poly)
}

/// Intersects every target element with the source elements whose bounding boxes overlap
/// it, found through a uniform grid over the source mesh.
pub fn build_supermesh(source: &Mesh, target: &Mesh, exec: Exec) -> SuperMesh {
    let Ok(grid) = UniformGrid::build(source, 1.0) else {
        return SuperMesh { cells: Vec::new(), total_area: 0.0 };
    };
    build_supermesh_with_grid(source, target, &grid, exec)
}

/// [`build_supermesh`] with a prebuilt source grid.
pub fn build_supermesh_with_grid(source: &Mesh, target: &Mesh, grid: &UniformGrid, exec: Exec) -> SuperMesh {
    let sliver = sliver_threshold(source, target);
    let per_target = |te: usize| -> Vec<SuperCell> {
        let t = target.triangle_points(te);
        grid.candidates(&target.element_bbox(te))
            .into_iter()
            .filter_map(|se| {
                clip_pair(source.triangle_points(se), t, sliver)
                    .map(|polygon| SuperCell { source_elem: se, target_elem: te, polygon })
            })
            .collect()
    };
    let cells: Vec<SuperCell> = match exec {
        Exec::Serial => (0..target.n_elems()).flat_map(per_target).collect(),
        Exec::Parallel => {
            let parts: Vec<Vec<SuperCell>> = (0..target.n_elems()).into_par_iter().map(per_target).collect();
            parts.into_iter().flatten().collect()
        }
    };
    let total_area = cells.iter().map(|c| c.area()).sum();
    SuperMesh { cells, total_area }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, generate};

    #[test]
    fn self_intersection_is_one_cell_per_element() {
        let m = generate::disk(1.0, 6).unwrap();
        let s = build_supermesh(&m, &m, Exec::Serial);
        assert_eq!(s.len(), m.n_elems());
        assert!(s.cells().iter().enumerate().all(|(i, c)| c.source_elem == i && c.target_elem == i));
        assert!((s.total_area() - m.total_area()).abs() <= 1e-12 * m.total_area());
    }

    #[test]
    fn disjoint_meshes_give_nothing() {
        let a = generate::square(3).unwrap();
        let b = build_mesh(
            vec![Point2::new(5.0, 5.0), Point2::new(6.0, 5.0), Point2::new(5.0, 6.0)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        assert!(build_supermesh(&a, &b, Exec::Serial).is_empty());
    }

    #[test]
    fn parallel_matches_serial() {
        let a = generate::disk(1.0, 7).unwrap();
        let b = generate::disk(1.0, 5).unwrap();
        assert_eq!(build_supermesh(&a, &b, Exec::Serial), build_supermesh(&a, &b, Exec::Parallel));
    }
}
