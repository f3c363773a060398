use std::collections::BTreeSet;
use std::sync::Arc;

use super::{monomial_count, FitError, RadialBasis};
use crate::locate::{self, UniformGrid};
use crate::mesh::{BBox, DofLocation, Mesh, Point2};

/// How the support set of a target point is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// Every source closer than `cutoff`; too few points is an error.
    FixedRadius { cutoff: f64 },
    /// Starting at `initial_radius`, multiply the radius by `growth` until at least
    /// `min_points` sources fall inside.
    AdaptiveRadius { min_points: usize, initial_radius: f64, growth: f64 },
    /// Dofs of the source elements within `layers` adjacency hops of the target's
    /// containing entity, with unit weights.
    ElementPatch { layers: usize },
}

pub const DEFAULT_GROWTH: f64 = 1.5;

impl Selection {
    pub fn validate(&self, degree: usize) -> Result<(), FitError> {
        let bad = |m: String| Err(FitError::InvalidSpec(m));
        match *self {
            Selection::FixedRadius { cutoff } if !(cutoff > 0.0 && cutoff.is_finite()) => {
                bad(format!("cutoff radius must be positive, got {cutoff}"))
            }
            Selection::AdaptiveRadius { min_points, initial_radius, growth } => {
                if min_points < monomial_count(degree) {
                    bad(format!(
                        "min_points {min_points} is below the {} monomials of a degree-{degree} fit",
                        monomial_count(degree)
                    ))
                } else if !(growth > 1.0 && growth.is_finite()) {
                    bad(format!("growth factor must exceed 1, got {growth}"))
                } else if !(initial_radius > 0.0 && initial_radius.is_finite()) {
                    bad(format!("initial radius must be positive, got {initial_radius}"))
                } else {
                    Ok(())
                }
            }
            Selection::ElementPatch { layers: 0 } => bad("patch selection needs at least one layer".into()),
            _ => Ok(()),
        }
    }
}

/// Chosen sources for one target: indices ascending, with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// Final cutoff radius for the radius-based selections.
    pub radius: Option<f64>,
}

/// Source points binned on a uniform grid for radius queries.
#[derive(Debug, Clone)]
pub struct SourceCloud {
    points: Vec<Point2>,
    bbox: BBox,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    offsets: Vec<usize>,
    ids: Vec<usize>,
}

impl SourceCloud {
    pub fn new(points: Vec<Point2>) -> Result<SourceCloud, FitError> {
        let bbox = BBox::from_points(&points).ok_or(FitError::NoSources)?;
        let n = points.len() as f64;
        let (w, h) = (bbox.width(), bbox.height());
        let (nx, ny) = if w > 0.0 && h > 0.0 {
            let nx = ((n * w / h).sqrt().round() as usize).clamp(1, 4096);
            let ny = ((n / nx as f64).round() as usize).clamp(1, 4096);
            (nx, ny)
        } else if w > 0.0 {
            ((n as usize).clamp(1, 4096), 1)
        } else if h > 0.0 {
            (1, (n as usize).clamp(1, 4096))
        } else {
            (1, 1)
        };
        let dx = if w > 0.0 { w / nx as f64 } else { 1.0 };
        let dy = if h > 0.0 { h / ny as f64 } else { 1.0 };
        let mut cloud = SourceCloud { points, bbox, nx, ny, dx, dy, offsets: vec![0; nx * ny + 1], ids: Vec::new() };
        let cells: Vec<usize> = cloud.points.iter().map(|&p| cloud.cell_index(p)).collect();
        for &c in &cells {
            cloud.offsets[c + 1] += 1;
        }
        for c in 0..nx * ny {
            cloud.offsets[c + 1] += cloud.offsets[c];
        }
        let mut fill = cloud.offsets.clone();
        cloud.ids = vec![0; cloud.points.len()];
        for (i, &c) in cells.iter().enumerate() {
            cloud.ids[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(cloud)
    }

    fn ix(&self, x: f64) -> usize {
        (((x - self.bbox.min.x) / self.dx).floor().max(0.0) as usize).min(self.nx - 1)
    }

    fn iy(&self, y: f64) -> usize {
        (((y - self.bbox.min.y) / self.dy).floor().max(0.0) as usize).min(self.ny - 1)
    }

    fn cell_index(&self, p: Point2) -> usize {
        self.iy(p.y) * self.nx + self.ix(p.x)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of all points strictly closer than `r` to `t`, ascending.
    pub fn within(&self, t: Point2, r: f64) -> Vec<usize> {
        let q = BBox { min: t, max: t }.expanded(r);
        if !q.overlaps(&self.bbox) {
            return Vec::new();
        }
        let r2 = r * r;
        let mut out = Vec::new();
        for j in self.iy(q.min.y)..=self.iy(q.max.y) {
            for i in self.ix(q.min.x)..=self.ix(q.max.x) {
                let c = j * self.nx + i;
                out.extend(self.ids[self.offsets[c]..self.offsets[c + 1]].iter().filter(|&&k| self.points[k].dist2(t) < r2));
            }
        }
        out.sort_unstable();
        out
    }

    /// Distance from `t` to the farthest corner of the cloud's bounding box.
    pub fn farthest_extent(&self, t: Point2) -> f64 {
        let b = self.bbox;
        [b.min, b.max, Point2::new(b.min.x, b.max.y), Point2::new(b.max.x, b.min.y)]
            .iter()
            .map(|c| c.dist(t))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
struct PatchContext {
    mesh: Arc<Mesh>,
    location: DofLocation,
    grid: UniformGrid,
}

/// Search structures over a set of source dof points. Built from a mesh layout it also
/// supports [`Selection::ElementPatch`].
#[derive(Debug, Clone)]
pub struct SourceIndex {
    cloud: SourceCloud,
    patch: Option<PatchContext>,
}

impl SourceIndex {
    /// A bare point cloud; patch selection is rejected.
    pub fn from_points(points: Vec<Point2>) -> Result<SourceIndex, FitError> {
        Ok(SourceIndex { cloud: SourceCloud::new(points)?, patch: None })
    }

    /// Dof points of `location` on `mesh`.
    pub fn from_mesh(mesh: Arc<Mesh>, location: DofLocation) -> Result<SourceIndex, FitError> {
        let cloud = SourceCloud::new(location.points(&mesh))?;
        let grid = UniformGrid::build(&mesh, 1.0).map_err(|e| FitError::InvalidSpec(e.to_string()))?;
        Ok(SourceIndex { cloud, patch: Some(PatchContext { mesh, location, grid }) })
    }

    pub fn points(&self) -> &[Point2] {
        self.cloud.points()
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn cloud(&self) -> &SourceCloud {
        &self.cloud
    }
}

/// Result of a selection that may only trust sources within a known radius of the target.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Bounded {
    Found(Support),
    /// The selection needs sources out to at least this distance.
    NeedsRadius(f64),
}

pub fn select_support(
    index: &SourceIndex,
    target: Point2,
    selection: &Selection,
    basis: &RadialBasis,
    degree: usize,
) -> Result<Support, FitError> {
    match select_support_bounded(index, target, selection, basis, degree, f64::INFINITY)? {
        Bounded::Found(s) => Ok(s),
        Bounded::NeedsRadius(_) => unreachable!("unbounded search never needs a larger radius"),
    }
}

/// Support selection when only sources within `known` of the target are guaranteed to be
/// present in `index`. Identical to [`select_support`] whenever it returns `Found`.
pub(crate) fn select_support_bounded(
    index: &SourceIndex,
    target: Point2,
    selection: &Selection,
    basis: &RadialBasis,
    degree: usize,
    known: f64,
) -> Result<Bounded, FitError> {
    let needed = monomial_count(degree);
    let weigh = |idx: &[usize], cutoff: f64| -> Vec<f64> {
        idx.iter().map(|&k| basis.eval(index.cloud.points[k].dist(target), cutoff)).collect()
    };
    match *selection {
        Selection::FixedRadius { cutoff } => {
            if cutoff > known {
                return Ok(Bounded::NeedsRadius(cutoff));
            }
            let indices = index.cloud.within(target, cutoff);
            if indices.len() < needed {
                return Err(FitError::Underdetermined { found: indices.len(), needed, radius: cutoff });
            }
            let weights = weigh(&indices, cutoff);
            Ok(Bounded::Found(Support { indices, weights, radius: Some(cutoff) }))
        }
        Selection::AdaptiveRadius { min_points, initial_radius, growth } => {
            let far = index.cloud.farthest_extent(target);
            let mut r = initial_radius;
            loop {
                if r > known {
                    return Ok(Bounded::NeedsRadius(r));
                }
                let indices = index.cloud.within(target, r);
                if indices.len() >= min_points {
                    let weights = weigh(&indices, r);
                    return Ok(Bounded::Found(Support { indices, weights, radius: Some(r) }));
                }
                if known.is_infinite() && r > far {
                    return Err(FitError::InsufficientSources { found: indices.len(), needed: min_points });
                }
                r *= growth;
            }
        }
        Selection::ElementPatch { layers } => {
            let ctx = index.patch.as_ref().ok_or(FitError::PatchNeedsMesh)?;
            let indices = patch_dofs(ctx, target, layers)?;
            if indices.len() < needed {
                return Err(FitError::Underdetermined { found: indices.len(), needed, radius: f64::NAN });
            }
            let weights = vec![1.0; indices.len()];
            Ok(Bounded::Found(Support { indices, weights, radius: None }))
        }
    }
}

fn patch_dofs(ctx: &PatchContext, target: Point2, layers: usize) -> Result<Vec<usize>, FitError> {
    let mesh = &ctx.mesh;
    let loc = locate::locate(&ctx.grid, mesh, target, locate::DEFAULT_TOL).ok_or(FitError::OutsideMesh(target))?;
    let mut patch: BTreeSet<usize> = match loc.entity_dim {
        0 => mesh.vertex_elems(loc.entity).iter().copied().collect(),
        1 => mesh.edge_elems(loc.entity).collect(),
        _ => [loc.elem].into_iter().collect(),
    };
    let mut frontier: Vec<usize> = patch.iter().copied().collect();
    for _ in 0..layers {
        let mut next = Vec::new();
        for &e in &frontier {
            for n in mesh.elem_neighbors(e) {
                if patch.insert(n) {
                    next.push(n);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    Ok(match ctx.location {
        DofLocation::Centroids => patch.into_iter().collect(),
        DofLocation::Vertices => {
            let verts: BTreeSet<usize> = patch.iter().flat_map(|&e| mesh.triangle(e)).collect();
            verts.into_iter().collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate;
    use crate::pointwise::RbfKind;

    fn lattice(n: usize) -> Vec<Point2> {
        (0..n * n).map(|k| Point2::new((k % n) as f64, (k / n) as f64)).collect()
    }

    #[test]
    fn within_matches_brute_force() {
        let pts = lattice(15);
        let cloud = SourceCloud::new(pts.clone()).unwrap();
        for (t, r) in [(Point2::new(3.3, 4.1), 2.5), (Point2::new(-1.0, 7.0), 3.0), (Point2::new(7.0, 7.0), 1.0)] {
            let brute: Vec<usize> = (0..pts.len()).filter(|&k| pts[k].dist2(t) < r * r).collect();
            assert_eq!(cloud.within(t, r), brute);
        }
    }

    #[test]
    fn coincident_single_source() {
        let idx = SourceIndex::from_points(lattice(5)).unwrap();
        let basis = RadialBasis::new(RbfKind::Gaussian, 2.0).unwrap();
        let s = select_support(&idx, Point2::new(2.0, 2.0), &Selection::FixedRadius { cutoff: 0.5 }, &basis, 0).unwrap();
        assert_eq!(s.indices, vec![12]);
        assert_eq!(s.weights, vec![1.0]);
    }

    #[test]
    fn fixed_radius_underdetermined() {
        let idx = SourceIndex::from_points(lattice(5)).unwrap();
        let basis = RadialBasis::default();
        // the four lattice neighbours of a cell centre
        let r = select_support(&idx, Point2::new(1.5, 1.5), &Selection::FixedRadius { cutoff: 0.8 }, &basis, 2);
        assert!(matches!(r, Err(FitError::Underdetermined { found: 4, needed: 6, .. })));
    }

    #[test]
    fn adaptive_radius_collects_nearest() {
        let pts = lattice(12);
        let idx = SourceIndex::from_points(pts.clone()).unwrap();
        let sel = Selection::AdaptiveRadius { min_points: 10, initial_radius: 1e-3, growth: 1.5 };
        let t = Point2::new(4.2, 6.7);
        let s = select_support(&idx, t, &sel, &RadialBasis::default(), 1).unwrap();
        let r = s.radius.unwrap();
        assert!(s.indices.len() >= 10);
        // radius sequence r0 * 1.5^k; the previous radius must have been insufficient
        assert!(pts.iter().filter(|p| p.dist2(t) < (r / 1.5) * (r / 1.5)).count() < 10);
        let mut by_dist: Vec<usize> = (0..pts.len()).collect();
        by_dist.sort_by(|&a, &b| pts[a].dist2(t).total_cmp(&pts[b].dist2(t)));
        let mut nearest: Vec<usize> = by_dist[..s.indices.len()].to_vec();
        nearest.sort_unstable();
        assert_eq!(s.indices, nearest);
    }

    #[test]
    fn adaptive_radius_exhausts_domain() {
        let idx = SourceIndex::from_points(lattice(2)).unwrap();
        let sel = Selection::AdaptiveRadius { min_points: 6, initial_radius: 0.1, growth: 2.0 };
        let r = select_support(&idx, Point2::new(0.5, 0.5), &sel, &RadialBasis::default(), 2);
        assert!(matches!(r, Err(FitError::InsufficientSources { found: 4, needed: 6 })));
    }

    #[test]
    fn bounded_search_requests_more_radius() {
        let idx = SourceIndex::from_points(lattice(6)).unwrap();
        let sel = Selection::FixedRadius { cutoff: 2.0 };
        let r = select_support_bounded(&idx, Point2::new(2.0, 2.0), &sel, &RadialBasis::default(), 1, 1.0).unwrap();
        assert_eq!(r, Bounded::NeedsRadius(2.0));
    }

    #[test]
    fn patch_requires_mesh_and_grows_with_layers() {
        let idx = SourceIndex::from_points(lattice(4)).unwrap();
        let sel = Selection::ElementPatch { layers: 1 };
        assert!(matches!(
            select_support(&idx, Point2::new(1.0, 1.0), &sel, &RadialBasis::default(), 1),
            Err(FitError::PatchNeedsMesh)
        ));
        let mesh = Arc::new(generate::square(6).unwrap());
        let idx = SourceIndex::from_mesh(mesh.clone(), DofLocation::Centroids).unwrap();
        let t = mesh.centroid(30);
        let one = select_support(&idx, t, &sel, &RadialBasis::default(), 1).unwrap();
        assert_eq!(one.indices, {
            let mut v = mesh.elem_neighbors(30);
            v.push(30);
            v.sort_unstable();
            v
        });
        assert!(one.weights.iter().all(|&w| w == 1.0));
        let two = select_support(&idx, t, &Selection::ElementPatch { layers: 2 }, &RadialBasis::default(), 1).unwrap();
        assert!(two.indices.len() > one.indices.len());
        assert!(matches!(
            select_support(&idx, Point2::new(5.0, 5.0), &sel, &RadialBasis::default(), 1),
            Err(FitError::OutsideMesh(_))
        ));
    }

    #[test]
    fn selection_validation() {
        assert!(Selection::AdaptiveRadius { min_points: 3, initial_radius: 0.1, growth: 1.5 }.validate(2).is_err());
        assert!(Selection::AdaptiveRadius { min_points: 6, initial_radius: 0.1, growth: 1.0 }.validate(2).is_err());
        assert!(Selection::ElementPatch { layers: 0 }.validate(1).is_err());
        assert!(Selection::FixedRadius { cutoff: -1.0 }.validate(1).is_err());
        assert!(Selection::FixedRadius { cutoff: 1.0 }.validate(2).is_ok());
    }
}
