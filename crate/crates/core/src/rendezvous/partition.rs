use std::collections::BTreeMap;

use super::RdvError;
use crate::mesh::{BBox, DofLocation, Mesh, Point2};

/// Structured rendezvous grid. Cells are closed on their upper edges, so a point on a
/// shared cell boundary belongs to the lower-index cell; the lower edges of the bounding
/// box belong to the first row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct RdvPartition {
    bbox: BBox,
    nx: usize,
    ny: usize,
    n_ranks: usize,
    cell_owner: Vec<usize>,
}

/// Round-robin assignment of cells to `n_ranks` in row-major order.
pub fn build_rdv_partition(bbox: BBox, nx: usize, ny: usize, n_ranks: usize) -> Result<RdvPartition, RdvError> {
    if nx == 0 || ny == 0 || n_ranks == 0 {
        return Err(RdvError::InvalidPartition(format!("grid {nx}x{ny} with {n_ranks} ranks")));
    }
    if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
        return Err(RdvError::InvalidPartition("rendezvous box must have positive extent".into()));
    }
    Ok(RdvPartition { bbox, nx, ny, n_ranks, cell_owner: (0..nx * ny).map(|c| c % n_ranks).collect() })
}

impl RdvPartition {
    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn n_ranks(&self) -> usize {
        self.n_ranks
    }

    pub fn n_cells(&self) -> usize {
        self.cell_owner.len()
    }

    pub fn cell_owner(&self, cell: usize) -> usize {
        self.cell_owner[cell]
    }

    fn axis_index(v: f64, lo: f64, hi: f64, n: usize) -> usize {
        let t = (v - lo) * n as f64 / (hi - lo);
        (t.ceil() - 1.0).clamp(0.0, (n - 1) as f64) as usize
    }

    /// Column and row of the cell holding `p`, clamped to the grid.
    pub fn cell_ij(&self, p: Point2) -> (usize, usize) {
        let b = self.bbox;
        (Self::axis_index(p.x, b.min.x, b.max.x, self.nx), Self::axis_index(p.y, b.min.y, b.max.y, self.ny))
    }

    /// Row-major cell index of `p`, or `None` outside the box.
    pub fn cell_of(&self, p: Point2) -> Option<usize> {
        if !self.bbox.contains(p) {
            return None;
        }
        let (i, j) = self.cell_ij(p);
        Some(j * self.nx + i)
    }

    pub fn owner_of(&self, p: Point2) -> Option<usize> {
        self.cell_of(p).map(|c| self.cell_owner[c])
    }

    /// Closed rectangle of cell `(i, j)`.
    pub fn cell_rect(&self, i: usize, j: usize) -> BBox {
        let b = self.bbox;
        let x = |k: usize| b.min.x + (b.max.x - b.min.x) * k as f64 / self.nx as f64;
        let y = |k: usize| b.min.y + (b.max.y - b.min.y) * k as f64 / self.ny as f64;
        BBox { min: Point2::new(x(i), y(j)), max: Point2::new(x(i + 1), y(j + 1)) }
    }

    /// Distinct ranks owning a cell that intersects `b`, ascending. The cell range uses
    /// the same index rule as [`RdvPartition::owner_of`], so the owner of any point of `b`
    /// inside the grid is included.
    pub fn owners_overlapping(&self, b: &BBox) -> Vec<usize> {
        let (i0, j0) = self.cell_ij(b.min);
        let (i1, j1) = self.cell_ij(b.max);
        let mut out: Vec<usize> =
            (j0..=j1).flat_map(|j| (i0..=i1).map(move |i| j * self.nx + i)).map(|c| self.cell_owner[c]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Distinct ranks owning a cell within distance `h` of `p`, ascending.
    pub fn owners_within(&self, p: Point2, h: f64) -> Vec<usize> {
        if h.is_infinite() {
            return (0..self.n_ranks.min(self.n_cells())).collect();
        }
        let q = BBox { min: p, max: p }.expanded(h);
        let (i0, j0) = self.cell_ij(q.min);
        let (i1, j1) = self.cell_ij(q.max);
        // slack for cell edges computed in floating point
        let reach = h * (1.0 + 1e-9) + 1e-12 * self.bbox.width().hypot(self.bbox.height());
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let r = self.cell_rect(i, j);
                let dx = (r.min.x - p.x).max(p.x - r.max.x).max(0.0);
                let dy = (r.min.y - p.y).max(p.y - r.max.y).max(0.0);
                if dx.hypot(dy) <= reach {
                    out.push(self.cell_owner[j * self.nx + i]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Rcb,
    Classification,
    Explicit,
}

/// Ownership of a mesh's elements by the ranks of one application.
#[derive(Debug, Clone, PartialEq)]
pub struct AppPartition {
    n_ranks: usize,
    elem_owner: Vec<usize>,
    kind: PartitionKind,
}

impl AppPartition {
    pub fn explicit(mesh: &Mesh, elem_owner: Vec<usize>, n_ranks: usize) -> Result<AppPartition, RdvError> {
        if elem_owner.len() != mesh.n_elems() {
            return Err(RdvError::InvalidPartition(format!(
                "{} owners for {} elements",
                elem_owner.len(),
                mesh.n_elems()
            )));
        }
        if let Some(&r) = elem_owner.iter().find(|&&r| r >= n_ranks) {
            return Err(RdvError::InvalidPartition(format!("rank {r} outside 0..{n_ranks}")));
        }
        Ok(AppPartition { n_ranks, elem_owner, kind: PartitionKind::Explicit })
    }

    pub fn n_ranks(&self) -> usize {
        self.n_ranks
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn elem_owner(&self, e: usize) -> usize {
        self.elem_owner[e]
    }

    pub fn elem_owners(&self) -> &[usize] {
        &self.elem_owner
    }

    /// A vertex belongs to the owner of its lowest-index incident element.
    pub fn vertex_owner(&self, mesh: &Mesh, v: usize) -> usize {
        let e = mesh.vertex_elems(v).iter().copied().min().expect("every vertex has an element");
        self.elem_owner[e]
    }

    /// Owner of each dof of the given layout.
    pub fn dof_owners(&self, mesh: &Mesh, location: DofLocation) -> Vec<usize> {
        match location {
            DofLocation::Centroids => self.elem_owner.clone(),
            DofLocation::Vertices => (0..mesh.n_vertices()).map(|v| self.vertex_owner(mesh, v)).collect(),
        }
    }

    /// Dofs owned by each rank, ascending.
    pub fn owned_dofs(&self, mesh: &Mesh, location: DofLocation) -> Vec<Vec<usize>> {
        group(&self.dof_owners(mesh, location), self.n_ranks)
    }
}

pub(crate) fn group(owner: &[usize], n_ranks: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_ranks];
    for (k, &r) in owner.iter().enumerate() {
        out[r].push(k);
    }
    out
}

/// Recursive coordinate bisection of element centroids. Splits alternate between x and y,
/// starting with x; each split sorts by coordinate, ties broken by element index, and
/// gives the lower half `floor(n / 2)` elements.
pub fn rcb_partition(mesh: &Mesh, n_ranks: usize) -> Result<AppPartition, RdvError> {
    if n_ranks == 0 || !n_ranks.is_power_of_two() {
        return Err(RdvError::NotPowerOfTwo(n_ranks));
    }
    let centroids = mesh.centroids();
    let mut owner = vec![0; mesh.n_elems()];
    let mut stack = vec![((0..mesh.n_elems()).collect::<Vec<usize>>(), 0usize, n_ranks, 0usize)];
    while let Some((mut ids, first, count, depth)) = stack.pop() {
        if count == 1 {
            for e in ids {
                owner[e] = first;
            }
            continue;
        }
        let key = |e: usize| if depth % 2 == 0 { centroids[e].x } else { centroids[e].y };
        ids.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        let hi = ids.split_off(ids.len() / 2);
        stack.push((ids, first, count / 2, depth + 1));
        stack.push((hi, first + count / 2, count / 2, depth + 1));
    }
    Ok(AppPartition { n_ranks, elem_owner: owner, kind: PartitionKind::Rcb })
}

/// Owner of each element taken from the rank assigned to its model face.
pub fn classification_partition(mesh: &Mesh, face_to_rank: &BTreeMap<u32, usize>) -> Result<AppPartition, RdvError> {
    let n_ranks = face_to_rank.values().copied().max().map_or(1, |m| m + 1);
    let elem_owner = mesh
        .elem_classes()
        .iter()
        .map(|t| face_to_rank.get(&t.id).copied().ok_or(RdvError::UnmappedFace(t.id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AppPartition { n_ranks, elem_owner, kind: PartitionKind::Classification })
}
