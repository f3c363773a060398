//! Immutable 2D triangle meshes with derived topology and model classification.
//!
//! Every other module consumes [`Mesh`]. Degree-of-freedom numbering follows entity
//! numbering: vertex dof `i` lives on vertex `i`, centroid dof `e` on element `e`.

mod field;
pub mod generate;
mod io;

use thiserror::Error;

pub use field::{integrate_field, DofLocation, Field, Shape};
pub use io::{load_field, load_mesh, parse_field, parse_mesh, save_field, save_mesh, write_field, write_mesh};

/// Elements whose area falls below this fraction of the bounding-box area are rejected.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no elements")]
    Empty,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("triangle {elem} references vertex {vertex}, but the mesh has {n_vertices} vertices")]
    IndexOutOfRange { elem: usize, vertex: usize, n_vertices: usize },
    #[error("triangle {elem} repeats a vertex index")]
    RepeatedVertex { elem: usize },
    #[error("triangle {elem} duplicates triangle {first}")]
    DuplicateTriangle { elem: usize, first: usize },
    #[error("triangle {elem} is degenerate (area {area:e})")]
    DegenerateTriangle { elem: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("{entity} {index} is classified on a model entity of dimension {model_dim}")]
    InvalidClassification { entity: &'static str, index: usize, model_dim: u8 },
    #[error("duplicate {entity} global id {gid}")]
    DuplicateGlobalId { entity: &'static str, gid: u64 },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("a linear field must be stored at vertices and a constant field at centroids")]
    InvalidLayout,
    #[error("element {elem} out of range (mesh has {n_elems})")]
    ElementOutOfRange { elem: usize, n_elems: usize },
    #[error("invalid barycentric coordinates {0:?}")]
    InvalidBarycentric([f64; 3]),
    #[error("field is defined on a different mesh")]
    MeshMismatch,
    #[error("quadrature degree {requested} is below the field degree {field}")]
    QuadratureTooLow { requested: usize, field: usize },
    #[error(transparent)]
    Quadrature(#[from] crate::quadrature::QuadratureError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid generator parameters: {0}")]
    Generator(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn dist2(self, o: Point2) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
#[inline]
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Axis-aligned bounding box, closed on both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point2>) -> Option<BBox> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        let mut b = BBox { min: first, max: first };
        for p in it {
            b.include(*p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn overlaps(&self, o: &BBox) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn expanded(&self, d: f64) -> BBox {
        BBox {
            min: Point2::new(self.min.x - d, self.min.y - d),
            max: Point2::new(self.max.x + d, self.max.y + d),
        }
    }

    pub fn center(&self) -> Point2 {
        self.min.lerp(self.max, 0.5)
    }
}

/// Geometric model entity a mesh entity is classified on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelTag {
    pub dim: u8,
    pub id: u32,
}

impl ModelTag {
    pub const fn new(dim: u8, id: u32) -> Self {
        Self { dim, id }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    edges: Vec<[usize; 2]>,
    /// Incident elements per edge; the second slot is `None` on the boundary.
    edge_elems: Vec<(usize, Option<usize>)>,
    /// `elem_edges[e][i]` is the edge opposite local vertex `i`.
    elem_edges: Vec<[usize; 3]>,
    vert_elem_offsets: Vec<usize>,
    vert_elems: Vec<usize>,
    vertex_class: Vec<ModelTag>,
    edge_class: Vec<ModelTag>,
    elem_class: Vec<ModelTag>,
    vertex_gids: Vec<u64>,
    edge_gids: Vec<u64>,
    elem_gids: Vec<u64>,
    bbox: BBox,
}

/// Builds a mesh, reorienting clockwise triangles and deriving edges and adjacency.
///
/// `element_tags` classifies elements on model faces; when absent every element is
/// tagged `(2, 0)`. Vertices and edges default to `(0, 0)` and `(1, 0)`.
pub fn build_mesh(
    coords: Vec<Point2>,
    connectivity: Vec<[usize; 3]>,
    element_tags: Option<Vec<ModelTag>>,
) -> Result<Mesh, MeshError> {
    if connectivity.is_empty() {
        return Err(MeshError::Empty);
    }
    if let Some(i) = coords.iter().position(|p| !p.is_finite()) {
        return Err(MeshError::NonFinite(i));
    }
    let nv = coords.len();
    for (e, t) in connectivity.iter().enumerate() {
        for &v in t {
            if v >= nv {
                return Err(MeshError::IndexOutOfRange { elem: e, vertex: v, n_vertices: nv });
            }
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(MeshError::RepeatedVertex { elem: e });
        }
    }
    let bbox = BBox::from_points(&coords).ok_or(MeshError::Empty)?;
    let min_area = DEGENERATE_AREA_FRACTION * bbox.area();

    let mut triangles = connectivity;
    let mut areas = Vec::with_capacity(triangles.len());
    for (e, t) in triangles.iter_mut().enumerate() {
        let twice = orient2d(coords[t[0]], coords[t[1]], coords[t[2]]);
        let area = 0.5 * twice.abs();
        if !(area >= min_area) || area == 0.0 {
            return Err(MeshError::DegenerateTriangle { elem: e, area });
        }
        if twice < 0.0 {
            t.swap(1, 2);
        }
        areas.push(area);
    }

    // duplicate triangles
    let mut keyed: Vec<([usize; 3], usize)> = triangles
        .iter()
        .enumerate()
        .map(|(e, t)| {
            let mut k = *t;
            k.sort_unstable();
            (k, e)
        })
        .collect();
    keyed.sort_unstable();
    for w in keyed.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(MeshError::DuplicateTriangle { elem: w[1].1, first: w[0].1 });
        }
    }

    // edges: sorted unique vertex pairs
    let mut half: Vec<([usize; 2], usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for (e, t) in triangles.iter().enumerate() {
        for i in 0..3 {
            let a = t[(i + 1) % 3];
            let b = t[(i + 2) % 3];
            half.push(([a.min(b), a.max(b)], e, i));
        }
    }
    half.sort_unstable();
    let mut edges = Vec::new();
    let mut edge_elems = Vec::new();
    let mut elem_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut i = 0;
    while i < half.len() {
        let key = half[i].0;
        let mut j = i + 1;
        while j < half.len() && half[j].0 == key {
            j += 1;
        }
        if j - i > 2 {
            return Err(MeshError::NonManifoldEdge(key[0], key[1]));
        }
        let id = edges.len();
        edges.push(key);
        let second = if j - i == 2 { Some(half[i + 1].1) } else { None };
        edge_elems.push((half[i].1, second));
        for h in &half[i..j] {
            elem_edges[h.1][h.2] = id;
        }
        i = j;
    }

    // vertex -> element adjacency (CSR, ascending element ids)
    let mut counts = vec![0usize; nv + 1];
    for t in &triangles {
        for &v in t {
            counts[v + 1] += 1;
        }
    }
    for k in 0..nv {
        counts[k + 1] += counts[k];
    }
    let mut fill = counts.clone();
    let mut vert_elems = vec![0usize; counts[nv]];
    for (e, t) in triangles.iter().enumerate() {
        for &v in t {
            vert_elems[fill[v]] = e;
            fill[v] += 1;
        }
    }

    let elem_class = match element_tags {
        Some(tags) => {
            if tags.len() != triangles.len() {
                return Err(MeshError::LengthMismatch { expected: triangles.len(), found: tags.len() });
            }
            if let Some(i) = tags.iter().position(|t| t.dim != 2) {
                return Err(MeshError::InvalidClassification { entity: "element", index: i, model_dim: tags[i].dim });
            }
            tags
        }
        None => vec![ModelTag::new(2, 0); triangles.len()],
    };

    let n_edges = edges.len();
    Ok(Mesh {
        vertex_class: vec![ModelTag::new(0, 0); nv],
        edge_class: vec![ModelTag::new(1, 0); n_edges],
        vertex_gids: (0..nv as u64).collect(),
        edge_gids: (0..n_edges as u64).collect(),
        elem_gids: (0..triangles.len() as u64).collect(),
        vertices: coords,
        triangles,
        areas,
        edges,
        edge_elems,
        elem_edges,
        vert_elem_offsets: counts,
        vert_elems,
        elem_class,
        bbox,
    })
}

fn check_unique(gids: &[u64], entity: &'static str) -> Result<(), MeshError> {
    let mut sorted = gids.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(MeshError::DuplicateGlobalId { entity, gid: w[0] });
        }
    }
    Ok(())
}

impl Mesh {
    /// Replaces the default (index-valued) vertex and element global ids.
    pub fn with_global_ids(mut self, vertex_gids: Vec<u64>, elem_gids: Vec<u64>) -> Result<Mesh, MeshError> {
        if vertex_gids.len() != self.n_vertices() {
            return Err(MeshError::LengthMismatch { expected: self.n_vertices(), found: vertex_gids.len() });
        }
        if elem_gids.len() != self.n_elems() {
            return Err(MeshError::LengthMismatch { expected: self.n_elems(), found: elem_gids.len() });
        }
        check_unique(&vertex_gids, "vertex")?;
        check_unique(&elem_gids, "element")?;
        self.vertex_gids = vertex_gids;
        self.elem_gids = elem_gids;
        Ok(self)
    }

    /// Replaces vertex classification tags.
    pub fn with_vertex_classification(mut self, tags: Vec<ModelTag>) -> Result<Mesh, MeshError> {
        if tags.len() != self.n_vertices() {
            return Err(MeshError::LengthMismatch { expected: self.n_vertices(), found: tags.len() });
        }
        if let Some(i) = tags.iter().position(|t| t.dim > 2) {
            return Err(MeshError::InvalidClassification { entity: "vertex", index: i, model_dim: tags[i].dim });
        }
        self.vertex_class = tags;
        Ok(self)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elems(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point2 {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, e: usize) -> [usize; 3] {
        self.triangles[e]
    }

    pub fn triangle_points(&self, e: usize) -> [Point2; 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Incident elements of an edge: one on the boundary, two in the interior.
    pub fn edge_elems(&self, edge: usize) -> impl Iterator<Item = usize> + '_ {
        let (a, b) = self.edge_elems[edge];
        std::iter::once(a).chain(b)
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_elems[edge].1.is_none()
    }

    /// Edge opposite local vertex `local` of element `e`.
    pub fn elem_edge(&self, e: usize, local: usize) -> usize {
        self.elem_edges[e][local]
    }

    pub fn elem_edges(&self, e: usize) -> [usize; 3] {
        self.elem_edges[e]
    }

    /// Elements sharing an edge with `e`, ascending.
    pub fn elem_neighbors(&self, e: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.elem_edges[e]
            .iter()
            .filter_map(|&ed| {
                let (a, b) = self.edge_elems[ed];
                if a == e {
                    b
                } else {
                    Some(a)
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Elements incident to vertex `v`, ascending.
    pub fn vertex_elems(&self, v: usize) -> &[usize] {
        &self.vert_elems[self.vert_elem_offsets[v]..self.vert_elem_offsets[v + 1]]
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn element_area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn element_bbox(&self, e: usize) -> BBox {
        BBox::from_points(&self.triangle_points(e)).expect("triangle has points")
    }

    /// Longest edge of element `e`.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangle_points(e);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    pub fn centroid(&self, e: usize) -> Point2 {
        let [a, b, c] = self.triangle_points(e);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn centroids(&self) -> Vec<Point2> {
        (0..self.n_elems()).map(|e| self.centroid(e)).collect()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let sum: f64 = self.edges.iter().map(|&[a, b]| self.vertices[a].dist(self.vertices[b])).sum();
        sum / self.edges.len() as f64
    }

    pub fn mean_element_area(&self) -> f64 {
        self.total_area() / self.n_elems() as f64
    }

    /// Barycentric coordinates of `p` with respect to element `e` (not clamped).
    pub fn barycentric(&self, e: usize, p: Point2) -> [f64; 3] {
        barycentric(self.triangle_points(e), p)
    }

    pub fn point_at(&self, e: usize, bary: [f64; 3]) -> Point2 {
        from_barycentric(self.triangle_points(e), bary)
    }

    pub fn vertex_class(&self, v: usize) -> ModelTag {
        self.vertex_class[v]
    }

    pub fn edge_class(&self, ed: usize) -> ModelTag {
        self.edge_class[ed]
    }

    pub fn elem_class(&self, e: usize) -> ModelTag {
        self.elem_class[e]
    }

    pub fn elem_classes(&self) -> &[ModelTag] {
        &self.elem_class
    }

    pub fn vertex_gid(&self, v: usize) -> u64 {
        self.vertex_gids[v]
    }

    pub fn edge_gid(&self, ed: usize) -> u64 {
        self.edge_gids[ed]
    }

    pub fn elem_gid(&self, e: usize) -> u64 {
        self.elem_gids[e]
    }
}

/// Barycentric coordinates of `p` in triangle `t` (counter-clockwise).
pub fn barycentric(t: [Point2; 3], p: Point2) -> [f64; 3] {
    let twice = orient2d(t[0], t[1], t[2]);
    let l0 = orient2d(p, t[1], t[2]) / twice;
    let l1 = orient2d(t[0], p, t[2]) / twice;
    let l2 = orient2d(t[0], t[1], p) / twice;
    [l0, l1, l2]
}

pub fn from_barycentric(t: [Point2; 3], b: [f64; 3]) -> Point2 {
    Point2::new(
        b[0] * t[0].x + b[1] * t[1].x + b[2] * t[2].x,
        b[0] * t[0].y + b[1] * t[1].y + b[2] * t[2].y,
    )
}
