//! Deterministic synthetic meshes: structured squares, ring-based disks and annuli, and
//! graded disks whose thin outer rings mimic field-following meshes.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_mesh, orient2d, Mesh, MeshError, Point2};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    /// Unit square, `n` x `n` cells split into two triangles each.
    Square { n: usize },
    Rectangle { nx: usize, ny: usize, width: f64, height: f64 },
    /// Centre vertex plus `rings` concentric rings; ring `k` carries `6k` vertices.
    Disk { radius: f64, rings: usize },
    Annulus { r_in: f64, r_out: f64, rings: usize },
    /// Disk with `rings` rings clustered toward the boundary (`grading > 1`). The boundary
    /// ring matches the outer ring of `Disk { radius, rings: boundary_rings }` exactly.
    Graded { radius: f64, rings: usize, boundary_rings: usize, grading: f64 },
}

pub fn generate(spec: &MeshSpec) -> Result<Mesh, MeshError> {
    match *spec {
        MeshSpec::Square { n } => square(n),
        MeshSpec::Rectangle { nx, ny, width, height } => rectangle(nx, ny, width, height),
        MeshSpec::Disk { radius, rings } => disk(radius, rings),
        MeshSpec::Annulus { r_in, r_out, rings } => annulus(r_in, r_out, rings),
        MeshSpec::Graded { radius, rings, boundary_rings, grading } => graded(radius, rings, boundary_rings, grading),
    }
}

fn bad(msg: impl Into<String>) -> MeshError {
    MeshError::Generator(msg.into())
}

pub fn square(n: usize) -> Result<Mesh, MeshError> {
    rectangle(n, n, 1.0, 1.0)
}

pub fn rectangle(nx: usize, ny: usize, width: f64, height: f64) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(bad("rectangle needs at least one cell per direction"));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(bad("rectangle extents must be positive"));
    }
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pts.push(Point2::new(width * i as f64 / nx as f64, height * j as f64 / ny as f64));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build_mesh(pts, tris, None)
}

/// One ring of vertices: global ids and angular positions as fractions of a turn in `[0, 1)`.
struct Ring {
    ids: Vec<usize>,
    frac: Vec<f64>,
}

fn push_ring(pts: &mut Vec<Point2>, radius: f64, count: usize, phase: f64) -> Ring {
    let start = pts.len();
    let mut frac = Vec::with_capacity(count);
    for j in 0..count {
        let f = phase + j as f64 / count as f64;
        let a = TAU * f;
        pts.push(Point2::new(radius * a.cos(), radius * a.sin()));
        frac.push(f);
    }
    Ring { ids: (start..start + count).collect(), frac }
}

/// Triangulates the band between two rings by merging their angular orders.
fn stitch(inner: &Ring, outer: &Ring, tris: &mut Vec<[usize; 3]>) {
    let m = inner.ids.len();
    let n = outer.ids.len();
    if m == 1 {
        for j in 0..n {
            tris.push([inner.ids[0], outer.ids[j], outer.ids[(j + 1) % n]]);
        }
        return;
    }
    let next = |r: &Ring, k: usize| if k + 1 < r.ids.len() { r.frac[k + 1] } else { r.frac[0] + 1.0 };
    let (mut i, mut j) = (0, 0);
    while i < m || j < n {
        let advance_outer = j < n && (i == m || next(outer, j) <= next(inner, i));
        if advance_outer {
            tris.push([inner.ids[i % m], outer.ids[j], outer.ids[(j + 1) % n]]);
            j += 1;
        } else {
            tris.push([inner.ids[i], outer.ids[j % n], inner.ids[(i + 1) % m]]);
            i += 1;
        }
    }
}

pub fn disk(radius: f64, rings: usize) -> Result<Mesh, MeshError> {
    if !(radius > 0.0) || rings == 0 {
        return Err(bad("disk needs a positive radius and at least one ring"));
    }
    let mut pts = vec![Point2::new(0.0, 0.0)];
    let mut tris = Vec::with_capacity(6 * rings * rings);
    let mut prev = Ring { ids: vec![0], frac: vec![0.0] };
    for k in 1..=rings {
        let ring = push_ring(&mut pts, radius * k as f64 / rings as f64, 6 * k, 0.0);
        stitch(&prev, &ring, &mut tris);
        prev = ring;
    }
    build_mesh(pts, tris, None)
}

pub fn annulus(r_in: f64, r_out: f64, rings: usize) -> Result<Mesh, MeshError> {
    if !(r_in > 0.0 && r_out > r_in) || rings == 0 {
        return Err(bad("annulus needs 0 < r_in < r_out and at least one ring"));
    }
    let h = (r_out - r_in) / rings as f64;
    let mut pts = Vec::new();
    let mut tris = Vec::new();
    let mut prev: Option<Ring> = None;
    for k in 0..=rings {
        let r = r_in + h * k as f64;
        let count = ((TAU * r / h).round() as usize).max(3);
        let ring = push_ring(&mut pts, r, count, 0.0);
        if let Some(p) = &prev {
            stitch(p, &ring, &mut tris);
        }
        prev = Some(ring);
    }
    build_mesh(pts, tris, None)
}

pub fn graded(radius: f64, rings: usize, boundary_rings: usize, grading: f64) -> Result<Mesh, MeshError> {
    if !(radius > 0.0) || rings == 0 || boundary_rings == 0 || !(grading >= 1.0) {
        return Err(bad("graded disk needs radius > 0, rings >= 1, boundary_rings >= 1, grading >= 1"));
    }
    let n_outer = 6 * boundary_rings;
    let mut pts = vec![Point2::new(0.0, 0.0)];
    let mut tris = Vec::new();
    let mut prev = Ring { ids: vec![0], frac: vec![0.0] };
    for k in 1..=rings {
        let t = k as f64 / rings as f64;
        let (r, count, phase) = if k == rings {
            (radius, n_outer, 0.0)
        } else {
            let r = radius * (1.0 - (1.0 - t).powf(grading));
            let count = ((n_outer as f64 * r / radius).round() as usize).max(6);
            // alternate rings are twisted by half a spacing
            let phase = if k % 2 == 1 { 0.5 / count as f64 } else { 0.0 };
            (r, count, phase)
        };
        let ring = push_ring(&mut pts, r, count, phase);
        stitch(&prev, &ring, &mut tris);
        prev = ring;
    }
    build_mesh(pts, tris, None)
}

/// Randomly displaces interior vertices by up to `amount` times their shortest incident
/// edge. Moves that would invert an incident triangle are skipped, so the result is
/// always a valid mesh with the original connectivity.
pub fn jitter(mesh: &Mesh, amount: f64, seed: u64) -> Result<Mesh, MeshError> {
    if !(0.0..0.5).contains(&amount) {
        return Err(bad("jitter amount must lie in [0, 0.5)"));
    }
    let mut on_boundary = vec![false; mesh.n_vertices()];
    for (ed, &[a, b]) in mesh.edges().iter().enumerate() {
        if mesh.is_boundary_edge(ed) {
            on_boundary[a] = true;
            on_boundary[b] = true;
        }
    }
    let mut shortest = vec![f64::INFINITY; mesh.n_vertices()];
    for &[a, b] in mesh.edges() {
        let l = mesh.vertex(a).dist(mesh.vertex(b));
        shortest[a] = shortest[a].min(l);
        shortest[b] = shortest[b].min(l);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = mesh.vertices().to_vec();
    for v in 0..pts.len() {
        let ang = rng.random::<f64>() * TAU;
        let rad = rng.random::<f64>().sqrt() * amount * shortest[v];
        if on_boundary[v] || amount == 0.0 {
            continue;
        }
        let old = pts[v];
        pts[v] = Point2::new(old.x + rad * ang.cos(), old.y + rad * ang.sin());
        let ok = mesh.vertex_elems(v).iter().all(|&e| {
            let t = mesh.triangle(e);
            orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.25 * 2.0 * mesh.element_area(e)
        });
        if !ok {
            pts[v] = old;
        }
    }
    build_mesh(pts, mesh.triangles().to_vec(), Some(mesh.elem_classes().to_vec()))
}
