//! Reference computations for testing `fieldbridge`.
//!
//! Everything here is deliberately naive: brute-force search over all elements, dense
//! normal equations, tensor-product Gauss rules mapped onto triangles, and convex hulls in
//! place of clipping. None of it reuses the library's geometry or quadrature code.

use fieldbridge::{Mesh, Point2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Barycentric coordinates from Cramer's rule on the 2x2 edge system.
pub fn cramer_barycentric(t: [Point2; 3], p: Point2) -> [f64; 3] {
    let (ax, ay) = (t[1].x - t[0].x, t[1].y - t[0].y);
    let (bx, by) = (t[2].x - t[0].x, t[2].y - t[0].y);
    let (px, py) = (p.x - t[0].x, p.y - t[0].y);
    let det = ax * by - ay * bx;
    let l1 = (px * by - py * bx) / det;
    let l2 = (ax * py - ay * px) / det;
    [1.0 - l1 - l2, l1, l2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteLocation {
    pub elem: usize,
    pub entity_dim: u8,
    pub entity_id: u64,
    pub barycentric: [f64; 3],
}

/// Visits every element in order. A point near a vertex or edge is assigned to the
/// lowest-dimensional entity, ties going to the smallest global id and then the first
/// element seen.
pub fn brute_locate(mesh: &Mesh, p: Point2, tol: f64) -> Option<BruteLocation> {
    let mut best: Option<BruteLocation> = None;
    for e in 0..mesh.n_elems() {
        let b = cramer_barycentric(mesh.triangle_points(e), p);
        if b.iter().any(|&l| l < -tol) {
            continue;
        }
        let near: Vec<usize> = (0..3).filter(|&i| b[i] <= tol).collect();
        let (dim, id) = match near.len() {
            0 => (2, mesh.elem_gid(e)),
            1 => {
                // the edge opposite the small coordinate
                let tri = mesh.triangle(e);
                let (u, v) = (tri[(near[0] + 1) % 3], tri[(near[0] + 2) % 3]);
                let ed = mesh
                    .elem_edges(e)
                    .into_iter()
                    .find(|&ed| {
                        let [a, c] = mesh.edges()[ed];
                        (a == u && c == v) || (a == v && c == u)
                    })
                    .expect("edge of element");
                (1, mesh.edge_gid(ed))
            }
            _ => {
                let big = if b[0] >= b[1] && b[0] >= b[2] {
                    0
                } else if b[1] >= b[2] {
                    1
                } else {
                    2
                };
                (0, mesh.vertex_gid(mesh.triangle(e)[big]))
            }
        };
        let cand = BruteLocation { elem: e, entity_dim: dim, entity_id: id, barycentric: b };
        best = match best {
            Some(old) if (old.entity_dim, old.entity_id) <= (dim, id) => Some(old),
            _ => Some(cand),
        };
    }
    best
}

/// Indices of `points` sorted by distance to `target`, ties by index.
pub fn nearest_order(points: &[Point2], target: Point2) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let da = (points[a].x - target.x).hypot(points[a].y - target.y);
        let db = (points[b].x - target.x).hypot(points[b].y - target.y);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    idx
}

/// Value at `target` of the weighted least-squares polynomial of total degree `degree`
/// (at most 2), from the normal equations with monomials centered at the target.
pub fn dense_ls_value(points: &[Point2], values: &[f64], weights: &[f64], degree: usize, target: Point2) -> f64 {
    let terms = |p: Point2| -> Vec<f64> {
        let (dx, dy) = (p.x - target.x, p.y - target.y);
        let all = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
        all[..(degree + 1) * (degree + 2) / 2].to_vec()
    };
    let m = (degree + 1) * (degree + 2) / 2;
    let mut ata = DMatrix::<f64>::zeros(m, m);
    let mut atb = DVector::<f64>::zeros(m);
    for ((p, &v), &w) in points.iter().zip(values).zip(weights) {
        let row = terms(*p);
        let w2 = w * w;
        for i in 0..m {
            atb[i] += w2 * row[i] * v;
            for j in 0..m {
                ata[(i, j)] += w2 * row[i] * row[j];
            }
        }
    }
    let c = ata.lu().solve(&atb).expect("nonsingular normal equations");
    c[0]
}

/// Gauss-Legendre nodes and weights on [-1, 1] from the eigen-decomposition of the
/// Jacobi matrix.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Points and weights on a triangle from a collapsed 5x5 Gauss product, exact for
/// polynomials through degree 8.
pub fn triangle_rule(t: [Point2; 3]) -> Vec<(Point2, f64)> {
    let g = gauss_legendre(5);
    let area2 = ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y)).abs();
    let mut out = Vec::with_capacity(25);
    for &(u, wu) in &g {
        let s = 0.5 * (u + 1.0);
        for &(v, wv) in &g {
            let r = 0.5 * (v + 1.0);
            // (s, r) in the unit square collapses onto the reference triangle
            let xi = s * (1.0 - r);
            let eta = s * r;
            let p = Point2::new(
                t[0].x + xi * (t[1].x - t[0].x) + eta * (t[2].x - t[0].x),
                t[0].y + xi * (t[1].y - t[0].y) + eta * (t[2].y - t[0].y),
            );
            out.push((p, 0.25 * wu * wv * s * area2));
        }
    }
    out
}

fn midpoint(a: Point2, b: Point2) -> Point2 {
    Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))
}

/// Integral over a triangle after `levels` uniform 4-way refinements.
pub fn integrate_triangle(t: [Point2; 3], f: &dyn Fn(Point2) -> f64, levels: u32) -> f64 {
    if levels == 0 {
        return triangle_rule(t).iter().map(|&(p, w)| w * f(p)).sum();
    }
    let (m01, m12, m20) = (midpoint(t[0], t[1]), midpoint(t[1], t[2]), midpoint(t[2], t[0]));
    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
        .iter()
        .map(|&c| integrate_triangle(c, f, levels - 1))
        .sum()
}

pub fn integrate_mesh(mesh: &Mesh, f: &dyn Fn(Point2) -> f64, levels: u32) -> f64 {
    (0..mesh.n_elems()).map(|e| integrate_triangle(mesh.triangle_points(e), f, levels)).sum()
}

/// Refines each element until two successive levels agree to `tol` relative to the
/// element's contribution.
pub fn adaptive_integrate_mesh(mesh: &Mesh, f: &dyn Fn(Point2) -> f64, tol: f64) -> f64 {
    (0..mesh.n_elems())
        .map(|e| {
            let t = mesh.triangle_points(e);
            let mut prev = integrate_triangle(t, f, 0);
            for level in 1..6 {
                let next = integrate_triangle(t, f, level);
                let done = (next - prev).abs() <= tol * next.abs().max(1e-300);
                prev = next;
                if done {
                    break;
                }
            }
            prev
        })
        .sum()
}

/// Integral of a piecewise-linear vertex field, integrated per element with the
/// degree-8 rule.
pub fn integrate_vertex_field(mesh: &Mesh, values: &[f64]) -> f64 {
    (0..mesh.n_elems())
        .map(|e| {
            let t = mesh.triangle_points(e);
            let v = mesh.triangle(e).map(|i| values[i]);
            triangle_rule(t)
                .iter()
                .map(|&(p, w)| {
                    let b = cramer_barycentric(t, p);
                    w * (b[0] * v[0] + b[1] * v[1] + b[2] * v[2])
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i].x * poly[(i + 1) % n].y - poly[(i + 1) % n].x * poly[i].y).sum::<f64>()
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn inside_convex(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= 0.0)
}

/// Counter-clockwise convex hull by the monotone chain; collinear points are dropped.
pub fn convex_hull(mut pts: Vec<Point2>) -> Vec<Point2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Intersection of two CCW convex polygons as the hull of the vertices of each inside the
/// other together with all pairwise edge crossings.
pub fn convex_intersection(a: &[Point2], b: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = a.iter().copied().filter(|&p| inside_convex(b, p)).collect();
    pts.extend(b.iter().copied().filter(|&p| inside_convex(a, p)));
    for i in 0..a.len() {
        let (p, p2) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (q, q2) = (b[j], b[(j + 1) % b.len()]);
            let r = Point2::new(p2.x - p.x, p2.y - p.y);
            let s = Point2::new(q2.x - q.x, q2.y - q.y);
            let den = r.x * s.y - r.y * s.x;
            if den == 0.0 {
                continue;
            }
            let t = ((q.x - p.x) * s.y - (q.y - p.y) * s.x) / den;
            let u = ((q.x - p.x) * r.y - (q.y - p.y) * r.x) / den;
            if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                pts.push(Point2::new(p.x + t * r.x, p.y + t * r.y));
            }
        }
    }
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        Vec::new()
    } else {
        hull
    }
}

/// Monte Carlo estimate of the area of `a` intersected with `b`, sampling the bounding
/// box of `a` uniformly.
pub fn monte_carlo_overlap_area(a: &[Point2], b: &[Point2], samples: usize, seed: u64) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in a {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let p = Point2::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
            inside_convex(a, p) && inside_convex(b, p)
        })
        .count();
    (x1 - x0) * (y1 - y0) * hits as f64 / samples as f64
}

/// Stratified Monte Carlo estimate of the overlap area. The common bounding box is cut
/// into `samples / 2` cells, each sampled at a random point and its reflection through
/// the cell center.
pub fn stratified_overlap_area(a: &[Point2], b: &[Point2], samples: usize, seed: u64) -> f64 {
    let bounds = |p: &[Point2]| {
        p.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |(x0, y0, x1, y1), q| {
            (x0.min(q.x), y0.min(q.y), x1.max(q.x), y1.max(q.y))
        })
    };
    let (ax0, ay0, ax1, ay1) = bounds(a);
    let (bx0, by0, bx1, by1) = bounds(b);
    let (x0, y0, x1, y1) = (ax0.max(bx0), ay0.max(by0), ax1.min(bx1), ay1.min(by1));
    if x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    let cells = (samples / 2).max(1) as f64;
    let nx = ((cells * (x1 - x0) / (y1 - y0)).sqrt().round() as usize).max(1);
    let ny = ((cells / nx as f64).round() as usize).max(1);
    let (hx, hy) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            for (s, t) in [(u, v), (1.0 - u, 1.0 - v)] {
                let p = Point2::new(x0 + (i as f64 + s) * hx, y0 + (j as f64 + t) * hy);
                if inside_convex(a, p) && inside_convex(b, p) {
                    hits += 1;
                }
            }
        }
    }
    (x1 - x0) * (y1 - y0) * hits as f64 / (2 * nx * ny) as f64
}

/// Total area of the overlap of two meshes, summed over all element pairs.
pub fn overlap_area(a: &Mesh, b: &Mesh) -> f64 {
    let mut total = 0.0;
    for_each_overlap(a, b, |_, _, poly| total += polygon_area(poly));
    total
}

fn bbox_overlap(s: &[Point2; 3], t: &[Point2; 3]) -> bool {
    let lo = |v: &[Point2; 3], f: fn(&Point2) -> f64| v.iter().map(f).fold(f64::INFINITY, f64::min);
    let hi = |v: &[Point2; 3], f: fn(&Point2) -> f64| v.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let (x, y): (fn(&Point2) -> f64, fn(&Point2) -> f64) = (|p| p.x, |p| p.y);
    lo(s, x) <= hi(t, x) && lo(t, x) <= hi(s, x) && lo(s, y) <= hi(t, y) && lo(t, y) <= hi(s, y)
}

/// Calls `f(source elem, target elem, polygon)` for every pair with a nonempty overlap.
pub fn for_each_overlap(src: &Mesh, tgt: &Mesh, mut f: impl FnMut(usize, usize, &[Point2])) {
    for se in 0..src.n_elems() {
        let s = src.triangle_points(se);
        for te in 0..tgt.n_elems() {
            let t = tgt.triangle_points(te);
            if !bbox_overlap(&s, &t) {
                continue;
            }
            let poly = convex_intersection(&s, &t);
            if !poly.is_empty() {
                f(se, te, &poly);
            }
        }
    }
}

/// `b_A = ∫ N_A f_s` over the mesh overlap for a piecewise-linear vertex field on
/// `src` and linear vertex shape functions on `tgt`.
pub fn overlap_rhs(src: &Mesh, src_values: &[f64], tgt: &Mesh) -> Vec<f64> {
    let mut b = vec![0.0; tgt.n_vertices()];
    for_each_overlap(src, tgt, |se, te, poly| {
        let st = src.triangle_points(se);
        let sv = src.triangle(se).map(|i| src_values[i]);
        let tt = tgt.triangle_points(te);
        let tv = tgt.triangle(te);
        for k in 1..poly.len() - 1 {
            for (p, w) in triangle_rule([poly[0], poly[k], poly[k + 1]]) {
                let ls = cramer_barycentric(st, p);
                let fs = ls[0] * sv[0] + ls[1] * sv[1] + ls[2] * sv[2];
                let lt = cramer_barycentric(tt, p);
                for a in 0..3 {
                    b[tv[a]] += w * lt[a] * fs;
                }
            }
        }
    });
    b
}

/// Source elements whose centroid lies strictly inside each coarse element.
pub fn children_by_centroid(coarse: &Mesh, fine: &Mesh) -> Vec<Vec<usize>> {
    (0..coarse.n_elems())
        .map(|c| {
            let t = coarse.triangle_points(c);
            (0..fine.n_elems())
                .filter(|&f| {
                    let ft = fine.triangle_points(f);
                    let g = Point2::new((ft[0].x + ft[1].x + ft[2].x) / 3.0, (ft[0].y + ft[1].y + ft[2].y) / 3.0);
                    cramer_barycentric(t, g).iter().all(|&l| l > 1e-12)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_degree_nine() {
        let g = gauss_legendre(5);
        let s: f64 = g.iter().map(|&(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        assert!((g.iter().map(|&(_, w)| w).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_exact_for_degree_eight() {
        let t = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        // ∫ x^a y^b over the unit right triangle is a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for (a, b) in [(8, 0), (3, 5), (4, 4), (0, 2)] {
            let s: f64 = triangle_rule(t).iter().map(|&(p, w)| w * p.x.powi(a) * p.y.powi(b)).sum();
            let exact = fact(a as u32) * fact(b as u32) / fact(a as u32 + b as u32 + 2);
            assert!((s - exact).abs() < 1e-15, "{a} {b}");
        }
    }

    #[test]
    fn intersection_of_shifted_triangles() {
        let a = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let b = a.map(|p| Point2::new(p.x + 0.5, p.y));
        assert!((polygon_area(&convex_intersection(&a, &b)) - 0.125).abs() < 1e-15);
        assert!(convex_intersection(&a, &a.map(|p| Point2::new(p.x + 2.0, p.y))).is_empty());
    }

    #[test]
    fn sampled_areas_agree_with_hull_area() {
        let a = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let c = a.map(|p| Point2::new(0.3 * p.x + 0.1 * p.y + 0.05, 0.7 * p.y - 0.2 * p.x + 0.2));
        let exact = polygon_area(&convex_intersection(&a, &c));
        // plain sampling of the unit square: hit rate p, standard error sqrt(p(1 - p) / n)
        let n = 1_000_000;
        let p = exact / 0.5;
        let sigma = 0.5 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((monte_carlo_overlap_area(&a, &c, n, 3) - exact).abs() < 5.0 * sigma);
        assert!((stratified_overlap_area(&a, &c, 10_000_000, 2) - exact).abs() < 1e-6);
    }
}
