use crate::mesh::{orient2d, BBox, Point2};

/// Convex polygon with counter-clockwise vertices. The empty polygon has no vertices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    area: f64,
}

impl ConvexPolygon {
    pub fn empty() -> ConvexPolygon {
        ConvexPolygon::default()
    }

    /// Wraps CCW `vertices`, merging duplicate and collinear vertices closer than `eps`.
    pub fn from_ccw(vertices: Vec<Point2>, eps: f64) -> ConvexPolygon {
        let vertices = simplify(vertices, eps);
        if vertices.len() < 3 {
            return ConvexPolygon::empty();
        }
        let area = shoelace(&vertices);
        if area > 0.0 {
            ConvexPolygon { vertices, area }
        } else {
            ConvexPolygon::empty()
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Fan triangulation from vertex 0.
    pub fn triangles(&self) -> Vec<[Point2; 3]> {
        (1..self.vertices.len().saturating_sub(1))
            .map(|i| [self.vertices[0], self.vertices[i], self.vertices[i + 1]])
            .collect()
    }
}

fn shoelace(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

fn simplify(mut v: Vec<Point2>, eps: f64) -> Vec<Point2> {
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let mut drop = None;
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let next = v[(i + 1) % n];
            let cur = v[i];
            if cur.dist(prev) <= eps {
                drop = Some(i);
                break;
            }
            let base = next.dist(prev);
            if base > eps && orient2d(prev, cur, next).abs() / base <= eps {
                drop = Some(i);
                break;
            }
        }
        match drop {
            Some(i) => {
                v.remove(i);
            }
            None => return v,
        }
    }
}

/// Intersection of two CCW triangles by successive half-plane clipping of `a` against the
/// edges of `b`. Collinear or coincident vertices within `1e-12` times the larger triangle
/// diameter are merged.
pub fn clip_triangles(a: [Point2; 3], b: [Point2; 3]) -> ConvexPolygon {
    let ba = BBox::from_points(&a).expect("three points");
    let bb = BBox::from_points(&b).expect("three points");
    if !ba.overlaps(&bb) {
        return ConvexPolygon::empty();
    }
    let diam = |bx: &BBox| bx.width().hypot(bx.height());
    let eps = 1e-12 * diam(&ba).max(diam(&bb));

    let mut poly: Vec<Point2> = a.to_vec();
    let mut next = Vec::with_capacity(9);
    for k in 0..3 {
        let (p, q) = (b[k], b[(k + 1) % 3]);
        next.clear();
        let n = poly.len();
        for i in 0..n {
            let s = poly[(i + n - 1) % n];
            let e = poly[i];
            let ds = orient2d(p, q, s);
            let de = orient2d(p, q, e);
            if de >= 0.0 {
                if ds < 0.0 {
                    next.push(s.lerp(e, ds / (ds - de)));
                }
                next.push(e);
            } else if ds > 0.0 {
                next.push(s.lerp(e, ds / (ds - de)));
            }
        }
        std::mem::swap(&mut poly, &mut next);
        if poly.len() < 3 {
            return ConvexPolygon::empty();
        }
    }
    ConvexPolygon::from_ccw(poly, eps)
}
