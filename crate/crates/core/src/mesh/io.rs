//! Plain-text mesh and field files.
//!
//! Mesh:
//! ```text
//! fieldbridge-mesh 1
//! <nverts> <ntris>
//! x y            (nverts lines)
//! v0 v1 v2       (ntris lines, 0-based)
//! classification (optional)
//! dim id         (ntris lines)
//! ```
//! Field:
//! ```text
//! fieldbridge-field 1 <vertices|centroids> <degree>
//! value          (one per dof)
//! ```
//! Coordinates and values are written with Rust's shortest round-trip formatting, so
//! `load(save(x))` reproduces every `f64` bit-exactly.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{build_mesh, Field, Mesh, MeshError, ModelTag, Point2, Shape};
use crate::mesh::DofLocation;

const MESH_MAGIC: &str = "fieldbridge-mesh";
const FIELD_MAGIC: &str = "fieldbridge-field";

fn perr(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse { line, msg: msg.into() }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        let last = self.last;
        self.next().ok_or_else(|| perr(last + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} `{tok}`")))
}

fn no_trailing<'a>(mut it: impl Iterator<Item = &'a str>, line: usize) -> Result<(), MeshError> {
    match it.next() {
        Some(t) => Err(perr(line, format!("unexpected token `{t}`"))),
        None => Ok(()),
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.expect("header")?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some(MESH_MAGIC) || toks.next() != Some("1") || toks.next().is_some() {
        return Err(perr(ln, format!("expected header `{MESH_MAGIC} 1`, found `{header}`")));
    }
    let (ln, counts) = lines.expect("vertex and triangle counts")?;
    let mut toks = counts.split_whitespace();
    let nv: usize = parse_num(toks.next(), ln, "vertex count")?;
    let nt: usize = parse_num(toks.next(), ln, "triangle count")?;
    no_trailing(toks, ln)?;

    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.expect("vertex coordinates")?;
        let mut toks = l.split_whitespace();
        let x: f64 = parse_num(toks.next(), ln, "x coordinate")?;
        let y: f64 = parse_num(toks.next(), ln, "y coordinate")?;
        no_trailing(toks, ln)?;
        coords.push(Point2::new(x, y));
    }
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.expect("triangle connectivity")?;
        let mut toks = l.split_whitespace();
        let mut t = [0usize; 3];
        for v in &mut t {
            *v = parse_num(toks.next(), ln, "vertex index")?;
        }
        no_trailing(toks, ln)?;
        tris.push(t);
    }
    let mut tags = None;
    if let Some((ln, l)) = lines.next() {
        if l != "classification" {
            return Err(perr(ln, format!("expected `classification` block, found `{l}`")));
        }
        let mut v = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = lines.expect("classification entry")?;
            let mut toks = l.split_whitespace();
            let dim: u8 = parse_num(toks.next(), ln, "model dimension")?;
            let id: u32 = parse_num(toks.next(), ln, "model id")?;
            no_trailing(toks, ln)?;
            v.push(ModelTag::new(dim, id));
        }
        if let Some((ln, l)) = lines.next() {
            return Err(perr(ln, format!("trailing content `{l}`")));
        }
        tags = Some(v);
    }
    build_mesh(coords, tris, tags)
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MESH_MAGIC} 1").unwrap();
    writeln!(s, "{} {}", mesh.n_vertices(), mesh.n_elems()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:?} {:?}", p.x, p.y).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    if mesh.elem_classes().iter().any(|t| *t != ModelTag::new(2, 0)) {
        s.push_str("classification\n");
        for t in mesh.elem_classes() {
            writeln!(s, "{} {}", t.dim, t.id).unwrap();
        }
    }
    s
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn parse_field(text: &str, mesh: Arc<Mesh>) -> Result<Field, MeshError> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.expect("header")?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some(FIELD_MAGIC) || toks.next() != Some("1") {
        return Err(perr(ln, format!("expected header `{FIELD_MAGIC} 1 <location> <degree>`, found `{header}`")));
    }
    let location = match toks.next() {
        Some("vertices") => DofLocation::Vertices,
        Some("centroids") => DofLocation::Centroids,
        other => return Err(perr(ln, format!("invalid dof location {other:?}"))),
    };
    let degree: usize = parse_num(toks.next(), ln, "degree")?;
    no_trailing(toks, ln)?;
    let shape = Shape::from_degree(degree).ok_or_else(|| perr(ln, format!("unsupported degree {degree}")))?;
    if shape.location() != location {
        return Err(MeshError::InvalidLayout);
    }
    let mut values = Vec::new();
    while let Some((ln, l)) = lines.next() {
        let mut toks = l.split_whitespace();
        values.push(parse_num(toks.next(), ln, "value")?);
        no_trailing(toks, ln)?;
    }
    Field::new(mesh, shape, values)
}

pub fn write_field(field: &Field) -> String {
    let mut s = String::new();
    writeln!(s, "{FIELD_MAGIC} 1 {} {}", field.location().name(), field.degree()).unwrap();
    for v in field.values() {
        writeln!(s, "{v:?}").unwrap();
    }
    s
}

pub fn load_field(path: impl AsRef<Path>, mesh: Arc<Mesh>) -> Result<Field, MeshError> {
    parse_field(&std::fs::read_to_string(path)?, mesh)
}

pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_field(field))?;
    Ok(())
}
