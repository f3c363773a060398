use std::sync::Arc;

use super::{Mesh, MeshError, Point2};
use crate::quadrature::QuadratureRule;

/// Where a field's degrees of freedom live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofLocation {
    Vertices,
    Centroids,
}

impl DofLocation {
    pub fn name(&self) -> &'static str {
        match self {
            DofLocation::Vertices => "vertices",
            DofLocation::Centroids => "centroids",
        }
    }

    /// Coordinates of every dof of this layout on `mesh`.
    pub fn points(&self, mesh: &Mesh) -> Vec<Point2> {
        match self {
            DofLocation::Vertices => mesh.vertices().to_vec(),
            DofLocation::Centroids => mesh.centroids(),
        }
    }

    pub fn count(&self, mesh: &Mesh) -> usize {
        match self {
            DofLocation::Vertices => mesh.n_vertices(),
            DofLocation::Centroids => mesh.n_elems(),
        }
    }
}

/// Shape function family of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Piecewise constant per element (degree 0).
    Constant,
    /// Linear Lagrange (degree 1).
    Linear,
}

impl Shape {
    pub fn degree(&self) -> usize {
        match self {
            Shape::Constant => 0,
            Shape::Linear => 1,
        }
    }

    pub fn from_degree(d: usize) -> Option<Shape> {
        match d {
            0 => Some(Shape::Constant),
            1 => Some(Shape::Linear),
            _ => None,
        }
    }

    /// The layout a shape's dofs occupy.
    pub fn location(&self) -> DofLocation {
        match self {
            Shape::Constant => DofLocation::Centroids,
            Shape::Linear => DofLocation::Vertices,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Arc<Mesh>,
    shape: Shape,
    values: Vec<f64>,
    name: String,
}

const BARY_TOL: f64 = 1e-12;

impl Field {
    pub fn new(mesh: Arc<Mesh>, shape: Shape, values: Vec<f64>) -> Result<Field, MeshError> {
        let expected = shape.location().count(&mesh);
        if values.len() != expected {
            return Err(MeshError::LengthMismatch { expected, found: values.len() });
        }
        Ok(Field { mesh, shape, values, name: String::new() })
    }

    /// Builds a field by sampling `f` at every dof point.
    pub fn from_fn(mesh: Arc<Mesh>, shape: Shape, f: impl Fn(Point2) -> f64) -> Field {
        let values = shape.location().points(&mesh).into_iter().map(f).collect();
        Field { mesh, shape, values, name: String::new() }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Field {
        self.name = name.into();
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn degree(&self) -> usize {
        self.shape.degree()
    }

    pub fn location(&self) -> DofLocation {
        self.shape.location()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Evaluates the field inside element `elem` at barycentric coordinates `bary`.
    pub fn eval(&self, elem: usize, bary: [f64; 3]) -> Result<f64, MeshError> {
        if elem >= self.mesh.n_elems() {
            return Err(MeshError::ElementOutOfRange { elem, n_elems: self.mesh.n_elems() });
        }
        let sum = bary[0] + bary[1] + bary[2];
        if bary.iter().any(|&b| !(b >= -BARY_TOL)) || (sum - 1.0).abs() > BARY_TOL {
            return Err(MeshError::InvalidBarycentric(bary));
        }
        Ok(self.eval_unchecked(elem, bary))
    }

    /// Like [`Field::eval`] but first checks that `mesh` is the field's mesh.
    pub fn eval_on(&self, mesh: &Mesh, elem: usize, bary: [f64; 3]) -> Result<f64, MeshError> {
        if !std::ptr::eq(mesh, Arc::as_ptr(&self.mesh)) && *mesh != *self.mesh {
            return Err(MeshError::MeshMismatch);
        }
        self.eval(elem, bary)
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, elem: usize, bary: [f64; 3]) -> f64 {
        match self.shape {
            Shape::Constant => self.values[elem],
            Shape::Linear => {
                let t = self.mesh.triangle(elem);
                bary[0] * self.values[t[0]] + bary[1] * self.values[t[1]] + bary[2] * self.values[t[2]]
            }
        }
    }
}

/// `∫ f dΩ` over the field's mesh using a rule exact to `quadrature_degree`.
pub fn integrate_field(field: &Field, quadrature_degree: usize) -> Result<f64, MeshError> {
    if quadrature_degree < field.degree() {
        return Err(MeshError::QuadratureTooLow { requested: quadrature_degree, field: field.degree() });
    }
    let rule = QuadratureRule::for_degree(quadrature_degree)?;
    let mesh = field.mesh();
    let mut total = 0.0;
    for e in 0..mesh.n_elems() {
        let s: f64 = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(b, w)| w * field.eval_unchecked(e, *b))
            .sum();
        total += mesh.element_area(e) * s;
    }
    Ok(total)
}
