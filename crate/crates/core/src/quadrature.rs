//! Symmetric quadrature rules on triangles, expressed in barycentric coordinates.
//!
//! Weights are normalized to sum to one, so a rule applied to an element is
//! `area * sum(w_q * f(x_q))`.

use thiserror::Error;

use crate::mesh::{from_barycentric, Point2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("no tabulated rule of degree {0}; supported degrees are 0..=4, supply a custom QuadratureRule for higher degrees")]
    UnsupportedDegree(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    degree: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

// Strang-Fix / Dunavant 6-point orbit parameters.
const D4_A: f64 = 0.445_948_490_915_964_886_318_329_253_883;
const D4_B: f64 = 0.091_576_213_509_770_743_459_571_463_402_2;
const D4_WA: f64 = 0.223_381_589_678_011_465_695_007_008_433;
const D4_WB: f64 = 0.109_951_743_655_321_867_638_326_324_900;

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[b, a, a], [a, b, a], [a, a, b]]
}

impl QuadratureRule {
    /// Builds a user-supplied rule. Weights are rescaled to sum to one.
    pub fn custom(degree: usize, points: Vec<[f64; 3]>, weights: Vec<f64>) -> Self {
        assert_eq!(points.len(), weights.len(), "one weight per point");
        let s: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / s).collect();
        Self { degree, points, weights }
    }

    /// Tabulated rule exact for polynomials up to `degree` (0 through 4).
    pub fn for_degree(degree: usize) -> Result<Self, QuadratureError> {
        let rule = match degree {
            0 | 1 => Self { degree: 1, points: vec![[1.0 / 3.0; 3]], weights: vec![1.0] },
            2 => Self {
                degree: 2,
                points: orbit3(1.0 / 6.0).to_vec(),
                weights: vec![1.0 / 3.0; 3],
            },
            3 => {
                let mut points = vec![[1.0 / 3.0; 3]];
                points.extend(orbit3(0.2));
                Self { degree: 3, points, weights: vec![-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0] }
            }
            4 => {
                let mut points = orbit3(D4_A).to_vec();
                points.extend(orbit3(D4_B));
                Self { degree: 4, points, weights: vec![D4_WA, D4_WA, D4_WA, D4_WB, D4_WB, D4_WB] }
            }
            d => return Err(QuadratureError::UnsupportedDegree(d)),
        };
        Ok(rule)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over the triangle `tri` of area `area`.
    pub fn integrate(&self, tri: [Point2; 3], area: f64, mut f: impl FnMut(Point2) -> f64) -> f64 {
        let s: f64 = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| w * f(from_barycentric(tri, *b)))
            .sum();
        area * s
    }
}

/// Shorthand for [`QuadratureRule::for_degree`].
pub fn quadrature_for(degree: usize) -> Result<QuadratureRule, QuadratureError> {
    QuadratureRule::for_degree(degree)
}
