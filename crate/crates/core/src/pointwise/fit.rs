use nalgebra::{DMatrix, DVector};

use super::{monomial_count, FitError};
use crate::mesh::Point2;

/// Monomials `[1, x, y, x^2, xy, y^2]` truncated to `degree`.
#[inline]
pub fn monomials(d: Point2, degree: usize) -> [f64; 6] {
    let _ = degree;
    [1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y]
}

/// Relative threshold on the diagonal of R (after column equilibration) below which an
/// unregularized fit is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

fn weighted_vandermonde(
    target: Point2,
    points: &[Point2],
    weights: &[f64],
    degree: usize,
    centering: bool,
) -> DMatrix<f64> {
    let n = monomial_count(degree);
    let origin = if centering { target } else { Point2::new(0.0, 0.0) };
    DMatrix::from_fn(points.len(), n, |j, k| weights[j] * monomials(points[j].sub(origin), degree)[k])
}

/// Solves `min_c ||W (A c - b)||^2 + lambda ||c||^2` for one target with a Householder QR
/// of the weighted, column-equilibrated Vandermonde system (ridge rows appended when
/// `lambda > 0`).
///
/// Coefficients follow the `[1, x, y, x^2, xy, y^2]` ordering. With `centering` the
/// monomials are taken about `target`, so coefficient 0 is the fitted value there.
pub fn fit_local(
    target: Point2,
    points: &[Point2],
    values: &[f64],
    weights: &[f64],
    degree: usize,
    lambda: f64,
    centering: bool,
) -> Result<Vec<f64>, FitError> {
    assert_eq!(points.len(), values.len());
    assert_eq!(points.len(), weights.len());
    if degree > 2 {
        return Err(FitError::InvalidSpec(format!("fit degree must be 0, 1 or 2, got {degree}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FitError::InvalidSpec(format!("regularization must be non-negative, got {lambda}")));
    }
    if points.is_empty() {
        return Err(FitError::NoSources);
    }
    let n = monomial_count(degree);
    let m = points.len();
    if lambda == 0.0 && m < n {
        return Err(FitError::SingularFit { target });
    }
    let a = weighted_vandermonde(target, points, weights, degree, centering);
    let scale: Vec<f64> = (0..n)
        .map(|k| {
            let s = a.column(k).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let ridge = if lambda > 0.0 { n } else { 0 };
    let mut sys = DMatrix::zeros(m + ridge, n);
    let mut rhs = DVector::zeros(m + ridge);
    for j in 0..m {
        for k in 0..n {
            sys[(j, k)] = a[(j, k)] / scale[k];
        }
        rhs[j] = weights[j] * values[j];
    }
    let sl = lambda.sqrt();
    for k in 0..ridge {
        sys[(m + k, k)] = sl / scale[k];
    }

    let qr = sys.qr();
    let r = qr.r();
    let diag_max = (0..n).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if lambda == 0.0 && (0..n).any(|k| !(r[(k, k)].abs() > RANK_TOL * diag_max)) {
        return Err(FitError::SingularFit { target });
    }
    let qtb = qr.q().transpose() * rhs;
    let cs = r.solve_upper_triangular(&qtb).ok_or(FitError::SingularFit { target })?;
    Ok((0..n).map(|k| cs[k] / scale[k]).collect())
}

/// Evaluates fitted coefficients at `p`.
pub fn eval_fit(coeffs: &[f64], target: Point2, p: Point2, centering: bool) -> f64 {
    let origin = if centering { target } else { Point2::new(0.0, 0.0) };
    let mono = monomials(p.sub(origin), 2);
    coeffs.iter().zip(mono).map(|(c, m)| c * m).sum()
}

/// 2-norm condition number of the weighted Vandermonde matrix of one fit.
pub fn vandermonde_condition(
    target: Point2,
    points: &[Point2],
    weights: &[f64],
    degree: usize,
    centering: bool,
) -> f64 {
    let sv = weighted_vandermonde(target, points, weights, degree, centering).singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}
