//! Pointwise transfer by local weighted least-squares polynomial fits.
//!
//! Each target gathers a support set of nearby source dofs, weights them with a radial
//! basis function of the distance and fits a polynomial of degree 0, 1 or 2. The fitted
//! polynomial evaluated at the target is the transferred value.

mod fit;
mod rbf;
mod support;

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

pub use fit::{eval_fit, fit_local, monomials, vandermonde_condition};
pub use rbf::{eval_rbf, RadialBasis, RbfKind};
pub(crate) use support::{select_support_bounded, Bounded};
pub use support::{select_support, Selection, SourceCloud, SourceIndex, Support, DEFAULT_GROWTH};

use crate::mesh::{Field, Point2};
use crate::Exec;

/// Number of monomials in a bivariate polynomial of total degree `degree`.
pub fn monomial_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("invalid fit specification: {0}")]
    InvalidSpec(String),
    #[error("no source points")]
    NoSources,
    #[error("underdetermined fit: {found} support points within radius {radius}, need {needed}")]
    Underdetermined { found: usize, needed: usize, radius: f64 },
    #[error("adaptive radius covered every source but found only {found} of {needed} points")]
    InsufficientSources { found: usize, needed: usize },
    #[error("element patch selection needs sources laid out on a mesh")]
    PatchNeedsMesh,
    #[error("target ({}, {}) lies outside the source mesh", .0.x, .0.y)]
    OutsideMesh(Point2),
    #[error("rank-deficient fit at target ({}, {})", target.x, target.y)]
    SingularFit { target: Point2 },
}

/// A fit failure at one target.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("target {target}: {source}")]
pub struct TransferError {
    pub target: usize,
    #[source]
    pub source: FitError,
}

/// Failure of an extrinsic transfer.
#[derive(Debug, thiserror::Error)]
pub enum ExtrinsicError {
    #[error("evaluation callback failed on batch {batch}: {message}")]
    Callback { batch: usize, message: String },
    #[error("evaluation callback returned {got} values for batch {batch} of {expected} points")]
    BadLength { batch: usize, expected: usize, got: usize },
    #[error("batch size must be positive")]
    ZeroBatch,
    #[error(transparent)]
    Fit(#[from] TransferError),
}

/// Complete description of a local fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSpec {
    pub degree: usize,
    pub basis: RadialBasis,
    pub selection: Selection,
    pub lambda: f64,
    /// Shift support coordinates so the target is the origin.
    pub centering: bool,
}

impl FitSpec {
    pub fn new(degree: usize, basis: RadialBasis, selection: Selection) -> FitSpec {
        FitSpec { degree, basis, selection, lambda: 0.0, centering: true }
    }

    pub fn with_lambda(mut self, lambda: f64) -> FitSpec {
        self.lambda = lambda;
        self
    }

    pub fn with_centering(mut self, centering: bool) -> FitSpec {
        self.centering = centering;
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.degree > 2 {
            return Err(FitError::InvalidSpec(format!("fit degree must be 0, 1 or 2, got {}", self.degree)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(FitError::InvalidSpec(format!("regularization must be non-negative, got {}", self.lambda)));
        }
        if !(self.basis.shape > 0.0 && self.basis.shape.is_finite()) {
            return Err(FitError::InvalidSpec(format!("rbf shape parameter must be positive, got {}", self.basis.shape)));
        }
        self.selection.validate(self.degree)
    }
}

/// Fits one target from an already selected support.
pub(crate) fn fit_support(
    points: &[Point2],
    values: &[f64],
    support: &Support,
    target: Point2,
    spec: &FitSpec,
) -> Result<f64, FitError> {
    let pts: Vec<Point2> = support.indices.iter().map(|&k| points[k]).collect();
    let vals: Vec<f64> = support.indices.iter().map(|&k| values[k]).collect();
    let c = fit_local(target, &pts, &vals, &support.weights, spec.degree, spec.lambda, spec.centering)?;
    Ok(eval_fit(&c, target, target, spec.centering))
}

fn fit_one(index: &SourceIndex, values: &[f64], target: Point2, spec: &FitSpec) -> Result<f64, FitError> {
    let support = select_support(index, target, &spec.selection, &spec.basis, spec.degree)?;
    fit_support(index.points(), values, &support, target, spec)
}

fn first_error(results: Vec<Result<f64, FitError>>) -> Result<Vec<f64>, TransferError> {
    let mut out = Vec::with_capacity(results.len());
    for (target, r) in results.into_iter().enumerate() {
        out.push(r.map_err(|source| TransferError { target, source })?);
    }
    Ok(out)
}

/// Transfers `values` living on the points of `index` to `targets`.
///
/// Results do not depend on `exec`; the reported error is always the one at the lowest
/// failing target index.
pub fn transfer_values(
    index: &SourceIndex,
    values: &[f64],
    targets: &[Point2],
    spec: &FitSpec,
    exec: Exec,
) -> Result<Vec<f64>, TransferError> {
    assert_eq!(values.len(), index.len(), "one value per source point");
    spec.validate().map_err(|source| TransferError { target: 0, source })?;
    let results: Vec<Result<f64, FitError>> = match exec {
        Exec::Serial => targets.iter().map(|&t| fit_one(index, values, t, spec)).collect(),
        Exec::Parallel => targets.par_iter().map(|&t| fit_one(index, values, t, spec)).collect(),
    };
    first_error(results)
}

/// Transfers a mesh field to arbitrary target points, building the source index from the
/// field's dof layout.
pub fn transfer_pointwise(
    source: &Field,
    targets: &[Point2],
    spec: &FitSpec,
    exec: Exec,
) -> Result<Vec<f64>, TransferError> {
    let index = SourceIndex::from_mesh(source.mesh().clone(), source.location())
        .map_err(|source| TransferError { target: 0, source })?;
    transfer_values(&index, source.values(), targets, spec, exec)
}

/// Transfer where source values are not stored but obtained from `evaluate`, a callback
/// that returns one value per requested point.
///
/// Targets are processed in consecutive batches of `batch_size`. For each batch the union
/// of its support points is requested in a single call, so the callback runs at most
/// `ceil(targets / batch_size)` times. When `evaluate` agrees with stored values the result
/// is bitwise identical to [`transfer_values`].
pub fn transfer_extrinsic<F, E>(
    index: &SourceIndex,
    targets: &[Point2],
    spec: &FitSpec,
    batch_size: usize,
    mut evaluate: F,
) -> Result<Vec<f64>, ExtrinsicError>
where
    F: FnMut(&[Point2]) -> Result<Vec<f64>, E>,
    E: fmt::Display,
{
    if batch_size == 0 {
        return Err(ExtrinsicError::ZeroBatch);
    }
    spec.validate().map_err(|source| TransferError { target: 0, source })?;
    let mut out = Vec::with_capacity(targets.len());
    let mut values = vec![f64::NAN; index.len()];
    for (batch, chunk) in targets.chunks(batch_size).enumerate() {
        let base = batch * batch_size;
        let supports = chunk
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                select_support(index, t, &spec.selection, &spec.basis, spec.degree)
                    .map_err(|source| TransferError { target: base + i, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let needed: Vec<usize> =
            supports.iter().flat_map(|s| s.indices.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
        let request: Vec<Point2> = needed.iter().map(|&k| index.points()[k]).collect();
        let got = evaluate(&request).map_err(|e| ExtrinsicError::Callback { batch, message: e.to_string() })?;
        if got.len() != request.len() {
            return Err(ExtrinsicError::BadLength { batch, expected: request.len(), got: got.len() });
        }
        for (&k, v) in needed.iter().zip(got) {
            values[k] = v;
        }
        for (i, (s, &t)) in supports.iter().zip(chunk).enumerate() {
            let v = fit_support(index.points(), &values, s, t, spec)
                .map_err(|source| TransferError { target: base + i, source })?;
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{generate, DofLocation, Shape};

    fn spec(kind: RbfKind, degree: usize, cutoff: f64) -> FitSpec {
        FitSpec::new(degree, RadialBasis::new(kind, 2.0).unwrap(), Selection::FixedRadius { cutoff })
    }

    #[test]
    fn monomial_counts() {
        assert_eq!([0, 1, 2].map(monomial_count), [1, 3, 6]);
    }

    #[test]
    fn quadratic_field_is_reproduced() {
        let mesh = Arc::new(generate::disk(1.0, 8).unwrap());
        let f = |p: Point2| 1.0 + p.x - 2.0 * p.y + 0.5 * p.x * p.x + p.x * p.y - p.y * p.y;
        let src = Field::from_fn(mesh.clone(), Shape::Linear, f);
        let targets = mesh.centroids();
        let h = mesh.mean_edge_length();
        for kind in RbfKind::ALL {
            let out = transfer_pointwise(&src, &targets, &spec(kind, 2, 3.0 * h), Exec::Serial).unwrap();
            for (t, v) in targets.iter().zip(&out) {
                assert!((v - f(*t)).abs() < 1e-10, "{kind:?}");
            }
        }
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let mesh = Arc::new(generate::disk(1.0, 10).unwrap());
        let src = Field::from_fn(mesh.clone(), Shape::Linear, |p| p.x.sin() * p.y.cos() + 2.0);
        let targets = mesh.centroids();
        let s = spec(RbfKind::C4, 1, 2.0 * mesh.mean_edge_length());
        let a = transfer_pointwise(&src, &targets, &s, Exec::Serial).unwrap();
        let b = transfer_pointwise(&src, &targets, &s, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn error_carries_lowest_target_index() {
        let mesh = Arc::new(generate::square(4).unwrap());
        let src = Field::from_fn(mesh.clone(), Shape::Linear, |p| p.x);
        let targets = vec![Point2::new(0.5, 0.5), Point2::new(5.0, 5.0), Point2::new(9.0, 9.0)];
        let s = spec(RbfKind::C4, 1, 0.5);
        for exec in [Exec::Serial, Exec::Parallel] {
            let err = transfer_pointwise(&src, &targets, &s, exec).unwrap_err();
            assert_eq!(err.target, 1);
            assert!(matches!(err.source, FitError::Underdetermined { found: 0, .. }));
        }
    }

    #[test]
    fn extrinsic_matches_intrinsic_and_batches() {
        let mesh = Arc::new(generate::disk(1.0, 6).unwrap());
        let f = |p: Point2| p.x.sin() * p.y.cos() + 2.0;
        let src = Field::from_fn(mesh.clone(), Shape::Linear, f);
        let index = SourceIndex::from_mesh(mesh.clone(), DofLocation::Vertices).unwrap();
        let targets = mesh.centroids();
        let s = spec(RbfKind::C4, 1, 2.5 * mesh.mean_edge_length());
        let intrinsic = transfer_values(&index, src.values(), &targets, &s, Exec::Serial).unwrap();
        let mut calls = 0;
        let ext = transfer_extrinsic(&index, &targets, &s, 17, |pts: &[Point2]| {
            calls += 1;
            Ok::<_, String>(pts.iter().map(|&p| f(p)).collect())
        })
        .unwrap();
        assert_eq!(ext, intrinsic);
        assert!(calls <= targets.len().div_ceil(17));
    }

    #[test]
    fn extrinsic_names_failing_batch() {
        let mesh = Arc::new(generate::square(5).unwrap());
        let index = SourceIndex::from_mesh(mesh.clone(), DofLocation::Vertices).unwrap();
        let targets = mesh.centroids();
        let s = spec(RbfKind::Gaussian, 1, 0.5);
        let mut calls = 0;
        let err = transfer_extrinsic(&index, &targets, &s, 5, |pts: &[Point2]| {
            calls += 1;
            if calls == 4 {
                Err("remote side went away")
            } else {
                Ok(vec![0.0; pts.len()])
            }
        })
        .unwrap_err();
        assert!(matches!(err, ExtrinsicError::Callback { batch: 3, .. }));
        assert!(err.to_string().contains("batch 3"));
    }
}
