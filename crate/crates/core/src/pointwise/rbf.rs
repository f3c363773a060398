use super::FitError;

/// Radial weighting functions of the normalized distance `r / r_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RbfKind {
    Gaussian,
    C4,
    Const,
    /// Weight 1 everywhere, including beyond the cutoff.
    Identity,
    Multiquadric,
    InverseMultiquadric,
    ThinPlateSpline,
    CubicSpline,
}

impl RbfKind {
    pub const ALL: [RbfKind; 8] = [
        RbfKind::Gaussian,
        RbfKind::C4,
        RbfKind::Const,
        RbfKind::Identity,
        RbfKind::Multiquadric,
        RbfKind::InverseMultiquadric,
        RbfKind::ThinPlateSpline,
        RbfKind::CubicSpline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RbfKind::Gaussian => "gaussian",
            RbfKind::C4 => "c4",
            RbfKind::Const => "const",
            RbfKind::Identity => "identity",
            RbfKind::Multiquadric => "multiquadric",
            RbfKind::InverseMultiquadric => "inverse-multiquadric",
            RbfKind::ThinPlateSpline => "thin-plate-spline",
            RbfKind::CubicSpline => "cubic-spline",
        }
    }

    pub fn from_name(s: &str) -> Option<RbfKind> {
        RbfKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A weighting kind with its shape parameter `a`. The cutoff radius is supplied by the
/// support selection at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBasis {
    pub kind: RbfKind,
    pub shape: f64,
}

impl Default for RadialBasis {
    fn default() -> Self {
        Self { kind: RbfKind::C4, shape: 2.0 }
    }
}

impl RadialBasis {
    pub fn new(kind: RbfKind, shape: f64) -> Result<Self, FitError> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(FitError::InvalidSpec(format!("rbf shape parameter must be positive, got {shape}")));
        }
        Ok(Self { kind, shape })
    }

    /// Weight at distance `r` for cutoff `cutoff`. Zero beyond the cutoff for every kind
    /// except [`RbfKind::Identity`].
    pub fn eval(&self, r: f64, cutoff: f64) -> f64 {
        if self.kind == RbfKind::Identity {
            return 1.0;
        }
        if r > cutoff {
            return 0.0;
        }
        let rho = r / cutoff;
        let ar = self.shape * rho;
        match self.kind {
            RbfKind::Gaussian => (-(ar * ar)).exp(),
            RbfKind::C4 => {
                let p = ((((5.0 * rho + 30.0) * rho + 72.0) * rho + 82.0) * rho + 36.0) * rho + 6.0;
                p * (1.0 - rho).powi(6)
            }
            RbfKind::Const => 1.0,
            RbfKind::Identity => unreachable!(),
            RbfKind::Multiquadric => (1.0 + ar * ar).sqrt(),
            RbfKind::InverseMultiquadric => 1.0 / (1.0 + ar * ar).sqrt(),
            // x^2 ln x -> 0 as x -> 0
            RbfKind::ThinPlateSpline => {
                if ar == 0.0 {
                    0.0
                } else {
                    ar * ar * ar.ln()
                }
            }
            RbfKind::CubicSpline => ar * ar * ar,
        }
    }
}

/// Free-function form of [`RadialBasis::eval`].
pub fn eval_rbf(basis: &RadialBasis, r: f64, cutoff: f64) -> f64 {
    basis.eval(r, cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(kind: RbfKind) -> RadialBasis {
        RadialBasis::new(kind, 2.0).unwrap()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(b(RbfKind::Gaussian).eval(0.0, 1.0), 1.0);
        assert_eq!(b(RbfKind::C4).eval(0.0, 1.0), 6.0);
        assert_eq!(b(RbfKind::Const).eval(0.0, 1.0), 1.0);
        assert_eq!(b(RbfKind::ThinPlateSpline).eval(0.0, 1.0), 0.0);
        assert_eq!(b(RbfKind::CubicSpline).eval(0.0, 1.0), 0.0);
        assert_eq!(b(RbfKind::Multiquadric).eval(0.0, 1.0), 1.0);
    }

    #[test]
    fn zero_beyond_cutoff_except_identity() {
        for k in RbfKind::ALL {
            let v = b(k).eval(1.5 * 0.7, 0.7);
            if k == RbfKind::Identity {
                assert_eq!(v, 1.0);
            } else {
                assert_eq!(v, 0.0, "{k:?}");
            }
        }
    }

    #[test]
    fn multiquadric_at_cutoff() {
        assert!((b(RbfKind::Multiquadric).eval(0.3, 0.3) - 5f64.sqrt()).abs() < 1e-15);
        assert!((b(RbfKind::InverseMultiquadric).eval(0.3, 0.3) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_inside_support() {
        let rho: f64 = 0.25;
        let c4 = (5.0 * rho.powi(5) + 30.0 * rho.powi(4) + 72.0 * rho.powi(3) + 82.0 * rho.powi(2) + 36.0 * rho + 6.0)
            * (1.0 - rho).powi(6);
        assert!((b(RbfKind::C4).eval(0.5, 2.0) - c4).abs() < 1e-14);
        assert!((b(RbfKind::Gaussian).eval(0.5, 2.0) - (-0.25f64).exp()).abs() < 1e-15);
        assert!((b(RbfKind::ThinPlateSpline).eval(0.5, 2.0) - 0.25 * 0.5f64.ln()).abs() < 1e-15);
        assert!((b(RbfKind::CubicSpline).eval(0.5, 2.0) - 0.125).abs() < 1e-15);
        // C4 vanishes smoothly at the cutoff
        assert_eq!(b(RbfKind::C4).eval(2.0, 2.0), 0.0);
    }

    #[test]
    fn names_roundtrip() {
        for k in RbfKind::ALL {
            assert_eq!(RbfKind::from_name(k.name()), Some(k));
        }
        assert!(RadialBasis::new(RbfKind::C4, 0.0).is_err());
    }
}
