//! Cartesian and cylindrical points as distinct types.
//!
//! A function that needs Cartesian input takes [`CartesianPoint3`]; a cylindrical point must
//! be converted explicitly with [`cyl_to_cart`] before it can be passed there.

use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CoordError {
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("cylindrical radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("azimuth must lie in [0, 2π), got {0}")]
    AzimuthOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPoint3 {
    x: f64,
    y: f64,
    z: f64,
}

impl CartesianPoint3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, CoordError> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(CoordError::NonFinite);
        }
        Ok(Self { x, y, z })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// `(r, phi, z)` with `r >= 0` and `phi` in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalPoint {
    r: f64,
    phi: f64,
    z: f64,
}

impl CylindricalPoint {
    pub fn new(r: f64, phi: f64, z: f64) -> Result<Self, CoordError> {
        if !(r.is_finite() && phi.is_finite() && z.is_finite()) {
            return Err(CoordError::NonFinite);
        }
        if r < 0.0 {
            return Err(CoordError::NegativeRadius(r));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(CoordError::AzimuthOutOfRange(phi));
        }
        Ok(Self { r, phi, z })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// `phi = atan2(y, x)` wrapped into `[0, 2π)`. The z axis maps to `phi = 0`.
pub fn cart_to_cyl(p: CartesianPoint3) -> CylindricalPoint {
    let r = p.x.hypot(p.y);
    if r == 0.0 {
        return CylindricalPoint { r: 0.0, phi: 0.0, z: p.z };
    }
    let mut phi = p.y.atan2(p.x);
    if phi < 0.0 {
        phi += TAU;
    }
    // -tiny + 2π rounds to 2π
    if phi >= TAU {
        phi = 0.0;
    }
    CylindricalPoint { r, phi, z: p.z }
}

pub fn cyl_to_cart(p: CylindricalPoint) -> CartesianPoint3 {
    let (s, c) = p.phi.sin_cos();
    CartesianPoint3 { x: p.r * c, y: p.r * s, z: p.z }
}

impl From<CartesianPoint3> for CylindricalPoint {
    fn from(p: CartesianPoint3) -> Self {
        cart_to_cyl(p)
    }
}

impl From<CylindricalPoint> for CartesianPoint3 {
    fn from(p: CylindricalPoint) -> Self {
        cyl_to_cart(p)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn cart(x: f64, y: f64, z: f64) -> CartesianPoint3 {
        CartesianPoint3::new(x, y, z).unwrap()
    }

    #[test]
    fn axis_points() {
        assert_eq!(cart_to_cyl(cart(1.0, 0.0, 0.0)), CylindricalPoint::new(1.0, 0.0, 0.0).unwrap());
        let c = cart_to_cyl(cart(0.0, 1.0, 5.0));
        assert_eq!((c.r(), c.phi(), c.z()), (1.0, FRAC_PI_2, 5.0));
        let o = cart_to_cyl(cart(0.0, 0.0, -3.0));
        assert_eq!((o.r(), o.phi(), o.z()), (0.0, 0.0, -3.0));
        let neg = cart_to_cyl(cart(0.0, -1.0, 0.0));
        assert!((neg.phi() - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn inverse_and_validation() {
        let p = cyl_to_cart(CylindricalPoint::new(2.0, PI, 0.0).unwrap());
        assert!((p.x() + 2.0).abs() < 1e-15 && p.y().abs() < 1e-15 && p.z() == 0.0);
        assert!(matches!(CylindricalPoint::new(1.0, TAU, 0.0), Err(CoordError::AzimuthOutOfRange(_))));
        assert!(matches!(CylindricalPoint::new(1.0, -0.1, 0.0), Err(CoordError::AzimuthOutOfRange(_))));
        assert!(matches!(CylindricalPoint::new(-1.0, 0.0, 0.0), Err(CoordError::NegativeRadius(_))));
        assert!(CartesianPoint3::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn tiny_negative_angle_wraps_inside_range() {
        let c = cart_to_cyl(cart(1.0, -1e-300, 0.0));
        assert!((0.0..TAU).contains(&c.phi()));
    }
}
