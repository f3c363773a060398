use std::f64::consts::TAU;
use std::sync::Arc;

use approx::assert_relative_eq;
use fieldbridge::coords::{cart_to_cyl, cyl_to_cart, CartesianPoint3, CylindricalPoint};
use fieldbridge::mesh::{generate, load_field, load_mesh, save_field, save_mesh, Shape};
use fieldbridge::Field;
use proptest::prelude::*;

#[test]
fn mesh_and_field_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate::jitter(&generate::annulus(0.3, 1.0, 5).unwrap(), 0.3, 12).unwrap();
    let mp = dir.path().join("annulus.mesh");
    save_mesh(&m, &mp).unwrap();
    let back = Arc::new(load_mesh(&mp).unwrap());
    assert_eq!(*back, m);

    let f = Field::from_fn(back.clone(), Shape::Constant, |p| (3.0 * p.x).exp() / 7.0);
    let fp = dir.path().join("f.field");
    save_field(&f, &fp).unwrap();
    let g = load_field(&fp, back).unwrap();
    assert_eq!(g.shape(), Shape::Constant);
    assert!(g.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn quarter_turns() {
    let p = cart_to_cyl(CartesianPoint3::new(0.0, -2.0, 1.5).unwrap());
    assert_relative_eq!(p.r(), 2.0);
    assert_relative_eq!(p.phi(), 0.75 * TAU);
    assert_relative_eq!(p.z(), 1.5);
}

proptest! {
    #[test]
    fn cartesian_round_trip(x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3) {
        let p = CartesianPoint3::new(x, y, z).unwrap();
        let c = cart_to_cyl(p);
        prop_assert!(c.phi() >= 0.0 && c.phi() < TAU);
        let q = cyl_to_cart(c);
        let scale = x.abs().max(y.abs()).max(1.0);
        prop_assert!((q.x() - x).abs() <= 1e-12 * scale);
        prop_assert!((q.y() - y).abs() <= 1e-12 * scale);
        prop_assert_eq!(q.z(), z);
    }

    #[test]
    fn cylindrical_round_trip(r in 1e-6f64..1e3, phi in 0.0f64..TAU, z in -10.0f64..10.0) {
        let c = CylindricalPoint::new(r, phi, z).unwrap();
        let back = cart_to_cyl(cyl_to_cart(c));
        prop_assert!((back.r() - r).abs() <= 1e-12 * r);
        let d = (back.phi() - phi).abs();
        prop_assert!(d.min(TAU - d) <= 1e-9);
    }
}
