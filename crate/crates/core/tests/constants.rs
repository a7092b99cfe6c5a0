use std::f64::consts::PI;

use nonlocal_bbm::fields::catalog_field;
use nonlocal_bbm::geometry::{dot, norm, Frame};
use nonlocal_bbm::quadrature::{CutSphereRule, SphereRule};
use nonlocal_bbm::special::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gamma_values() {
    assert!((gamma(1.0).unwrap() - 1.0).abs() < 1e-14);
    assert!((gamma(0.5).unwrap() - PI.sqrt()).abs() < 1e-13);
    assert!((gamma(5.0).unwrap() - 24.0).abs() < 1e-11);
    // 30-digit reference values.
    assert!(rel(gamma(0.3).unwrap(), 2.991_568_987_687_590_6) < 1e-13);
    assert!(rel(gamma(7.5).unwrap(), 1_871.254_305_797_788_3) < 1e-13);
    assert!(gamma(0.0).is_err() && gamma(-1.0).is_err());
}

#[test]
fn riesz_constants() {
    assert!(rel(riesz_constant(2, 1.0).unwrap(), 1.0 / (2.0 * PI)) < 1e-13);
    assert!(rel(riesz_constant(3, 1.0).unwrap(), 1.0 / (2.0 * PI * PI)) < 1e-13);
    assert!(rel(riesz_constant(2, 0.5).unwrap(), 0.076_074_279_862_467_708) < 1e-12);
    assert!(rel(riesz_constant(3, 0.7).unwrap(), 0.040_510_856_017_111_924) < 1e-12);
    assert!(riesz_constant(2, 2.0).is_err());
    assert!(riesz_constant(2, 0.0).is_err());
}

#[test]
fn kn_against_sphere_quadrature() {
    assert!((bbm_constant(2).unwrap() - 4.0).abs() < 1e-12);
    assert!((bbm_constant(3).unwrap() - 2.0 * PI).abs() < 1e-10);
    assert_eq!(bbm_constant_extended(1).unwrap(), 2.0);
    assert!(bbm_constant(1).is_err());

    // Plain trapezoid on the circle with 256 nodes, axis away from the nodes.
    let m = 256;
    let circle: f64 = (0..m)
        .map(|j| (2.0 * PI * (j as f64 + 0.5) / m as f64).cos().abs())
        .sum::<f64>()
        * 2.0
        * PI
        / m as f64;
    assert!((circle - 4.0).abs() < 1e-3);

    for dim in [2, 3] {
        let cut = CutSphereRule::new(dim, 64).unwrap();
        for e in [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0], [0.0, 0.6, 0.8]] {
            if dim == 2 && e[2] != 0.0 {
                continue;
            }
            let frame = Frame::along(dim, &e);
            let v = cut.integrate_abs_pow(&frame, 1.0, |w| dot(w, &e));
            assert!(
                rel(v, bbm_constant(dim).unwrap()) < 1e-10,
                "dim {dim}, e {e:?}: {v}"
            );
        }
    }
}

#[test]
fn knp_values() {
    for dim in [2, 3] {
        assert_eq!(
            bbm_constant_p(dim, 1.0).unwrap(),
            bbm_constant(dim).unwrap()
        );
    }
    assert!(rel(bbm_constant_p(2, 2.0).unwrap(), (PI / 2.0).sqrt()) < 1e-12);
    assert!(rel(bbm_constant_p(3, 2.0).unwrap(), (2.0 * PI / 3.0).sqrt()) < 1e-12);
    for dim in [2, 3] {
        let rule = SphereRule::new(dim, 32).unwrap();
        let m2 = rule.integrate(|w| w[dim - 1] * w[dim - 1]).unwrap();
        assert!(rel((m2 / 2.0).sqrt(), bbm_constant_p(dim, 2.0).unwrap()) < 1e-10);
    }
    assert!(bbm_constant_p(2, 0.5).is_err());
}

#[test]
fn sphere_areas() {
    assert_eq!(sphere_area(1), 2.0);
    assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
    assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
}

#[test]
fn gradient_direction_integral() {
    // int_S |grad f(x) . omega| = K_n |grad f(x)|
    for dim in [2, 3] {
        let f = catalog_field(dim, "modulated_poly_bump").unwrap();
        let mut x = [0.2, -0.1, 0.15];
        x[dim..].iter_mut().for_each(|c| *c = 0.0);
        let g = f.grad(&x);
        let cut = CutSphereRule::new(dim, 64).unwrap();
        let v = cut.integrate_abs_pow(&Frame::along(dim, &g), 1.0, |w| dot(&g, w));
        assert!(
            rel(v, bbm_constant(dim).unwrap() * norm(&g)) < 1e-8,
            "dim {dim}"
        );
    }
}
