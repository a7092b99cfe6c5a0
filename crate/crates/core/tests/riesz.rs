use nonlocal_bbm::fields::{catalog_field, w11_norms, Ball};
use nonlocal_bbm::geometry::{distance, scale, Point};
use nonlocal_bbm::operators::{riesz_of_gradient, riesz_potential};
use nonlocal_bbm::quadrature::oracles::riesz_gradient_grid_oracle;
use nonlocal_bbm::quadrature::Preset;
use nonlocal_bbm::special::riesz_constant;
use nonlocal_bbm::{DecayingFunction, QuadratureSpec, TestField};

fn compact(f: &TestField) -> DecayingFunction<'_> {
    DecayingFunction::compact(f.dim(), move |y| f.eval(y), f.support_ball().unwrap()).unwrap()
}

#[test]
fn zero_function() {
    let spec = QuadratureSpec::default_for(2);
    let v = riesz_potential(&DecayingFunction::zero(2), 0.5, &[0.3, 0.0, 0.0], &spec).unwrap();
    assert_eq!(v.value, 0.0);
    let z = TestField::zero(3).unwrap();
    assert_eq!(
        riesz_of_gradient(&z, &[0.0; 3], &QuadratureSpec::default_for(3))
            .unwrap()
            .value,
        0.0
    );
}

#[test]
fn domain_checks() {
    let spec = QuadratureSpec::default_for(2);
    let b = catalog_field(2, "bump").unwrap();
    let g = compact(&b);
    assert!(riesz_potential(&g, 0.0, &[0.0; 3], &spec).is_err());
    assert!(riesz_potential(&g, 2.0, &[0.0; 3], &spec).is_err());
    let ball = b.support_ball().unwrap();
    let slow = DecayingFunction::new(2, |_| 0.0, 0.4, 1.0, 2.0, ball).unwrap();
    assert!(riesz_potential(&slow, 0.5, &[0.0; 3], &spec).is_err());
    let line = catalog_field(1, "bump").unwrap();
    assert!(riesz_of_gradient(&line, &[0.0; 3], &spec).is_err());
}

#[test]
fn dilation_covariance() {
    // I_alpha(g(2.))(x) = 2^{-alpha} (I_alpha g)(2x)
    let spec = QuadratureSpec::default_for(2);
    let f = catalog_field(2, "modulated_bump").unwrap();
    let d = f.dilate(2.0).unwrap();
    for alpha in [0.5, 1.0, 1.5] {
        for x in [[0.1, 0.2, 0.0], [0.4, -0.3, 0.0], [2.0, 1.0, 0.0]] {
            let a = riesz_potential(&compact(&d), alpha, &x, &spec)
                .unwrap()
                .value;
            let b = riesz_potential(&compact(&f), alpha, &scale(&x, 2.0), &spec)
                .unwrap()
                .value;
            let want = 2f64.powf(-alpha) * b;
            assert!(
                (a - want).abs() <= 1e-6 * want.abs().max(1e-3),
                "alpha {alpha} at {x:?}: {a} vs {want}"
            );
        }
    }
}

#[test]
fn semigroup() {
    // I_0.3(I_0.7 f) = I_1 f
    let fast = QuadratureSpec::preset(Preset::Fast, 2);
    let spec = QuadratureSpec::default_for(2);
    let b = catalog_field(2, "bump").unwrap();
    let inner = compact(&b);
    let l1 = w11_norms(&b, &spec).unwrap().l1.value;
    let constant = riesz_constant(2, 0.7).unwrap() * 2f64.powf(1.3) * l1;
    let ball = b.support_ball().unwrap();
    let outer = DecayingFunction::new(
        2,
        |y| riesz_potential(&inner, 0.7, y, &fast).unwrap().value,
        1.3,
        constant,
        2.0,
        ball,
    )
    .unwrap();
    let x = [0.3, 0.0, 0.0];
    let composed = riesz_potential(&outer, 0.3, &x, &fast).unwrap().value;
    let direct = riesz_potential(&inner, 1.0, &x, &spec).unwrap().value;
    assert!(
        (composed - direct).abs() < 1e-3 * direct,
        "{composed} vs {direct}"
    );
}

#[test]
fn gradient_potential_matches_grid_oracle() {
    let spec = QuadratureSpec::default_for(2);
    for name in ["bump", "modulated_bump"] {
        let f = catalog_field(2, name).unwrap();
        for x in [
            [0.0, 0.0, 0.0],
            [0.3, 0.2, 0.0],
            [1.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
        ] {
            let v = riesz_of_gradient(&f, &x, &spec).unwrap();
            let g = riesz_gradient_grid_oracle(&f, &x, 2048).unwrap();
            assert!(
                (v.value - g).abs() < 1e-4,
                "{name} at {x:?}: {} vs {g}",
                v.value
            );
        }
    }
}

#[test]
fn gradient_potential_far_bound() {
    for dim in [2, 3] {
        let spec = QuadratureSpec::default_for(dim);
        let f = catalog_field(dim, "modulated_poly_bump").unwrap();
        let grad_l1 = w11_norms(&f, &spec).unwrap().grad_l1.value;
        let Ball { center, radius } = f.support_ball().unwrap();
        let gamma = riesz_constant(dim, 1.0).unwrap();
        for t in [3.0, 6.0, 20.0] {
            let mut x: Point = [0.0; 3];
            x[0] = t;
            let dist = distance(&x, &center) - radius;
            let v = riesz_of_gradient(&f, &x, &spec).unwrap();
            let bound = gamma * grad_l1 * dist.powf(1.0 - dim as f64) * (1.0 + 1e-6);
            assert!(
                v.value <= bound,
                "dim {dim}, |x| = {t}: {} > {bound}",
                v.value
            );
        }
    }
}
