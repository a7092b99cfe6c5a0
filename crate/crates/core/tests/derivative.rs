use nonlocal_bbm::fields::{catalog, catalog_field, w11_norms, TestField};
use nonlocal_bbm::geometry::{dot, norm, scale, Frame, Point};
use nonlocal_bbm::operators::{frac_derivative, frac_derivative_p, frac_derivative_truncated};
use nonlocal_bbm::quadrature::oracles::{brute_force_grid_oracle, radial_reduction_oracle};
use nonlocal_bbm::quadrature::{inner_shells, CutSphereRule, Preset};
use nonlocal_bbm::reduce::pairwise_sum;
use nonlocal_bbm::special::{bbm_constant, sphere_area};
use nonlocal_bbm::QuadratureSpec;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default_for(2)
}

#[test]
fn zero_field_is_zero() {
    for dim in 1..=3 {
        let z = TestField::zero(dim).unwrap();
        for alpha in [0.1, 0.5, 0.99] {
            let v = frac_derivative(&z, alpha, &[0.0; 3], &spec()).unwrap();
            assert_eq!((v.value, v.error_estimate), (0.0, 0.0));
            let t = frac_derivative_truncated(&z, alpha, &[0.0; 3], 2.0, &spec()).unwrap();
            assert_eq!(t.value, 0.0);
        }
    }
}

#[test]
fn rejects_invalid_input() {
    let f = catalog_field(2, "bump").unwrap();
    assert!(frac_derivative(&f, 1.0, &[0.0; 3], &spec()).is_err());
    assert!(frac_derivative(&f, 0.0, &[0.0; 3], &spec()).is_err());
    assert!(frac_derivative(&f, 0.5, &[f64::NAN, 0.0, 0.0], &spec()).is_err());
    assert!(frac_derivative_p(&f, 0.5, 0.5, &[0.0; 3], &spec()).is_err());
    assert!(frac_derivative_truncated(&f, 0.5, &[0.0; 3], 0.0, &spec()).is_err());
}

#[test]
fn radial_fields_match_the_radial_oracle() {
    for dim in 1..=3 {
        let s = QuadratureSpec::default_for(dim);
        for f in [
            TestField::bump(dim, [0.0; 3], 1.0).unwrap(),
            TestField::poly_bump(dim, 3, [0.0; 3], 1.0).unwrap(),
            TestField::poly_bump(dim, 5, [0.0; 3], 1.5).unwrap(),
        ] {
            for alpha in [0.3, 0.5, 0.9] {
                let v = frac_derivative(&f, alpha, &[0.0; 3], &s).unwrap();
                let oracle = radial_reduction_oracle(&f, alpha, 1e-12).unwrap();
                let tol = v.error_estimate + 1e-10 * oracle;
                assert!(
                    (v.value - oracle).abs() <= tol,
                    "dim {dim}, {}, alpha {alpha}: {v:?} vs {oracle}",
                    f.label()
                );
            }
        }
    }
}

#[test]
fn catalog_fields_match_the_grid_oracle() {
    let points: [Point; 4] = [
        [0.0, 0.0, 0.0],
        [0.3, -0.2, 0.0],
        [1.0, 0.0, 0.0],
        [2.0, 1.0, 0.0],
    ];
    for dim in [1, 2] {
        for entry in catalog(dim).unwrap() {
            let f = entry.spec.build(dim).unwrap();
            for x in points.iter().take(if dim == 1 { 4 } else { 2 }) {
                let mut x = *x;
                x[dim..].iter_mut().for_each(|c| *c = 0.0);
                let v = frac_derivative(&f, 0.7, &x, &QuadratureSpec::default_for(dim)).unwrap();
                let g = brute_force_grid_oracle(&f, 0.7, &x, 4096).unwrap();
                let coarse = brute_force_grid_oracle(&f, 0.7, &x, 2048).unwrap();
                let tol = (v.error_estimate + (g - coarse).abs()).max(1e-4);
                assert!(
                    (v.value - g).abs() <= tol,
                    "{} dim {dim} at {x:?}: {} vs {g}",
                    entry.name,
                    v.value
                );
            }
        }
    }
}

#[test]
fn grid_oracle_converges_towards_the_engine() {
    let f = catalog_field(2, "modulated_bump").unwrap();
    let x = [0.3, -0.2, 0.0];
    let v = frac_derivative(&f, 0.7, &x, &spec()).unwrap().value;
    let gaps: Vec<f64> = [256, 1024]
        .iter()
        .map(|&m| (brute_force_grid_oracle(&f, 0.7, &x, m).unwrap() - v).abs())
        .collect();
    assert!(gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn dilation_covariance() {
    // D^alpha(f(2.))(x) = 2^alpha (D^alpha f)(2x)
    let f = catalog_field(2, "modulated_poly_bump").unwrap();
    let g = f.dilate(2.0).unwrap();
    for x in [[0.1, 0.2, 0.0], [0.6, -0.3, 0.0], [1.5, 0.5, 0.0]] {
        for p in [1.0, 2.0] {
            let a = frac_derivative_p(&g, 0.7, p, &x, &spec()).unwrap().value;
            let b = frac_derivative_p(&f, 0.7, p, &scale(&x, 2.0), &spec())
                .unwrap()
                .value;
            let want = 2f64.powf(0.7) * b;
            assert!(
                (a - want).abs() < 1e-6 * want,
                "p {p} at {x:?}: {a} vs {want}"
            );
        }
    }
}

#[test]
fn p_equal_one_is_the_plain_operator() {
    let f = catalog_field(3, "modulated_bump").unwrap();
    let s = QuadratureSpec::default_for(3);
    let x = [0.2, 0.1, -0.3];
    let a = frac_derivative(&f, 0.6, &x, &s).unwrap().value;
    let b = frac_derivative_p(&f, 0.6, 1.0, &x, &s).unwrap().value;
    assert!((a - b).abs() <= 1e-10 * a.abs());
}

#[test]
fn truncation_is_monotone_and_converges() {
    let f = catalog_field(2, "shifted_bump").unwrap();
    let x = [0.4, 0.1, 0.0];
    let mut last = 0.0;
    for r in [0.1, 0.3, 0.7, 1.5, 3.0] {
        let v = frac_derivative_truncated(&f, 0.6, &x, r, &spec())
            .unwrap()
            .value;
        assert!(v >= last, "r = {r}: {v} < {last}");
        last = v;
    }
    let full = frac_derivative(&f, 0.6, &x, &spec()).unwrap();
    let r = 10.0 * (norm(&x) + f.support_radius());
    let t = frac_derivative_truncated(&f, 0.6, &x, r, &spec()).unwrap();
    let tail = f.eval(&x).abs() * sphere_area(2) * r.powf(-0.6) / 0.6;
    let diff = full.value - t.value;
    assert!(
        diff >= 0.0 && diff <= tail + full.error_estimate + t.error_estimate,
        "{diff} vs {tail}"
    );
}

#[test]
fn far_field_bound() {
    for dim in [1, 2, 3] {
        let s = QuadratureSpec::default_for(dim);
        for entry in catalog(dim).unwrap() {
            let f = entry.spec.build(dim).unwrap();
            let l1 = w11_norms(&f, &s).unwrap().l1.value;
            let r0 = f.support_radius();
            for alpha in [0.5, 0.9] {
                for k in [0.0, 1.0, 4.0] {
                    let mut x = [0.0; 3];
                    x[dim - 1] = 2.0 * r0 + 1.0 + k;
                    let v = frac_derivative(&f, alpha, &x, &s).unwrap();
                    let bound =
                        2f64.powf(dim as f64 + alpha) * l1 * norm(&x).powf(-(dim as f64 + alpha));
                    assert!(
                        v.value <= bound + v.error_estimate,
                        "{} dim {dim}: {} > {bound}",
                        entry.name,
                        v.value
                    );
                }
            }
        }
    }
}

#[test]
fn linear_identity_on_shells() {
    // (1 - alpha) int_{|h| < 1} |g . h| / |h|^{n + alpha} dh = K_n for unit g.
    for dim in [2, 3] {
        let cut = CutSphereRule::new(dim, 64).unwrap();
        for g in [[1.0, 0.0, 0.0], [0.6, 0.0, 0.8], [0.0, 0.8, 0.6]] {
            if dim == 2 && g[2] != 0.0 {
                continue;
            }
            let angular = cut.integrate_abs_pow(&Frame::along(dim, &g), 1.0, |w| dot(&g, w));
            for alpha in [0.5, 0.9, 0.99] {
                let shells = inner_shells(1.0, 40, 16).unwrap();
                let mut parts = Vec::new();
                for s in &shells {
                    for (r, w) in s.nodes.iter().zip(&s.weights) {
                        parts.push(w * r.powf(-alpha));
                    }
                }
                let radial = pairwise_sum(&parts) + shells[0].lo.powf(1.0 - alpha) / (1.0 - alpha);
                let v = (1.0 - alpha) * radial * angular;
                assert!(
                    (v - bbm_constant(dim).unwrap()).abs() < 1e-8,
                    "dim {dim}, alpha {alpha}: {v}"
                );
            }
        }
    }
}

#[test]
fn zero_gradient_point_stays_bounded() {
    let f = catalog_field(2, "bump").unwrap();
    let c = sphere_area(2) * (f.grad_sup_norm() + 2.0 * f.sup_norm());
    for alpha in [0.5, 0.9, 0.99, 0.999] {
        let v = frac_derivative(&f, alpha, &[0.0; 3], &spec()).unwrap();
        assert!(
            (1.0 - alpha) * v.value <= c * (1.0 - alpha) + v.error_estimate,
            "alpha {alpha}: {v:?}"
        );
    }
}

#[test]
fn fast_preset_stays_close_to_default() {
    let f = catalog_field(2, "modulated_bump").unwrap();
    let fast = QuadratureSpec::preset(Preset::Fast, 2);
    let x = [0.3, 0.2, 0.0];
    let a = frac_derivative(&f, 0.9, &x, &fast).unwrap();
    let b = frac_derivative(&f, 0.9, &x, &spec()).unwrap();
    assert!((a.value - b.value).abs() <= a.error_estimate + b.error_estimate);
}
