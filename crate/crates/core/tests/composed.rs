use nonlocal_bbm::fields::catalog_field;
use nonlocal_bbm::geometry::{add, scale};
use nonlocal_bbm::operators::{bbm_operator, bbm_operator_p};
use nonlocal_bbm::quadrature::Preset;
use nonlocal_bbm::{InnerCache, QuadratureSpec, TestField};

fn fast() -> QuadratureSpec {
    QuadratureSpec::preset(Preset::Fast, 2)
}

#[test]
fn zero_field_and_domain() {
    let cache = InnerCache::new();
    let z = TestField::zero(2).unwrap();
    let v = bbm_operator(&z, 0.9, &[0.5, 0.0, 0.0], &fast(), &cache).unwrap();
    assert_eq!(v.value.value, 0.0);
    let f = catalog_field(2, "bump").unwrap();
    assert!(bbm_operator(&f, 0.4, &[0.0; 3], &fast(), &cache).is_err());
    assert!(bbm_operator(&f, 1.0, &[0.0; 3], &fast(), &cache).is_err());
    let line = catalog_field(1, "bump").unwrap();
    assert!(bbm_operator(&line, 0.9, &[0.0; 3], &fast(), &cache).is_err());
    assert!(bbm_operator_p(&f, 0.9, 0.5, &[0.0; 3], &fast(), &cache).is_err());
}

#[test]
fn translation_covariance() {
    let cache = InnerCache::new();
    let f = catalog_field(2, "modulated_bump").unwrap();
    let v = [0.4, -0.7, 0.0];
    let g = f.translate(v).unwrap();
    let x = [0.3, 0.2, 0.0];
    let a = bbm_operator(&f, 0.9, &x, &fast(), &cache).unwrap();
    let b = bbm_operator(&g, 0.9, &add(&x, &v), &fast(), &cache).unwrap();
    assert!(
        (a.value.value - b.value.value).abs() <= 1e-6 * a.value.value,
        "{a:?} vs {b:?}"
    );
}

#[test]
fn dilation_invariance() {
    let cache = InnerCache::new();
    let f = catalog_field(2, "modulated_bump").unwrap();
    let d = f.dilate(2.0).unwrap();
    let x = [0.2, 0.1, 0.0];
    let a = bbm_operator(&d, 0.9, &x, &fast(), &cache).unwrap();
    let b = bbm_operator(&f, 0.9, &scale(&x, 2.0), &fast(), &cache).unwrap();
    assert!(
        (a.value.value - b.value.value).abs() <= 1e-5 * b.value.value,
        "{a:?} vs {b:?}"
    );
}

#[test]
fn cache_is_transparent() {
    let f = catalog_field(2, "shifted_bump").unwrap();
    let x = [1.5, 0.0, 0.0];
    let cold = bbm_operator(&f, 0.7, &x, &fast(), &InnerCache::new()).unwrap();
    let cache = InnerCache::new();
    let first = bbm_operator(&f, 0.7, &x, &fast(), &cache).unwrap();
    assert!(!cache.is_empty());
    let again = bbm_operator(&f, 0.7, &x, &fast(), &cache).unwrap();
    assert_eq!(cold, first);
    assert_eq!(first, again);
    assert!(first.value.value > 0.0 && first.failed_level(1.0).is_none());
}
