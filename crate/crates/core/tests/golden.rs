use std::path::PathBuf;

use nonlocal_bbm::operators::frac_derivative;
use nonlocal_bbm::quadrature::oracles::radial_reduction_oracle;
use nonlocal_bbm::{QuadratureSpec, TestField};

/// Reference value from a 30-digit independent evaluation.
const HIGH_PRECISION: f64 = 20.8895511511425213;

fn golden_rows() -> Vec<(String, f64, f64)> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../golden/radial_oracle.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("case_id,value,error_estimate"));
    lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (
                cols[0].to_string(),
                cols[1].parse().unwrap(),
                cols[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn radial_oracle_reproduces_the_frozen_value() {
    let rows = golden_rows();
    assert_eq!(rows.len(), 1);
    let (id, value, err) = &rows[0];
    assert_eq!(id, "radial_oracle/poly_bump_k3/n2/alpha0.5");
    assert!((value - HIGH_PRECISION).abs() <= 1e-10 * HIGH_PRECISION);
    let f = TestField::poly_bump(2, 3, [0.0; 3], 1.0).unwrap();
    for tol in [1e-10, 1e-13] {
        let v = radial_reduction_oracle(&f, 0.5, tol).unwrap();
        assert!(
            (v - value).abs() <= 1e-9 * value + err,
            "tol {tol}: {v} vs {value}"
        );
    }
}

#[test]
fn engine_agrees_with_the_frozen_value() {
    let (_, value, _) = golden_rows()[0].clone();
    let f = TestField::poly_bump(2, 3, [0.0; 3], 1.0).unwrap();
    let v = frac_derivative(&f, 0.5, &[0.0; 3], &QuadratureSpec::default_for(2)).unwrap();
    assert!(
        (v.value - value).abs() <= v.error_estimate + 1e-10 * value,
        "{v:?} vs {value}"
    );
}
