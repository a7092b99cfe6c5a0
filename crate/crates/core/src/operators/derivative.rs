use crate::error::Result;
use crate::fields::TestField;
use crate::geometry::Point;
use crate::quadrature::{OperatorValue, QuadratureSpec};

use super::engine::{check_alpha, check_p, check_point, Engine};

/// `(J, error)` -> `(J^{1/p}, error of the root)`.
pub(crate) fn root_value(j: f64, err: f64, p: f64) -> OperatorValue {
    if p == 1.0 {
        return OperatorValue::new(j, err);
    }
    let v = j.max(0.0).powf(1.0 / p);
    OperatorValue::new(v, (j.max(0.0) + err).powf(1.0 / p) - v)
}

fn evaluate(
    f: &TestField,
    alpha: f64,
    p: f64,
    x: &Point,
    radius: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    check_alpha(alpha)?;
    check_p(p)?;
    check_point(f, x)?;
    spec.validate()?;
    if let Some(r) = radius {
        if !(r > 0.0) {
            return Err(crate::Error::Domain(format!(
                "truncation radius must be positive, got {r}"
            )));
        }
    }
    if f.is_zero() {
        return Ok(OperatorValue::zero());
    }
    let fine = Engine::new(f, alpha, p, spec)?.eval(x, radius);
    let coarse = Engine::new(f, alpha, p, &spec.halved())?.eval(x, radius);
    let err = (fine.integral - coarse.integral).abs() + fine.core_bound;
    Ok(root_value(fine.integral, err, p))
}

/// `D^alpha f(x) = int |f(x) - f(y)| / |x - y|^{n + alpha} dy`.
pub fn frac_derivative(
    f: &TestField,
    alpha: f64,
    x: &Point,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    evaluate(f, alpha, 1.0, x, None, spec)
}

/// `D^alpha_p f(x) = (int |f(x) - f(y)|^p / |x - y|^{n + alpha p} dy)^{1/p}`.
pub fn frac_derivative_p(
    f: &TestField,
    alpha: f64,
    p: f64,
    x: &Point,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    evaluate(f, alpha, p, x, None, spec)
}

/// `D^alpha f(x)` restricted to `y in B(x, radius)`.
pub fn frac_derivative_truncated(
    f: &TestField,
    alpha: f64,
    x: &Point,
    radius: f64,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    evaluate(f, alpha, 1.0, x, Some(radius), spec)
}
