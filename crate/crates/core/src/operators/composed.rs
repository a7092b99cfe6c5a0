use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::fields::TestField;
use crate::geometry::Point;
use crate::quadrature::{OperatorValue, QuadratureSpec, TailPolicy};
use crate::special::riesz_constant;

use super::engine::{check_p, check_point, Engine};
use super::riesz::{riesz_sum, DecayingFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    field: u64,
    alpha: u64,
    p: u64,
    resolution: [usize; 3],
    x: [u64; 3],
}

/// Memo of inner `J_p` values keyed by field, order, resolution and node.
///
/// Entries are pure functions of their key, so concurrent insertion order
/// never changes what is read back.
#[derive(Debug, Default)]
pub struct InnerCache {
    map: DashMap<CacheKey, f64>,
}

impl InnerCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn clear(&self) {
        self.map.clear();
    }

    fn get_or_compute(
        &self,
        engine: &Engine<'_>,
        alpha: f64,
        p: f64,
        res: &QuadratureSpec,
        x: &Point,
    ) -> f64 {
        let key = CacheKey {
            field: engine.field().fingerprint(),
            alpha: alpha.to_bits(),
            p: p.to_bits(),
            resolution: [res.inner_shells, res.gauss_order, res.sphere_order],
            x: [x[0].to_bits(), x[1].to_bits(), x[2].to_bits()],
        };
        if let Some(v) = self.map.get(&key) {
            return *v;
        }
        let v = engine.eval(x, None).integral;
        self.map.insert(key, v);
        v
    }
}

/// Composed operator value with the error split by level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposedValue {
    pub value: OperatorValue,
    /// Change when the inner `D^alpha` resolution is halved.
    pub inner_error: f64,
    /// Change when the outer Riesz resolution is halved, plus the tail envelope.
    pub outer_error: f64,
}

impl ComposedValue {
    fn zero() -> Self {
        ComposedValue {
            value: OperatorValue::zero(),
            inner_error: 0.0,
            outer_error: 0.0,
        }
    }

    /// The level whose error estimate exceeds `target_rel_error |value|`, if any.
    pub fn failed_level(&self, target_rel_error: f64) -> Option<&'static str> {
        let budget = target_rel_error * self.value.value.abs();
        if !self.value.value.is_finite() || self.inner_error > budget {
            Some("inner")
        } else if self.outer_error > budget {
            Some("outer")
        } else {
            None
        }
    }

    pub fn check(self, target_rel_error: f64) -> Result<Self> {
        match self.failed_level(target_rel_error) {
            None => Ok(self),
            Some(level) => Err(Error::NonConvergence {
                level: level.into(),
                value: self.value.value,
                estimate: if level == "inner" {
                    self.inner_error
                } else {
                    self.outer_error
                },
            }),
        }
    }
}

fn check_composed(f: &TestField, alpha: f64) -> Result<()> {
    if f.dim() < 2 {
        return Err(Error::Dimension {
            dim: f.dim(),
            reason: "the composed operator needs n >= 2".into(),
        });
    }
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "alpha must lie in [1/2, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn inner_function<'a>(
    engine: &'a Engine<'a>,
    cache: &'a InnerCache,
    alpha: f64,
    p: f64,
    res: QuadratureSpec,
    norm_p: f64,
) -> Result<DecayingFunction<'a>> {
    let f = engine.field();
    let dim = f.dim();
    let ball = f.support_ball().expect("nonzero field");
    let exponent = (dim as f64 + alpha * p) / p;
    DecayingFunction::new(
        dim,
        move |y| {
            let j = cache.get_or_compute(engine, alpha, p, &res, y);
            if p == 1.0 {
                j
            } else {
                j.max(0.0).powf(1.0 / p)
            }
        },
        exponent,
        2f64.powf(exponent) * norm_p,
        2.0 * f.support_radius() + 1.0,
        ball,
    )
}

/// `(1 - alpha)^{1/p} I_alpha(D^alpha_p f)(x)`.
pub fn bbm_operator_p(
    f: &TestField,
    alpha: f64,
    p: f64,
    x: &Point,
    spec: &QuadratureSpec,
    cache: &InnerCache,
) -> Result<ComposedValue> {
    check_composed(f, alpha)?;
    check_p(p)?;
    check_point(f, x)?;
    spec.validate()?;
    if f.is_zero() {
        return Ok(ComposedValue::zero());
    }
    let half = spec.halved();
    let fine_engine = Engine::new(f, alpha, p, spec)?;
    let coarse_engine = Engine::new(f, alpha, p, &half)?;
    let norm_p = fine_engine.lp_norm_pow().powf(1.0 / p);
    let g_fine = inner_function(&fine_engine, cache, alpha, p, *spec, norm_p)?;
    let g_coarse = inner_function(&coarse_engine, cache, alpha, p, half, norm_p)?;

    let ff = riesz_sum(&g_fine, alpha, x, spec)?;
    let fc = riesz_sum(&g_coarse, alpha, x, spec)?;
    let cf = riesz_sum(&g_fine, alpha, x, &half)?;

    let scale = riesz_constant(f.dim(), alpha)? * (1.0 - alpha).powf(1.0 / p);
    let tail_value = match spec.tail_policy {
        TailPolicy::Analytic => ff.tail,
        TailPolicy::Truncate => 0.0,
    };
    let inner_error = scale * (ff.value - fc.value).abs();
    let outer_error = scale * ((ff.value - cf.value).abs() + ff.tail);
    Ok(ComposedValue {
        value: OperatorValue::new(scale * (ff.value + tail_value), inner_error + outer_error),
        inner_error,
        outer_error,
    })
}

/// `(1 - alpha) I_alpha(D^alpha f)(x)`.
pub fn bbm_operator(
    f: &TestField,
    alpha: f64,
    x: &Point,
    spec: &QuadratureSpec,
    cache: &InnerCache,
) -> Result<ComposedValue> {
    bbm_operator_p(f, alpha, 1.0, x, spec, cache)
}
