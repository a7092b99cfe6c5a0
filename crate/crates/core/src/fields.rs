//! Compactly supported test functions with exact values and gradients.
//!
//! A [`TestField`] is an immutable expression tree (bumps, modulations and
//! the combinators translate, dilate, product, sum) together with a support
//! ball and sampled upper bounds for `||f||_inf`, `||grad f||_inf` and
//! `||D^2 f||_inf`.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::geometry::{
    add, axpy, distance, dot, norm, point_from_slice, scale, sub, Frame, Point, ORIGIN,
};
use crate::quadrature::{CutSphereRule, OperatorValue, QuadratureSpec};
use crate::reduce::{pairwise_sum, par_map};

/// Safety factor applied to sampled norm bounds.
const NORM_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Smoothness {
    C1,
    C2,
    Cinf,
}

/// Closed ball `B(center, radius)` containing the support of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, x: &Point) -> bool {
        distance(x, &self.center) < self.radius
    }
}

#[derive(Debug)]
enum Expr {
    Zero,
    Bump { center: Point, scale: f64 },
    PolyBump { center: Point, scale: f64, k: i32 },
    Modulated { wave: Point, base: Arc<Expr> },
    Translate { shift: Point, inner: Arc<Expr> },
    Dilate { factor: f64, inner: Arc<Expr> },
    Product(Arc<Expr>, Arc<Expr>),
    Sum(Arc<Expr>, Arc<Expr>),
}

impl Expr {
    fn eval(&self, x: &Point) -> f64 {
        match self {
            Expr::Zero => 0.0,
            Expr::Bump { center, scale } => {
                let d = sub(x, center);
                let t = 1.0 - dot(&d, &d) / (scale * scale);
                if t <= 0.0 {
                    0.0
                } else {
                    (-1.0 / t).exp()
                }
            }
            Expr::PolyBump { center, scale, k } => {
                let d = sub(x, center);
                let t = 1.0 - dot(&d, &d) / (scale * scale);
                if t <= 0.0 {
                    0.0
                } else {
                    t.powi(*k)
                }
            }
            Expr::Modulated { wave, base } => {
                let b = base.eval(x);
                if b == 0.0 {
                    0.0
                } else {
                    dot(wave, x).sin() * b
                }
            }
            Expr::Translate { shift, inner } => inner.eval(&sub(x, shift)),
            Expr::Dilate { factor, inner } => inner.eval(&scale(x, *factor)),
            Expr::Product(a, b) => {
                let va = a.eval(x);
                if va == 0.0 {
                    0.0
                } else {
                    va * b.eval(x)
                }
            }
            Expr::Sum(a, b) => a.eval(x) + b.eval(x),
        }
    }

    fn grad(&self, x: &Point) -> Point {
        match self {
            Expr::Zero => ORIGIN,
            Expr::Bump { center, scale: s } => {
                let d = sub(x, center);
                let t = 1.0 - dot(&d, &d) / (s * s);
                if t <= 0.0 {
                    ORIGIN
                } else {
                    let f = (-1.0 / t).exp();
                    scale(&d, -2.0 * f / (t * t * s * s))
                }
            }
            Expr::PolyBump {
                center,
                scale: s,
                k,
            } => {
                let d = sub(x, center);
                let t = 1.0 - dot(&d, &d) / (s * s);
                if t <= 0.0 {
                    ORIGIN
                } else {
                    scale(&d, -2.0 * *k as f64 * t.powi(k - 1) / (s * s))
                }
            }
            Expr::Modulated { wave, base } => {
                let b = base.eval(x);
                let gb = base.grad(x);
                let phase = dot(wave, x);
                axpy(&scale(&gb, phase.sin()), b * phase.cos(), wave)
            }
            Expr::Translate { shift, inner } => inner.grad(&sub(x, shift)),
            Expr::Dilate { factor, inner } => scale(&inner.grad(&scale(x, *factor)), *factor),
            Expr::Product(a, b) => {
                let (va, vb) = (a.eval(x), b.eval(x));
                axpy(&scale(&a.grad(x), vb), va, &b.grad(x))
            }
            Expr::Sum(a, b) => add(&a.grad(x), &b.grad(x)),
        }
    }
}

/// A compactly supported test function on `R^n`, `n in {1, 2, 3}`.
#[derive(Debug, Clone)]
pub struct TestField {
    dim: usize,
    expr: Arc<Expr>,
    support: Option<Ball>,
    sup_norm: f64,
    grad_sup_norm: f64,
    hess_sup_norm: f64,
    radial: bool,
    smoothness: Smoothness,
    label: String,
    fingerprint: u64,
}

impl PartialEq for TestField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.label == other.label
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Dimension {
            dim,
            reason: "fields are defined for n in {1, 2, 3}".into(),
        });
    }
    Ok(())
}

fn check_point(dim: usize, p: &Point) -> Result<()> {
    if p.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("coordinates must be finite".into()));
    }
    if p[dim..].iter().any(|&c| c != 0.0) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: crate::geometry::MAX_DIM,
        });
    }
    Ok(())
}

fn fmt_point(dim: usize, p: &Point) -> String {
    let mut s = String::from("[");
    for (i, c) in p[..dim].iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{c:?}");
    }
    s.push(']');
    s
}

impl TestField {
    fn assemble(
        dim: usize,
        expr: Expr,
        support: Option<Ball>,
        radial: bool,
        smoothness: Smoothness,
        label: String,
    ) -> Self {
        let expr = Arc::new(expr);
        let (sup_norm, grad_sup_norm, hess_sup_norm) = match &support {
            Some(ball) => sample_norms(dim, &expr, ball),
            None => (0.0, 0.0, 0.0),
        };
        Self::with_norms(
            dim,
            expr,
            support,
            [sup_norm, grad_sup_norm, hess_sup_norm],
            radial,
            smoothness,
            label,
        )
    }

    fn with_norms(
        dim: usize,
        expr: Arc<Expr>,
        support: Option<Ball>,
        norms: [f64; 3],
        radial: bool,
        smoothness: Smoothness,
        label: String,
    ) -> Self {
        let mut h = DefaultHasher::new();
        dim.hash(&mut h);
        label.hash(&mut h);
        TestField {
            dim,
            expr,
            support,
            sup_norm: norms[0],
            grad_sup_norm: norms[1],
            hess_sup_norm: norms[2],
            radial,
            smoothness,
            label,
            fingerprint: h.finish(),
        }
    }

    /// The zero function.
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::with_norms(
            dim,
            Arc::new(Expr::Zero),
            None,
            [0.0; 3],
            true,
            Smoothness::Cinf,
            "zero".into(),
        ))
    }

    /// `exp(-1 / (1 - |x - c|^2 / s^2))` on `B(c, s)`, zero outside.
    pub fn bump(dim: usize, center: Point, scale: f64) -> Result<Self> {
        check_dim(dim)?;
        check_point(dim, &center)?;
        check_scale(scale)?;
        Ok(Self::assemble(
            dim,
            Expr::Bump { center, scale },
            Some(Ball {
                center,
                radius: scale,
            }),
            center == ORIGIN,
            Smoothness::Cinf,
            format!("bump(c={},s={scale:?})", fmt_point(dim, &center)),
        ))
    }

    /// `(1 - |x - c|^2 / s^2)^k` on `B(c, s)`, zero outside; `C^2` for `k >= 3`.
    pub fn poly_bump(dim: usize, k: u32, center: Point, scale: f64) -> Result<Self> {
        check_dim(dim)?;
        check_point(dim, &center)?;
        check_scale(scale)?;
        if k < 3 {
            return Err(Error::Domain(format!("poly_bump needs k >= 3, got {k}")));
        }
        if k > 64 {
            return Err(Error::Domain(format!("poly_bump power too large: {k}")));
        }
        Ok(Self::assemble(
            dim,
            Expr::PolyBump {
                center,
                scale,
                k: k as i32,
            },
            Some(Ball {
                center,
                radius: scale,
            }),
            center == ORIGIN,
            Smoothness::C2,
            format!("poly_bump(k={k},c={},s={scale:?})", fmt_point(dim, &center)),
        ))
    }

    /// `sin(k . x) * base(x)`.
    pub fn modulated_bump(wave: Point, base: &TestField) -> Result<Self> {
        check_point(base.dim, &wave)?;
        if base.is_zero() {
            return Ok(base.clone());
        }
        Ok(Self::assemble(
            base.dim,
            Expr::Modulated {
                wave,
                base: base.expr.clone(),
            },
            base.support,
            false,
            base.smoothness,
            format!("modulated(k={},{})", fmt_point(base.dim, &wave), base.label),
        ))
    }

    /// `x -> f(x - v)`.
    pub fn translate(&self, v: Point) -> Result<Self> {
        check_point(self.dim, &v)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let support = self.support.map(|b| Ball {
            center: add(&b.center, &v),
            radius: b.radius,
        });
        Ok(Self::with_norms(
            self.dim,
            Arc::new(Expr::Translate {
                shift: v,
                inner: self.expr.clone(),
            }),
            support,
            [self.sup_norm, self.grad_sup_norm, self.hess_sup_norm],
            self.radial && v == ORIGIN,
            self.smoothness,
            format!("translate(v={},{})", fmt_point(self.dim, &v), self.label),
        ))
    }

    /// `x -> f(lambda x)`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        check_scale(lambda)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let support = self.support.map(|b| Ball {
            center: scale(&b.center, 1.0 / lambda),
            radius: b.radius / lambda,
        });
        Ok(Self::with_norms(
            self.dim,
            Arc::new(Expr::Dilate {
                factor: lambda,
                inner: self.expr.clone(),
            }),
            support,
            [
                self.sup_norm,
                self.grad_sup_norm * lambda,
                self.hess_sup_norm * lambda * lambda,
            ],
            self.radial,
            self.smoothness,
            format!("dilate(l={lambda:?},{})", self.label),
        ))
    }

    /// Pointwise product; the zero field when the supports are disjoint.
    pub fn product(&self, other: &TestField) -> Result<Self> {
        self.check_same_dim(other)?;
        let (a, b) = match (self.support, other.support) {
            (Some(a), Some(b)) => (a, b),
            _ => return TestField::zero(self.dim),
        };
        if distance(&a.center, &b.center) >= a.radius + b.radius {
            return TestField::zero(self.dim);
        }
        let support = if a.radius <= b.radius { a } else { b };
        Ok(Self::assemble(
            self.dim,
            Expr::Product(self.expr.clone(), other.expr.clone()),
            Some(support),
            self.radial && other.radial,
            self.smoothness.min(other.smoothness),
            format!("product({},{})", self.label, other.label),
        ))
    }

    /// Pointwise sum, supported in the smallest ball enclosing both supports.
    pub fn sum(&self, other: &TestField) -> Result<Self> {
        self.check_same_dim(other)?;
        let (a, b) = match (self.support, other.support) {
            (Some(a), Some(b)) => (a, b),
            (None, _) => return Ok(other.clone()),
            (_, None) => return Ok(self.clone()),
        };
        Ok(Self::assemble(
            self.dim,
            Expr::Sum(self.expr.clone(), other.expr.clone()),
            Some(enclosing_ball(&a, &b)),
            self.radial && other.radial,
            self.smoothness.min(other.smoothness),
            format!("sum({},{})", self.label, other.label),
        ))
    }

    fn check_same_dim(&self, other: &TestField) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        self.expr.eval(x)
    }

    #[inline]
    pub fn grad(&self, x: &Point) -> Point {
        self.expr.grad(x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_none()
    }

    /// A ball containing the support, `None` for the zero field.
    pub fn support_ball(&self) -> Option<Ball> {
        self.support
    }

    /// `R_0` with `f(x) = 0` for `|x| >= R_0` (zero for the zero field).
    pub fn support_radius(&self) -> f64 {
        self.support.map_or(0.0, |b| norm(&b.center) + b.radius)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn grad_sup_norm(&self) -> f64 {
        self.grad_sup_norm
    }

    /// Upper bound on the operator norm of the Hessian.
    pub fn hess_sup_norm(&self) -> f64 {
        self.hess_sup_norm
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Stable hash of the expression, used as a cache key.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

fn check_scale(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "scale must be positive and finite, got {s}"
        )));
    }
    Ok(())
}

fn enclosing_ball(a: &Ball, b: &Ball) -> Ball {
    let d = distance(&a.center, &b.center);
    if d + b.radius <= a.radius {
        return *a;
    }
    if d + a.radius <= b.radius {
        return *b;
    }
    let radius = 0.5 * (d + a.radius + b.radius);
    let dir = sub(&b.center, &a.center);
    Ball {
        center: axpy(&a.center, (radius - a.radius) / d, &dir),
        radius: radius * (1.0 + 1e-12),
    }
}

fn grid_count(dim: usize) -> usize {
    match dim {
        1 => 4001,
        2 => 241,
        _ => 61,
    }
}

/// Dense-grid maxima of `|f|`, `|grad f|` and a Frobenius bound on the
/// symmetrized finite-difference Hessian, times the safety factor.
fn sample_norms(dim: usize, expr: &Expr, ball: &Ball) -> (f64, f64, f64) {
    let m = grid_count(dim);
    let h = 2.0 * ball.radius / (m - 1) as f64;
    let eta = 1e-5 * ball.radius;
    let coord = |i: usize| -ball.radius + h * i as f64;
    let slabs: Vec<usize> = (0..m).collect();
    let inner = if dim >= 2 { m } else { 1 };
    let third = if dim >= 3 { m } else { 1 };
    let maxima = par_map(&slabs, |&i| {
        let mut acc = [0.0f64; 3];
        for j in 0..inner {
            for k in 0..third {
                let mut x = ball.center;
                x[0] += coord(i);
                if dim >= 2 {
                    x[1] += coord(j);
                }
                if dim >= 3 {
                    x[2] += coord(k);
                }
                if !ball.contains(&x) {
                    continue;
                }
                acc[0] = acc[0].max(expr.eval(&x).abs());
                acc[1] = acc[1].max(norm(&expr.grad(&x)));
                let mut hess = [[0.0; 3]; 3];
                for (c, col) in hess.iter_mut().enumerate().take(dim) {
                    let mut xp = x;
                    let mut xm = x;
                    xp[c] += eta;
                    xm[c] -= eta;
                    let gp = expr.grad(&xp);
                    let gm = expr.grad(&xm);
                    for r in 0..dim {
                        col[r] = (gp[r] - gm[r]) / (2.0 * eta);
                    }
                }
                let mut frob = 0.0;
                #[allow(clippy::needless_range_loop)]
                for r in 0..dim {
                    for c in 0..dim {
                        let s = 0.5 * (hess[r][c] + hess[c][r]);
                        frob += s * s;
                    }
                }
                acc[2] = acc[2].max(frob.sqrt());
            }
        }
        acc
    });
    let mut out = [0.0f64; 3];
    for acc in maxima {
        for c in 0..3 {
            out[c] = out[c].max(acc[c]);
        }
    }
    (
        out[0] * NORM_SAFETY,
        out[1] * NORM_SAFETY,
        out[2] * NORM_SAFETY,
    )
}

/// `||f||_1` and `||grad f||_1`, each with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W11Norms {
    pub l1: OperatorValue,
    pub grad_l1: OperatorValue,
}

impl W11Norms {
    /// `||f||_{W^{1,1}} = ||f||_1 + ||grad f||_1`.
    pub fn total(&self) -> f64 {
        self.l1.value + self.grad_l1.value
    }

    pub fn error_estimate(&self) -> f64 {
        self.l1.error_estimate + self.grad_l1.error_estimate
    }
}

/// `||f||_{L^1}` and `||grad f||_{L^1}` by polar quadrature over the support ball.
///
/// The angular integrals use the sign-splitting sphere rule, so the kinks of
/// `|f|` along the zero set of `f` do not limit the accuracy.
pub fn w11_norms(f: &TestField, spec: &QuadratureSpec) -> Result<W11Norms> {
    spec.validate()?;
    let ball = match f.support {
        Some(b) => b,
        None => {
            return Ok(W11Norms {
                l1: OperatorValue::zero(),
                grad_l1: OperatorValue::zero(),
            })
        }
    };
    let fine = ball_abs_integrals(
        f,
        &ball,
        spec.inner_shells,
        spec.gauss_order,
        spec.sphere_order,
    )?;
    let half = spec.halved();
    let coarse = ball_abs_integrals(
        f,
        &ball,
        half.inner_shells,
        half.gauss_order,
        half.sphere_order,
    )?;
    let out = W11Norms {
        l1: OperatorValue::from_pair(fine.0, coarse.0),
        grad_l1: OperatorValue::from_pair(fine.1, coarse.1),
    };
    for (name, v) in [("l1 norm", out.l1), ("gradient l1 norm", out.grad_l1)] {
        if !v.is_converged(spec.target_rel_error) {
            return Err(Error::NonConvergence {
                level: name.into(),
                value: v.value,
                estimate: v.error_estimate,
            });
        }
    }
    Ok(out)
}

fn ball_abs_integrals(
    f: &TestField,
    ball: &Ball,
    panels: usize,
    gauss: usize,
    order: usize,
) -> Result<(f64, f64)> {
    let dim = f.dim;
    let rule = CutSphereRule::new(dim, order)?;
    let gl = GaussLegendre::new(gauss);
    let frame = Frame::standard(dim);
    let step = ball.radius / panels as f64;
    let mut radii = Vec::with_capacity(panels * gauss);
    for j in 0..panels {
        let lo = step * j as f64;
        let (rs, ws) = gl.on_interval(lo, lo + step);
        radii.extend(rs.into_iter().zip(ws));
    }
    let shells = par_map(&radii, |&(r, w)| {
        let jac = w * r.powi(dim as i32 - 1);
        let a = rule.integrate_abs_pow(&frame, 1.0, |om| f.eval(&axpy(&ball.center, r, om)));
        let b = rule.integrate_abs_pow(&frame, 1.0, |om| norm(&f.grad(&axpy(&ball.center, r, om))));
        (jac * a, jac * b)
    });
    let l1: Vec<f64> = shells.iter().map(|s| s.0).collect();
    let g1: Vec<f64> = shells.iter().map(|s| s.1).collect();
    let out = (pairwise_sum(&l1), pairwise_sum(&g1));
    if !out.0.is_finite() || !out.1.is_finite() {
        return Err(Error::NonFinite { node: 0 });
    }
    Ok(out)
}

/// Serializable description of a field, as used in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Bump {
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    PolyBump {
        k: u32,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    ModulatedBump {
        wavevector: Vec<f64>,
        base: Box<FieldSpec>,
    },
    Translate {
        field: Box<FieldSpec>,
        shift: Vec<f64>,
    },
    Dilate {
        field: Box<FieldSpec>,
        factor: f64,
    },
    Product {
        left: Box<FieldSpec>,
        right: Box<FieldSpec>,
    },
    Sum {
        left: Box<FieldSpec>,
        right: Box<FieldSpec>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

fn point_or_origin(dim: usize, coords: &[f64]) -> Result<Point> {
    if coords.is_empty() {
        Ok(ORIGIN)
    } else {
        point_from_slice(dim, coords)
    }
}

impl FieldSpec {
    pub fn build(&self, dim: usize) -> Result<TestField> {
        check_dim(dim)?;
        match self {
            FieldSpec::Zero => TestField::zero(dim),
            FieldSpec::Bump { center, scale } => {
                TestField::bump(dim, point_or_origin(dim, center)?, *scale)
            }
            FieldSpec::PolyBump { k, center, scale } => {
                TestField::poly_bump(dim, *k, point_or_origin(dim, center)?, *scale)
            }
            FieldSpec::ModulatedBump { wavevector, base } => {
                TestField::modulated_bump(point_from_slice(dim, wavevector)?, &base.build(dim)?)
            }
            FieldSpec::Translate { field, shift } => {
                field.build(dim)?.translate(point_from_slice(dim, shift)?)
            }
            FieldSpec::Dilate { field, factor } => field.build(dim)?.dilate(*factor),
            FieldSpec::Product { left, right } => left.build(dim)?.product(&right.build(dim)?),
            FieldSpec::Sum { left, right } => left.build(dim)?.sum(&right.build(dim)?),
        }
    }
}

/// A named entry of the standard catalog.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub spec: FieldSpec,
}

/// The standard catalog for dimension `dim`.
pub fn catalog(dim: usize) -> Result<Vec<CatalogEntry>> {
    check_dim(dim)?;
    let first = |v: f64| {
        let mut c = vec![0.0; dim];
        c[0] = v;
        c
    };
    let diag = |a: f64, b: f64| {
        let mut c = vec![0.0; dim];
        c[0] = a;
        if dim >= 2 {
            c[1] = b;
        }
        c
    };
    let bump0 = FieldSpec::Bump {
        center: vec![],
        scale: 1.0,
    };
    Ok(vec![
        CatalogEntry {
            name: "bump",
            spec: bump0.clone(),
        },
        CatalogEntry {
            name: "poly_bump",
            spec: FieldSpec::PolyBump {
                k: 3,
                center: vec![],
                scale: 1.0,
            },
        },
        CatalogEntry {
            name: "shifted_bump",
            spec: FieldSpec::Bump {
                center: diag(0.3, -0.2),
                scale: 0.8,
            },
        },
        CatalogEntry {
            name: "modulated_bump",
            spec: FieldSpec::ModulatedBump {
                wavevector: first(1.0),
                base: Box::new(bump0),
            },
        },
        CatalogEntry {
            name: "modulated_poly_bump",
            spec: FieldSpec::ModulatedBump {
                wavevector: diag(2.0, 1.0),
                base: Box::new(FieldSpec::PolyBump {
                    k: 4,
                    center: diag(0.1, 0.1),
                    scale: 1.2,
                }),
            },
        },
    ])
}

/// Look up a catalog entry by name.
pub fn catalog_field(dim: usize, name: &str) -> Result<TestField> {
    catalog(dim)?
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Domain(format!("unknown catalog field {name:?}")))?
        .spec
        .build(dim)
}
