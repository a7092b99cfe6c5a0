use crate::error::{Error, Result};
use crate::fields::TestField;
use crate::gauss::GaussLegendre;
use crate::geometry::{axpy, dot, sub, Point};
use crate::quadrature::{BallRule, OperatorValue, QuadratureSpec, SphereRule};
use crate::reduce::{pairwise_sum, par_map};

use super::derivative::root_value;
use super::engine::{check_alpha, check_p, check_point, cloud_panels, Engine, SupportCloud};

/// `int_{B(c, R)} J_p(x) dx + int_{|x - c| > R} J_p(x) dx` with the exterior
/// part computed exactly by exchanging the order of integration:
/// `int |f(y)|^p Psi(y) dy`, `Psi(y) = (alpha p)^{-1} int_S rho(y, omega)^{-alpha p} d sigma`,
/// where `rho` is the distance from `y` to the sphere `|x - c| = R` along `omega`.
fn seminorm_pow(inner: &Engine<'_>, alpha: f64, p: f64, outer: &QuadratureSpec) -> Result<f64> {
    let f = inner.field();
    let ball = match f.support_ball() {
        Some(b) => b,
        None => return Ok(0.0),
    };
    let dim = f.dim();
    let (c, s) = (ball.center, ball.radius);
    let big = 2.0 * s;
    let panels = cloud_panels(outer);
    let rule = BallRule::polar(
        dim,
        &c,
        &[(0.0, s, panels), (s, big, panels)],
        outer.gauss_order,
        outer.sphere_order,
    )?;
    let idx: Vec<usize> = (0..rule.len()).collect();
    let vals = par_map(&idx, |&i| {
        rule.weights[i] * inner.eval(&rule.points[i], None).integral
    });
    let body = pairwise_sum(&vals);

    let ap = alpha * p;
    let sphere = SphereRule::new(dim, outer.sphere_order)?;
    let cloud = SupportCloud::new(f, outer)?;
    let exterior = cloud.integrate(p, |y| {
        let u = sub(y, &c);
        let uu = dot(&u, &u);
        let terms: Vec<f64> = sphere
            .nodes
            .iter()
            .zip(&sphere.weights)
            .map(|(om, w)| {
                let b = dot(&u, om);
                let rho = -b + (b * b + big * big - uu).sqrt();
                w * rho.powf(-ap)
            })
            .collect();
        pairwise_sum(&terms) / ap
    });
    let total = body + exterior;
    if !total.is_finite() {
        return Err(Error::NonFinite { node: 0 });
    }
    Ok(total)
}

/// Evaluates a nested integral at three resolution pairs: both fine, inner
/// coarse, outer coarse. Returns the fine value and the summed differences.
fn nested<F>(
    f: &TestField,
    alpha: f64,
    p: f64,
    spec: &QuadratureSpec,
    outer: F,
) -> Result<(f64, f64)>
where
    F: Fn(&Engine<'_>, &QuadratureSpec) -> Result<f64>,
{
    let half = spec.halved();
    let fine = Engine::new(f, alpha, p, spec)?;
    let coarse = Engine::new(f, alpha, p, &half)?;
    let ff = outer(&fine, spec)?;
    let cf = outer(&coarse, spec)?;
    let fc = outer(&fine, &half)?;
    Ok((ff, (ff - cf).abs() + (ff - fc).abs()))
}

/// `[f]_{alpha, p} = (int int |f(x) - f(y)|^p / |x - y|^{n + alpha p} dy dx)^{1/p}`.
pub fn gagliardo_seminorm_p(
    f: &TestField,
    alpha: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    check_alpha(alpha)?;
    check_p(p)?;
    spec.validate()?;
    if f.is_zero() {
        return Ok(OperatorValue::zero());
    }
    let (v, err) = nested(f, alpha, p, spec, |inner, outer| {
        seminorm_pow(inner, alpha, p, outer)
    })?;
    Ok(root_value(v, err, p))
}

/// `[f]_{W^{alpha, 1}} = int int |f(x) - f(y)| / |x - y|^{n + alpha} dy dx`.
pub fn gagliardo_seminorm(
    f: &TestField,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    gagliardo_seminorm_p(f, alpha, 1.0, spec)
}

/// Both sides of the fractional Poincare inequality on a cube `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareSides {
    /// Mean oscillation `avg_Q |f - f_Q|`.
    pub lhs: OperatorValue,
    /// `(1 - alpha) l(Q)^alpha avg_Q int_Q |f(x) - f(y)| / |x - y|^{n + alpha} dy dx`.
    pub rhs: OperatorValue,
}

fn cube_nodes(
    dim: usize,
    center: &Point,
    side: f64,
    res: &QuadratureSpec,
) -> (Vec<Point>, Vec<f64>) {
    let panels = (res.inner_shells / 8).max(2);
    let gl = GaussLegendre::new(res.gauss_order);
    let step = side / panels as f64;
    let mut axis = Vec::new();
    for j in 0..panels {
        let lo = -0.5 * side + step * j as f64;
        let (xs, ws) = gl.on_interval(lo, lo + step);
        axis.extend(xs.into_iter().zip(ws));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let m = axis.len();
    let count = m.pow(dim as u32);
    for idx in 0..count {
        let mut p = *center;
        let mut w = 1.0;
        let mut rest = idx;
        for pk in p.iter_mut().take(dim) {
            let (x, wx) = axis[rest % m];
            rest /= m;
            *pk += x;
            w *= wx;
        }
        points.push(p);
        weights.push(w);
    }
    (points, weights)
}

/// Distance from `x` to the boundary of the cube along `omega`.
fn exit_distance(dim: usize, x: &Point, omega: &Point, center: &Point, half: f64) -> f64 {
    let mut t = f64::INFINITY;
    for k in 0..dim {
        let o = omega[k];
        if o.abs() > 1e-300 {
            let lim = if o > 0.0 {
                center[k] + half - x[k]
            } else {
                x[k] - (center[k] - half)
            };
            t = t.min(lim / o.abs());
        }
    }
    t
}

fn poincare_at(
    f: &TestField,
    center: &Point,
    side: f64,
    alpha: f64,
    res: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let dim = f.dim();
    let half = 0.5 * side;
    let volume = side.powi(dim as i32);
    let (points, weights) = cube_nodes(dim, center, side, res);
    let values: Vec<f64> = points.iter().map(|x| f.eval(x)).collect();
    let mean = pairwise_sum(
        &values
            .iter()
            .zip(&weights)
            .map(|(v, w)| v * w)
            .collect::<Vec<_>>(),
    ) / volume;
    let lhs = pairwise_sum(
        &values
            .iter()
            .zip(&weights)
            .map(|(v, w)| (v - mean).abs() * w)
            .collect::<Vec<_>>(),
    ) / volume;

    let engine = Engine::new(f, alpha, 1.0, res)?;
    let sphere = SphereRule::new(dim, res.sphere_order)?;
    let gl = GaussLegendre::new(res.gauss_order);
    let idx: Vec<usize> = (0..points.len()).collect();
    let inner = par_map(&idx, |&i| {
        let x = &points[i];
        let fx = values[i];
        let mut rho_min = f64::INFINITY;
        for k in 0..dim {
            rho_min = rho_min.min(half - (x[k] - center[k]).abs());
        }
        let ball_part = engine.eval(x, Some(rho_min)).integral;
        let mut dirs = Vec::with_capacity(sphere.len());
        for (om, wo) in sphere.nodes.iter().zip(&sphere.weights) {
            let reach = exit_distance(dim, x, om, center, half);
            let mut acc = 0.0;
            let mut lo = rho_min;
            while lo < reach * (1.0 - 1e-14) {
                let hi = (2.0 * lo).min(reach);
                let (rs, ws) = gl.on_interval(lo, hi);
                for (r, w) in rs.iter().zip(&ws) {
                    acc += w * (fx - f.eval(&axpy(x, *r, om))).abs() * r.powf(-1.0 - alpha);
                }
                lo = hi;
            }
            dirs.push(wo * acc);
        }
        weights[i] * (ball_part + pairwise_sum(&dirs))
    });
    let rhs = (1.0 - alpha) * side.powf(alpha) * pairwise_sum(&inner) / volume;
    Ok((lhs, rhs))
}

/// Mean oscillation and scaled local seminorm of `f` on the cube with the
/// given center and side length.
pub fn bbm_poincare_sides(
    f: &TestField,
    center: &Point,
    side: f64,
    alpha: f64,
    spec: &QuadratureSpec,
) -> Result<PoincareSides> {
    check_alpha(alpha)?;
    check_point(f, center)?;
    spec.validate()?;
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::Domain(format!(
            "cube side must be positive, got {side}"
        )));
    }
    let fine = poincare_at(f, center, side, alpha, spec)?;
    let coarse = poincare_at(f, center, side, alpha, &spec.halved())?;
    Ok(PoincareSides {
        lhs: OperatorValue::from_pair(fine.0, coarse.0),
        rhs: OperatorValue::from_pair(fine.1, coarse.1),
    })
}

/// The three norms of the Leibniz-type inequality and their balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeibnizGap {
    /// `||f D_p g||_p + ||g D_p f||_p - ||D_p(f g)||_p`.
    pub gap: f64,
    /// Three times the summed error estimates of the three norms.
    pub epsilon_quad: f64,
    pub f_dg: OperatorValue,
    pub g_df: OperatorValue,
    pub d_fg: OperatorValue,
}

/// `||a D^alpha_p b||_{L^p}` over the support of `a`.
fn weighted_norm(
    a: &TestField,
    b: &TestField,
    alpha: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    if a.is_zero() || b.is_zero() {
        return Ok(OperatorValue::zero());
    }
    let (v, err) = nested(b, alpha, p, spec, |inner, outer| {
        let cloud = SupportCloud::new(a, outer)?;
        let idx: Vec<usize> = (0..cloud.points.len()).collect();
        let vals = par_map(&idx, |&i| {
            let av = cloud.values[i];
            if av == 0.0 {
                0.0
            } else {
                cloud.weights[i]
                    * crate::quadrature::pow_abs(av, p)
                    * inner.eval(&cloud.points[i], None).integral
            }
        });
        Ok(pairwise_sum(&vals))
    })?;
    Ok(root_value(v, err, p))
}

/// Balance of the Leibniz-type inequality `||D_p(fg)||_p <= ||f D_p g||_p + ||g D_p f||_p`.
pub fn leibniz_gap(
    f: &TestField,
    g: &TestField,
    alpha: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<LeibnizGap> {
    check_alpha(alpha)?;
    check_p(p)?;
    spec.validate()?;
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    let f_dg = weighted_norm(f, g, alpha, p, spec)?;
    let g_df = weighted_norm(g, f, alpha, p, spec)?;
    let d_fg = gagliardo_seminorm_p(&f.product(g)?, alpha, p, spec)?;
    Ok(LeibnizGap {
        gap: f_dg.value + g_df.value - d_fg.value,
        epsilon_quad: 3.0 * (f_dg.error_estimate + g_df.error_estimate + d_fg.error_estimate),
        f_dg,
        g_df,
        d_fg,
    })
}
