use std::fmt;

use crate::error::{Error, Result};
use crate::fields::{Ball, TestField};
use crate::gauss::GaussLegendre;
use crate::geometry::{axpy, distance, norm, Point};
use crate::quadrature::{
    inner_shells, outer_shells, sigma, BallRule, OperatorValue, QuadratureSpec, RadialPanel,
    SphereRule, TailPolicy,
};
use crate::reduce::{pairwise_sum, par_map};
use crate::special::riesz_constant;

use super::engine::{check_point, cloud_panels, FAR_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Reach {
    Zero,
    Compact(Ball),
    Decaying {
        exponent: f64,
        constant: f64,
        far_radius: f64,
        bulk: Ball,
    },
}

/// A bounded integrand for the Riesz potential together with its decay
/// envelope `|g(y)| <= C |y|^{-d}` for `|y| >= far_radius`.
pub struct DecayingFunction<'a> {
    dim: usize,
    eval: Box<dyn Fn(&Point) -> f64 + Send + Sync + 'a>,
    reach: Reach,
}

impl fmt::Debug for DecayingFunction<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecayingFunction")
            .field("dim", &self.dim)
            .field("reach", &self.reach)
            .finish_non_exhaustive()
    }
}

impl<'a> DecayingFunction<'a> {
    /// `bulk` is a ball carrying most of the mass of `g`; it only steers the
    /// angular resolution.
    pub fn new<F>(
        dim: usize,
        eval: F,
        decay_exponent: f64,
        decay_constant: f64,
        far_radius: f64,
        bulk: Ball,
    ) -> Result<Self>
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'a,
    {
        if !(decay_exponent > 0.0)
            || !(decay_constant >= 0.0)
            || !(far_radius > 0.0)
            || !(bulk.radius > 0.0)
        {
            return Err(Error::Domain("decay metadata must be positive".into()));
        }
        Ok(DecayingFunction {
            dim,
            eval: Box::new(eval),
            reach: Reach::Decaying {
                exponent: decay_exponent,
                constant: decay_constant,
                far_radius,
                bulk,
            },
        })
    }

    /// A function vanishing outside `support`.
    pub fn compact<F>(dim: usize, eval: F, support: Ball) -> Result<Self>
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'a,
    {
        if !(support.radius > 0.0) {
            return Err(Error::Domain("support radius must be positive".into()));
        }
        Ok(DecayingFunction {
            dim,
            eval: Box::new(eval),
            reach: Reach::Compact(support),
        })
    }

    pub fn zero(dim: usize) -> Self {
        DecayingFunction {
            dim,
            eval: Box::new(|_| 0.0),
            reach: Reach::Zero,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, y: &Point) -> f64 {
        (self.eval)(y)
    }

    /// `d` in the envelope; infinite for compactly supported functions.
    pub fn decay_exponent(&self) -> f64 {
        match self.reach {
            Reach::Decaying { exponent, .. } => exponent,
            _ => f64::INFINITY,
        }
    }

    pub fn decay_constant(&self) -> f64 {
        match self.reach {
            Reach::Decaying { constant, .. } => constant,
            _ => 0.0,
        }
    }

    /// Radius beyond which the envelope holds (support radius for compact functions).
    pub fn far_radius(&self) -> f64 {
        match self.reach {
            Reach::Zero => 0.0,
            Reach::Compact(b) => norm(&b.center) + b.radius,
            Reach::Decaying { far_radius, .. } => far_radius,
        }
    }
}

/// One polar pass of the Riesz integral at a fixed resolution, without `gamma`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RieszSum {
    pub value: f64,
    pub tail: f64,
}

/// Radial panels around `x`: dyadic shells towards `x` below `inner_top`,
/// uniform panels across the bulk `[inner_top, dist + s]`, then (for decaying
/// functions) dyadic shells outwards up to `outer_top`.
fn radial_layout(
    x: &Point,
    bulk: &Ball,
    res: &QuadratureSpec,
    outer_reach: Option<f64>,
) -> Result<(Vec<RadialPanel>, f64, f64)> {
    let dist = distance(x, &bulk.center);
    let s = bulk.radius;
    let width = s / (res.inner_shells / 4).max(2) as f64;
    let inner_top = if dist > s + width { dist - s } else { width };
    let bulk_top = dist + s;
    let gl = GaussLegendre::new(res.gauss_order);
    let mut panels = inner_shells(inner_top, res.inner_shells, res.gauss_order)?;
    let count = ((bulk_top - inner_top) / width).ceil().max(1.0) as usize;
    let step = (bulk_top - inner_top) / count as f64;
    for j in 0..count {
        let lo = inner_top + step * j as f64;
        panels.push(RadialPanel::new(lo, lo + step, &gl));
    }
    let mut top = bulk_top;
    if let Some(reach) = outer_reach {
        let mut shells = res.outer_shells;
        while bulk_top * 2f64.powi(shells as i32) < reach {
            shells += 1;
        }
        panels.extend(outer_shells(bulk_top, shells, res.gauss_order)?);
        top = bulk_top * 2f64.powi(shells as i32);
    }
    Ok((panels, inner_top, top))
}

pub(crate) fn riesz_sum(
    g: &DecayingFunction<'_>,
    alpha: f64,
    x: &Point,
    res: &QuadratureSpec,
) -> Result<RieszSum> {
    let dim = g.dim;
    let (bulk, tail_data) = match g.reach {
        Reach::Zero => {
            return Ok(RieszSum {
                value: 0.0,
                tail: 0.0,
            })
        }
        Reach::Compact(b) => (b, None),
        Reach::Decaying {
            exponent,
            constant,
            far_radius,
            bulk,
        } => (bulk, Some((exponent, constant, far_radius))),
    };
    if tail_data.is_none() && distance(x, &bulk.center) - bulk.radius >= FAR_MARGIN * bulk.radius {
        // The kernel is smooth on the support: integrate around its center.
        let panels = cloud_panels(res);
        let rule = BallRule::polar(
            dim,
            &bulk.center,
            &[(0.0, bulk.radius, panels)],
            res.gauss_order,
            res.sphere_order,
        )?;
        let value = rule.par_integrate(|y| g.eval(y) * distance(x, y).powf(alpha - dim as f64));
        if !value.is_finite() {
            return Err(Error::NonFinite { node: 0 });
        }
        return Ok(RieszSum { value, tail: 0.0 });
    }
    let reach = tail_data.map(|(_, _, far)| 2.0 * (norm(x) + far));
    let (panels, inner_top, top) = radial_layout(x, &bulk, res, reach)?;
    // Points seen from afar need proportionally finer angular sampling.
    let max_zoom = if dim >= 3 { 4.0 } else { 8.0 };
    let zoom = (distance(x, &bulk.center) / bulk.radius)
        .ceil()
        .clamp(1.0, max_zoom) as usize;
    let sphere = SphereRule::new(dim, res.sphere_order * zoom)?;

    let mut radii = Vec::with_capacity(panels.len() * res.gauss_order);
    for panel in &panels {
        for (r, wr) in panel.nodes.iter().zip(&panel.weights) {
            radii.push((*r, wr * r.powf(alpha - 1.0)));
        }
    }
    let terms = par_map(&radii, |&(r, radial)| {
        let ring: Vec<f64> = sphere
            .nodes
            .iter()
            .zip(&sphere.weights)
            .map(|(om, wo)| wo * g.eval(&axpy(x, r, om)))
            .collect();
        radial * pairwise_sum(&ring)
    });
    let sig = sigma(dim);
    let delta = inner_top * 0.5f64.powi(res.inner_shells as i32);
    let core = g.eval(x) * sig * delta.powf(alpha) / alpha;
    let body = pairwise_sum(&terms) + core;
    if !body.is_finite() {
        return Err(Error::NonFinite { node: 0 });
    }
    let tail = match tail_data {
        None => 0.0,
        Some((d, c, _)) => {
            c * sig * (1.0 - norm(x) / top).powf(-d) * top.powf(alpha - d) / (d - alpha)
        }
    };
    Ok(RieszSum { value: body, tail })
}

pub(crate) fn check_riesz_alpha(dim: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < dim as f64) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, {dim}), got {alpha}"
        )));
    }
    Ok(())
}

/// Value and error of a Riesz potential from a fine pass, a coarse pass and
/// the tail envelope of the fine pass.
pub(crate) fn combine(
    gamma: f64,
    fine: RieszSum,
    coarse: RieszSum,
    policy: TailPolicy,
) -> OperatorValue {
    let tail_value = match policy {
        TailPolicy::Analytic => fine.tail,
        TailPolicy::Truncate => 0.0,
    };
    OperatorValue::new(
        gamma * (fine.value + tail_value),
        gamma * ((fine.value - coarse.value).abs() + fine.tail),
    )
}

/// `I_alpha g(x) = gamma_{n, alpha} int g(y) |x - y|^{alpha - n} dy`.
pub fn riesz_potential(
    g: &DecayingFunction<'_>,
    alpha: f64,
    x: &Point,
    spec: &QuadratureSpec,
) -> Result<OperatorValue> {
    check_riesz_alpha(g.dim, alpha)?;
    spec.validate()?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("evaluation point must be finite".into()));
    }
    if !(g.decay_exponent() > alpha) {
        return Err(Error::Domain(format!(
            "decay exponent {} does not exceed alpha = {alpha}",
            g.decay_exponent()
        )));
    }
    let gamma = riesz_constant(g.dim, alpha)?;
    let fine = riesz_sum(g, alpha, x, spec)?;
    let coarse = riesz_sum(g, alpha, x, &spec.halved())?;
    Ok(combine(gamma, fine, coarse, spec.tail_policy))
}

/// `I_1(|grad f|)(x)`, `n >= 2`.
pub fn riesz_of_gradient(f: &TestField, x: &Point, spec: &QuadratureSpec) -> Result<OperatorValue> {
    if f.dim() < 2 {
        return Err(Error::Dimension {
            dim: f.dim(),
            reason: "I_1 needs n >= 2".into(),
        });
    }
    check_point(f, x)?;
    let g = match f.support_ball() {
        None => DecayingFunction::zero(f.dim()),
        Some(ball) => DecayingFunction::compact(f.dim(), move |y| norm(&f.grad(y)), ball)?,
    };
    riesz_potential(&g, 1.0, x, spec)
}
