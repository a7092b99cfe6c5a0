//! Single-resolution evaluation of `int |f(x) - f(y)|^p |x - y|^{-(n + alpha p)} dy`.

use crate::error::{Error, Result};
use crate::fields::{Ball, TestField};
use crate::gauss::GaussLegendre;
use crate::geometry::{axpy, distance, dot, norm, Frame, Point};
use crate::quadrature::{sigma, split_abs_pow, CutSphereRule, QuadratureSpec};
use crate::reduce::{pairwise_sum, par_map};

use crate::quadrature::pow_abs;

/// Points closer than this multiple of the support radius to the support ball
/// use the shell scheme; farther points use the support cloud.
pub(crate) const FAR_MARGIN: f64 = 0.5;

/// Polar quadrature over a field's support ball whose angular nodes follow
/// the zero set of the field. Each node carries `w |f(z)|^p`.
#[derive(Debug, Clone)]
pub(crate) struct SupportCloud {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl SupportCloud {
    pub fn new(f: &TestField, res: &QuadratureSpec) -> Result<Self> {
        let mut cloud = SupportCloud {
            points: Vec::new(),
            weights: Vec::new(),
            values: Vec::new(),
        };
        let ball = match f.support_ball() {
            Some(b) => b,
            None => return Ok(cloud),
        };
        let dim = f.dim();
        let cut = CutSphereRule::new(dim, res.sphere_order)?;
        let gl = GaussLegendre::new(res.gauss_order);
        let frame = Frame::standard(dim);
        let panels = cloud_panels(res);
        let step = ball.radius / panels as f64;
        let mut radii = Vec::new();
        for j in 0..panels {
            let lo = step * j as f64;
            let (rs, ws) = gl.on_interval(lo, lo + step);
            radii.extend(rs.into_iter().zip(ws));
        }
        let rings = par_map(&radii, |&(r, w)| {
            let jac = w * r.powi(dim as i32 - 1);
            cut.sphere_nodes(&frame, |om| f.eval(&axpy(&ball.center, r, om)))
                .into_iter()
                .map(|(om, wo)| {
                    let z = axpy(&ball.center, r, &om);
                    (z, jac * wo, f.eval(&z))
                })
                .collect::<Vec<_>>()
        });
        for ring in rings {
            for (z, w, v) in ring {
                cloud.points.push(z);
                cloud.weights.push(w);
                cloud.values.push(v);
            }
        }
        Ok(cloud)
    }

    /// `sum_i w_i |f(z_i)|^p g(z_i)`.
    pub fn integrate<G: Fn(&Point) -> f64>(&self, p: f64, g: G) -> f64 {
        let terms: Vec<f64> = (0..self.points.len())
            .map(|i| {
                let v = self.values[i];
                if v == 0.0 {
                    0.0
                } else {
                    self.weights[i] * pow_abs(v, p) * g(&self.points[i])
                }
            })
            .collect();
        pairwise_sum(&terms)
    }
}

pub(crate) fn cloud_panels(res: &QuadratureSpec) -> usize {
    (res.inner_shells / 4).max(2)
}

/// Result of one engine evaluation: the integral and a bound on the part
/// replaced by its first-order Taylor surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EngineOut {
    pub integral: f64,
    pub core_bound: f64,
}

/// Evaluator of `J_p(x) = int |f(x) - f(y)|^p |x - y|^{-(n + alpha p)} dy` at a
/// fixed resolution.
pub(crate) struct Engine<'a> {
    f: &'a TestField,
    alpha: f64,
    p: f64,
    res: QuadratureSpec,
    cut: CutSphereRule,
    gl: GaussLegendre,
    cloud: SupportCloud,
}

impl<'a> Engine<'a> {
    pub fn new(f: &'a TestField, alpha: f64, p: f64, res: &QuadratureSpec) -> Result<Self> {
        Ok(Engine {
            f,
            alpha,
            p,
            res: *res,
            cut: CutSphereRule::new(f.dim(), res.sphere_order)?,
            gl: GaussLegendre::new(res.gauss_order),
            cloud: SupportCloud::new(f, res)?,
        })
    }

    pub fn field(&self) -> &TestField {
        self.f
    }

    /// `||f||_p^p` from the support cloud.
    pub fn lp_norm_pow(&self) -> f64 {
        self.cloud.integrate(self.p, |_| 1.0)
    }

    fn is_far(&self, x: &Point, ball: &Ball, radius: Option<f64>) -> bool {
        let d = distance(x, &ball.center);
        let covered = radius.is_none_or(|r| r >= d + ball.radius);
        covered && d - ball.radius >= FAR_MARGIN * ball.radius
    }

    /// `J_p(x)`, or its restriction to `B(x, radius)`.
    pub fn eval(&self, x: &Point, radius: Option<f64>) -> EngineOut {
        let ball = match self.f.support_ball() {
            Some(b) => b,
            None => {
                return EngineOut {
                    integral: 0.0,
                    core_bound: 0.0,
                }
            }
        };
        if self.is_far(x, &ball, radius) {
            let expo = -(self.f.dim() as f64 + self.alpha * self.p);
            let integral = self.cloud.integrate(self.p, |z| distance(x, z).powf(expo));
            return EngineOut {
                integral,
                core_bound: 0.0,
            };
        }
        self.shells(x, radius)
    }

    /// Dyadic shells `[top 2^{-k}, top 2^{1-k}]`, innermost first, with the
    /// shells that meet the support split into panels no wider than the
    /// support cloud's radial panels.
    fn radial_panels(&self, x: &Point, top: f64) -> Vec<(f64, f64)> {
        let k_in = self.res.inner_shells;
        let ball = self.f.support_ball().expect("nonzero field");
        let d = distance(x, &ball.center);
        let (near, far) = ((d - ball.radius).max(0.0), d + ball.radius);
        let width = ball.radius / cloud_panels(&self.res) as f64;
        let mut out = Vec::with_capacity(k_in + 2 * cloud_panels(&self.res));
        for k in (1..=k_in).rev() {
            let lo = top * 0.5f64.powi(k as i32);
            let hi = 2.0 * lo;
            let pieces = if hi > near && lo < far {
                ((hi - lo) / width).ceil().max(1.0) as usize
            } else {
                1
            };
            let step = (hi - lo) / pieces as f64;
            for j in 0..pieces {
                out.push((lo + step * j as f64, lo + step * (j + 1) as f64));
            }
        }
        out
    }

    fn shells(&self, x: &Point, radius: Option<f64>) -> EngineOut {
        let f = self.f;
        let dim = f.dim();
        let (alpha, p) = (self.alpha, self.p);
        let ap = alpha * p;
        let sig = sigma(dim);
        let fx = f.eval(x);
        let gx = f.grad(x);
        let g = norm(&gx);

        let split = 1f64.max(norm(x) + f.support_radius() + 1.0);
        let top = radius.map_or(split, |r| r.min(split));
        let k_in = self.res.inner_shells;
        let delta = top * 0.5f64.powi(k_in as i32);

        let frame = Frame::along(dim, &gx);
        let panels = self.radial_panels(x, top);
        let terms = if dim == 1 {
            par_map(&panels, |&(lo, hi)| {
                let mut acc = 0.0;
                for dir in [1.0, -1.0] {
                    acc += split_abs_pow(
                        &self.gl,
                        lo,
                        hi,
                        p,
                        |r| fx - f.eval(&[x[0] + dir * r, 0.0, 0.0]),
                        |r| r.powf(-1.0 - ap),
                    );
                }
                acc
            })
        } else {
            let mut radii = Vec::with_capacity(panels.len() * self.gl.len());
            for &(lo, hi) in &panels {
                let (rs, ws) = self.gl.on_interval(lo, hi);
                radii.extend(rs.into_iter().zip(ws));
            }
            par_map(&radii, |&(r, w)| {
                let s = self
                    .cut
                    .integrate_abs_pow(&frame, p, |om| fx - f.eval(&axpy(x, r, om)));
                w * s * r.powf(-1.0 - ap)
            })
        };
        let body = pairwise_sum(&terms);

        let a_p = if g > 0.0 {
            self.cut.integrate_abs_pow(&frame, p, |om| dot(&gx, om))
        } else {
            0.0
        };
        let e = p * (1.0 - alpha);
        let core = a_p * delta.powf(e) / e;

        let h = f.hess_sup_norm();
        let core_bound =
            sig * p * (g + 0.5 * h * delta).powf(p - 1.0) * 0.5 * h * delta.powf(p + 1.0 - ap)
                / (p + 1.0 - ap);

        let far = match radius {
            Some(r) if r <= split => 0.0,
            Some(r) => pow_abs(fx, p) * sig * (split.powf(-ap) - r.powf(-ap)) / ap,
            None => pow_abs(fx, p) * sig * split.powf(-ap) / ap,
        };
        EngineOut {
            integral: body + core + far,
            core_bound,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "p must be a finite number >= 1, got {p}"
        )));
    }
    Ok(())
}

pub(crate) fn check_point(f: &TestField, x: &Point) -> Result<()> {
    let n = f.dim();
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("evaluation point must be finite".into()));
    }
    if x[n..].iter().any(|&c| c != 0.0) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: crate::geometry::MAX_DIM,
        });
    }
    Ok(())
}
