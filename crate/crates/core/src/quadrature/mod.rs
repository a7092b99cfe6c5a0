//! Quadrature building blocks for the singular integrals: sphere rules, the
//! sign-splitting sphere rule for `|d(omega)|^p`, dyadic radial shells, polar
//! ball rules and slow independent oracles.

mod ball;
mod cut;
pub mod oracles;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::geometry::{Frame, Point};
use crate::special::sphere_area;

pub use ball::BallRule;
pub use cut::CutSphereRule;
pub(crate) use cut::{pow_abs, split_abs_pow};

/// What to do with the far tail of a radial integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Add the closed-form contribution of the region beyond the last shell.
    Analytic,
    /// Drop it (its envelope still enters the error estimate).
    Truncate,
}

/// Named resolution presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fast,
    Default,
    High,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Preset::Fast),
            "default" => Ok(Preset::Default),
            "high" => Ok(Preset::High),
            other => Err(Error::InvalidSpec(format!("unknown preset {other:?}"))),
        }
    }
}

/// Resolution of every singular integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Dyadic shells below the reference radius.
    pub inner_shells: usize,
    /// Dyadic shells above the reference radius (decaying integrands only).
    pub outer_shells: usize,
    /// Gauss-Legendre nodes per radial panel.
    pub gauss_order: usize,
    /// Circle nodes for `n = 2`; polar (cos theta) nodes for `n = 3`, with
    /// twice as many azimuthal nodes.
    pub sphere_order: usize,
    pub tail_policy: TailPolicy,
    /// Relative error estimate above which a value is flagged non-converged.
    pub target_rel_error: f64,
}

impl QuadratureSpec {
    pub fn default_for(dim: usize) -> Self {
        Self::preset(Preset::Default, dim)
    }

    pub fn preset(preset: Preset, dim: usize) -> Self {
        let (inner, outer, gauss, s2, s3) = match preset {
            Preset::Fast => (16, 20, 8, 64, 16),
            Preset::Default => (40, 30, 16, 128, 48),
            Preset::High => (48, 40, 24, 256, 64),
        };
        QuadratureSpec {
            inner_shells: inner,
            outer_shells: outer,
            gauss_order: gauss,
            sphere_order: if dim >= 3 { s3 } else { s2 },
            tail_policy: TailPolicy::Analytic,
            target_rel_error: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_shells < 4 || self.outer_shells < 4 {
            return Err(Error::InvalidSpec(format!(
                "inner_shells and outer_shells must be >= 4 (got {} and {})",
                self.inner_shells, self.outer_shells
            )));
        }
        if self.gauss_order < 8 {
            return Err(Error::InvalidSpec(format!(
                "gauss_order must be >= 8 (got {})",
                self.gauss_order
            )));
        }
        if self.sphere_order < 4 {
            return Err(Error::InvalidSpec(format!(
                "sphere_order must be >= 4 (got {})",
                self.sphere_order
            )));
        }
        if !(self.target_rel_error > 0.0) {
            return Err(Error::InvalidSpec(
                "target_rel_error must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The same scheme at half resolution; the difference of the two values
    /// is the a-posteriori error estimate.
    pub fn halved(&self) -> Self {
        QuadratureSpec {
            inner_shells: (self.inner_shells / 2).max(2),
            outer_shells: (self.outer_shells / 2).max(2),
            gauss_order: (self.gauss_order / 2).max(2),
            sphere_order: (self.sphere_order / 2).max(4),
            ..*self
        }
    }
}

/// A computed operator value with its a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    pub value: f64,
    pub error_estimate: f64,
}

impl OperatorValue {
    pub fn new(value: f64, error_estimate: f64) -> Self {
        OperatorValue {
            value,
            error_estimate: error_estimate.abs(),
        }
    }

    pub fn zero() -> Self {
        OperatorValue::new(0.0, 0.0)
    }

    /// Pair a fine and a coarse evaluation of the same quantity.
    pub fn from_pair(fine: f64, coarse: f64) -> Self {
        OperatorValue::new(fine, fine - coarse)
    }

    pub fn is_converged(&self, target_rel_error: f64) -> bool {
        self.value.is_finite()
            && self.error_estimate <= target_rel_error * self.value.abs() + f64::MIN_POSITIVE
    }

    /// Error out with [`Error::NonConvergence`] unless the estimate is within tolerance.
    pub fn check(self, level: &str, spec: &QuadratureSpec) -> Result<Self> {
        if self.is_converged(spec.target_rel_error) {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                level: level.to_string(),
                value: self.value,
                estimate: self.error_estimate,
            })
        }
    }

    pub fn scaled(self, s: f64) -> Self {
        OperatorValue::new(self.value * s, self.error_estimate * s)
    }
}

/// Weighted nodes on `S^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `n = 1`: `{-1, +1}` with unit weights. `n = 2`: `order` uniform nodes
    /// (trapezoidal). `n = 3`: Gauss-Legendre in `cos theta` with `order`
    /// nodes times `2 * order` uniform azimuths.
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        Self::oriented(&Frame::standard(dim), order)
    }

    pub fn oriented(frame: &Frame, order: usize) -> Result<Self> {
        let dim = frame.dim;
        match dim {
            1 => Ok(SphereRule {
                dim,
                nodes: vec![frame.axis, crate::geometry::scale(&frame.axis, -1.0)],
                weights: vec![1.0, 1.0],
            }),
            2 => {
                check_order(order)?;
                let h = 2.0 * PI / order as f64;
                let nodes = (0..order).map(|k| frame.circle(h * k as f64)).collect();
                Ok(SphereRule {
                    dim,
                    nodes,
                    weights: vec![h; order],
                })
            }
            3 => {
                check_order(order)?;
                Self::polar_tensor(frame, &[(-1.0, 1.0, order)], 2 * order)
            }
            _ => Err(Error::Dimension {
                dim,
                reason: "sphere rules exist for n in {1, 2, 3}".into(),
            }),
        }
    }

    /// Tensor rule on `S^2` whose `cos theta` range is split into Gauss-Legendre
    /// panels `(from, to, nodes)`; used to align panels with known kinks.
    pub fn polar_tensor(
        frame: &Frame,
        panels: &[(f64, f64, usize)],
        azimuths: usize,
    ) -> Result<Self> {
        if frame.dim != 3 {
            return Err(Error::Dimension {
                dim: frame.dim,
                reason: "polar tensor rules live on S^2".into(),
            });
        }
        check_order(azimuths)?;
        let h = 2.0 * PI / azimuths as f64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(a, b, m) in panels {
            let (cs, ws) = GaussLegendre::new(m).on_interval(a, b);
            for (c, w) in cs.iter().zip(&ws) {
                for k in 0..azimuths {
                    nodes.push(frame.sphere(*c, h * k as f64));
                    weights.push(w * h);
                }
            }
        }
        Ok(SphereRule {
            dim: 3,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(&Point) -> f64>(&self, g: F) -> Result<f64> {
        sphere_integrate(self, g)
    }
}

fn check_order(order: usize) -> Result<()> {
    if order < 4 {
        return Err(Error::InvalidSpec(format!(
            "sphere order must be >= 4, got {order}"
        )));
    }
    Ok(())
}

/// `sum_i w_i g(omega_i)`; fails on a non-finite sample.
pub fn sphere_integrate<F: FnMut(&Point) -> f64>(rule: &SphereRule, mut g: F) -> Result<f64> {
    let mut vals = Vec::with_capacity(rule.len());
    for (i, (node, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let v = g(node);
        if !v.is_finite() {
            return Err(Error::NonFinite { node: i });
        }
        vals.push(w * v);
    }
    Ok(crate::reduce::pairwise_sum(&vals))
}

/// One radial interval with its Gauss-Legendre nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPanel {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialPanel {
    pub fn new(lo: f64, hi: f64, rule: &GaussLegendre) -> Self {
        let (nodes, weights) = rule.on_interval(lo, hi);
        RadialPanel {
            lo,
            hi,
            nodes,
            weights,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        RadialPanel {
            lo: self.lo * s,
            hi: self.hi * s,
            nodes: self.nodes.iter().map(|r| r * s).collect(),
            weights: self.weights.iter().map(|w| w * s).collect(),
        }
    }
}

/// Dyadic shells `[2^{-k} R, 2^{-k+1} R]`, `k = 1..=inner_shells`, followed by
/// `[2^j R, 2^{j+1} R]`, `j = 0..outer_shells`, sorted by radius.
pub fn shell_scheme(reference_radius: f64, spec: &QuadratureSpec) -> Result<Vec<RadialPanel>> {
    let mut panels = inner_shells(reference_radius, spec.inner_shells, spec.gauss_order)?;
    panels.extend(outer_shells(
        reference_radius,
        spec.outer_shells,
        spec.gauss_order,
    )?);
    Ok(panels)
}

/// Only the shells below `reference_radius`, innermost first.
pub fn inner_shells(
    reference_radius: f64,
    count: usize,
    gauss_order: usize,
) -> Result<Vec<RadialPanel>> {
    check_radius(reference_radius)?;
    let gl = GaussLegendre::new(gauss_order);
    Ok((1..=count)
        .rev()
        .map(|k| {
            let lo = reference_radius * 0.5f64.powi(k as i32);
            RadialPanel::new(lo, 2.0 * lo, &gl)
        })
        .collect())
}

/// Only the shells above `reference_radius`.
pub fn outer_shells(
    reference_radius: f64,
    count: usize,
    gauss_order: usize,
) -> Result<Vec<RadialPanel>> {
    check_radius(reference_radius)?;
    let gl = GaussLegendre::new(gauss_order);
    Ok((0..count)
        .map(|j| {
            let lo = reference_radius * 2f64.powi(j as i32);
            RadialPanel::new(lo, 2.0 * lo, &gl)
        })
        .collect())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "reference radius must be positive, got {r}"
        )));
    }
    Ok(())
}

/// `sigma(S^{n-1}) int_{|h| < reference} ...` helper: the measure of the unit sphere
/// as used by every analytic core and tail.
pub(crate) fn sigma(dim: usize) -> f64 {
    sphere_area(dim)
}
