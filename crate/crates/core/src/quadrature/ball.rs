use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::geometry::{axpy, Point};
use crate::reduce::{pairwise_sum, par_map};

use super::SphereRule;

/// Polar product rule on a ball: Gauss-Legendre radial panels times a
/// [`SphereRule`], weights including the `r^{n-1}` Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRule {
    pub dim: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl BallRule {
    /// `segments` are `(from, to, panels)` radial ranges around `center`,
    /// each split into equal panels with `gauss_order` nodes.
    pub fn polar(
        dim: usize,
        center: &Point,
        segments: &[(f64, f64, usize)],
        gauss_order: usize,
        sphere_order: usize,
    ) -> Result<Self> {
        let sphere = SphereRule::new(dim, sphere_order)?;
        let gl = GaussLegendre::new(gauss_order);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(from, to, panels) in segments {
            if !(to > from) || from < 0.0 || panels == 0 {
                return Err(Error::Domain(format!(
                    "bad radial segment [{from}, {to}] x {panels}"
                )));
            }
            let step = (to - from) / panels as f64;
            for j in 0..panels {
                let lo = from + step * j as f64;
                let (rs, ws) = gl.on_interval(lo, lo + step);
                for (r, wr) in rs.iter().zip(&ws) {
                    let jac = wr * r.powi(dim as i32 - 1);
                    for (omega, wo) in sphere.nodes.iter().zip(&sphere.weights) {
                        points.push(axpy(center, *r, omega));
                        weights.push(jac * wo);
                    }
                }
            }
        }
        Ok(BallRule {
            dim,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: Fn(&Point) -> f64>(&self, g: F) -> f64 {
        let vals: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * g(x))
            .collect();
        pairwise_sum(&vals)
    }

    /// Same as [`BallRule::integrate`] with the samples taken in parallel.
    pub fn par_integrate<F: Fn(&Point) -> f64 + Sync + Send>(&self, g: F) -> f64 {
        let idx: Vec<usize> = (0..self.len()).collect();
        let vals = par_map(&idx, |&i| self.weights[i] * g(&self.points[i]));
        pairwise_sum(&vals)
    }
}
