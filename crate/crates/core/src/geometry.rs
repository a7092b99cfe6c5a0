//! Fixed-size points in `R^n`, `n <= 3`. Unused trailing coordinates are zero.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

pub type Point = [f64; MAX_DIM];

pub const ORIGIN: Point = [0.0; MAX_DIM];

pub fn point_from_slice(dim: usize, coords: &[f64]) -> Result<Point> {
    if coords.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: coords.len(),
        });
    }
    if dim > MAX_DIM {
        return Err(Error::Dimension {
            dim,
            reason: "points support at most three coordinates".into(),
        });
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("point coordinates must be finite".into()));
    }
    let mut p = ORIGIN;
    p[..dim].copy_from_slice(coords);
    Ok(p)
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &Point, s: f64, b: &Point) -> Point {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// Orthonormal frame `(axis, u, v)` of `R^n` whose first vector is `axis`.
///
/// Sphere rules are laid out relative to a frame so that the kinks of
/// `|grad f(x) . omega|` sit on panel boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub dim: usize,
    pub axis: Point,
    pub u: Point,
    pub v: Point,
}

impl Frame {
    pub fn standard(dim: usize) -> Self {
        Frame {
            dim,
            axis: [1.0, 0.0, 0.0],
            u: if dim >= 2 { [0.0, 1.0, 0.0] } else { ORIGIN },
            v: if dim >= 3 { [0.0, 0.0, 1.0] } else { ORIGIN },
        }
    }

    /// Frame with first vector along `direction`; falls back to the standard
    /// frame when `direction` vanishes.
    pub fn along(dim: usize, direction: &Point) -> Self {
        let len = norm(direction);
        if !(len > 0.0) || !len.is_finite() {
            return Self::standard(dim);
        }
        let axis = scale(direction, 1.0 / len);
        match dim {
            1 => Frame {
                dim,
                axis: [axis[0].signum(), 0.0, 0.0],
                u: ORIGIN,
                v: ORIGIN,
            },
            2 => Frame {
                dim,
                axis,
                u: [-axis[1], axis[0], 0.0],
                v: ORIGIN,
            },
            _ => {
                // Gram-Schmidt against the coordinate axis least aligned with `axis`.
                let mut pick = 0;
                for i in 1..3 {
                    if axis[i].abs() < axis[pick].abs() {
                        pick = i;
                    }
                }
                let mut seed = ORIGIN;
                seed[pick] = 1.0;
                let u = axpy(&seed, -dot(&seed, &axis), &axis);
                let u = scale(&u, 1.0 / norm(&u));
                let v = [
                    axis[1] * u[2] - axis[2] * u[1],
                    axis[2] * u[0] - axis[0] * u[2],
                    axis[0] * u[1] - axis[1] * u[0],
                ];
                Frame { dim, axis, u, v }
            }
        }
    }

    /// Point on the unit circle spanned by `(axis, u)` at angle `phi`.
    #[inline]
    pub fn circle(&self, phi: f64) -> Point {
        let (s, c) = phi.sin_cos();
        axpy(&scale(&self.axis, c), s, &self.u)
    }

    /// Point on `S^2` with `cos(theta) = cos_theta` measured from `axis`.
    #[inline]
    pub fn sphere(&self, cos_theta: f64, phi: f64) -> Point {
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        let ring = axpy(&scale(&self.u, c), s, &self.v);
        axpy(&scale(&self.axis, cos_theta), sin_theta, &ring)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for dir in [[0.3, -0.2, 0.9], [0.0, 0.0, 1.0], [1.0, 1e-9, 0.0]] {
            let f = Frame::along(3, &dir);
            for (a, b) in [(f.axis, f.u), (f.axis, f.v), (f.u, f.v)] {
                assert!(dot(&a, &b).abs() < 1e-14);
            }
            for a in [f.axis, f.u, f.v] {
                assert!((norm(&a) - 1.0).abs() < 1e-14);
            }
        }
        let f = Frame::along(2, &[0.0, 0.0, 0.0]);
        assert_eq!(f, Frame::standard(2));
    }

    #[test]
    fn point_from_slice_checks_length() {
        assert!(point_from_slice(2, &[1.0]).is_err());
        assert_eq!(point_from_slice(2, &[1.0, 2.0]).unwrap(), [1.0, 2.0, 0.0]);
        assert!(point_from_slice(1, &[f64::NAN]).is_err());
    }
}
