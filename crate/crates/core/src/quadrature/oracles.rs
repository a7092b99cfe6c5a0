//! Slow reference computations that share no code path with the shell engine:
//! a one-dimensional reduction for radial fields and midpoint tensor grids.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::TestField;
use crate::geometry::{distance, norm, Point};
use crate::reduce::{pairwise_sum, par_map};
use crate::special::{riesz_constant, sphere_area};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) quadrature with absolute tolerance `tol`.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = gk15(f, a, b);
        if e <= tol || depth == 0 || (b - a) < 1e-15 * (a.abs() + b.abs()) {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, tol, 48)
}

/// `D^alpha f(0)` for a radial field by the one-dimensional reduction
/// `sigma int_0^{R_0} |f(r) - f(0)| r^{-1-alpha} dr + |f(0)| sigma R_0^{-alpha} / alpha`.
///
/// The radial integral is split dyadically towards zero and each piece is
/// integrated adaptively to absolute tolerance `tol`.
pub fn radial_reduction_oracle(f: &TestField, alpha: f64, tol: f64) -> Result<f64> {
    if !f.is_radial() {
        return Err(Error::Domain(
            "the radial oracle needs a radial field".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let n = f.dim();
    let sigma = sphere_area(n);
    let r0 = f.support_radius();
    let f0 = f.eval(&[0.0; 3]);
    let g = |r: f64| (f.eval(&[r, 0.0, 0.0]) - f0).abs() * r.powf(-1.0 - alpha);
    let mut pieces = Vec::new();
    let mut hi = r0;
    for _ in 0..80 {
        let lo = 0.5 * hi;
        pieces.push(adaptive_gk15(&g, lo, hi, tol));
        hi = lo;
    }
    let body = pairwise_sum(&pieces);
    Ok(sigma * (body + f0.abs() * r0.powf(-alpha) / alpha))
}

/// `C^infinity` cutoff equal to 1 on `[0, rho/2]` and 0 beyond `rho`.
fn cutoff(r: f64, rho: f64) -> f64 {
    let t = (r - 0.5 * rho) / (0.5 * rho);
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        b / (a + b)
    }
}

/// `int_0^rho cutoff(r) r^{-beta} dr` for `beta < 1`.
fn cutoff_moment(rho: f64, beta: f64) -> f64 {
    let head = (0.5 * rho).powf(1.0 - beta) / (1.0 - beta);
    head + adaptive_gk15(
        &|r: f64| cutoff(r, rho) * r.powf(-beta),
        0.5 * rho,
        rho,
        1e-15,
    )
}

fn check_grid(f: &TestField, x: &Point, cells_per_axis: usize) -> Result<()> {
    let n = f.dim();
    if n > 2 {
        return Err(Error::Dimension {
            dim: n,
            reason: "the grid oracle is limited to n <= 2".into(),
        });
    }
    if !(2..=4096).contains(&cells_per_axis) || !cells_per_axis.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "cells_per_axis must be even and in [2, 4096], got {cells_per_axis}"
        )));
    }
    if x.iter().any(|c| !c.is_finite()) || x[n..].iter().any(|&c| c != 0.0) {
        return Err(Error::Domain(
            "evaluation point does not match the field dimension".into(),
        ));
    }
    Ok(())
}

/// Midpoint sum over the box `x + [-half, half]^n` split into `m^n` cells.
/// With `m` even, `x` is a cell vertex and never a sample.
fn grid_sum<F: Fn(&Point) -> f64 + Sync>(n: usize, x: &Point, half: f64, m: usize, g: F) -> f64 {
    let h = 2.0 * half / m as f64;
    let coord = |i: usize| -half + h * (i as f64 + 0.5);
    let rows: Vec<usize> = (0..m).collect();
    let vol = h.powi(n as i32);
    if n == 1 {
        let vals: Vec<f64> = rows
            .iter()
            .map(|&i| g(&[x[0] + coord(i), 0.0, 0.0]))
            .collect();
        return vol * pairwise_sum(&vals);
    }
    let sums = par_map(&rows, |&i| {
        let vals: Vec<f64> = (0..m)
            .map(|j| g(&[x[0] + coord(i), x[1] + coord(j), 0.0]))
            .collect();
        pairwise_sum(&vals)
    });
    vol * pairwise_sum(&sums)
}

fn box_half_side(f: &TestField, x: &Point) -> f64 {
    let ball = f.support_ball().expect("nonzero field");
    let reach = distance(x, &ball.center) + ball.radius;
    reach.max(4.0 * f.support_radius())
}

/// `D^alpha f(x)` by a midpoint tensor grid, `n <= 2`.
///
/// The box is centered at `x` and covers the support and `B(x, 4 R_0)`. The
/// linear Taylor term, cut off smoothly near `x`, is subtracted and added back
/// in closed form; the exterior of the box, where `f = 0`, is exact.
pub fn brute_force_grid_oracle(
    f: &TestField,
    alpha: f64,
    x: &Point,
    cells_per_axis: usize,
) -> Result<f64> {
    check_grid(f, x, cells_per_axis)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let n = f.dim();
    let half = box_half_side(f, x);
    let rho = 0.5 * half;
    let fx = f.eval(x);
    let gx = f.grad(x);
    let expo = n as f64 + alpha;
    let body = grid_sum(n, x, half, cells_per_axis, |y| {
        let h = [y[0] - x[0], y[1] - x[1], 0.0];
        let r = norm(&h);
        let lin = (gx[0] * h[0] + gx[1] * h[1]).abs();
        ((fx - f.eval(y)).abs() - cutoff(r, rho) * lin) * r.powf(-expo)
    });
    let grad_norm = norm(&gx);
    let k_ext = if n == 1 { 2.0 } else { 4.0 };
    let core = grad_norm * k_ext * cutoff_moment(rho, alpha);
    let exterior = if n == 1 {
        2.0 * half.powf(-alpha) / alpha
    } else {
        8.0 * half.powf(-alpha) / alpha
            * adaptive_gk15(&|phi: f64| phi.cos().powf(alpha), 0.0, PI / 4.0, 1e-15)
    };
    Ok(body + core + fx.abs() * exterior)
}

/// `I_1(|grad f|)(x)` by a midpoint tensor grid, `n = 2`, with the value at
/// `x` subtracted under a smooth cutoff and added back in closed form.
pub fn riesz_gradient_grid_oracle(f: &TestField, x: &Point, cells_per_axis: usize) -> Result<f64> {
    check_grid(f, x, cells_per_axis)?;
    if f.dim() != 2 {
        return Err(Error::Dimension {
            dim: f.dim(),
            reason: "the gradient potential oracle is implemented for n = 2".into(),
        });
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let half = box_half_side(f, x);
    let rho = 0.5 * half;
    let gx = norm(&f.grad(x));
    let body = grid_sum(2, x, half, cells_per_axis, |y| {
        let r = distance(x, y);
        (norm(&f.grad(y)) - cutoff(r, rho) * gx) / r
    });
    let core = gx * 2.0 * PI * cutoff_moment(rho, 0.0);
    Ok(riesz_constant(2, 1.0)? * (body + core))
}
