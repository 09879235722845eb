//! Analytic Green function of the Dirichlet Laplacian on the unit disk,
//! via the method of images.
//!
//! With the image point `y* = y/|y|^2`,
//! `G(x,y) = (1/2pi) ln(|y||x - y*| / |x - y|)`, and
//! `|y||x - y*| = sqrt(|x|^2 |y|^2 - 2 x.y + 1)` stays well defined as
//! `y -> 0`. The regular part is `h(x,y) = -(1/2pi) ln sqrt(...)`, giving
//! the Robin function `h(x,x) = -(1/2pi) ln(1 - |x|^2)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point;

const INV_2PI: f64 = 1.0 / (2.0 * PI);

fn check_inside(p: Point) -> Result<()> {
    if p.norm_sq() < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDomain(p.x, p.y))
    }
}

/// `sqrt(|x|^2 |y|^2 - 2 x.y + 1)`; equals `|y| |x - y/|y|^2|`.
fn image_factor(x: Point, y: Point) -> f64 {
    (x.norm_sq() * y.norm_sq() - 2.0 * x.dot(y) + 1.0).sqrt()
}

/// Green function of the unit disk.
pub fn green_disk(x: Point, y: Point) -> Result<f64> {
    check_inside(x)?;
    check_inside(y)?;
    let d = x.dist(y);
    if d < 1e-12 {
        return Err(Error::CoincidentPoints);
    }
    Ok(INV_2PI * (image_factor(x, y) / d).ln())
}

/// Regular part `h(x,y)` of the disk Green function (no domain checks;
/// used by quadrature inner loops).
pub fn regular_part(x: Point, y: Point) -> f64 {
    -INV_2PI * image_factor(x, y).ln()
}

/// Unchecked kernel value, for quadrature inner loops over cell centers.
pub fn green_kernel(x: Point, y: Point) -> f64 {
    INV_2PI * (image_factor(x, y) / x.dist(y)).ln()
}

/// Robin function `h(x,x) = -(1/2pi) ln(1 - |x|^2)`.
pub fn robin_disk(x: Point) -> Result<f64> {
    check_inside(x)?;
    Ok(-INV_2PI * (1.0 - x.norm_sq()).ln())
}

/// Integral of `G(x, .)` over the grid cell centered at `x` (side `h`),
/// approximating the cell by the disk of equal area: for a uniform disk
/// of radius `rho`, the average of `(1/2pi) ln(1/|x-y|)` is
/// `(1/2pi)(ln(1/rho) + 1/2)` at its center.
pub fn self_cell_integral(x: Point, h: f64) -> f64 {
    let rho = h / PI.sqrt();
    let log_part = INV_2PI * ((1.0 / rho).ln() + 0.5);
    h * h * (log_part - regular_part(x, x))
}

/// Integral of `(1/2pi) ln(1/|x-y|)` over the cell centered at `x`
/// (free-space kernel only, no image term).
pub fn self_cell_log_integral(h: f64) -> f64 {
    let rho = h / PI.sqrt();
    h * h * INV_2PI * ((1.0 / rho).ln() + 0.5)
}
