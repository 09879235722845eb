//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's solve paths: stream
//! functions are cross-checked by direct kernel quadrature, and the
//! Kirchhoff-Routh minimum by brute-force lattice scanning.

#![allow(dead_code)]

use std::sync::Arc;

use vortexpatch::*;

/// Stationary half-separation of the symmetric disk pair: a^2 = sqrt(5)-2.
pub const A_STAR: f64 = 0.4858682717566457;
/// Kirchhoff-Routh value there (closed form, frozen).
pub const H_STAR: f64 = 0.16230060300988982;
/// Isolating radius produced by the quarter-distance rule at the disk
/// minimum.
pub const DELTA_STAR: f64 = 0.12853293206083358;

pub fn disk_spec(delta: f64) -> TwinVortexSpec {
    TwinVortexSpec {
        kappa1: 1.0,
        kappa2: -1.0,
        b1: Ball::new(Point::new(A_STAR, 0.0), delta).unwrap(),
        b2: Ball::new(Point::new(-A_STAR, 0.0), delta).unwrap(),
    }
}

pub fn disk_patch(n: usize, lambda: f64) -> (Arc<Grid>, GreenOperator, SteadyPatch) {
    let grid = discretize(Domain::UnitDisk, n).unwrap();
    let green = build_green(&grid).unwrap();
    let cfg = SolverConfig::new(disk_spec(DELTA_STAR), lambda);
    let patch = solve_steady(&cfg, &green).unwrap();
    (grid, green, patch)
}

/// Direct analytic-kernel quadrature of `psi(x) = int G(x,y) omega(y) dy`
/// on the unit disk, with the equal-area-disk rule on the diagonal cell.
/// Independent of the masked Poisson solve it validates.
pub fn analytic_quadrature_stream(omega: &ScalarField) -> ScalarField {
    let grid = omega.grid().clone();
    let h = grid.h();
    let h2 = h * h;
    let support: Vec<(usize, Point, f64)> = omega
        .support()
        .into_iter()
        .map(|c| (c, grid.center_idx(c), omega.get_idx(c)))
        .collect();
    let mut vals = vec![0.0; grid.cell_count()];
    for i in grid.inside_indices() {
        let x = grid.center_idx(i);
        let mut acc = 0.0;
        for &(j, y, w) in &support {
            if i == j {
                acc += w * green::self_cell_integral(x, h);
            } else {
                acc += w * green::green_kernel(x, y) * h2;
            }
        }
        vals[i] = acc;
    }
    ScalarField::from_values(grid, vals).unwrap()
}

/// Analytic double-sum energy of a two-level field on the disk:
/// `1/2 sum G(c,c') w_c w_c' h^4` with the diagonal-cell correction.
pub fn analytic_quadrature_energy(omega: &ScalarField) -> f64 {
    let grid = omega.grid().clone();
    let h = grid.h();
    let h2 = h * h;
    let support: Vec<(Point, f64)> = omega
        .support()
        .into_iter()
        .map(|c| (grid.center_idx(c), omega.get_idx(c)))
        .collect();
    let mut acc = 0.0;
    for (i, &(x, wx)) in support.iter().enumerate() {
        for &(y, wy) in &support[i + 1..] {
            acc += wx * wy * green::green_kernel(x, y) * h2 * h2;
        }
        acc += 0.5 * wx * wx * green::self_cell_integral(x, h) * h2;
    }
    acc
}

/// Brute-force lattice scan of H over a product box at the given step;
/// returns the best configuration and value. The H evaluation goes
/// through the closed-form image formulas only.
pub fn brute_force_kr_scan(
    lo1: Point,
    hi1: Point,
    lo2: Point,
    hi2: Point,
    step: f64,
    kappa1: f64,
    kappa2: f64,
) -> ([Point; 2], f64) {
    let counts = |lo: f64, hi: f64| ((hi - lo) / step).round() as usize + 1;
    let (n1x, n1y) = (counts(lo1.x, hi1.x), counts(lo1.y, hi1.y));
    let (n2x, n2y) = (counts(lo2.x, hi2.x), counts(lo2.y, hi2.y));
    let g = DiskGreen;
    let mut best_v = f64::INFINITY;
    let mut best = [Point::new(0.0, 0.0); 2];
    for i in 0..n1x {
        let x1 = lo1.x + i as f64 * step;
        for j in 0..n1y {
            let y1 = lo1.y + j as f64 * step;
            for k in 0..n2x {
                let x2 = lo2.x + k as f64 * step;
                for l in 0..n2y {
                    let y2 = lo2.y + l as f64 * step;
                    let p1 = Point::new(x1, y1);
                    let p2 = Point::new(x2, y2);
                    if p1.norm_sq() >= 0.98 || p2.norm_sq() >= 0.98 {
                        continue;
                    }
                    if let Ok(p) = KRPoint::new(p1, p2, kappa1, kappa2) {
                        if let Ok(v) = kr_value(&p, &g) {
                            if v < best_v {
                                best_v = v;
                                best = [p1, p2];
                            }
                        }
                    }
                }
            }
        }
    }
    (best, best_v)
}

/// One pass/fail line per acceptance criterion.
pub fn criterion_line(id: usize, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id} [{tag}] {name}: {detail}");
}
