//! `green-check`: validate the Poisson backends against analytic
//! references on the configured domain.

use vortexpatch::*;
// The crate exports its own 1-parameter Result alias; keep std's here.
use std::result::Result;

use super::{grid_for, CliError, Failures};
use crate::config::RunConfig;
use crate::reports::{f, OutDir};

#[derive(serde::Serialize)]
struct GreenCheckReport {
    backend: String,
    disk_rel_linf: Option<f64>,
    convergence_orders: Vec<f64>,
    symmetry_defect: f64,
    positive_form: bool,
    max_principle: bool,
    failures: Vec<String>,
}

pub fn run_green_check(cfg: &RunConfig, out: &OutDir) -> Result<Failures, CliError> {
    let grid = grid_for(cfg)?;
    let green = build_green(&grid).map_err(|e| CliError::Config(e.to_string()))?;
    let mut failures = Vec::new();

    // Disk only: compare against analytic-kernel quadrature.
    let disk_rel_linf = if matches!(grid.domain(), Domain::UnitDisk) {
        let c = Point::new(0.25, -0.1);
        let omega = ScalarField::from_fn(grid.clone(), |p| {
            let r = p.dist(c) / 0.35;
            if r < 1.0 {
                (1.0 - r * r).powi(3)
            } else {
                0.0
            }
        })
        .map_err(|e| CliError::Config(e.to_string()))?;
        let psi = green.apply(&omega).map_err(|e| CliError::Config(e.to_string()))?;
        let quad = analytic_stream(&omega);
        let scale = quad.max_abs();
        let mut worst = 0.0f64;
        for i in grid.inside_indices() {
            worst = worst.max((psi.get_idx(i) - quad.get_idx(i)).abs());
        }
        let rel = worst / scale;
        if rel > 1e-2 {
            failures.push(format!("GreenDiskMismatch: rel Linf {rel:.3e} > 1e-2"));
        }
        Some(rel)
    } else {
        None
    };

    // Manufactured-solution convergence on a rectangle (the configured
    // one, or the square reference when the domain is not a rectangle).
    let (w, h) = match grid.domain() {
        Domain::Rectangle { width, height } => (*width, *height),
        _ => (std::f64::consts::PI, std::f64::consts::PI),
    };
    let mut errs = Vec::new();
    let base = (cfg.n / 4).max(16);
    let mut rows = Vec::new();
    for n in [base, 2 * base, 4 * base] {
        let g = discretize(Domain::rectangle(w, h).unwrap(), n)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let op = build_green(&g).map_err(|e| CliError::Config(e.to_string()))?;
        let kx = std::f64::consts::PI / w;
        let ky = std::f64::consts::PI / h;
        let factor = kx * kx + ky * ky;
        let omega = ScalarField::from_fn(g.clone(), |p| {
            factor * (kx * p.x).sin() * (ky * p.y).sin()
        })
        .map_err(|e| CliError::Config(e.to_string()))?;
        let psi = op.apply(&omega).map_err(|e| CliError::Config(e.to_string()))?;
        let mut e = 0.0f64;
        for i in g.inside_indices() {
            let p = g.center_idx(i);
            e = e.max((psi.get_idx(i) - (kx * p.x).sin() * (ky * p.y).sin()).abs());
        }
        rows.push(vec![n.to_string(), f(g.h()), f(e)]);
        errs.push(e);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    if orders.iter().any(|o| *o < 1.8) {
        failures.push(format!("ConvergenceOrder: {orders:?} below 1.8"));
    }
    out.write_csv("convergence.csv", &["n", "h", "max_error"], &rows)?;

    // Operator form checks on the configured grid.
    let f1 = ScalarField::from_fn(grid.clone(), |p| (3.1 * p.x).sin() + 0.2 * p.y)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let f2 = ScalarField::from_fn(grid.clone(), |p| (2.3 * p.y).cos() - 0.4)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let a1 = green.apply(&f1).map_err(|e| CliError::Config(e.to_string()))?;
    let a2 = green.apply(&f2).map_err(|e| CliError::Config(e.to_string()))?;
    let q11 = f1.inner(&a1).unwrap();
    let q22 = f2.inner(&a2).unwrap();
    let q12 = f1.inner(&a2).unwrap();
    let q21 = f2.inner(&a1).unwrap();
    let symmetry_defect = (q12 - q21).abs() / (q11 * q22).sqrt().max(1e-300);
    if symmetry_defect > 1e-10 {
        failures.push(format!("GreenSymmetry: defect {symmetry_defect:.3e} > 1e-10"));
    }
    let positive_form = q11 >= 0.0 && q22 >= 0.0;
    if !positive_form {
        failures.push("GreenPositivity: negative quadratic form".into());
    }

    let bumpf = ScalarField::from_fn(grid.clone(), |p| {
        let center = grid.center(grid.nx() / 2, grid.ny() / 2);
        if p.dist(center) < 6.0 * grid.h() {
            1.0
        } else {
            0.0
        }
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    let psi_b = green.apply(&bumpf).map_err(|e| CliError::Config(e.to_string()))?;
    let max_principle = grid.inside_indices().all(|i| psi_b.get_idx(i) > 0.0);
    if !max_principle {
        failures.push("MaxPrinciple: nonpositive stream of a positive source".into());
    }

    let report = GreenCheckReport {
        backend: format!("{:?}", green.backend_kind()),
        disk_rel_linf,
        convergence_orders: orders,
        symmetry_defect,
        positive_form,
        max_principle,
        failures: failures.clone(),
    };
    out.write_json("green_check_report.json", &report)?;
    Ok(failures)
}

fn analytic_stream(omega: &ScalarField) -> ScalarField {
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
