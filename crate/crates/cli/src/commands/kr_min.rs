//! `kr-min`: locate and certify the Kirchhoff-Routh minimum; emit the
//! JSON report and the coarse-scan CSV for plotting.

use vortexpatch::*;
// The crate exports its own 1-parameter Result alias; keep std's here.
use std::result::Result;

use super::{default_search_box, grid_for, locate_minimum, CliError, Failures};
use crate::config::RunConfig;
use crate::reports::{f, OutDir};

#[derive(serde::Serialize)]
struct KrReport {
    x1: Point,
    x2: Point,
    h_value: f64,
    delta: f64,
    margin: f64,
    kappa1: f64,
    kappa2: f64,
}

pub fn run_kr_min(cfg: &RunConfig, out: &OutDir) -> Result<Failures, CliError> {
    let (kappa1, kappa2) = cfg.require_kappas()?;
    let grid = grid_for(cfg)?;
    let green = build_green(&grid).map_err(|e| CliError::Config(e.to_string()))?;

    let mut failures = Vec::new();
    let min = match locate_minimum(cfg, kappa1, kappa2, &grid, &green) {
        Ok(m) => m,
        Err(e) => {
            failures.push(format!("{}: {e}", e.name()));
            out.write_json("kr_report.json", &serde_json::json!({ "failures": failures }))?;
            return Ok(failures);
        }
    };

    // Coarse-scan CSV over the default search box (9 nodes per axis).
    let sb = default_search_box(cfg, &grid);
    let disk = matches!(grid.domain(), Domain::UnitDisk);
    let eval = GridPointGreen::new(&green);
    let mut rows = Vec::new();
    let nodes = 9usize;
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (nodes - 1) as f64;
    for i0 in 0..nodes {
        for i1 in 0..nodes {
            for i2 in 0..nodes {
                for i3 in 0..nodes {
                    let x1 = Point::new(lin(sb.lo1.x, sb.hi1.x, i0), lin(sb.lo1.y, sb.hi1.y, i1));
                    let x2 = Point::new(lin(sb.lo2.x, sb.hi2.x, i2), lin(sb.lo2.y, sb.hi2.y, i3));
                    let value = KRPoint::new(x1, x2, kappa1, kappa2)
                        .and_then(|p| {
                            if disk {
                                kr_value(&p, &DiskGreen)
                            } else {
                                kr_value(&p, &eval)
                            }
                        })
                        .ok();
                    rows.push(vec![
                        f(x1.x),
                        f(x1.y),
                        f(x2.x),
                        f(x2.y),
                        value.map(f).unwrap_or_else(|| "inf".into()),
                    ]);
                }
            }
        }
    }
    out.write_csv("kr_scan.csv", &["x1x", "x1y", "x2x", "x2y", "H"], &rows)?;

    if min.strictness_margin <= 0.0 {
        failures.push("DegenerateMinimum: nonpositive strictness margin".into());
    }
    let report = KrReport {
        x1: min.point.x1,
        x2: min.point.x2,
        h_value: min.value,
        delta: min.delta,
        margin: min.strictness_margin,
        kappa1,
        kappa2,
    };
    out.write_json("kr_report.json", &report)?;
    Ok(failures)
}
