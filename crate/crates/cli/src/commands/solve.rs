//! `solve`: full pipeline from domain to a converged steady double patch
//! with diagnostics, dumps, and previews.

use vortexpatch::*;
// The crate exports its own 1-parameter Result alias; keep std's here.
use std::result::Result;

use super::{grid_for, locate_minimum, save_patch, CliError, Failures, PatchReport};
use crate::config::RunConfig;
use crate::reports::{f, fu, OutDir};

pub fn run_solve(cfg: &RunConfig, out: &OutDir) -> Result<Failures, CliError> {
    let (kappa1, kappa2) = cfg.require_kappas()?;
    let lambda = cfg.require_lambda()?;
    let grid = grid_for(cfg)?;
    let green = build_green(&grid).map_err(|e| CliError::Config(e.to_string()))?;
    let mut failures = Vec::new();

    let min = match locate_minimum(cfg, kappa1, kappa2, &grid, &green) {
        Ok(m) => m,
        Err(e) => {
            failures.push(format!("{}: {e}", e.name()));
            out.write_json("solve_report.json", &serde_json::json!({ "failures": failures }))?;
            return Ok(failures);
        }
    };

    let mut scfg = SolverConfig::from_minimum(&min, lambda);
    scfg.max_iters = cfg.max_iters;
    scfg.energy_tol = cfg.energy_tol;

    let patch = match solve_steady(&scfg, &green) {
        Ok(p) => p,
        Err(e) => {
            failures.push(format!("{}: {e}", e.name()));
            out.write_json("solve_report.json", &serde_json::json!({ "failures": failures }))?;
            return Ok(failures);
        }
    };

    // Diagnostics and asserted invariants.
    let residual = steadiness_residual(&patch, 32);
    let bg = boundary_gradient_check(&patch);
    let h2 = grid.h() * grid.h();

    if !patch.converged {
        failures.push("NotConverged: solver returned unconverged patch".into());
    }
    if patch.energy_ledger.windows(2).any(|w| w[1] < w[0]) {
        failures.push("EnergyLedger: nonmonotone energy sequence".into());
    }
    if patch.circulation_error() > lambda * h2 + 1e-12 {
        failures.push(format!(
            "CirculationMismatch: error {:.3e} above one cell",
            patch.circulation_error()
        ));
    }
    if patch.mu1 <= 0.0 || patch.mu2 <= 0.0 {
        // The paper-level expectation for small delta / large lambda; a
        // failure here signals the configured delta is too large.
        failures.push(format!(
            "MuNotPositive: mu = ({:.4e}, {:.4e})",
            patch.mu1, patch.mu2
        ));
    }
    match bg.min_overall {
        Some(m) if m < 0.0 => {}
        Some(m) => failures.push(format!("BoundaryGradient: min {m:.3e} not negative")),
        None => failures.push("BoundaryGradient: no patch".into()),
    }

    let report = PatchReport {
        domain_kind: cfg.domain_kind.clone(),
        width: cfg.width,
        height: cfg.height,
        mask_path: cfg.mask_path.clone(),
        n: cfg.n,
        lambda,
        kappa1,
        kappa2,
        ball1: patch.spec.b1,
        ball2: patch.spec.b2,
        kr_value: min.value,
        kr_delta: min.delta,
        kr_margin: if cfg.delta.is_some() {
            None // overridden radius: certificate not re-run
        } else {
            Some(min.strictness_margin)
        },
        energy: patch.energy,
        mu1: patch.mu1,
        mu2: patch.mu2,
        iterations: patch.iterations,
        converged: patch.converged,
        degenerate_ties: patch.degenerate_ties,
        tie_cells: patch.tie_cells,
        circulation_error: patch.circulation_error(),
        residual,
        min_boundary_gradient: bg.min_overall,
        energy_ledger: patch.energy_ledger.clone(),
    };
    save_patch(out, &report, &patch)?;

    // Ledger CSV for plotting.
    let rows: Vec<Vec<String>> = patch
        .energy_ledger
        .iter()
        .enumerate()
        .map(|(k, e)| vec![fu(k), f(*e)])
        .collect();
    out.write_csv("energy_ledger.csv", &["iteration", "energy"], &rows)?;

    Ok(failures)
}
