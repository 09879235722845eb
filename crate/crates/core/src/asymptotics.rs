//! Concentration diagnostics across the patch-strength parameter: the
//! `eps` length scale, support diameters and centroids, core energy, the
//! constant-free energy lower bound against the two-ball test function,
//! and the sweep harness that assembles them per lambda.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{discretize, Domain, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::green::{build_green, GreenOperator};
use crate::steady::{solve_steady, two_ball_test_function, SolverConfig, SteadyPatch, TwinVortexSpec};

/// Radius of the ball carrying circulation `kappa` at density `lambda`:
/// `lambda * pi * eps^2 = |kappa|`.
pub fn epsilon_scale(kappa: f64, lambda: f64) -> f64 {
    (kappa.abs() / (lambda * PI)).sqrt()
}

/// Largest pairwise distance between support-cell centers. Exact O(m^2)
/// for small supports, convex hull plus pairwise over the hull above
/// 2000 cells.
pub fn patch_diameter(omega_i: &ScalarField) -> Result<f64> {
    let grid = omega_i.grid();
    let support = omega_i.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let pts: Vec<Point> = support.iter().map(|&c| grid.center_idx(c)).collect();
    let pts = if pts.len() > 2000 { convex_hull(&pts) } else { pts };
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(pts[i].dist(pts[j]));
        }
    }
    Ok(best)
}

/// Andrew's monotone chain.
fn convex_hull(pts: &[Point]) -> Vec<Point> {
    let mut p: Vec<Point> = pts.to_vec();
    p.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::new();
    for &q in p.iter().chain(p.iter().rev()) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
            hull.pop();
        }
        hull.push(q);
    }
    hull.pop();
    hull
}

/// Circulation-normalized first moment of a component.
pub fn centroid(omega_i: &ScalarField, kappa: f64) -> Result<Point> {
    let got = omega_i.integrate();
    let lambda = omega_i.max_abs();
    let h = omega_i.grid().h();
    let tol = lambda * h * h + 1e-14;
    if (got - kappa).abs() > tol {
        return Err(Error::CirculationMismatch {
            got,
            want: kappa,
            tol,
        });
    }
    let grid = omega_i.grid();
    let h2 = h * h;
    let mut mx = 0.0;
    let mut my = 0.0;
    for c in omega_i.support() {
        let p = grid.center_idx(c);
        let w = omega_i.get_idx(c) * h2;
        mx += p.x * w;
        my += p.y * w;
    }
    Ok(Point::new(mx / kappa, my / kappa))
}

/// Vortex-core energy `T = 1/2 sum_i int (psi - sign_i mu_i) omega_i`.
pub fn core_energy(patch: &SteadyPatch) -> f64 {
    let h2 = patch.grid().h() * patch.grid().h();
    let psi = &patch.psi.psi;
    let mut t = 0.0;
    for i in 0..2 {
        let sign = patch.spec.sign(i);
        let mu = patch.mu(i);
        for c in patch.support(i) {
            t += (psi.get_idx(c) - sign * mu) * patch.component(i).get_idx(c);
        }
    }
    0.5 * t * h2
}

/// The constant-free lower bound and the threshold-sum slope data.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EnergyBounds {
    pub e: f64,
    /// Energy of the two-ball test function on the same grid.
    pub e_testfn: f64,
    /// `E >= E(test function)`, exactly (the test function is feasible).
    pub lower_bound_holds: bool,
    /// `sum_i |kappa_i| mu_i`.
    pub mu_bound_lhs: f64,
    /// `-(1/2pi) sum_i kappa_i^2 ln eps_i`: the slope side of the
    /// threshold bound (additive constants are not comparable).
    pub mu_bound_rhs: f64,
}

pub fn energy_bounds_check(patch: &SteadyPatch, green: &GreenOperator) -> Result<EnergyBounds> {
    let h = patch.grid().h();
    for i in 0..2 {
        let eps = epsilon_scale(patch.spec.kappa(i), patch.lambda);
        let ball = patch.spec.ball(i);
        if eps > ball.radius - h {
            return Err(Error::TestFunctionInfeasible(format!(
                "eps_{} = {eps:.4} does not fit inside the ball of radius {:.4} (lambda too small)",
                i + 1,
                ball.radius
            )));
        }
    }
    let cfg = SolverConfig::new(patch.spec.clone(), patch.lambda);
    let testfn = two_ball_test_function(&cfg, patch.grid())?;
    let e_testfn = green.energy(&testfn)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..2 {
        let kappa = patch.spec.kappa(i);
        lhs += kappa.abs() * patch.mu(i);
        rhs += -kappa * kappa * epsilon_scale(kappa, patch.lambda).ln() / (2.0 * PI);
    }
    Ok(EnergyBounds {
        e: patch.energy,
        e_testfn,
        lower_bound_holds: patch.energy >= e_testfn,
        mu_bound_lhs: lhs,
        mu_bound_rhs: rhs,
    })
}

/// Isoperimetric ratio `4 pi area / perimeter^2` of a component's support
/// (1 for a disk; reported as a roundness diagnostic, never asserted).
pub fn isoperimetric_ratio(omega_i: &ScalarField) -> Option<f64> {
    let grid = omega_i.grid();
    let support = omega_i.support();
    if support.is_empty() {
        return None;
    }
    let in_set: std::collections::HashSet<usize> = support.iter().copied().collect();
    let mut faces = 0usize;
    for &c in &support {
        let (ix, iy) = grid.coords(c);
        let mut probe = |jx: i64, jy: i64| {
            if jx < 0 || jy < 0 || jx as usize >= grid.nx() || jy as usize >= grid.ny() {
                faces += 1;
            } else if !in_set.contains(&grid.index(jx as usize, jy as usize)) {
                faces += 1;
            }
        };
        probe(ix as i64 - 1, iy as i64);
        probe(ix as i64 + 1, iy as i64);
        probe(ix as i64, iy as i64 - 1);
        probe(ix as i64, iy as i64 + 1);
    }
    let h = grid.h();
    let area = support.len() as f64 * h * h;
    let perim = faces as f64 * h;
    Some(4.0 * PI * area / (perim * perim))
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub domain: Domain,
    pub base_n: usize,
    pub spec: TwinVortexSpec,
    pub lambdas: Vec<f64>,
    /// Refine `n` with sqrt(lambda) so every patch keeps at least
    /// `resolution_floor` cells.
    pub refine: bool,
    /// Minimum cells per patch before a row is flagged under-resolved.
    pub resolution_floor: usize,
    pub max_iters: usize,
    pub energy_tol: f64,
}

impl SweepConfig {
    pub fn new(domain: Domain, base_n: usize, spec: TwinVortexSpec, lambdas: Vec<f64>) -> Self {
        SweepConfig {
            domain,
            base_n,
            spec,
            lambdas,
            refine: true,
            resolution_floor: 30,
            max_iters: 500,
            energy_tol: 1e-10,
        }
    }

    /// Reference length per unit of `n` for each domain kind.
    fn n_for(&self, lambda: f64) -> usize {
        if !self.refine {
            return self.base_n;
        }
        let kappa_min = self.spec.kappa1.abs().min(self.spec.kappa2.abs());
        let h_max = (kappa_min / (self.resolution_floor as f64 * lambda)).sqrt();
        let scale = match &self.domain {
            Domain::UnitDisk => 2.0,
            Domain::Rectangle { width, .. } => *width,
            Domain::MaskedBitmap(_) => 1.0,
        };
        let need = (scale / h_max).ceil() as usize;
        let need = need.div_ceil(32) * 32;
        need.max(self.base_n)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AsymptoticsRow {
    pub lambda: f64,
    pub n: usize,
    pub h: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub diam1: f64,
    pub diam2: f64,
    pub centroid1: Point,
    pub centroid2: Point,
    pub dist1: f64,
    pub dist2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub energy: f64,
    pub t_core: f64,
    pub e_testfn: f64,
    pub mu_bound_lhs: f64,
    pub mu_bound_rhs: f64,
    pub cells1: usize,
    pub cells2: usize,
    pub iso1: f64,
    pub iso2: f64,
    pub iterations: usize,
    pub under_resolved: bool,
    pub failed: bool,
    pub error: Option<String>,
}

impl AsymptoticsRow {
    fn failed_row(lambda: f64, n: usize, err: &Error) -> Self {
        AsymptoticsRow {
            lambda,
            n,
            h: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            diam1: 0.0,
            diam2: 0.0,
            centroid1: Point::new(0.0, 0.0),
            centroid2: Point::new(0.0, 0.0),
            dist1: 0.0,
            dist2: 0.0,
            mu1: 0.0,
            mu2: 0.0,
            energy: 0.0,
            t_core: 0.0,
            e_testfn: 0.0,
            mu_bound_lhs: 0.0,
            mu_bound_rhs: 0.0,
            cells1: 0,
            cells2: 0,
            iso1: 0.0,
            iso2: 0.0,
            iterations: 0,
            under_resolved: false,
            failed: true,
            error: Some(format!("{}: {err}", err.name())),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AsymptoticsReport {
    pub rows: Vec<AsymptoticsRow>,
    /// Least-squares slope of E against ln(lambda) over succeeded rows.
    pub slope_e_vs_lnlambda: f64,
    /// Expected slope `sum kappa_i^2 / (8 pi)` (from the energy lower
    /// bound with `ln eps = -1/2 ln lambda + const`).
    pub slope_e_expected: f64,
    /// Least-squares slope of `sum |kappa_i| mu_i` against ln(lambda).
    pub slope_mu_vs_lnlambda: f64,
    /// Expected slope `sum kappa_i^2 / (4 pi)`.
    pub slope_mu_expected: f64,
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Run the solver per lambda (refining the grid when asked), assemble one
/// row per lambda, and fit the ln-lambda slopes. Row failures are
/// recorded and do not abort the sweep.
pub fn sweep_lambda(cfg: &SweepConfig) -> AsymptoticsReport {
    let mut grids: BTreeMap<usize, (Arc<Grid>, Arc<GreenOperator>)> = BTreeMap::new();
    let mut rows = Vec::with_capacity(cfg.lambdas.len());

    for &lambda in &cfg.lambdas {
        let n = cfg.n_for(lambda);
        let row = (|| -> Result<AsymptoticsRow> {
            if !grids.contains_key(&n) {
                let grid = discretize(cfg.domain.clone(), n)?;
                let op = Arc::new(build_green(&grid)?);
                grids.insert(n, (grid, op));
            }
            let (grid, op) = grids.get(&n).unwrap();
            let mut scfg = SolverConfig::new(cfg.spec.clone(), lambda);
            scfg.max_iters = cfg.max_iters;
            scfg.energy_tol = cfg.energy_tol;
            let patch = solve_steady(&scfg, op)?;
            let bounds = energy_bounds_check(&patch, op)?;
            let c1 = centroid(&patch.omega1, cfg.spec.kappa1)?;
            let c2 = centroid(&patch.omega2, cfg.spec.kappa2)?;
            let cells1 = patch.support(0).len();
            let cells2 = patch.support(1).len();
            Ok(AsymptoticsRow {
                lambda,
                n,
                h: grid.h(),
                eps1: epsilon_scale(cfg.spec.kappa1, lambda),
                eps2: epsilon_scale(cfg.spec.kappa2, lambda),
                diam1: patch_diameter(&patch.omega1)?,
                diam2: patch_diameter(&patch.omega2)?,
                centroid1: c1,
                centroid2: c2,
                dist1: c1.dist(cfg.spec.b1.center),
                dist2: c2.dist(cfg.spec.b2.center),
                mu1: patch.mu1,
                mu2: patch.mu2,
                energy: patch.energy,
                t_core: core_energy(&patch),
                e_testfn: bounds.e_testfn,
                mu_bound_lhs: bounds.mu_bound_lhs,
                mu_bound_rhs: bounds.mu_bound_rhs,
                cells1,
                cells2,
                iso1: isoperimetric_ratio(&patch.omega1).unwrap_or(0.0),
                iso2: isoperimetric_ratio(&patch.omega2).unwrap_or(0.0),
                iterations: patch.iterations,
                under_resolved: cells1 < cfg.resolution_floor || cells2 < cfg.resolution_floor,
                failed: false,
                error: None,
            })
        })();
        rows.push(match row {
            Ok(r) => r,
            Err(e) => AsymptoticsRow::failed_row(lambda, n, &e),
        });
    }

    let ok: Vec<&AsymptoticsRow> = rows.iter().filter(|r| !r.failed).collect();
    let e_pts: Vec<(f64, f64)> = ok.iter().map(|r| (r.lambda.ln(), r.energy)).collect();
    let mu_pts: Vec<(f64, f64)> = ok.iter().map(|r| (r.lambda.ln(), r.mu_bound_lhs)).collect();
    let k2 = cfg.spec.kappa1 * cfg.spec.kappa1 + cfg.spec.kappa2 * cfg.spec.kappa2;
    AsymptoticsReport {
        rows,
        slope_e_vs_lnlambda: fit_slope(&e_pts),
        slope_e_expected: k2 / (8.0 * PI),
        slope_mu_vs_lnlambda: fit_slope(&mu_pts),
        slope_mu_expected: k2 / (4.0 * PI),
    }
}
