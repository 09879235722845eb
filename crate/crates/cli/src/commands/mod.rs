//! One module per subcommand. Each returns the list of failed invariants
//! (empty list = exit 0); configuration problems surface as `CliError`.

mod evolve;
mod green_check;
mod kr_min;
mod localmax;
mod solve;
mod sweep;

pub use evolve::run_evolve;
pub use green_check::run_green_check;
pub use kr_min::run_kr_min;
pub use localmax::run_localmax;
pub use solve::run_solve;
pub use sweep::run_sweep;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use vortexpatch::*;
// The crate exports its own 1-parameter Result alias; keep std's here.
use std::result::Result;

use crate::config::{ConfigError, RunConfig};
use crate::reports::OutDir;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Invariant failures carried to exit code 2.
pub type Failures = Vec<String>;

pub fn grid_for(cfg: &RunConfig) -> Result<Arc<Grid>, CliError> {
    let domain = cfg.domain()?;
    discretize(domain, cfg.n).map_err(|e| CliError::Config(e.to_string()))
}

/// Default per-vortex search boxes around the configured seeds.
pub fn default_search_box(cfg: &RunConfig, grid: &Grid) -> SearchBox {
    let span = match grid.domain() {
        Domain::UnitDisk => 0.35,
        Domain::Rectangle { width, height } => 0.35 * width.min(*height),
        Domain::MaskedBitmap(_) => {
            0.35 * (grid.nx().min(grid.ny()) as f64) * grid.h()
        }
    };
    let clip = |p: Point, lo: Point, hi: Point| {
        Point::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y))
    };
    let (blo, bhi) = match grid.domain() {
        Domain::UnitDisk => (Point::new(-0.92, -0.92), Point::new(0.92, 0.92)),
        Domain::Rectangle { width, height } => {
            let m = 0.04 * width.min(*height);
            (Point::new(m, m), Point::new(width - m, height - m))
        }
        Domain::MaskedBitmap(_) => {
            let o = grid.origin();
            let m = 2.0 * grid.h();
            (
                Point::new(o.x + m, o.y + m),
                Point::new(
                    o.x + grid.nx() as f64 * grid.h() - m,
                    o.y + grid.ny() as f64 * grid.h() - m,
                ),
            )
        }
    };
    let box_for = |s: Point| {
        (
            clip(Point::new(s.x - span, s.y - span), blo, bhi),
            clip(Point::new(s.x + span, s.y + span), blo, bhi),
        )
    };
    let (lo1, hi1) = box_for(cfg.seed1);
    let (lo2, hi2) = box_for(cfg.seed2);
    SearchBox { lo1, hi1, lo2, hi2 }
}

/// Locate the minimum with the configured evaluator and apply the
/// optional isolating-radius override.
pub fn locate_minimum(
    cfg: &RunConfig,
    kappa1: f64,
    kappa2: f64,
    grid: &Arc<Grid>,
    green: &GreenOperator,
) -> Result<KRMinimum, Error> {
    let seed = KRPoint::new(cfg.seed1, cfg.seed2, kappa1, kappa2)?;
    let sb = default_search_box(cfg, grid);
    let mut min = if matches!(grid.domain(), Domain::UnitDisk) {
        find_local_min(&seed, &sb, &DiskGreen)?
    } else {
        let eval = GridPointGreen::new(green);
        find_local_min(&seed, &sb, &eval)?
    };
    if let Some(delta) = cfg.delta {
        // Expert override: rebuild the balls without re-certifying.
        min.delta = delta;
        min.b1 = Ball::new(min.point.x1, delta)?;
        min.b2 = Ball::new(min.point.x2, delta)?;
    }
    Ok(min)
}

/// Serialized steady patch: report fields plus the two field dumps.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct PatchReport {
    pub domain_kind: String,
    pub width: f64,
    pub height: f64,
    pub mask_path: Option<String>,
    pub n: usize,
    pub lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub ball1: Ball,
    pub ball2: Ball,
    pub kr_value: f64,
    pub kr_delta: f64,
    pub kr_margin: Option<f64>,
    pub energy: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate_ties: bool,
    pub tie_cells: [usize; 2],
    pub circulation_error: f64,
    pub residual: f64,
    pub min_boundary_gradient: Option<f64>,
    pub energy_ledger: Vec<f64>,
}

pub fn save_patch(out: &OutDir, report: &PatchReport, patch: &SteadyPatch) -> Result<(), CliError> {
    out.write_json("solve_report.json", report)?;
    out.write_field("omega.vpf", &patch.omega)
        .map_err(|e| CliError::Io(e.to_string()))?;
    out.write_field("psi.vpf", &patch.psi.psi)
        .map_err(|e| CliError::Io(e.to_string()))?;
    out.write_pgm("omega.pgm", &patch.omega)
        .map_err(|e| CliError::Io(e.to_string()))?;
    out.write_pgm("psi.pgm", &patch.psi.psi)
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// Rebuild a patch (and its Green operator) from a solve output
/// directory.
pub fn load_patch(dir: &Path) -> Result<(Arc<Grid>, GreenOperator, SteadyPatch), CliError> {
    let text = std::fs::read_to_string(dir.join("solve_report.json"))
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let report: PatchReport =
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let domain = match report.domain_kind.as_str() {
        "disk" => Domain::UnitDisk,
        "rectangle" => Domain::rectangle(report.width, report.height)
            .map_err(|e| CliError::Config(e.to_string()))?,
        "mask" => {
            let path = report
                .mask_path
                .as_ref()
                .ok_or_else(|| CliError::Config("mask patch without mask_path".into()))?;
            Domain::MaskedBitmap(crate::config::read_mask_pgm(Path::new(path))?)
        }
        other => return Err(CliError::Config(format!("unknown domain kind {other:?}"))),
    };
    let grid = discretize(domain, report.n).map_err(|e| CliError::Config(e.to_string()))?;
    let green = build_green(&grid).map_err(|e| CliError::Config(e.to_string()))?;
    let omega = field_io::read_field_file(&dir.join("omega.vpf"), grid.clone())
        .map_err(|e| CliError::Io(e.to_string()))?;
    let psi = field_io::read_field_file(&dir.join("psi.vpf"), grid.clone())
        .map_err(|e| CliError::Io(e.to_string()))?;

    let spec = TwinVortexSpec {
        kappa1: report.kappa1,
        kappa2: report.kappa2,
        b1: report.ball1,
        b2: report.ball2,
    };
    let mut omega1 = ScalarField::zeros(grid.clone());
    let mut omega2 = ScalarField::zeros(grid.clone());
    for c in omega.support() {
        let p = grid.center_idx(c);
        if spec.b1.contains(p) {
            omega1.set_idx(c, omega.get_idx(c));
        } else if spec.b2.contains(p) {
            omega2.set_idx(c, omega.get_idx(c));
        }
    }
    let patch = SteadyPatch {
        omega: omega.clone(),
        omega1,
        omega2,
        mu1: report.mu1,
        mu2: report.mu2,
        psi: StreamFunction { psi, source: omega },
        energy: report.energy,
        iterations: report.iterations,
        converged: report.converged,
        degenerate_ties: report.degenerate_ties,
        tie_cells: report.tie_cells,
        energy_ledger: report.energy_ledger.clone(),
        spec,
        lambda: report.lambda,
    };
    Ok((grid, green, patch))
}

/// Parse a perturbation spec: `none`, `translate:D`, `translate:DX,DY`,
/// `translate2:DX[,DY]`, `rotate:ANGLE`, `flow:TIME`.
pub fn parse_perturbation(
    spec: &str,
    patch: &SteadyPatch,
) -> Result<Perturbation, CliError> {
    let bad = |s: &str| CliError::Config(format!("bad perturbation spec {s:?}"));
    if spec == "none" {
        return Ok(Perturbation::TranslatePatch {
            component: 0,
            dx: 0.0,
            dy: 0.0,
        });
    }
    let (kind, arg) = spec.split_once(':').ok_or_else(|| bad(spec))?;
    let nums: Vec<f64> = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad(spec))?;
    match (kind, nums.as_slice()) {
        ("translate", [d]) => Ok(Perturbation::TranslatePatch {
            component: 0,
            dx: *d,
            dy: 0.0,
        }),
        ("translate", [dx, dy]) => Ok(Perturbation::TranslatePatch {
            component: 0,
            dx: *dx,
            dy: *dy,
        }),
        ("translate2", [d]) => Ok(Perturbation::TranslatePatch {
            component: 1,
            dx: *d,
            dy: 0.0,
        }),
        ("translate2", [dx, dy]) => Ok(Perturbation::TranslatePatch {
            component: 1,
            dx: *dx,
            dy: *dy,
        }),
        ("rotate", [angle]) => Ok(Perturbation::RotatePatchPair { angle: *angle }),
        ("flow", [time]) => {
            // The standard probe bump: offset from the first patch so the
            // patch sits in the stirring region.
            let eps = epsilon_scale(patch.spec.kappa1, patch.lambda);
            let c = patch.spec.b1.center + Point::new(2.0 * eps, 0.0);
            let grid = patch.grid().clone();
            let xi = ScalarField::from_fn(grid, |p| steady_bump(p, c, 6.0 * eps))
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Perturbation::AreaPreservingFlow { xi, time: *time })
        }
        _ => Err(bad(spec)),
    }
}

fn steady_bump(p: Point, center: Point, width: f64) -> f64 {
    vortexpatch::steady::bump(p, center, width)
}
