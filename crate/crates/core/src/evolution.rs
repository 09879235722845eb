//! 2-D Euler evolution in vorticity form (semi-Lagrangian transport with
//! monotone interpolation), exact rearrangement-class perturbations, the
//! level-set energy comparison for local maximality, and finite-horizon
//! stability probes.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::Rng;

use crate::domain::{Grid, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::green::{self, velocity, GreenOperator};
use crate::steady::SteadyPatch;

/// Transport scheme for the semi-Lagrangian trace-back. All variants are
/// clipped against the foot-point stencil and the global initial bounds,
/// so the transport maximum principle holds exactly. The
/// error-compensated variant (back-and-forth correction around the
/// bicubic stencil) keeps patch interfaces sharp over many turnovers and
/// is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum InterpKind {
    ClippedBilinear,
    ClippedBicubic,
    /// Bicubic with back-and-forth error compensation and a monotone
    /// limiter.
    BfeccBicubic,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LedgerEntry {
    pub t: f64,
    pub energy: f64,
    pub mass: f64,
    pub linf: f64,
    pub histogram: [u32; 16],
    /// Mass restored by the conservative fixup this step.
    pub mass_fixup: f64,
}

/// Time-dependent vorticity with a conserved-quantity ledger. One entry
/// is appended per step for the state the step departed from.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub omega: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub interp: InterpKind,
    pub ledger: Vec<LedgerEntry>,
    bound_lo: f64,
    bound_hi: f64,
    pos_target: f64,
    neg_target: f64,
    hist_lo: f64,
    hist_hi: f64,
}

impl EvolutionState {
    pub fn new(omega: ScalarField, dt: f64, interp: InterpKind) -> Self {
        let (lo, hi) = omega.min_max();
        let h2 = omega.grid().h() * omega.grid().h();
        let pos: f64 = omega.values().iter().filter(|v| **v > 0.0).sum::<f64>() * h2;
        let neg: f64 = -omega.values().iter().filter(|v| **v < 0.0).sum::<f64>() * h2;
        EvolutionState {
            omega,
            t: 0.0,
            dt,
            interp,
            ledger: Vec::new(),
            bound_lo: lo,
            bound_hi: hi,
            pos_target: pos,
            neg_target: neg,
            hist_lo: lo,
            hist_hi: hi,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.bound_lo, self.bound_hi)
    }

    fn histogram(&self) -> [u32; 16] {
        let mut bins = [0u32; 16];
        let span = (self.hist_hi - self.hist_lo).max(1e-300);
        for i in self.omega.grid().inside_indices() {
            let v = self.omega.get_idx(i);
            let b = ((v - self.hist_lo) / span * 16.0).floor().clamp(0.0, 15.0) as usize;
            bins[b] += 1;
        }
        bins
    }
}

/// Largest stable step for the stated CFL bound `dt |v|_inf <= h/2`.
pub fn max_cfl_dt(omega: &ScalarField, green: &GreenOperator) -> Result<f64> {
    let sf = green.stream(omega)?;
    let (u, v) = velocity(&sf);
    let vmax = speed_max(&u, &v);
    let h = omega.grid().h();
    if vmax == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(0.5 * h / vmax)
    }
}

fn speed_max(u: &ScalarField, v: &ScalarField) -> f64 {
    u.values()
        .iter()
        .zip(v.values())
        .fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()))
}

fn clip_inside(grid: &Grid, from: Point, to: Point) -> Point {
    if grid.contains_point(to) {
        return to;
    }
    let mut lo = from;
    let mut hi = to;
    for _ in 0..40 {
        let mid = (lo + hi) * 0.5;
        if grid.contains_point(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Range of the four cell values surrounding `p` (off-grid reads 0).
fn bilinear_stencil_bounds(f: &ScalarField, p: Point) -> (f64, f64) {
    let g = f.grid();
    let gx = (p.x - g.origin().x) / g.h() - 0.5;
    let gy = (p.y - g.origin().y) / g.h() - 0.5;
    let (i, j) = (gx.floor() as i64, gy.floor() as i64);
    let read = |ix: i64, iy: i64| -> f64 {
        if ix < 0 || iy < 0 || ix >= g.nx() as i64 || iy >= g.ny() as i64 {
            0.0
        } else {
            f.values()[iy as usize * g.nx() + ix as usize]
        }
    };
    let vals = [read(i, j), read(i + 1, j), read(i, j + 1), read(i + 1, j + 1)];
    (
        vals.iter().fold(f64::INFINITY, |m, v| m.min(*v)),
        vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)),
    )
}

fn interp_cubic_clipped(f: &ScalarField, p: Point) -> f64 {
    let g = f.grid();
    let gx = (p.x - g.origin().x) / g.h() - 0.5;
    let gy = (p.y - g.origin().y) / g.h() - 0.5;
    let ix0 = gx.floor();
    let iy0 = gy.floor();
    let tx = gx - ix0;
    let ty = gy - iy0;
    let read = |ix: i64, iy: i64| -> f64 {
        if ix < 0 || iy < 0 || ix >= g.nx() as i64 || iy >= g.ny() as i64 {
            0.0
        } else {
            f.values()[iy as usize * g.nx() + ix as usize]
        }
    };
    let (i, j) = (ix0 as i64, iy0 as i64);
    let cr = |pm1: f64, p0: f64, p1: f64, p2: f64, t: f64| -> f64 {
        0.5 * (2.0 * p0
            + (-pm1 + p1) * t
            + (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2) * t * t
            + (-pm1 + 3.0 * p0 - 3.0 * p1 + p2) * t * t * t)
    };
    let mut rows = [0.0; 4];
    for (r, row) in rows.iter_mut().enumerate() {
        let jy = j - 1 + r as i64;
        *row = cr(
            read(i - 1, jy),
            read(i, jy),
            read(i + 1, jy),
            read(i + 2, jy),
            tx,
        );
    }
    let raw = cr(rows[0], rows[1], rows[2], rows[3], ty);
    // Monotone clip to the bilinear stencil's range.
    let inner = [read(i, j), read(i + 1, j), read(i, j + 1), read(i + 1, j + 1)];
    let lo = inner.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let hi = inner.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    raw.clamp(lo, hi)
}

/// One semi-Lagrangian step: refresh the stream function, trace
/// characteristics backward with the midpoint rule, interpolate with the
/// monotone stencil, and restore the per-sign masses exactly with a
/// clipped multiplicative fixup.
pub fn step(state: &EvolutionState, green: &GreenOperator) -> Result<EvolutionState> {
    let grid = state.omega.grid().clone();
    let h = grid.h();
    let sf = green.stream(&state.omega)?;
    let (u, v) = velocity(&sf);
    let vmax = speed_max(&u, &v);
    if state.dt * vmax > 0.5 * h * (1.0 + 1e-12) {
        return Err(Error::CflViolation(state.dt * vmax, 0.5 * h));
    }
    let energy = 0.5 * state.omega.inner(&sf.psi)?;

    let vel_at = |p: Point| Point::new(u.interp_bilinear(p), v.interp_bilinear(p));
    let dt = state.dt;
    let feet = |sgn: f64| -> Vec<Point> {
        grid.inside_indices()
            .map(|c| {
                let x = grid.center_idx(c);
                let v1 = vel_at(x);
                let xm = clip_inside(&grid, x, x - v1 * (0.5 * sgn * dt));
                let v2 = vel_at(xm);
                clip_inside(&grid, x, x - v2 * (sgn * dt))
            })
            .collect()
    };
    let cubic = !matches!(state.interp, InterpKind::ClippedBilinear);
    let advect = |f: &ScalarField, feet: &[Point]| -> Vec<f64> {
        let mut out = vec![0.0; grid.cell_count()];
        for (k, c) in grid.inside_indices().enumerate() {
            out[c] = if cubic {
                interp_cubic_clipped(f, feet[k])
            } else {
                f.interp_bilinear(feet[k])
            };
        }
        out
    };

    let feet_fwd = feet(1.0);
    let mut new_vals = match state.interp {
        InterpKind::ClippedBilinear | InterpKind::ClippedBicubic => {
            advect(&state.omega, &feet_fwd)
        }
        InterpKind::BfeccBicubic => {
            // Back-and-forth error compensation: transport, transport
            // back, feed the halved defect forward, then limit against
            // the original stencil at the foot point.
            let feet_bwd = feet(-1.0);
            let w1 = ScalarField::from_values(grid.clone(), advect(&state.omega, &feet_fwd))?;
            let w2 = advect(&w1, &feet_bwd);
            let mut corrected = vec![0.0; grid.cell_count()];
            for c in grid.inside_indices() {
                corrected[c] = state.omega.get_idx(c) + 0.5 * (state.omega.get_idx(c) - w2[c]);
            }
            let corrected = ScalarField::from_values(
                grid.clone(),
                corrected
                    .into_iter()
                    .map(|v| v.clamp(state.bound_lo, state.bound_hi))
                    .collect(),
            )?;
            let mut out = advect(&corrected, &feet_fwd);
            for (k, c) in grid.inside_indices().enumerate() {
                let (lo, hi) = bilinear_stencil_bounds(&state.omega, feet_fwd[k]);
                out[c] = out[c].clamp(lo, hi);
            }
            out
        }
    };
    for v in new_vals.iter_mut() {
        *v = v.clamp(state.bound_lo, state.bound_hi);
    }

    // Conservative fixup: the transported positive and negative masses
    // are conserved quantities; rescale each sign part (clipping at the
    // pointwise bound) until they match the initial masses.
    let h2 = h * h;
    let fixup = |vals: &mut [f64], sign: f64, target: f64, cap: f64| -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let cur = |vals: &[f64]| -> f64 {
            vals.iter()
                .map(|&v| if sign * v > 0.0 { sign * v } else { 0.0 })
                .sum::<f64>()
                * h2
        };
        let before = cur(vals);
        let mut now = before;
        for _ in 0..50 {
            if (now - target).abs() <= 1e-13 * target || now == 0.0 {
                break;
            }
            let f = target / now;
            for v in vals.iter_mut() {
                if sign * *v > 0.0 {
                    *v = sign * (f * (sign * *v)).min(cap);
                }
            }
            now = cur(vals);
        }
        (target - before).abs()
    };
    let fix_pos = fixup(&mut new_vals, 1.0, state.pos_target, state.bound_hi.max(0.0));
    let fix_neg = fixup(&mut new_vals, -1.0, state.neg_target, (-state.bound_lo).max(0.0));

    let omega_new = ScalarField::from_values(grid.clone(), new_vals)?;
    let mut ledger = state.ledger.clone();
    ledger.push(LedgerEntry {
        t: state.t,
        energy,
        mass: state.omega.integrate(),
        linf: state.omega.max_abs(),
        histogram: state.histogram(),
        mass_fixup: fix_pos + fix_neg,
    });

    Ok(EvolutionState {
        omega: omega_new,
        t: state.t + dt,
        dt,
        interp: state.interp,
        ledger,
        bound_lo: state.bound_lo,
        bound_hi: state.bound_hi,
        pos_target: state.pos_target,
        neg_target: state.neg_target,
        hist_lo: state.hist_lo,
        hist_hi: state.hist_hi,
    })
}

/// Rearrangement-class perturbations of a steady patch. Each produces an
/// initial vorticity with exactly the same cell-value histogram.
#[derive(Debug, Clone)]
pub enum Perturbation {
    /// Shift one component by a displacement snapped to whole cells.
    TranslatePatch {
        component: usize,
        dx: f64,
        dy: f64,
    },
    /// Rotate both components about the domain center.
    RotatePatchPair { angle: f64 },
    /// Transport along the area-preserving flow of `J grad xi` for the
    /// given time, then restore the two-level histogram by rank
    /// selection.
    AreaPreservingFlow { xi: ScalarField, time: f64 },
}

impl Perturbation {
    pub fn label(&self) -> String {
        match self {
            Perturbation::TranslatePatch { component, dx, dy } => {
                format!("translate{}:{:.4},{:.4}", component + 1, dx, dy)
            }
            Perturbation::RotatePatchPair { angle } => format!("rotate:{angle:.5}"),
            Perturbation::AreaPreservingFlow { time, .. } => format!("flow:{time:.5}"),
        }
    }
}

fn domain_center(grid: &Grid) -> Point {
    let o = grid.origin();
    Point::new(
        o.x + 0.5 * grid.nx() as f64 * grid.h(),
        o.y + 0.5 * grid.ny() as f64 * grid.h(),
    )
}

/// Exact-histogram check: the perturbed field must hold the same number
/// of `+lambda` and `-lambda` cells as the base patch and nothing else.
fn verify_rearrangement(base: &SteadyPatch, candidate: &ScalarField) -> Result<()> {
    let lam = base.lambda;
    let count = |f: &ScalarField, v: f64| f.values().iter().filter(|&&x| x == v).count();
    let n1b = count(&base.omega, lam);
    let n2b = count(&base.omega, -lam);
    let n1c = count(candidate, lam);
    let n2c = count(candidate, -lam);
    let nonzero = candidate.support().len();
    if n1b != n1c || n2b != n2c || nonzero != n1c + n2c {
        return Err(Error::Inapplicable(format!(
            "not an exact rearrangement: ({n1c},{n2c}) cells vs base ({n1b},{n2b})"
        )));
    }
    Ok(())
}

pub fn perturb(base: &SteadyPatch, p: &Perturbation) -> Result<ScalarField> {
    let grid = base.grid().clone();
    let out = match p {
        Perturbation::TranslatePatch { component, dx, dy } => {
            let h = grid.h();
            let sx = (dx / h).round() as i64;
            let sy = (dy / h).round() as i64;
            if sx == 0 && sy == 0 {
                return Ok(base.omega.clone());
            }
            let moving = base.component(*component);
            let other = base.component(1 - *component);
            let other_support: HashSet<usize> = other.support().into_iter().collect();
            let mut vals = other.values().to_vec();
            for c in moving.support() {
                let (ix, iy) = grid.coords(c);
                let (jx, jy) = (ix as i64 + sx, iy as i64 + sy);
                if jx < 0 || jy < 0 || jx as usize >= grid.nx() || jy as usize >= grid.ny() {
                    return Err(Error::SupportLeavesDomain);
                }
                let j = grid.index(jx as usize, jy as usize);
                if !grid.is_inside_idx(j) {
                    return Err(Error::SupportLeavesDomain);
                }
                if other_support.contains(&j) {
                    return Err(Error::Inapplicable(
                        "translated component collides with the other patch".into(),
                    ));
                }
                vals[j] = moving.get_idx(c);
            }
            ScalarField::from_values(grid.clone(), vals)?
        }
        Perturbation::RotatePatchPair { angle } => {
            let center = domain_center(&grid);
            let mut vals = vec![0.0; grid.cell_count()];
            let mut taken: HashSet<usize> = HashSet::new();
            for i in 0..2 {
                let sel = rotate_component(&grid, base.component(i), center, *angle)?;
                let s = base.spec.sign(i) * base.lambda;
                for &c in &sel {
                    if !taken.insert(c) {
                        return Err(Error::Inapplicable(
                            "rotated components collide".into(),
                        ));
                    }
                    vals[c] = s;
                }
            }
            ScalarField::from_values(grid.clone(), vals)?
        }
        Perturbation::AreaPreservingFlow { xi, time } => {
            if !xi.same_grid(&base.omega) {
                return Err(Error::GridMismatch);
            }
            let sf = green::StreamFunction {
                psi: xi.clone(),
                source: ScalarField::zeros(grid.clone()),
            };
            let (u, v) = velocity(&sf);
            let wmax = speed_max(&u, &v);
            if wmax == 0.0 || *time == 0.0 {
                return Ok(base.omega.clone());
            }
            let nsub = ((time.abs() * wmax / (0.25 * grid.h())).ceil() as usize).max(1);
            let dt = -time / nsub as f64; // backward map
            let vel_at = |p: Point| Point::new(u.interp_bilinear(p), v.interp_bilinear(p));
            let mut raw = vec![0.0; grid.cell_count()];
            for c in grid.inside_indices() {
                let mut q = grid.center_idx(c);
                for _ in 0..nsub {
                    // RK4 on the divergence-free bump flow.
                    let k1 = vel_at(q);
                    let k2 = vel_at(clip_inside(&grid, q, q + k1 * (0.5 * dt)));
                    let k3 = vel_at(clip_inside(&grid, q, q + k2 * (0.5 * dt)));
                    let k4 = vel_at(clip_inside(&grid, q, q + k3 * dt));
                    let move_ = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                    q = clip_inside(&grid, q, q + move_);
                }
                raw[c] = base.omega.interp_bilinear(q);
            }
            // Restore the exact two-level histogram by rank selection.
            let n1 = base.support(0).len();
            let n2 = base.support(1).len();
            let mut order: Vec<usize> = grid.inside_indices().collect();
            order.sort_unstable_by(|&a, &b| {
                raw[b].partial_cmp(&raw[a]).unwrap().then(a.cmp(&b))
            });
            let top: Vec<usize> = order[..n1].to_vec();
            let bottom: Vec<usize> = order[order.len() - n2..].to_vec();
            let tset: HashSet<usize> = top.iter().copied().collect();
            if bottom.iter().any(|c| tset.contains(c)) {
                return Err(Error::Inapplicable(
                    "flow too strong: level sets collide".into(),
                ));
            }
            let mut vals = vec![0.0; grid.cell_count()];
            for &c in &top {
                vals[c] = base.lambda;
            }
            for &c in &bottom {
                vals[c] = -base.lambda;
            }
            ScalarField::from_values(grid.clone(), vals)?
        }
    };
    verify_rearrangement(base, &out)?;
    Ok(out)
}

/// Rotated support by supersampled coverage ranking with an exact cell
/// count.
fn rotate_component(
    grid: &Grid,
    comp: &ScalarField,
    center: Point,
    angle: f64,
) -> Result<Vec<usize>> {
    let support = comp.support();
    let n = support.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let in_orig: HashSet<usize> = support.iter().copied().collect();
    // Candidate cells: neighborhoods of forward-rotated support centers.
    let mut candidates: HashSet<usize> = HashSet::new();
    for &c in &support {
        let q = grid.center_idx(c).rotated_about(center, angle);
        if let Some((ix, iy)) = grid.locate(q) {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx >= 0 && jy >= 0 && (jx as usize) < grid.nx() && (jy as usize) < grid.ny()
                    {
                        candidates.insert(grid.index(jx as usize, jy as usize));
                    }
                }
            }
        } else {
            return Err(Error::SupportLeavesDomain);
        }
    }
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(candidates.len());
    for &c in &candidates {
        let (ix, iy) = grid.coords(c);
        let base_pt = grid.center(ix, iy);
        let mut hits = 0usize;
        for sy in 0..4 {
            for sx in 0..4 {
                let s = Point::new(
                    base_pt.x + ((sx as f64 + 0.5) / 4.0 - 0.5) * grid.h(),
                    base_pt.y + ((sy as f64 + 0.5) / 4.0 - 0.5) * grid.h(),
                );
                let back = s.rotated_about(center, -angle);
                if let Some((bx, by)) = grid.locate(back) {
                    if in_orig.contains(&grid.index(bx, by)) {
                        hits += 1;
                    }
                }
            }
        }
        if hits > 0 {
            scored.push((hits as f64, c));
        }
    }
    if scored.len() < n {
        // Pathological only for sub-cell patches; pad by distance to the
        // rotated centroid so the count stays exact.
        let centroid = {
            let mut m = Point::new(0.0, 0.0);
            for &c in &support {
                m = m + grid.center_idx(c);
            }
            (m * (1.0 / n as f64)).rotated_about(center, angle)
        };
        let mut extra: Vec<(f64, usize)> = candidates
            .iter()
            .filter(|c| !scored.iter().any(|(_, s)| s == *c))
            .map(|&c| (-grid.center_idx(c).dist(centroid), c))
            .collect();
        extra.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        scored.extend(extra);
    }
    if scored.len() < n {
        return Err(Error::SupportLeavesDomain);
    }
    scored.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut sel: Vec<usize> = scored[..n].iter().map(|&(_, c)| c).collect();
    if sel.iter().any(|&c| !grid.is_inside_idx(c)) {
        return Err(Error::SupportLeavesDomain);
    }
    sel.sort_unstable();
    Ok(sel)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ProbeSample {
    pub t: f64,
    pub turnovers: f64,
    pub l1: f64,
    pub energy: f64,
    pub mass: f64,
}

/// Finite-horizon evidence table for one perturbation. `note` spells out
/// that this is not a proof.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StabilityProbe {
    pub samples: Vec<ProbeSample>,
    pub turnover: f64,
    pub dt: f64,
    pub steps: usize,
    pub initial_l1: f64,
    pub max_l1: f64,
    /// `max_l1 / initial_l1`; absent for an identity perturbation.
    pub max_over_initial: Option<f64>,
    pub energy_drift_rel: f64,
    pub mass_drift_abs: f64,
    pub max_step_fixup: f64,
    pub note: String,
}

/// Rotation period of the base patch core: `4 pi |Omega_1| / |kappa_1|`
/// (for a Rankine core this is exactly one revolution).
pub fn turnover_time(base: &SteadyPatch) -> f64 {
    let h2 = base.grid().h() * base.grid().h();
    let area = base.support(0).len() as f64 * h2;
    4.0 * PI * area / base.spec.kappa1.abs()
}

pub fn stability_probe(
    base: &SteadyPatch,
    p: &Perturbation,
    horizon_turnovers: f64,
    green: &GreenOperator,
    interp: InterpKind,
) -> Result<StabilityProbe> {
    let omega0 = perturb(base, p)?;
    let initial_l1 = omega0.l1_distance(&base.omega)?;
    let turnover = turnover_time(base);
    let dt_max = max_cfl_dt(&omega0, green)?;
    let dt = if dt_max.is_finite() {
        0.9 * dt_max
    } else {
        turnover / 64.0
    };
    let steps = ((horizon_turnovers * turnover) / dt).ceil() as usize;
    let sample_every = ((0.05 * turnover / dt).round() as usize).max(1);

    let mut state = EvolutionState::new(omega0, dt, interp);
    let mut l1_by_state = vec![initial_l1];
    for _ in 0..steps {
        state = step(&state, green)?;
        l1_by_state.push(state.omega.l1_distance(&base.omega)?);
    }

    let final_energy = green.energy(&state.omega)?;
    let mut samples = Vec::new();
    for k in (0..steps).step_by(sample_every) {
        let e = &state.ledger[k];
        samples.push(ProbeSample {
            t: e.t,
            turnovers: e.t / turnover,
            l1: l1_by_state[k],
            energy: e.energy,
            mass: e.mass,
        });
    }
    samples.push(ProbeSample {
        t: state.t,
        turnovers: state.t / turnover,
        l1: l1_by_state[steps],
        energy: final_energy,
        mass: state.omega.integrate(),
    });

    let e0 = samples[0].energy;
    let m0 = samples[0].mass;
    let max_l1 = l1_by_state.iter().fold(0.0f64, |m, v| m.max(*v));
    let energy_drift_rel = samples
        .iter()
        .map(|s| (s.energy - e0).abs())
        .fold(0.0f64, f64::max)
        / e0.abs().max(1e-300);
    let mass_drift_abs = samples
        .iter()
        .map(|s| (s.mass - m0).abs())
        .fold(0.0f64, f64::max);
    let max_step_fixup = state
        .ledger
        .iter()
        .map(|e| e.mass_fixup)
        .fold(0.0f64, f64::max);
    Ok(StabilityProbe {
        samples,
        turnover,
        dt,
        steps,
        initial_l1,
        max_l1,
        max_over_initial: (initial_l1 > 1e-14).then(|| max_l1 / initial_l1),
        energy_drift_rel,
        mass_drift_abs,
        max_step_fixup,
        note: "finite-horizon numerical evidence; not a proof of stability".into(),
    })
}

/// The three-energy comparison behind local maximality: rank-select the
/// candidate's stream-function level sets at the patch areas, rebuild the
/// two-level field, and compare energies.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LocalMaxTest {
    pub e_candidate: f64,
    pub e_bar: f64,
    pub e_base: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub tie_tolerance: f64,
    pub first_holds: bool,
    pub second_holds: bool,
    pub chain_holds: bool,
}

pub fn local_max_test(
    base: &SteadyPatch,
    candidate: &ScalarField,
    green: &GreenOperator,
) -> Result<LocalMaxTest> {
    if !candidate.same_grid(&base.omega) {
        return Err(Error::GridMismatch);
    }
    verify_rearrangement(base, candidate)?;
    let grid = base.grid().clone();
    let psi_n = green.apply(candidate)?;
    let e_candidate = 0.5 * candidate.inner(&psi_n)?;

    let n1 = base.support(0).len();
    let n2 = base.support(1).len();
    let mut order: Vec<usize> = grid.inside_indices().collect();
    order.sort_unstable_by(|&a, &b| {
        psi_n
            .get_idx(b)
            .partial_cmp(&psi_n.get_idx(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    if n1 + n2 >= order.len() {
        return Err(Error::Inapplicable("patches fill the domain".into()));
    }
    let sel1: Vec<usize> = order[..n1].to_vec();
    let nu1 = psi_n.get_idx(order[n1]);
    let sel2_cells: Vec<usize> = order[order.len() - n2..].to_vec();
    let nu2 = -psi_n.get_idx(order[order.len() - n2 - 1]);

    // The construction is only valid when the level sets land in the
    // confining balls.
    for &c in &sel1 {
        if !base.spec.b1.contains(grid.center_idx(c)) {
            return Err(Error::Inapplicable(
                "superlevel set leaks outside the first ball".into(),
            ));
        }
    }
    for &c in &sel2_cells {
        if !base.spec.b2.contains(grid.center_idx(c)) {
            return Err(Error::Inapplicable(
                "sublevel set leaks outside the second ball".into(),
            ));
        }
    }

    let mut vals = vec![0.0; grid.cell_count()];
    for &c in &sel1 {
        vals[c] = base.lambda;
    }
    for &c in &sel2_cells {
        vals[c] = -base.lambda;
    }
    let omega_bar = ScalarField::from_values(grid.clone(), vals)?;
    let e_bar = green.energy(&omega_bar)?;
    let e_base = base.energy;

    let h2 = grid.h() * grid.h();
    let psi_sup = base.psi.psi.max_abs().max(psi_n.max_abs());
    let tie_tolerance = base.lambda * h2 * psi_sup;
    let scale = e_base.abs().max(e_bar.abs()).max(1e-300);
    let first_holds = e_candidate <= e_bar + 1e-12 * scale;
    let second_holds = e_bar <= e_base + tie_tolerance;
    Ok(LocalMaxTest {
        e_candidate,
        e_bar,
        e_base,
        nu1,
        nu2,
        tie_tolerance,
        first_holds,
        second_holds,
        chain_holds: first_holds && second_holds,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RieszComponent {
    pub self_interaction_candidate: f64,
    pub self_interaction_ball: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RieszReport {
    pub components: Vec<RieszComponent>,
    pub holds_all: bool,
}

/// Free-space log self-interaction of each candidate component against
/// its equal-area discrete ball about the component centroid. The ball
/// arrangement must win, up to quadrature tolerance.
pub fn riesz_check(base: &SteadyPatch, candidate: &ScalarField, rel_tol: f64) -> Result<RieszReport> {
    let grid = base.grid().clone();
    if !matches!(grid.domain(), crate::domain::Domain::UnitDisk) {
        return Err(Error::NonDiskDomain);
    }
    if !candidate.same_grid(&base.omega) {
        return Err(Error::GridMismatch);
    }
    let mut components = Vec::new();
    for i in 0..2 {
        let sign = base.spec.sign(i);
        let cells: Vec<usize> = candidate
            .support()
            .into_iter()
            .filter(|&c| sign * candidate.get_idx(c) > 0.0)
            .collect();
        if cells.is_empty() {
            return Err(Error::EmptySupport);
        }
        for &c in &cells {
            if !base.spec.ball(i).contains(grid.center_idx(c)) {
                return Err(Error::Inapplicable(format!(
                    "component {} support leaves its ball",
                    i + 1
                )));
            }
        }
        let lam = base.lambda;
        let cand_val = log_self_interaction(&grid, &cells, lam);

        // Equal-count discrete ball about the component centroid.
        let mut cx = 0.0;
        let mut cy = 0.0;
        for &c in &cells {
            let p = grid.center_idx(c);
            cx += p.x;
            cy += p.y;
        }
        let centroid = Point::new(cx / cells.len() as f64, cy / cells.len() as f64);
        let mut ranked: Vec<usize> = grid.inside_indices().collect();
        ranked.sort_unstable_by(|&a, &b| {
            let da = grid.center_idx(a).dist(centroid);
            let db = grid.center_idx(b).dist(centroid);
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let ball_cells: Vec<usize> = ranked[..cells.len()].to_vec();
        let ball_val = log_self_interaction(&grid, &ball_cells, lam);

        components.push(RieszComponent {
            self_interaction_candidate: cand_val,
            self_interaction_ball: ball_val,
            holds: ball_val >= cand_val - rel_tol * ball_val.abs(),
        });
    }
    let holds_all = components.iter().all(|c| c.holds);
    Ok(RieszReport {
        components,
        holds_all,
    })
}

/// `sum_{c,c'} (1/2pi) ln(1/|c-c'|) w_c w_c' h^4` over a constant-weight
/// cell set, with the equal-area-disk diagonal rule.
fn log_self_interaction(grid: &Grid, cells: &[usize], weight: f64) -> f64 {
    let h = grid.h();
    let h2 = h * h;
    let inv_2pi = 1.0 / (2.0 * PI);
    let pts: Vec<Point> = cells.iter().map(|&c| grid.center_idx(c)).collect();
    let mut acc = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            acc += 2.0 * inv_2pi * (1.0 / pts[i].dist(pts[j])).ln() * h2 * h2;
        }
    }
    acc += pts.len() as f64 * green::self_cell_log_integral(h) * h2;
    acc * weight * weight
}

/// Deterministic family of small rearrangement perturbations: one-cell
/// translations, small pair rotations, and weak bump flows.
pub fn sample_rearrangement_perturbations<R: Rng>(
    base: &SteadyPatch,
    count: usize,
    rng: &mut R,
) -> Vec<Perturbation> {
    let grid = base.grid().clone();
    let h = grid.h();
    let center = domain_center(&grid);
    let r1 = base.spec.b1.center.dist(center).max(h);
    let r2 = base.spec.b2.center.dist(center).max(h);
    let eps1 = crate::asymptotics::epsilon_scale(base.spec.kappa1, base.lambda);

    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        match k % 4 {
            0 | 1 => {
                let component = k % 2;
                let th = rng.gen_range(0.0..2.0 * PI);
                out.push(Perturbation::TranslatePatch {
                    component,
                    dx: 1.2 * h * th.cos(),
                    dy: 1.2 * h * th.sin(),
                });
            }
            2 => {
                let scale = rng.gen_range(0.5..1.5);
                let angle = scale * h / r1.max(r2);
                out.push(Perturbation::RotatePatchPair { angle });
            }
            _ => {
                let th = rng.gen_range(0.0..2.0 * PI);
                let off = Point::new(2.0 * eps1 * th.cos(), 2.0 * eps1 * th.sin());
                let c = base.spec.b1.center + off;
                let width = 6.0 * eps1;
                let xi = ScalarField::from_fn(grid.clone(), |p| {
                    crate::steady::bump(p, c, width)
                })
                .expect("finite bump");
                // Scale the flow time so the maximal displacement is
                // about one cell.
                let sf = green::StreamFunction {
                    psi: xi.clone(),
                    source: ScalarField::zeros(grid.clone()),
                };
                let (u, v) = velocity(&sf);
                let wmax = speed_max(&u, &v).max(1e-12);
                let time = rng.gen_range(0.6..1.4) * h / wmax;
                out.push(Perturbation::AreaPreservingFlow { xi, time });
            }
        }
    }
    out
}
