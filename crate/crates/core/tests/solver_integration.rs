//! Solver-level behavior that spans modules: seed independence,
//! steadiness residuals against non-steady controls, boundary gradients,
//! and the detached-support guard.

mod common;

use common::*;
use vortexpatch::*;

#[test]
fn dented_seed_flows_back_to_reference_support() {
    // Empirical uniqueness evidence: a jagged feasible seed (cells torn
    // off one flank and parked on the ball rim) is repaired back to the
    // reference maximizer. Whole-blob translations, by contrast, are
    // themselves discrete fixed points at this resolution, so uniqueness
    // is only tested modulo cell-scale blob placement.
    let grid = discretize(Domain::UnitDisk, 96).unwrap();
    let green = build_green(&grid).unwrap();
    let lambda = 120.0;
    let cfg = SolverConfig::new(disk_spec(DELTA_STAR), lambda);
    let reference = solve_steady(&cfg, &green).unwrap();

    let dented = {
        let mut vals = reference.omega.values().to_vec();
        for (i, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            let ball = if i == 0 { cfg.spec.b1 } else { cfg.spec.b2 };
            let support = reference.support(i);
            // Tear off the three cells nearest the ball center's east
            // flank and park them near the rim, keeping the count exact.
            let mut flank: Vec<usize> = support.clone();
            flank.sort_by(|&a, &b| {
                let xa = grid.center_idx(a).x;
                let xb = grid.center_idx(b).x;
                xb.partial_cmp(&xa).unwrap().then(a.cmp(&b))
            });
            let torn: Vec<usize> = flank[..3].to_vec();
            let mut rim: Vec<usize> = grid
                .inside_indices()
                .filter(|&c| ball.contains(grid.center_idx(c)) && vals[c] == 0.0)
                .collect();
            rim.sort_by(|&a, &b| {
                let da = grid.center_idx(a).dist(ball.center);
                let db = grid.center_idx(b).dist(ball.center);
                db.partial_cmp(&da).unwrap().then(a.cmp(&b))
            });
            for (t, r) in torn.iter().zip(rim.iter()) {
                vals[*t] = 0.0;
                vals[*r] = sign * lambda;
            }
        }
        ScalarField::from_values(grid.clone(), vals).unwrap()
    };

    let mut cfg2 = SolverConfig::new(disk_spec(DELTA_STAR), lambda);
    cfg2.seed = SeedKind::Custom(dented);
    let patch = solve_steady(&cfg2, &green).unwrap();
    assert!(patch.iterations > 0, "dented seed should need repair steps");
    for w in patch.energy_ledger.windows(2) {
        assert!(w[1] >= w[0], "ledger must stay monotone: {w:?}");
    }
    // Same maximizer up to a boundary-cell budget, same energy up to tie
    // tolerance.
    let sym_diff: usize = patch
        .omega
        .values()
        .iter()
        .zip(reference.omega.values())
        .filter(|(a, b)| a != b)
        .count();
    assert!(sym_diff <= 8, "supports differ by {sym_diff} cells");
    let tie_tol = lambda * grid.h() * grid.h() * reference.psi.psi.max_abs();
    assert!((patch.energy - reference.energy).abs() <= tie_tol);
}

#[test]
fn residual_separates_steady_from_arbitrary_fields() {
    let (grid, green, patch) = disk_patch(128, 200.0);
    let res_steady = steadiness_residual(&patch, 24);
    assert!(
        res_steady <= 5.0 * grid.h(),
        "steady residual {res_steady} vs 5h = {}",
        5.0 * grid.h()
    );

    // Control: same circulations parked at off-level-set spots.
    let control = {
        let mut vals = vec![0.0; grid.cell_count()];
        for (i, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            let ball = if i == 0 { patch.spec.b1 } else { patch.spec.b2 };
            let n = patch.support(i).len();
            // A tilted off-center bar: no symmetry axis, nowhere near a
            // superlevel set of its own stream function.
            let tilt = 0.5f64;
            let (sn, cs) = tilt.sin_cos();
            let off = Point::new(ball.center.x + 0.3 * ball.radius, ball.center.y - 0.25 * ball.radius);
            let bar_dist = |p: Point| {
                let d = p - off;
                let u = cs * d.x + sn * d.y;
                let v = -sn * d.x + cs * d.y;
                50.0 * v * v + 0.1 * u * u
            };
            let mut cells: Vec<usize> = grid
                .inside_indices()
                .filter(|&c| ball.contains(grid.center_idx(c)))
                .collect();
            cells.sort_by(|&a, &b| {
                let da = bar_dist(grid.center_idx(a));
                let db = bar_dist(grid.center_idx(b));
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
            for &c in &cells[..n] {
                vals[c] = sign * patch.lambda;
            }
        }
        ScalarField::from_values(grid.clone(), vals).unwrap()
    };
    let psi_c = green.stream(&control).unwrap();
    let e_c = 0.5 * control.inner(&psi_c.psi).unwrap();
    let fake = SteadyPatch {
        omega: control.clone(),
        omega1: ScalarField::zeros(grid.clone()),
        omega2: ScalarField::zeros(grid.clone()),
        mu1: 0.0,
        mu2: 0.0,
        psi: psi_c,
        energy: e_c,
        iterations: 0,
        converged: false,
        degenerate_ties: false,
        tie_cells: [0, 0],
        energy_ledger: vec![e_c],
        spec: patch.spec.clone(),
        lambda: patch.lambda,
    };
    let res_control = steadiness_residual(&fake, 24);
    assert!(
        res_control >= 10.0 * res_steady,
        "control {res_control} vs steady {res_steady}"
    );
}

#[test]
fn boundary_gradient_negative_for_converged_patch() {
    let (_, _, patch) = disk_patch(128, 150.0);
    let bg = boundary_gradient_check(&patch);
    assert!(bg.min_overall.unwrap() < 0.0);
    assert!(bg.min_component[0].unwrap() < 0.0);
    assert!(bg.min_component[1].unwrap() < 0.0);
}

#[test]
fn rankine_radial_stream_decreases_outward() {
    // A synthetic single radial core: outward derivative of psi is
    // negative across the whole patch boundary.
    let grid = discretize(Domain::UnitDisk, 96).unwrap();
    let green = build_green(&grid).unwrap();
    let lambda = 40.0;
    let omega1 = ScalarField::from_fn(grid.clone(), |p| {
        if p.norm() < 0.3 {
            lambda
        } else {
            0.0
        }
    })
    .unwrap();
    let psi = green.stream(&omega1).unwrap();
    let e = 0.5 * omega1.inner(&psi.psi).unwrap();
    let patch = SteadyPatch {
        omega: omega1.clone(),
        omega1: omega1.clone(),
        omega2: ScalarField::zeros(grid.clone()),
        mu1: 0.0,
        mu2: 0.0,
        psi,
        energy: e,
        iterations: 0,
        converged: true,
        degenerate_ties: false,
        tie_cells: [0, 0],
        energy_ledger: vec![e],
        spec: disk_spec(DELTA_STAR),
        lambda,
    };
    let bg = boundary_gradient_check(&patch);
    assert!(bg.min_component[0].unwrap() < 0.0);
    assert!(bg.min_component[1].is_none(), "no second patch");
}

#[test]
fn support_touching_ball_boundary_is_an_error() {
    // lambda barely feasible: the patch area nearly fills the ball, so
    // the selected cells touch its boundary.
    let grid = discretize(Domain::UnitDisk, 96).unwrap();
    let green = build_green(&grid).unwrap();
    let spec = disk_spec(DELTA_STAR);
    // |B| = pi delta^2 = 0.0519; lambda |B| = 1.08 |kappa|.
    let cfg = SolverConfig::new(spec, 20.8);
    match solve_steady(&cfg, &green) {
        Err(Error::SupportTouchesBallBoundary(_)) => {}
        other => panic!("expected SupportTouchesBallBoundary, got {other:?}"),
    }
}

#[test]
fn energy_bounds_hold_and_mu_sum_tracks_lambda() {
    let (_, green, patch) = disk_patch(96, 120.0);
    let b = energy_bounds_check(&patch, &green).unwrap();
    assert!(b.lower_bound_holds);
    assert!(b.e >= b.e_testfn);
    assert!(b.mu_bound_lhs > 0.0);

    // Infeasible test function when lambda is too small for the balls.
    let grid = discretize(Domain::UnitDisk, 96).unwrap();
    let green2 = build_green(&grid).unwrap();
    let cfg = SolverConfig::new(disk_spec(DELTA_STAR), 30.0);
    let small = solve_steady(&cfg, &green2);
    if let Ok(p) = small {
        // eps(30) = 0.103 vs delta - h = 0.108: still feasible; shrink
        // the ball instead to force the guard.
        let mut tight = p.clone();
        tight.spec.b1.radius = 0.09;
        assert!(matches!(
            energy_bounds_check(&tight, &green2),
            Err(Error::TestFunctionInfeasible(_))
        ));
    }
}
