//! Steady double vortex patches with opposite signs in a bounded planar
//! domain.
//!
//! The crate builds the patches by maximizing kinetic energy over a
//! constrained vorticity class with a monotone bathtub fixed point,
//! locates the Kirchhoff-Routh minima the patches concentrate at, sweeps
//! the patch-strength parameter to check the concentration asymptotics,
//! and probes stability under rearrangement-class perturbations with a
//! semi-Lagrangian 2-D Euler evolution.

pub mod asymptotics;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod field_io;
pub mod geometry;
pub mod green;
pub mod kirchhoff_routh;
pub mod steady;

pub use domain::{discretize, integrate, l1_distance, Ball, Bitmap, Domain, Grid, ScalarField};
pub use error::{Error, Result};
pub use geometry::Point;
pub use green::{
    build_green, build_green_with, green_disk, robin_disk, velocity, BackendKind, GreenOperator,
    StreamFunction,
};
pub use kirchhoff_routh::{find_local_min, kr_value, DiskGreen, GridPointGreen, KRMinimum, KRPoint, PointGreen, SearchBox};
pub use steady::{
    bathtub_project, boundary_gradient_check, solve_steady, steadiness_residual,
    two_ball_test_function, Bathtub, BoundaryGradient, SeedKind, SolverConfig, SteadyPatch,
    TwinVortexSpec,
};
pub use asymptotics::{
    centroid, core_energy, energy_bounds_check, epsilon_scale, isoperimetric_ratio,
    patch_diameter, sweep_lambda, AsymptoticsReport, AsymptoticsRow, EnergyBounds, SweepConfig,
};
pub use evolution::{
    local_max_test, max_cfl_dt, perturb, riesz_check, sample_rearrangement_perturbations,
    stability_probe, step, turnover_time, EvolutionState, InterpKind, LocalMaxTest, Perturbation,
    RieszReport, StabilityProbe,
};
