//! Parallel iterative solver for discrete variational boundary-value
//! problems on the plane.
//!
//! Trajectories of a mechanical or optimal-control Lagrangian are found by
//! relaxing all interior nodes of a discrete trajectory simultaneously: each
//! node takes one Newton step (or an exact per-node solve) of its local
//! discrete stationarity equation against its frozen neighbors, and the
//! sweep repeats until the largest stationarity residual is small. Every
//! node update in a sweep is independent, so sweeps parallelize across
//! threads without changing the result.
//!
//! The crate ships three ready-made problem families on `R^2`: time-optimal
//! navigation through a strong current, minimum-effort navigation, and
//! smooth interpolation of waypoints by effort-plus-jerk minimization.

pub mod dual;
pub mod error;
pub mod geometry;
pub mod lagrangian;
pub mod linalg;
pub mod problems;
pub mod solver;
pub mod trajectory;
pub mod wind;
pub mod windexpr;

pub use error::{Error, Result};
pub use geometry::{Mat2, Vec2};
pub use problems::{builtin, evaluate_cost, Boundary, ProblemForm, ProblemSpec};
pub use solver::{
    initial_guess, max_residual, perturb_interior, solve, sweep, GuessKind, InnerNewton, Knot,
    KnotSet, ResidualReport, SolveOutcome, SweepConfig, UpdateRule,
};
pub use trajectory::{PhasePoint, Trajectory, TrajectoryKind};
pub use wind::{rotational_bump, trig_shear_field, vortex_field, WindField};
