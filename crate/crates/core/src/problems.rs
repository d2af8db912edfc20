//! Boundary-value problem descriptions and the built-in catalog.
//!
//! A [`ProblemSpec`] bundles everything a solve needs: the running cost
//! (as a [`ProblemForm`]), the wind field, the time horizon and grid, the
//! boundary states, pinned interior positions, and a default initial-guess
//! recipe. Specs are immutable; the derived-variant constructors
//! ([`ProblemSpec::refined`], [`ProblemSpec::with_segments`],
//! [`ProblemSpec::with_horizon`]) return new values.

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::lagrangian::{
    action, discretize_lobatto2, discretize_trapezoidal, travel_time, DiscreteLd, FuelLagrangian,
    RandersMetric, SmoothControlLagrangian, ZermeloLagrangian,
};
use crate::solver::{initial_guess, GuessKind, Knot, KnotSet};
use crate::trajectory::{PhasePoint, Trajectory, TrajectoryData, TrajectoryKind};
use crate::wind::{trig_shear_field, vortex_field, WindField};

/// Prescribed endpoint states. Position boundaries suit first-order
/// problems; phase boundaries additionally pin the end velocities and suit
/// second-order problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Positions { start: Vec2, end: Vec2 },
    Phase { start: PhasePoint, end: PhasePoint },
}

impl Boundary {
    pub fn kind(&self) -> TrajectoryKind {
        match self {
            Boundary::Positions { .. } => TrajectoryKind::Positions,
            Boundary::Phase { .. } => TrajectoryKind::Phase,
        }
    }

    pub fn start_position(&self) -> Vec2 {
        match self {
            Boundary::Positions { start, .. } => *start,
            Boundary::Phase { start, .. } => start.q,
        }
    }

    pub fn end_position(&self) -> Vec2 {
        match self {
            Boundary::Positions { end, .. } => *end,
            Boundary::Phase { end, .. } => end.q,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Boundary::Positions { start, end } => start.is_finite() && end.is_finite(),
            Boundary::Phase { start, end } => start.is_finite() && end.is_finite(),
        }
    }
}

/// The running cost being extremized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemForm {
    /// Time-optimal navigation: squared Randers length, first order.
    TimeOptimal,
    /// Thrust energy `½|v − W|²`, first order.
    Fuel,
    /// Thrust energy plus `rate_weight/2` times squared thrust rate,
    /// second order.
    SmoothControl { rate_weight: f64 },
}

impl ProblemForm {
    /// The trajectory kind this form's Euler–Lagrange system lives on.
    pub fn kind(&self) -> TrajectoryKind {
        match self {
            ProblemForm::TimeOptimal | ProblemForm::Fuel => TrajectoryKind::Positions,
            ProblemForm::SmoothControl { .. } => TrajectoryKind::Phase,
        }
    }
}

/// A complete boundary-value problem description.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub form: ProblemForm,
    pub wind: WindField,
    /// Total duration `T`; trajectories run from `t = 0` to `t = T`.
    pub horizon: f64,
    /// Number of segments `N`; the grid has `N + 1` nodes of step `T / N`.
    pub segments: usize,
    pub boundary: Boundary,
    /// Pinned interior positions (meaningful only for second-order forms).
    pub knots: KnotSet,
    /// Default initial-guess recipe for this problem.
    pub guess: GuessKind,
}

impl ProblemSpec {
    /// The time step `h = T / N`.
    pub fn step(&self) -> f64 {
        self.horizon / self.segments as f64
    }

    /// The trajectory kind this problem is posed on.
    pub fn kind(&self) -> TrajectoryKind {
        self.form.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::BadParameter(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.segments < 2 {
            return Err(Error::BadParameter(format!(
                "need at least 2 segments for an interior node, got {}",
                self.segments
            )));
        }
        if !self.boundary.is_finite() {
            return Err(Error::BadParameter("boundary states must be finite".into()));
        }
        if self.boundary.kind() != self.kind() {
            return Err(Error::Mismatch(format!(
                "a {} problem needs a {} boundary, got {}",
                match self.form {
                    ProblemForm::TimeOptimal => "time-optimal",
                    ProblemForm::Fuel => "fuel",
                    ProblemForm::SmoothControl { .. } => "smooth-control",
                },
                self.kind(),
                self.boundary.kind()
            )));
        }
        if !self.knots.is_empty() {
            if self.kind() != TrajectoryKind::Phase {
                return Err(Error::BadWaypoints(
                    "pinned interior positions require a second-order problem".into(),
                ));
            }
            self.knots.check_interior(self.segments)?;
        }
        if let ProblemForm::SmoothControl { rate_weight } = self.form {
            if !(rate_weight.is_finite() && rate_weight >= 0.0) {
                return Err(Error::BadParameter(format!(
                    "rate weight must be non-negative, got {rate_weight}"
                )));
            }
        }
        Ok(())
    }

    /// Build the discrete Lagrangian this problem extremizes: trapezoidal
    /// for first-order forms, two-stage Lobatto for the second-order form.
    pub fn discrete_lagrangian(&self) -> Result<DiscreteLd> {
        self.validate()?;
        let h = self.step();
        Ok(match self.form {
            ProblemForm::TimeOptimal => DiscreteLd::Q(Box::new(discretize_trapezoidal(
                ZermeloLagrangian::new(RandersMetric::new(self.wind.clone())),
                h,
            )?)),
            ProblemForm::Fuel => DiscreteLd::Q(Box::new(discretize_trapezoidal(
                FuelLagrangian::new(self.wind.clone()),
                h,
            )?)),
            ProblemForm::SmoothControl { rate_weight } => {
                DiscreteLd::Tq(Box::new(discretize_lobatto2(
                    SmoothControlLagrangian::new(self.wind.clone(), rate_weight)?,
                    h,
                )?))
            }
        })
    }

    /// Construct this problem's default initial trajectory.
    pub fn default_guess(&self) -> Result<Trajectory> {
        self.validate()?;
        initial_guess(&self.guess, &self.boundary, self.segments, self.step(), 0.0)
    }

    /// Check that a trajectory is admissible as an iterate of this problem:
    /// right kind, grid, and bitwise-exact boundary states and pinned
    /// positions.
    pub fn check_guess(&self, traj: &Trajectory) -> Result<()> {
        self.validate()?;
        if traj.kind() != self.kind() {
            return Err(Error::Mismatch(format!(
                "problem '{}' needs a {} trajectory, got {}",
                self.name,
                self.kind(),
                traj.kind()
            )));
        }
        if traj.segments() != self.segments {
            return Err(Error::Mismatch(format!(
                "problem '{}' has {} segments, trajectory has {}",
                self.name,
                self.segments,
                traj.segments()
            )));
        }
        if traj.h() != self.step() || traj.t0() != 0.0 {
            return Err(Error::Mismatch(format!(
                "problem '{}' runs on step {} from time 0, trajectory has step {} from {}",
                self.name,
                self.step(),
                traj.h(),
                traj.t0()
            )));
        }
        if !traj.is_finite() {
            return Err(Error::BadParameter(
                "initial trajectory contains non-finite states".into(),
            ));
        }
        let n = traj.segments();
        match (&self.boundary, traj.data()) {
            (Boundary::Positions { start, end }, TrajectoryData::Positions(nodes)) => {
                if nodes[0] != *start || nodes[n] != *end {
                    return Err(Error::BadParameter(format!(
                        "trajectory endpoints {} and {} do not match the boundary {} and {}",
                        nodes[0], nodes[n], start, end
                    )));
                }
            }
            (Boundary::Phase { start, end }, TrajectoryData::Phase(nodes)) => {
                if nodes[0] != *start || nodes[n] != *end {
                    return Err(Error::BadParameter(format!(
                        "trajectory boundary states ({}, {}) and ({}, {}) do not match \
                         the prescribed ({}, {}) and ({}, {})",
                        nodes[0].q,
                        nodes[0].v,
                        nodes[n].q,
                        nodes[n].v,
                        start.q,
                        start.v,
                        end.q,
                        end.v
                    )));
                }
            }
            _ => unreachable!("kind checked above"),
        }
        for knot in self.knots.iter() {
            if traj.position(knot.index) != knot.position {
                return Err(Error::BadParameter(format!(
                    "trajectory position {} at node {} does not match the pinned point {}",
                    traj.position(knot.index),
                    knot.index,
                    knot.position
                )));
            }
        }
        Ok(())
    }

    /// The same problem on a doubled grid (segments, knot indices, and
    /// guess waypoint indices all double; `h` halves).
    pub fn refined(&self) -> ProblemSpec {
        let mut out = self.clone();
        out.segments *= 2;
        out.knots = self.knots.refined();
        out.guess = match &self.guess {
            GuessKind::StraightLine => GuessKind::StraightLine,
            GuessKind::PiecewiseLinear(w) => GuessKind::PiecewiseLinear(double_indices(w)),
            GuessKind::CubicSpline(w) => GuessKind::CubicSpline(double_indices(w)),
        };
        out
    }

    /// The same problem on a different grid. Knot and waypoint indices are
    /// rescaled; the rescaling must land on integers.
    pub fn with_segments(&self, segments: usize) -> Result<ProblemSpec> {
        if segments < 2 {
            return Err(Error::BadParameter(format!(
                "need at least 2 segments, got {segments}"
            )));
        }
        let rescale = |index: usize| -> Result<usize> {
            let scaled = index * segments;
            if !scaled.is_multiple_of(self.segments) {
                return Err(Error::BadWaypoints(format!(
                    "pinned node {} of {} segments does not fall on a node of {} segments",
                    index, self.segments, segments
                )));
            }
            Ok(scaled / self.segments)
        };
        let rescale_knots = |knots: &[Knot]| -> Result<Vec<Knot>> {
            knots
                .iter()
                .map(|k| {
                    Ok(Knot {
                        index: rescale(k.index)?,
                        position: k.position,
                    })
                })
                .collect()
        };
        let mut out = self.clone();
        out.segments = segments;
        out.knots = KnotSet::new(rescale_knots(
            &self.knots.iter().copied().collect::<Vec<_>>(),
        )?)?;
        out.guess = match &self.guess {
            GuessKind::StraightLine => GuessKind::StraightLine,
            GuessKind::PiecewiseLinear(w) => GuessKind::PiecewiseLinear(rescale_knots(w)?),
            GuessKind::CubicSpline(w) => GuessKind::CubicSpline(rescale_knots(w)?),
        };
        out.validate()?;
        Ok(out)
    }

    /// The same problem over a different total duration.
    pub fn with_horizon(&self, horizon: f64) -> Result<ProblemSpec> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::BadParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let mut out = self.clone();
        out.horizon = horizon;
        Ok(out)
    }
}

fn double_indices(waypoints: &[Knot]) -> Vec<Knot> {
    waypoints
        .iter()
        .map(|k| Knot {
            index: 2 * k.index,
            position: k.position,
        })
        .collect()
}

/// The cost a converged trajectory reports: travel time for time-optimal
/// problems, and the discrete action itself for the energy-based problems
/// (the action is the discretized cost there, so the reported number is the
/// exact quantity the iteration extremizes).
pub fn evaluate_cost(problem: &ProblemSpec, traj: &Trajectory) -> Result<f64> {
    match problem.form {
        ProblemForm::TimeOptimal => travel_time(&RandersMetric::new(problem.wind.clone()), traj),
        ProblemForm::Fuel | ProblemForm::SmoothControl { .. } => {
            action(&problem.discrete_lagrangian()?, traj)
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in catalog
// ---------------------------------------------------------------------------

/// Time-optimal navigation through the four-vortex field: (0,0) to (6,2)
/// on 80 segments. Short alias: `fig2`.
pub fn time_optimal_vortex() -> ProblemSpec {
    ProblemSpec {
        name: "zermelo".into(),
        form: ProblemForm::TimeOptimal,
        wind: vortex_field(),
        horizon: 1.0,
        segments: 80,
        boundary: Boundary::Positions {
            start: Vec2::ZERO,
            end: Vec2::new(6.0, 2.0),
        },
        knots: KnotSet::empty(),
        guess: GuessKind::StraightLine,
    }
}

/// Fuel-optimal drift through the trigonometric shear current: (0,0) to
/// (6,5) in time 30 on 200 segments. Short alias: `fig3`.
pub fn fuel_optimal_shear() -> ProblemSpec {
    ProblemSpec {
        name: "fuel".into(),
        form: ProblemForm::Fuel,
        wind: trig_shear_field(),
        horizon: 30.0,
        segments: 200,
        boundary: Boundary::Positions {
            start: Vec2::ZERO,
            end: Vec2::new(6.0, 5.0),
        },
        knots: KnotSet::empty(),
        guess: GuessKind::StraightLine,
    }
}

fn interpolation_spec(segments: usize, knot_indices: [usize; 2]) -> ProblemSpec {
    let waypoints = vec![
        Knot {
            index: knot_indices[0],
            position: Vec2::new(1.0, 3.0),
        },
        Knot {
            index: knot_indices[1],
            position: Vec2::new(5.0, 2.0),
        },
    ];
    ProblemSpec {
        name: "interpolation".into(),
        form: ProblemForm::SmoothControl { rate_weight: 50.0 },
        wind: trig_shear_field(),
        horizon: 60.0,
        segments,
        boundary: Boundary::Phase {
            start: PhasePoint::new(Vec2::ZERO, Vec2::ZERO),
            end: PhasePoint::new(Vec2::new(3.0, 5.0), Vec2::ZERO),
        },
        knots: KnotSet::new(waypoints.clone()).expect("indices are increasing"),
        guess: GuessKind::CubicSpline(waypoints),
    }
}

/// Smooth-control interpolation through two pinned waypoints in the shear
/// current, with rest boundary states: (0,0) to (3,5) in time 60 on 240
/// segments, passing through (1,3) at time 20 and (5,2) at time 40; thrust
/// rate weight 50. Short alias: `fig4`.
pub fn smooth_interpolation() -> ProblemSpec {
    interpolation_spec(240, [80, 160])
}

/// The 120-segment variant of [`smooth_interpolation`]; refining it once
/// reproduces the 240-segment grid exactly.
pub fn smooth_interpolation_coarse() -> ProblemSpec {
    let mut spec = interpolation_spec(120, [40, 80]);
    spec.name = "interpolation-coarse".into();
    spec
}

/// Fuel form with no wind: the discrete system is linear and its exact
/// solution is the straight equally-spaced line, which makes this the
/// reference problem for oracle and fixed-point checks.
pub fn free_particle(segments: usize) -> ProblemSpec {
    ProblemSpec {
        name: "free-particle".into(),
        form: ProblemForm::Fuel,
        wind: WindField::Zero,
        horizon: 1.0,
        segments,
        boundary: Boundary::Positions {
            start: Vec2::ZERO,
            end: Vec2::new(6.0, 2.0),
        },
        knots: KnotSet::empty(),
        guess: GuessKind::StraightLine,
    }
}

/// Built-in names accepted by [`builtin`], first the descriptive name and
/// then any aliases.
pub const BUILTIN_NAMES: &[&str] = &[
    "zermelo (alias: fig2)",
    "fuel (alias: fig3)",
    "interpolation (alias: fig4)",
    "interpolation-coarse",
    "free-particle",
];

/// Look up a built-in problem by name or alias.
pub fn builtin(name: &str) -> Result<ProblemSpec> {
    match name {
        "zermelo" | "fig2" => Ok(time_optimal_vortex()),
        "fuel" | "fig3" => Ok(fuel_optimal_shear()),
        "interpolation" | "fig4" => Ok(smooth_interpolation()),
        "interpolation-coarse" => Ok(smooth_interpolation_coarse()),
        "free-particle" => Ok(free_particle(20)),
        _ => Err(Error::BadParameter(format!(
            "unknown problem '{name}'; available: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
