//! Continuous Lagrangian densities and their discrete counterparts.
//!
//! Three continuous densities are provided:
//!
//! * [`ZermeloLagrangian`] — squared Randers length, whose extremals are
//!   time-optimal paths through a wind of speed below 1;
//! * [`FuelLagrangian`] — squared control effort `|v - W(q)|^2 / 2` of a unit
//!   vehicle steering against the wind;
//! * [`SmoothControlLagrangian`] — effort plus a weighted penalty on the rate
//!   of change of the control, which makes the density second order.
//!
//! First-order densities are discretized by the trapezoidal rule on position
//! pairs ([`TrapezoidalQ`]); second-order ones by a two-point Lobatto rule on
//! phase pairs ([`Lobatto2Tq`]), where each segment's acceleration is that of
//! its cubic Hermite interpolant. Discrete partial derivatives are produced
//! by evaluating the same generic code on dual numbers, so they are exact up
//! to rounding.

use crate::dual::{seed1, seed2, Dual2, Scalar};
use crate::error::{Error, Result};
use crate::geometry::{Mat2, Vec2};
use crate::trajectory::{PhasePoint, Trajectory, TrajectoryKind};
use crate::wind::WindField;

/// Segment speeds below this are rejected by the squared-length density,
/// whose second derivatives blow up as `|v| -> 0`.
pub const VELOCITY_EPSILON: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Randers metric
// ---------------------------------------------------------------------------

/// The Randers metric induced by a wind `W` with `|W| < 1`.
///
/// For a vehicle of unit own-speed drifting in the wind, the time needed to
/// move with velocity `v` is `F(q, v) = sqrt(a(v, v)) + <b(q), v>`, with
///
/// ```text
/// alpha    = 1 - |W|^2
/// a(v, v)  = |v|^2 / alpha + <W, v>^2 / alpha^2
/// <b, v>   = -<W, v> / alpha
/// ```
///
/// so the length of a path in this metric is its travel time.
#[derive(Debug, Clone)]
pub struct RandersMetric {
    wind: WindField,
}

impl RandersMetric {
    pub fn new(wind: WindField) -> Self {
        RandersMetric { wind }
    }

    pub fn wind(&self) -> &WindField {
        &self.wind
    }

    /// `1 - |W(q)|^2`; fails if it is not strictly positive.
    pub fn alpha(&self, q: Vec2) -> Result<f64> {
        let w = self.wind.eval(q)?;
        let alpha = 1.0 - w.norm_squared();
        if alpha <= 0.0 {
            return Err(Error::WindTooStrong {
                x: q.x,
                y: q.y,
                speed: w.norm(),
            });
        }
        Ok(alpha)
    }

    /// The metric function `F(q, v)`: travel time per unit of `v`.
    pub fn f(&self, q: Vec2, v: Vec2) -> Result<f64> {
        randers_f_s(&self.wind, [q.x, q.y], [v.x, v.y])
    }
}

fn randers_f_s<S: Scalar>(wind: &WindField, q: [S; 2], v: [S; 2]) -> Result<S> {
    let one = S::from_f64(1.0);
    let w = wind.eval_s(q[0], q[1])?;
    let w2 = w[0] * w[0] + w[1] * w[1];
    let alpha = one - w2;
    if alpha.value() <= 0.0 {
        return Err(Error::WindTooStrong {
            x: q[0].value(),
            y: q[1].value(),
            speed: w2.value().sqrt(),
        });
    }
    let wv = w[0] * v[0] + w[1] * v[1];
    let v2 = v[0] * v[0] + v[1] * v[1];
    let a = v2 / alpha + (wv * wv) / (alpha * alpha);
    Ok(a.sqrt() - wv / alpha)
}

/// Total metric length (= travel time) of a position trajectory: the sum of
/// `h F(q_k, (q_{k+1} - q_k) / h)` over segments.
pub fn travel_time(metric: &RandersMetric, traj: &Trajectory) -> Result<f64> {
    let Some(nodes) = traj.positions() else {
        return Err(Error::Mismatch(
            "travel time is defined for position trajectories".into(),
        ));
    };
    let h = traj.h();
    let mut total = 0.0;
    for pair in nodes.windows(2) {
        let v = (pair[1] - pair[0]) / h;
        total += 0.5 * h * (metric.f(pair[0], v)? + metric.f(pair[1], v)?);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Continuous densities
// ---------------------------------------------------------------------------

/// A first-order density `L(q, v)`, evaluated generically over [`Scalar`] so
/// discretizers can differentiate it with dual numbers.
pub trait Lagrangian1: Send + Sync {
    fn eval_s<S: Scalar>(&self, q: [S; 2], v: [S; 2]) -> Result<S>;

    fn eval(&self, q: Vec2, v: Vec2) -> Result<f64> {
        self.eval_s([q.x, q.y], [v.x, v.y])
    }
}

/// A second-order density `L(q, v, a)`.
pub trait Lagrangian2: Send + Sync {
    fn eval_s<S: Scalar>(&self, q: [S; 2], v: [S; 2], a: [S; 2]) -> Result<S>;

    fn eval(&self, q: Vec2, v: Vec2, a: Vec2) -> Result<f64> {
        self.eval_s([q.x, q.y], [v.x, v.y], [a.x, a.y])
    }
}

/// Squared Randers length `F(q, v)^2`.
///
/// Squaring trades the parametrization invariance of `F` for positive
/// definiteness in `v`, so the discrete problem is well posed; minimizers
/// traverse time-optimal paths at the uniform pace that makes the horizon
/// an affine function of metric length.
#[derive(Debug, Clone)]
pub struct ZermeloLagrangian {
    metric: RandersMetric,
}

impl ZermeloLagrangian {
    pub fn new(metric: RandersMetric) -> Self {
        ZermeloLagrangian { metric }
    }

    pub fn metric(&self) -> &RandersMetric {
        &self.metric
    }
}

impl Lagrangian1 for ZermeloLagrangian {
    fn eval_s<S: Scalar>(&self, q: [S; 2], v: [S; 2]) -> Result<S> {
        let speed2 = (v[0] * v[0] + v[1] * v[1]).value();
        if speed2 < VELOCITY_EPSILON * VELOCITY_EPSILON {
            return Err(Error::DegenerateVelocity {
                speed: speed2.sqrt(),
            });
        }
        let f = randers_f_s(self.metric.wind(), q, v)?;
        Ok(f * f)
    }
}

/// Control effort of a unit vehicle: `L(q, v) = |v - W(q)|^2 / 2`.
#[derive(Debug, Clone)]
pub struct FuelLagrangian {
    wind: WindField,
}

impl FuelLagrangian {
    pub fn new(wind: WindField) -> Self {
        FuelLagrangian { wind }
    }
}

impl Lagrangian1 for FuelLagrangian {
    fn eval_s<S: Scalar>(&self, q: [S; 2], v: [S; 2]) -> Result<S> {
        let w = self.wind.eval_s(q[0], q[1])?;
        let ux = v[0] - w[0];
        let uy = v[1] - w[1];
        Ok(S::from_f64(0.5) * (ux * ux + uy * uy))
    }
}

/// Control effort plus a penalty on the control's rate of change:
///
/// ```text
/// L(q, v, a) = (|v - W(q)|^2 + c |a - DW(q) v|^2) / 2
/// ```
///
/// The second term is `|d/dt (v - W(q))|^2` along the path, so minimizers
/// spend little fuel *and* steer smoothly. The rate weight `c` trades the
/// two off.
#[derive(Debug, Clone)]
pub struct SmoothControlLagrangian {
    wind: WindField,
    rate_weight: f64,
}

impl SmoothControlLagrangian {
    pub fn new(wind: WindField, rate_weight: f64) -> Result<Self> {
        if !(rate_weight.is_finite() && rate_weight >= 0.0) {
            return Err(Error::BadParameter(format!(
                "control-rate weight must be finite and non-negative, got {rate_weight}"
            )));
        }
        Ok(SmoothControlLagrangian { wind, rate_weight })
    }
}

impl Lagrangian2 for SmoothControlLagrangian {
    fn eval_s<S: Scalar>(&self, q: [S; 2], v: [S; 2], a: [S; 2]) -> Result<S> {
        let w = self.wind.eval_s(q[0], q[1])?;
        let j = self.wind.jacobian_s(q[0], q[1])?;
        let ux = v[0] - w[0];
        let uy = v[1] - w[1];
        let rx = a[0] - (j[0][0] * v[0] + j[0][1] * v[1]);
        let ry = a[1] - (j[1][0] * v[0] + j[1][1] * v[1]);
        let c = S::from_f64(self.rate_weight);
        Ok(S::from_f64(0.5) * (ux * ux + uy * uy + c * (rx * rx + ry * ry)))
    }
}

// ---------------------------------------------------------------------------
// Discrete Lagrangians on position pairs
// ---------------------------------------------------------------------------

/// Value and first partials of a discrete Lagrangian on one position pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGrad1 {
    pub value: f64,
    /// Partial with respect to the first endpoint.
    pub d1: Vec2,
    /// Partial with respect to the second endpoint.
    pub d2: Vec2,
}

/// Full second-order jet on one position pair. Block `dij` is the matrix of
/// partials `d^2 L_d / d q_{i-1} d q_{j-1}`; the underlying 4x4 Hessian is
/// bitwise symmetric, so `d21` equals `d12` transposed exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairJet1 {
    pub value: f64,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d11: Mat2,
    pub d12: Mat2,
    pub d21: Mat2,
    pub d22: Mat2,
}

/// Value, gradient, and Hessian with respect to a single endpoint of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndJet1 {
    pub value: f64,
    pub d: Vec2,
    pub dd: Mat2,
}

/// A discretization of a first-order density on consecutive position pairs.
pub trait DiscreteQ: Send + Sync {
    /// The step size the rule was built with.
    fn step(&self) -> f64;

    fn eval(&self, q0: Vec2, q1: Vec2) -> Result<f64>;

    fn grad(&self, q0: Vec2, q1: Vec2) -> Result<PairGrad1>;

    fn jet(&self, q0: Vec2, q1: Vec2) -> Result<PairJet1>;

    /// Jet with respect to the first endpoint only (`d1`, `d11`). Agrees
    /// bitwise with the corresponding blocks of [`DiscreteQ::jet`] but is
    /// cheaper; sweeps call it once per pair.
    fn jet_first(&self, q0: Vec2, q1: Vec2) -> Result<EndJet1>;

    /// Jet with respect to the second endpoint only (`d2`, `d22`).
    fn jet_second(&self, q0: Vec2, q1: Vec2) -> Result<EndJet1>;
}

/// Trapezoidal discretization of a first-order density:
///
/// ```text
/// L_d(q0, q1) = (h/2) [ L(q0, (q1-q0)/h) + L(q1, (q1-q0)/h) ]
/// ```
#[derive(Debug, Clone)]
pub struct TrapezoidalQ<L: Lagrangian1> {
    lagrangian: L,
    h: f64,
}

/// Build the trapezoidal rule for a first-order density with step `h`.
pub fn discretize_trapezoidal<L: Lagrangian1>(lagrangian: L, h: f64) -> Result<TrapezoidalQ<L>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter(format!(
            "step size must be positive and finite, got {h}"
        )));
    }
    Ok(TrapezoidalQ { lagrangian, h })
}

impl<L: Lagrangian1> TrapezoidalQ<L> {
    /// The rule evaluated on scalars carrying the pair `(q0, q1)` in order
    /// `(q0.x, q0.y, q1.x, q1.y)`. All derivative variants below are this
    /// one function run on different dual seedings, which is what makes
    /// their shared entries bitwise identical.
    fn eval_nodes<S: Scalar>(&self, n: [S; 4]) -> Result<S> {
        let h = S::from_f64(self.h);
        let q0 = [n[0], n[1]];
        let q1 = [n[2], n[3]];
        let v = [(n[2] - n[0]) / h, (n[3] - n[1]) / h];
        let half_h = S::from_f64(0.5 * self.h);
        Ok(half_h * (self.lagrangian.eval_s(q0, v)? + self.lagrangian.eval_s(q1, v)?))
    }
}

impl<L: Lagrangian1> DiscreteQ for TrapezoidalQ<L> {
    fn step(&self) -> f64 {
        self.h
    }

    fn eval(&self, q0: Vec2, q1: Vec2) -> Result<f64> {
        self.eval_nodes([q0.x, q0.y, q1.x, q1.y])
    }

    fn grad(&self, q0: Vec2, q1: Vec2) -> Result<PairGrad1> {
        let out = self.eval_nodes(seed1::<4>([q0.x, q0.y, q1.x, q1.y]))?;
        Ok(PairGrad1 {
            value: out.val,
            d1: Vec2::new(out.grad[0], out.grad[1]),
            d2: Vec2::new(out.grad[2], out.grad[3]),
        })
    }

    fn jet(&self, q0: Vec2, q1: Vec2) -> Result<PairJet1> {
        let out = self.eval_nodes(seed2::<4>([q0.x, q0.y, q1.x, q1.y]))?;
        let block = |r: usize, c: usize| {
            Mat2::new(
                out.hess[r][c],
                out.hess[r][c + 1],
                out.hess[r + 1][c],
                out.hess[r + 1][c + 1],
            )
        };
        Ok(PairJet1 {
            value: out.val,
            d1: Vec2::new(out.grad[0], out.grad[1]),
            d2: Vec2::new(out.grad[2], out.grad[3]),
            d11: block(0, 0),
            d12: block(0, 2),
            d21: block(2, 0),
            d22: block(2, 2),
        })
    }

    fn jet_first(&self, q0: Vec2, q1: Vec2) -> Result<EndJet1> {
        let out = self.eval_nodes([
            Dual2::<2>::variable(q0.x, 0),
            Dual2::<2>::variable(q0.y, 1),
            Dual2::constant(q1.x),
            Dual2::constant(q1.y),
        ])?;
        Ok(EndJet1 {
            value: out.val,
            d: Vec2::new(out.grad[0], out.grad[1]),
            dd: Mat2 { m: out.hess },
        })
    }

    fn jet_second(&self, q0: Vec2, q1: Vec2) -> Result<EndJet1> {
        let out = self.eval_nodes([
            Dual2::constant(q0.x),
            Dual2::constant(q0.y),
            Dual2::<2>::variable(q1.x, 0),
            Dual2::<2>::variable(q1.y, 1),
        ])?;
        Ok(EndJet1 {
            value: out.val,
            d: Vec2::new(out.grad[0], out.grad[1]),
            dd: Mat2 { m: out.hess },
        })
    }
}

// ---------------------------------------------------------------------------
// Discrete Lagrangians on phase pairs
// ---------------------------------------------------------------------------

/// Value and first partials on one phase pair, in block order
/// `(q0, v0, q1, v1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGrad2 {
    pub value: f64,
    pub d: [Vec2; 4],
}

/// Full second-order jet on one phase pair: `dd[i][j]` is the 2x2 block of
/// partials pairing block `i` with block `j` of `(q0, v0, q1, v1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairJet2 {
    pub value: f64,
    pub d: [Vec2; 4],
    pub dd: [[Mat2; 4]; 4],
}

/// Value, gradient, and Hessian with respect to one phase endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndJet2 {
    pub value: f64,
    pub dq: Vec2,
    pub dv: Vec2,
    pub dqq: Mat2,
    pub dqv: Mat2,
    pub dvq: Mat2,
    pub dvv: Mat2,
}

/// A discretization of a second-order density on consecutive phase pairs.
pub trait DiscreteTq: Send + Sync {
    fn step(&self) -> f64;

    fn eval(&self, x0: PhasePoint, x1: PhasePoint) -> Result<f64>;

    fn grad(&self, x0: PhasePoint, x1: PhasePoint) -> Result<PairGrad2>;

    fn jet(&self, x0: PhasePoint, x1: PhasePoint) -> Result<PairJet2>;

    /// Jet with respect to the first phase endpoint `(q0, v0)` only.
    fn jet_first(&self, x0: PhasePoint, x1: PhasePoint) -> Result<EndJet2>;

    /// Jet with respect to the second phase endpoint `(q1, v1)` only.
    fn jet_second(&self, x0: PhasePoint, x1: PhasePoint) -> Result<EndJet2>;
}

/// Two-point Lobatto discretization of a second-order density:
///
/// ```text
/// L_d(x0, x1) = (h/2) [ L(q0, v0, A+) + L(q1, v1, A-) ]
/// A+ =  (2/h^2) (3(q1 - q0) - h (v1 + 2 v0))
/// A- = -(2/h^2) (3(q1 - q0) - h (2 v1 + v0))
/// ```
///
/// `A+` and `A-` are the endpoint accelerations of the cubic Hermite
/// interpolant matching the pair's positions and velocities; both vanish
/// exactly on uniform motion.
#[derive(Debug, Clone)]
pub struct Lobatto2Tq<L: Lagrangian2> {
    lagrangian: L,
    h: f64,
}

/// Build the two-point Lobatto rule for a second-order density with step `h`.
pub fn discretize_lobatto2<L: Lagrangian2>(lagrangian: L, h: f64) -> Result<Lobatto2Tq<L>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter(format!(
            "step size must be positive and finite, got {h}"
        )));
    }
    Ok(Lobatto2Tq { lagrangian, h })
}

impl<L: Lagrangian2> Lobatto2Tq<L> {
    /// The rule on scalars carrying `(q0, v0, q1, v1)` componentwise. As for
    /// the trapezoidal rule, every derivative variant runs this one code
    /// path under a different dual seeding.
    fn eval_nodes<S: Scalar>(&self, n: [S; 8]) -> Result<S> {
        let q0 = [n[0], n[1]];
        let v0 = [n[2], n[3]];
        let q1 = [n[4], n[5]];
        let v1 = [n[6], n[7]];
        let k = S::from_f64(2.0 / (self.h * self.h));
        let h = S::from_f64(self.h);
        let three = S::from_f64(3.0);
        let two = S::from_f64(2.0);
        let mut a_plus = [S::from_f64(0.0); 2];
        let mut a_minus = [S::from_f64(0.0); 2];
        for i in 0..2 {
            let dq3 = three * (q1[i] - q0[i]);
            a_plus[i] = k * (dq3 - h * (v1[i] + two * v0[i]));
            a_minus[i] = -(k * (dq3 - h * (two * v1[i] + v0[i])));
        }
        let half_h = S::from_f64(0.5 * self.h);
        Ok(half_h
            * (self.lagrangian.eval_s(q0, v0, a_plus)?
                + self.lagrangian.eval_s(q1, v1, a_minus)?))
    }
}

fn phase_scalars(x0: PhasePoint, x1: PhasePoint) -> [f64; 8] {
    [
        x0.q.x, x0.q.y, x0.v.x, x0.v.y, x1.q.x, x1.q.y, x1.v.x, x1.v.y,
    ]
}

impl<L: Lagrangian2> DiscreteTq for Lobatto2Tq<L> {
    fn step(&self) -> f64 {
        self.h
    }

    fn eval(&self, x0: PhasePoint, x1: PhasePoint) -> Result<f64> {
        self.eval_nodes(phase_scalars(x0, x1))
    }

    fn grad(&self, x0: PhasePoint, x1: PhasePoint) -> Result<PairGrad2> {
        let out = self.eval_nodes(seed1::<8>(phase_scalars(x0, x1)))?;
        let g = |i: usize| Vec2::new(out.grad[2 * i], out.grad[2 * i + 1]);
        Ok(PairGrad2 {
            value: out.val,
            d: [g(0), g(1), g(2), g(3)],
        })
    }

    fn jet(&self, x0: PhasePoint, x1: PhasePoint) -> Result<PairJet2> {
        let out = self.eval_nodes(seed2::<8>(phase_scalars(x0, x1)))?;
        let g = |i: usize| Vec2::new(out.grad[2 * i], out.grad[2 * i + 1]);
        let mut dd = [[Mat2::ZERO; 4]; 4];
        for (i, row) in dd.iter_mut().enumerate() {
            for (j, blockref) in row.iter_mut().enumerate() {
                let (r, c) = (2 * i, 2 * j);
                *blockref = Mat2::new(
                    out.hess[r][c],
                    out.hess[r][c + 1],
                    out.hess[r + 1][c],
                    out.hess[r + 1][c + 1],
                );
            }
        }
        Ok(PairJet2 {
            value: out.val,
            d: [g(0), g(1), g(2), g(3)],
            dd,
        })
    }

    fn jet_first(&self, x0: PhasePoint, x1: PhasePoint) -> Result<EndJet2> {
        let out = self.eval_nodes([
            Dual2::<4>::variable(x0.q.x, 0),
            Dual2::<4>::variable(x0.q.y, 1),
            Dual2::<4>::variable(x0.v.x, 2),
            Dual2::<4>::variable(x0.v.y, 3),
            Dual2::constant(x1.q.x),
            Dual2::constant(x1.q.y),
            Dual2::constant(x1.v.x),
            Dual2::constant(x1.v.y),
        ])?;
        Ok(end_jet2(out))
    }

    fn jet_second(&self, x0: PhasePoint, x1: PhasePoint) -> Result<EndJet2> {
        let out = self.eval_nodes([
            Dual2::constant(x0.q.x),
            Dual2::constant(x0.q.y),
            Dual2::constant(x0.v.x),
            Dual2::constant(x0.v.y),
            Dual2::<4>::variable(x1.q.x, 0),
            Dual2::<4>::variable(x1.q.y, 1),
            Dual2::<4>::variable(x1.v.x, 2),
            Dual2::<4>::variable(x1.v.y, 3),
        ])?;
        Ok(end_jet2(out))
    }
}

fn end_jet2(out: Dual2<4>) -> EndJet2 {
    let block = |r: usize, c: usize| {
        Mat2::new(
            out.hess[r][c],
            out.hess[r][c + 1],
            out.hess[r + 1][c],
            out.hess[r + 1][c + 1],
        )
    };
    EndJet2 {
        value: out.val,
        dq: Vec2::new(out.grad[0], out.grad[1]),
        dv: Vec2::new(out.grad[2], out.grad[3]),
        dqq: block(0, 0),
        dqv: block(0, 2),
        dvq: block(2, 0),
        dvv: block(2, 2),
    }
}

// ---------------------------------------------------------------------------
// Action sums
// ---------------------------------------------------------------------------

/// Either kind of discrete Lagrangian, type-erased for storage in problem
/// descriptions.
pub enum DiscreteLd {
    Q(Box<dyn DiscreteQ>),
    Tq(Box<dyn DiscreteTq>),
}

impl DiscreteLd {
    pub fn step(&self) -> f64 {
        match self {
            DiscreteLd::Q(ld) => ld.step(),
            DiscreteLd::Tq(ld) => ld.step(),
        }
    }

    pub fn kind(&self) -> TrajectoryKind {
        match self {
            DiscreteLd::Q(_) => TrajectoryKind::Positions,
            DiscreteLd::Tq(_) => TrajectoryKind::Phase,
        }
    }
}

/// Check that a trajectory can be fed to a discrete Lagrangian.
pub(crate) fn check_compatible(ld: &DiscreteLd, traj: &Trajectory) -> Result<()> {
    if ld.kind() != traj.kind() {
        return Err(Error::Mismatch(format!(
            "discrete Lagrangian expects a {} trajectory, got {}",
            ld.kind(),
            traj.kind()
        )));
    }
    if ld.step() != traj.h() {
        return Err(Error::Mismatch(format!(
            "discrete Lagrangian step {} differs from trajectory step {}",
            ld.step(),
            traj.h()
        )));
    }
    Ok(())
}

/// The discrete action: the sum of the discrete Lagrangian over consecutive
/// pairs, accumulated in node order.
pub fn action(ld: &DiscreteLd, traj: &Trajectory) -> Result<f64> {
    check_compatible(ld, traj)?;
    let mut total = 0.0;
    match (ld, traj.data()) {
        (DiscreteLd::Q(ld), crate::trajectory::TrajectoryData::Positions(nodes)) => {
            for pair in nodes.windows(2) {
                total += ld.eval(pair[0], pair[1])?;
            }
        }
        (DiscreteLd::Tq(ld), crate::trajectory::TrajectoryData::Phase(nodes)) => {
            for pair in nodes.windows(2) {
                total += ld.eval(pair[0], pair[1])?;
            }
        }
        _ => unreachable!("kind checked above"),
    }
    Ok(total)
}
