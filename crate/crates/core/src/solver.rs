//! Parallel relaxation of discrete stationarity equations.
//!
//! For a position trajectory with discrete Lagrangian `L_d`, an interior
//! node `q_k` is stationary when
//!
//! ```text
//! R_k = D2 L_d(q_{k-1}, q_k) + D1 L_d(q_k, q_{k+1}) = 0,
//! ```
//!
//! and for a phase trajectory the analogous pair of equations couples the
//! `(q, v)` blocks of the two pairs that meet at node `k`. A *sweep* visits
//! every interior node once, holding its neighbors frozen at their current
//! values, and moves the node either by one Newton step of its local system
//! ([`UpdateRule::JacobiNewton`]) or all the way to the local solution
//! ([`UpdateRule::ExactParallel`]). Because all node updates in a sweep read
//! the same frozen state, they are independent and can run on any number of
//! threads with bitwise-identical results.
//!
//! [`solve`] repeats sweeps until the largest residual norm drops below
//! `tolerance_factor * h^2` and returns the iterate whose residual was
//! measured, together with a per-sweep residual history.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Vec2};
use crate::lagrangian::{DiscreteLd, DiscreteQ, DiscreteTq, EndJet1, EndJet2};
use crate::linalg::{solve_dense, solve_tridiagonal};
use crate::problems::{Boundary, ProblemSpec};
use crate::trajectory::{PhasePoint, Trajectory, TrajectoryData, TrajectoryKind};

/// Maximum number of step halvings the exact per-node solve tries before
/// declaring the Newton step unusable.
const MAX_STEP_HALVINGS: usize = 30;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// How a sweep moves each interior node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// Solve each node's local stationarity system to tolerance with an
    /// inner Newton iteration.
    ExactParallel,
    /// Take a single Newton step of the local system. Much cheaper per
    /// sweep and usually just as effective, since the outer relaxation is
    /// iterative anyway.
    JacobiNewton,
}

/// Controls for the inner Newton iteration of [`UpdateRule::ExactParallel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerNewton {
    /// Absolute residual-norm tolerance of the local solve.
    pub tolerance: f64,
    /// Iteration budget per node per sweep.
    pub max_iterations: usize,
}

impl Default for InnerNewton {
    fn default() -> Self {
        InnerNewton {
            tolerance: 1e-12,
            max_iterations: 50,
        }
    }
}

/// Sweep and stopping parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub rule: UpdateRule,
    /// Damping `delta` in `[0, 1)`: nodes move by `(1 - delta)` times their
    /// computed displacement. `0` is the undamped method.
    pub damping: f64,
    /// Sweeping stops once the largest residual norm is below
    /// `tolerance_factor * h^2`.
    pub tolerance_factor: f64,
    /// Maximum number of sweeps to apply before giving up.
    pub max_sweeps: usize,
    pub inner: InnerNewton,
    /// Number of worker threads; `1` runs sequentially. Results are bitwise
    /// identical for every width.
    pub parallel_width: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            rule: UpdateRule::JacobiNewton,
            damping: 0.0,
            tolerance_factor: 1e-4,
            max_sweeps: 500_000,
            inner: InnerNewton::default(),
            parallel_width: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping.is_finite() && (0.0..1.0).contains(&self.damping)) {
            return Err(Error::BadParameter(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance_factor.is_finite() && self.tolerance_factor > 0.0) {
            return Err(Error::BadParameter(format!(
                "tolerance factor must be positive, got {}",
                self.tolerance_factor
            )));
        }
        if self.parallel_width == 0 {
            return Err(Error::BadParameter(
                "parallel width must be at least 1".into(),
            ));
        }
        if !(self.inner.tolerance.is_finite() && self.inner.tolerance > 0.0) {
            return Err(Error::BadParameter(format!(
                "inner Newton tolerance must be positive, got {}",
                self.inner.tolerance
            )));
        }
        if self.inner.max_iterations == 0 {
            return Err(Error::BadParameter(
                "inner Newton iteration budget must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Knots
// ---------------------------------------------------------------------------

/// A pinned position: node `index` must stay at `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub index: usize,
    pub position: Vec2,
}

/// A sorted set of pinned interior positions. At a knot node, sweeps keep
/// the position fixed and relax only the velocity, and the node's residual
/// is the velocity part of its stationarity system.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnotSet {
    knots: Vec<Knot>,
}

impl KnotSet {
    pub fn empty() -> Self {
        KnotSet::default()
    }

    /// Build from knots with strictly increasing indices.
    pub fn new(knots: Vec<Knot>) -> Result<Self> {
        for pair in knots.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::BadWaypoints(format!(
                    "knot indices must be strictly increasing, got {} then {}",
                    pair[0].index, pair[1].index
                )));
            }
        }
        if let Some(knot) = knots.iter().find(|k| !k.position.is_finite()) {
            return Err(Error::BadWaypoints(format!(
                "knot at index {} has a non-finite position",
                knot.index
            )));
        }
        Ok(KnotSet { knots })
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Knot> {
        self.knots.iter()
    }

    /// The pinned position at `index`, if any.
    pub fn position_at(&self, index: usize) -> Option<Vec2> {
        self.knots
            .binary_search_by_key(&index, |k| k.index)
            .ok()
            .map(|i| self.knots[i].position)
    }

    /// All indices must be strictly interior for a trajectory with the
    /// given number of segments.
    pub fn check_interior(&self, segments: usize) -> Result<()> {
        if let Some(knot) = self
            .knots
            .iter()
            .find(|k| k.index == 0 || k.index >= segments)
        {
            return Err(Error::BadWaypoints(format!(
                "knot index {} is not interior to a trajectory with {} segments",
                knot.index, segments
            )));
        }
        Ok(())
    }

    /// The same pinned positions on a grid with twice as many segments.
    pub fn refined(&self) -> KnotSet {
        KnotSet {
            knots: self
                .knots
                .iter()
                .map(|k| Knot {
                    index: 2 * k.index,
                    position: k.position,
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Node systems and residuals
// ---------------------------------------------------------------------------

fn solve2(m: Mat2, rhs: Vec2) -> Option<Vec2> {
    solve_dense::<2>(m.m, [rhs.x, rhs.y]).map(Vec2::from_array)
}

/// Local system at one interior node: residual and its derivative with
/// respect to the node.
#[derive(Debug, Clone, Copy)]
struct NodeSystemQ {
    r: Vec2,
    m: Mat2,
}

fn node_system_q(prev: &EndJet1, cur: &EndJet1) -> NodeSystemQ {
    NodeSystemQ {
        r: prev.d + cur.d,
        m: prev.dd + cur.dd,
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeSystemTq {
    r: [f64; 4],
    m: [[f64; 4]; 4],
}

fn node_system_tq(prev: &EndJet2, cur: &EndJet2) -> NodeSystemTq {
    let rq = prev.dq + cur.dq;
    let rv = prev.dv + cur.dv;
    let qq = prev.dqq + cur.dqq;
    let qv = prev.dqv + cur.dqv;
    let vq = prev.dvq + cur.dvq;
    let vv = prev.dvv + cur.dvv;
    NodeSystemTq {
        r: [rq.x, rq.y, rv.x, rv.y],
        m: [
            [qq.m[0][0], qq.m[0][1], qv.m[0][0], qv.m[0][1]],
            [qq.m[1][0], qq.m[1][1], qv.m[1][0], qv.m[1][1]],
            [vq.m[0][0], vq.m[0][1], vv.m[0][0], vv.m[0][1]],
            [vq.m[1][0], vq.m[1][1], vv.m[1][0], vv.m[1][1]],
        ],
    }
}

/// Velocity-only system at a knot node.
fn knot_system_tq(prev: &EndJet2, cur: &EndJet2) -> NodeSystemQ {
    NodeSystemQ {
        r: prev.dv + cur.dv,
        m: prev.dvv + cur.dvv,
    }
}

fn norm4(r: [f64; 4]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt()
}

/// Stationarity residual at an interior node of a position trajectory.
pub fn node_residual_q(ld: &dyn DiscreteQ, q_prev: Vec2, q: Vec2, q_next: Vec2) -> Result<Vec2> {
    let prev = ld.grad(q_prev, q)?;
    let cur = ld.grad(q, q_next)?;
    Ok(prev.d2 + cur.d1)
}

/// Stationarity residual at an interior node of a phase trajectory, as its
/// `(position, velocity)` parts.
pub fn node_residual_tq(
    ld: &dyn DiscreteTq,
    x_prev: PhasePoint,
    x: PhasePoint,
    x_next: PhasePoint,
) -> Result<(Vec2, Vec2)> {
    let prev = ld.grad(x_prev, x)?;
    let cur = ld.grad(x, x_next)?;
    Ok((prev.d[2] + cur.d[0], prev.d[3] + cur.d[1]))
}

/// Residual norms of all interior nodes, in node order (entry `i` belongs to
/// node `i + 1`). Knot nodes contribute only the velocity part of their
/// system, since their positions are not unknowns.
pub fn residuals(ld: &DiscreteLd, traj: &Trajectory, knots: &KnotSet) -> Result<Vec<f64>> {
    check_knots(knots, traj)?;
    crate::lagrangian::check_compatible(ld, traj)?;
    let mut out = Vec::with_capacity(traj.segments().saturating_sub(1));
    match (ld, traj.data()) {
        (DiscreteLd::Q(ld), TrajectoryData::Positions(nodes)) => {
            let grads: Vec<_> = nodes
                .windows(2)
                .map(|p| ld.grad(p[0], p[1]))
                .collect::<Result<_>>()?;
            for k in 1..nodes.len() - 1 {
                out.push((grads[k - 1].d2 + grads[k].d1).norm());
            }
        }
        (DiscreteLd::Tq(ld), TrajectoryData::Phase(nodes)) => {
            let grads: Vec<_> = nodes
                .windows(2)
                .map(|p| ld.grad(p[0], p[1]))
                .collect::<Result<_>>()?;
            for k in 1..nodes.len() - 1 {
                let rv = grads[k - 1].d[3] + grads[k].d[1];
                if knots.position_at(k).is_some() {
                    out.push(rv.norm());
                } else {
                    let rq = grads[k - 1].d[2] + grads[k].d[0];
                    out.push(norm4([rq.x, rq.y, rv.x, rv.y]));
                }
            }
        }
        _ => unreachable!("kind checked above"),
    }
    Ok(out)
}

/// Largest interior residual norm; zero for a trajectory with no interior
/// nodes.
pub fn max_residual(ld: &DiscreteLd, traj: &Trajectory, knots: &KnotSet) -> Result<f64> {
    Ok(residuals(ld, traj, knots)?.into_iter().fold(0.0, f64::max))
}

fn check_knots(knots: &KnotSet, traj: &Trajectory) -> Result<()> {
    if knots.is_empty() {
        return Ok(());
    }
    if traj.kind() != TrajectoryKind::Phase {
        return Err(Error::BadWaypoints(
            "knots pin positions while velocities relax, which requires a phase trajectory".into(),
        ));
    }
    knots.check_interior(traj.segments())
}

// ---------------------------------------------------------------------------
// Exact per-node solves
// ---------------------------------------------------------------------------

fn eval_system_q(ld: &dyn DiscreteQ, q_prev: Vec2, q: Vec2, q_next: Vec2) -> Result<NodeSystemQ> {
    let prev = ld.jet_second(q_prev, q)?;
    let cur = ld.jet_first(q, q_next)?;
    Ok(node_system_q(&prev, &cur))
}

/// Newton iteration with step halving on the residual norm. Generic over
/// the node state so the 2- and 4-dimensional cases share the control flow.
#[allow(clippy::too_many_arguments)]
fn newton_inner<T: Copy, Sys: Copy>(
    mut state: T,
    mut sys: Sys,
    norm_of: impl Fn(&Sys) -> f64,
    step_of: impl Fn(&Sys) -> Option<T>,
    advance: impl Fn(T, T, f64) -> T,
    eval: impl Fn(T) -> Result<Sys>,
    inner: &InnerNewton,
    index: usize,
) -> Result<T> {
    let mut rn = norm_of(&sys);
    for iteration in 0..inner.max_iterations {
        if rn < inner.tolerance {
            return Ok(state);
        }
        let delta = step_of(&sys).ok_or(Error::SingularSystem { index: Some(index) })?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_STEP_HALVINGS {
            let cand = advance(state, delta, scale);
            // Trial states outside the Lagrangian's domain just shrink the
            // step further, like any non-improving trial.
            if let Ok(cand_sys) = eval(cand) {
                let cand_rn = norm_of(&cand_sys);
                if cand_rn < rn {
                    state = cand;
                    sys = cand_sys;
                    rn = cand_rn;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::InnerNewtonStalled {
                index,
                iterations: iteration + 1,
            });
        }
    }
    if rn < inner.tolerance {
        Ok(state)
    } else {
        Err(Error::InnerNewtonStalled {
            index,
            iterations: inner.max_iterations,
        })
    }
}

fn exact_node_q(
    ld: &dyn DiscreteQ,
    q_prev: Vec2,
    q: Vec2,
    q_next: Vec2,
    init: NodeSystemQ,
    inner: &InnerNewton,
    index: usize,
) -> Result<Vec2> {
    newton_inner(
        q,
        init,
        |sys: &NodeSystemQ| sys.r.norm(),
        |sys| solve2(sys.m, -sys.r),
        |q, delta, scale| q + delta * scale,
        |q| eval_system_q(ld, q_prev, q, q_next),
        inner,
        index,
    )
}

fn eval_system_tq(
    ld: &dyn DiscreteTq,
    x_prev: PhasePoint,
    x: PhasePoint,
    x_next: PhasePoint,
) -> Result<NodeSystemTq> {
    let prev = ld.jet_second(x_prev, x)?;
    let cur = ld.jet_first(x, x_next)?;
    Ok(node_system_tq(&prev, &cur))
}

fn exact_node_tq(
    ld: &dyn DiscreteTq,
    x_prev: PhasePoint,
    x: PhasePoint,
    x_next: PhasePoint,
    init: NodeSystemTq,
    inner: &InnerNewton,
    index: usize,
) -> Result<PhasePoint> {
    newton_inner(
        x,
        init,
        |sys: &NodeSystemTq| norm4(sys.r),
        |sys| {
            solve_dense::<4>(sys.m, [-sys.r[0], -sys.r[1], -sys.r[2], -sys.r[3]])
                .map(|d| PhasePoint::new(Vec2::new(d[0], d[1]), Vec2::new(d[2], d[3])))
        },
        |x, delta, scale| PhasePoint::new(x.q + delta.q * scale, x.v + delta.v * scale),
        |x| eval_system_tq(ld, x_prev, x, x_next),
        inner,
        index,
    )
}

/// Velocity-only exact solve at a knot node.
fn exact_knot_velocity(
    ld: &dyn DiscreteTq,
    x_prev: PhasePoint,
    x: PhasePoint,
    x_next: PhasePoint,
    init: NodeSystemQ,
    inner: &InnerNewton,
    index: usize,
) -> Result<Vec2> {
    newton_inner(
        x.v,
        init,
        |sys: &NodeSystemQ| sys.r.norm(),
        |sys| solve2(sys.m, -sys.r),
        |v, delta, scale| v + delta * scale,
        |v| {
            let cand = PhasePoint::new(x.q, v);
            let prev = ld.jet_second(x_prev, cand)?;
            let cur = ld.jet_first(cand, x_next)?;
            Ok(knot_system_tq(&prev, &cur))
        },
        inner,
        index,
    )
}

/// One Newton step of the local stationarity system at an interior node:
/// `q - M⁻¹ R` where `M = D22 L_d(q_prev, q) + D11 L_d(q, q_next)`.
pub fn newton_step_q(ld: &dyn DiscreteQ, q_prev: Vec2, q: Vec2, q_next: Vec2) -> Result<Vec2> {
    let sys = eval_system_q(ld, q_prev, q, q_next)?;
    let delta = solve2(sys.m, -sys.r).ok_or(Error::SingularSystem { index: None })?;
    Ok(q + delta)
}

/// Solve the local stationarity system at an interior node to the inner
/// tolerance, starting the Newton iteration from `q_guess`.
pub fn solve_node_q(
    ld: &dyn DiscreteQ,
    q_prev: Vec2,
    q_guess: Vec2,
    q_next: Vec2,
    inner: &InnerNewton,
) -> Result<Vec2> {
    let init = eval_system_q(ld, q_prev, q_guess, q_next)?;
    exact_node_q(ld, q_prev, q_guess, q_next, init, inner, 0)
}

/// One Newton step of the local stationarity system at an interior node of
/// a phase trajectory (one dense 4-by-4 solve on the stacked blocks).
pub fn newton_step_tq(
    ld: &dyn DiscreteTq,
    x_prev: PhasePoint,
    x: PhasePoint,
    x_next: PhasePoint,
) -> Result<PhasePoint> {
    let sys = eval_system_tq(ld, x_prev, x, x_next)?;
    let delta = solve_dense::<4>(sys.m, [-sys.r[0], -sys.r[1], -sys.r[2], -sys.r[3]])
        .ok_or(Error::SingularSystem { index: None })?;
    Ok(PhasePoint::new(
        x.q + Vec2::new(delta[0], delta[1]),
        x.v + Vec2::new(delta[2], delta[3]),
    ))
}

/// Solve the local stationarity system at an interior phase node to the
/// inner tolerance, starting from `x_guess`.
pub fn solve_node_tq(
    ld: &dyn DiscreteTq,
    x_prev: PhasePoint,
    x_guess: PhasePoint,
    x_next: PhasePoint,
    inner: &InnerNewton,
) -> Result<PhasePoint> {
    let init = eval_system_tq(ld, x_prev, x_guess, x_next)?;
    exact_node_tq(ld, x_prev, x_guess, x_next, init, inner, 0)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

fn build_pool(width: usize) -> Result<Option<rayon::ThreadPool>> {
    if width <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .map(Some)
        .map_err(|e| {
            Error::BadParameter(format!("cannot build a thread pool of width {width}: {e}"))
        })
}

/// Map `f` over `0..count`, in parallel when a pool is given. The output
/// order is the index order either way, and `f` is pure, so the result does
/// not depend on the pool width.
fn par_map<T, F>(pool: Option<&rayon::ThreadPool>, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match pool {
        Some(pool) => pool.install(|| (0..count).into_par_iter().with_min_len(8).map(f).collect()),
        None => (0..count).map(f).collect(),
    }
}

/// Collect item results, reporting the lowest-index error so failure
/// messages do not depend on thread scheduling.
fn first_error<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        out.push(item?);
    }
    Ok(out)
}

struct PairJetsQ {
    first: EndJet1,
    second: EndJet1,
}

fn sweep_q(
    ld: &dyn DiscreteQ,
    nodes: &[Vec2],
    cfg: &SweepConfig,
    pool: Option<&rayon::ThreadPool>,
) -> Result<(Vec<Vec2>, f64)> {
    let segs = nodes.len() - 1;
    let jets = first_error(par_map(pool, segs, |k| -> Result<PairJetsQ> {
        Ok(PairJetsQ {
            first: ld.jet_first(nodes[k], nodes[k + 1])?,
            second: ld.jet_second(nodes[k], nodes[k + 1])?,
        })
    }))?;

    let updates = first_error(par_map(pool, segs - 1, |i| -> Result<(Vec2, f64)> {
        let k = i + 1;
        let sys = node_system_q(&jets[k - 1].second, &jets[k].first);
        let rn = sys.r.norm();
        let keep = 1.0 - cfg.damping;
        let new_q = match cfg.rule {
            UpdateRule::JacobiNewton => {
                let delta =
                    solve2(sys.m, -sys.r).ok_or(Error::SingularSystem { index: Some(k) })?;
                nodes[k] + delta * keep
            }
            UpdateRule::ExactParallel => {
                let target =
                    exact_node_q(ld, nodes[k - 1], nodes[k], nodes[k + 1], sys, &cfg.inner, k)?;
                nodes[k] + (target - nodes[k]) * keep
            }
        };
        Ok((new_q, rn))
    }))?;

    let mut out = Vec::with_capacity(nodes.len());
    out.push(nodes[0]);
    let mut max_r: f64 = 0.0;
    for (q, rn) in updates {
        out.push(q);
        max_r = max_r.max(rn);
    }
    out.push(nodes[segs]);
    Ok((out, max_r))
}

struct PairJetsTq {
    first: EndJet2,
    second: EndJet2,
}

fn sweep_tq(
    ld: &dyn DiscreteTq,
    nodes: &[PhasePoint],
    knots: &KnotSet,
    cfg: &SweepConfig,
    pool: Option<&rayon::ThreadPool>,
) -> Result<(Vec<PhasePoint>, f64)> {
    let segs = nodes.len() - 1;
    let jets = first_error(par_map(pool, segs, |k| -> Result<PairJetsTq> {
        Ok(PairJetsTq {
            first: ld.jet_first(nodes[k], nodes[k + 1])?,
            second: ld.jet_second(nodes[k], nodes[k + 1])?,
        })
    }))?;

    let updates = first_error(par_map(pool, segs - 1, |i| -> Result<(PhasePoint, f64)> {
        let k = i + 1;
        let prev = &jets[k - 1].second;
        let cur = &jets[k].first;
        let keep = 1.0 - cfg.damping;
        if knots.position_at(k).is_some() {
            // Pinned position: relax the velocity against its own block.
            let sys = knot_system_tq(prev, cur);
            let rn = sys.r.norm();
            let new_v = match cfg.rule {
                UpdateRule::JacobiNewton => {
                    let delta =
                        solve2(sys.m, -sys.r).ok_or(Error::SingularSystem { index: Some(k) })?;
                    nodes[k].v + delta * keep
                }
                UpdateRule::ExactParallel => {
                    let target = exact_knot_velocity(
                        ld,
                        nodes[k - 1],
                        nodes[k],
                        nodes[k + 1],
                        sys,
                        &cfg.inner,
                        k,
                    )?;
                    nodes[k].v + (target - nodes[k].v) * keep
                }
            };
            Ok((PhasePoint::new(nodes[k].q, new_v), rn))
        } else {
            let sys = node_system_tq(prev, cur);
            let rn = norm4(sys.r);
            let new_x = match cfg.rule {
                UpdateRule::JacobiNewton => {
                    let delta =
                        solve_dense::<4>(sys.m, [-sys.r[0], -sys.r[1], -sys.r[2], -sys.r[3]])
                            .ok_or(Error::SingularSystem { index: Some(k) })?;
                    PhasePoint::new(
                        nodes[k].q + Vec2::new(delta[0], delta[1]) * keep,
                        nodes[k].v + Vec2::new(delta[2], delta[3]) * keep,
                    )
                }
                UpdateRule::ExactParallel => {
                    let target = exact_node_tq(
                        ld,
                        nodes[k - 1],
                        nodes[k],
                        nodes[k + 1],
                        sys,
                        &cfg.inner,
                        k,
                    )?;
                    PhasePoint::new(
                        nodes[k].q + (target.q - nodes[k].q) * keep,
                        nodes[k].v + (target.v - nodes[k].v) * keep,
                    )
                }
            };
            Ok((new_x, rn))
        }
    }))?;

    let mut out = Vec::with_capacity(nodes.len());
    out.push(nodes[0]);
    let mut max_r: f64 = 0.0;
    for (x, rn) in updates {
        out.push(x);
        max_r = max_r.max(rn);
    }
    out.push(nodes[segs]);
    Ok((out, max_r))
}

fn sweep_with_pool(
    ld: &DiscreteLd,
    traj: &Trajectory,
    knots: &KnotSet,
    cfg: &SweepConfig,
    pool: Option<&rayon::ThreadPool>,
) -> Result<(Trajectory, f64)> {
    let (data, max_r) = match (ld, traj.data()) {
        (DiscreteLd::Q(ld), TrajectoryData::Positions(nodes)) => {
            let (nodes, max_r) = sweep_q(ld.as_ref(), nodes, cfg, pool)?;
            (
                Trajectory::from_positions(traj.h(), traj.t0(), nodes)?,
                max_r,
            )
        }
        (DiscreteLd::Tq(ld), TrajectoryData::Phase(nodes)) => {
            let (nodes, max_r) = sweep_tq(ld.as_ref(), nodes, knots, cfg, pool)?;
            (Trajectory::from_phase(traj.h(), traj.t0(), nodes)?, max_r)
        }
        _ => unreachable!("kind checked by caller"),
    };
    Ok((data, max_r))
}

/// Apply one sweep to every interior node. Returns the updated trajectory
/// and the largest residual norm *of the input trajectory* (each node's
/// residual is measured before it moves).
pub fn sweep(
    ld: &DiscreteLd,
    traj: &Trajectory,
    knots: &KnotSet,
    cfg: &SweepConfig,
) -> Result<(Trajectory, f64)> {
    cfg.validate()?;
    crate::lagrangian::check_compatible(ld, traj)?;
    check_knots(knots, traj)?;
    if traj.segments() < 2 {
        return Err(Error::BadParameter(
            "sweeping needs at least one interior node (two segments)".into(),
        ));
    }
    let pool = build_pool(cfg.parallel_width)?;
    sweep_with_pool(ld, traj, knots, cfg, pool.as_ref())
}

// ---------------------------------------------------------------------------
// Outer solve loop
// ---------------------------------------------------------------------------

/// One entry of the per-sweep residual history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    /// Number of sweeps that had been applied when this measurement was
    /// taken (so the first entry, for the initial guess, has `sweep == 0`).
    pub sweep: usize,
    pub max_residual: f64,
    /// Seconds elapsed since the solve started.
    pub wall_seconds: f64,
}

/// Convergence record of a [`solve`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Sweeps actually applied to reach the returned iterate.
    pub sweeps: usize,
    /// Whether the returned iterate met the stopping criterion.
    pub converged: bool,
    /// Residual norm of the returned iterate.
    pub final_max_residual: f64,
    /// The absolute stopping tolerance `tolerance_factor * h^2`.
    pub tolerance: f64,
    pub history: Vec<ResidualSample>,
    pub wall_seconds: f64,
}

/// A solved trajectory with its convergence record.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub report: ResidualReport,
}

fn first_nonfinite(traj: &Trajectory) -> Option<usize> {
    match traj.data() {
        TrajectoryData::Positions(nodes) => nodes.iter().position(|q| !q.is_finite()),
        TrajectoryData::Phase(nodes) => nodes.iter().position(|x| !x.is_finite()),
    }
}

/// Relax `guess` until every interior node of the problem's stationarity
/// system has residual norm below `tolerance_factor * h^2`, or the sweep
/// budget runs out.
///
/// The returned trajectory is the exact iterate whose residual was measured
/// against the tolerance — not a further-updated one — so re-evaluating its
/// residual reproduces `final_max_residual`.
pub fn solve(problem: &ProblemSpec, guess: &Trajectory, cfg: &SweepConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    problem.validate()?;
    problem.check_guess(guess)?;
    let ld = problem.discrete_lagrangian()?;
    let h = problem.step();
    let tolerance = cfg.tolerance_factor * h * h;
    let pool = build_pool(cfg.parallel_width)?;
    let started = Instant::now();

    let mut state = guess.clone();
    let mut history = Vec::new();
    let mut applied = 0usize;
    loop {
        let (candidate, max_r) = sweep_with_pool(&ld, &state, &problem.knots, cfg, pool.as_ref())?;
        history.push(ResidualSample {
            sweep: applied,
            max_residual: max_r,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
        let stop = max_r < tolerance;
        if stop || applied >= cfg.max_sweeps {
            return Ok(SolveOutcome {
                trajectory: state,
                report: ResidualReport {
                    sweeps: applied,
                    converged: stop,
                    final_max_residual: max_r,
                    tolerance,
                    history,
                    wall_seconds: started.elapsed().as_secs_f64(),
                },
            });
        }
        if let Some(index) = first_nonfinite(&candidate) {
            return Err(Error::NonFiniteState {
                sweep: applied + 1,
                index,
            });
        }
        state = candidate;
        applied += 1;
    }
}

// ---------------------------------------------------------------------------
// Initial guesses
// ---------------------------------------------------------------------------

/// Recipes for constructing an initial trajectory between the boundary
/// states of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum GuessKind {
    /// Uniform motion from start to end.
    StraightLine,
    /// Linear between the boundary and the given interior waypoints.
    PiecewiseLinear(Vec<Knot>),
    /// Clamped cubic spline through the boundary and the given interior
    /// waypoints. End slopes come from the boundary velocities for phase
    /// problems and are zero for position problems.
    CubicSpline(Vec<Knot>),
}

fn anchor_list(
    waypoints: &[Knot],
    boundary: &Boundary,
    segments: usize,
) -> Result<Vec<(usize, Vec2)>> {
    let waypoints = KnotSet::new(waypoints.to_vec())?;
    waypoints.check_interior(segments)?;
    let mut anchors = Vec::with_capacity(waypoints.len() + 2);
    anchors.push((0, boundary.start_position()));
    anchors.extend(waypoints.iter().map(|k| (k.index, k.position)));
    anchors.push((segments, boundary.end_position()));
    Ok(anchors)
}

/// Build an initial trajectory on `segments` segments of step `h` starting
/// at time `t0`, honoring the boundary exactly (bitwise) at the endpoints
/// and passing exactly through any waypoints.
pub fn initial_guess(
    kind: &GuessKind,
    boundary: &Boundary,
    segments: usize,
    h: f64,
    t0: f64,
) -> Result<Trajectory> {
    if segments < 1 {
        return Err(Error::BadParameter(
            "an initial guess needs at least one segment".into(),
        ));
    }
    match kind {
        GuessKind::StraightLine => {
            let anchors = anchor_list(&[], boundary, segments)?;
            piecewise_linear(&anchors, boundary, segments, h, t0)
        }
        GuessKind::PiecewiseLinear(waypoints) => {
            let anchors = anchor_list(waypoints, boundary, segments)?;
            piecewise_linear(&anchors, boundary, segments, h, t0)
        }
        GuessKind::CubicSpline(waypoints) => {
            let anchors = anchor_list(waypoints, boundary, segments)?;
            spline_guess(&anchors, boundary, segments, h, t0)
        }
    }
}

fn piecewise_linear(
    anchors: &[(usize, Vec2)],
    boundary: &Boundary,
    segments: usize,
    h: f64,
    t0: f64,
) -> Result<Trajectory> {
    let mut positions = vec![Vec2::ZERO; segments + 1];
    let mut slopes = vec![Vec2::ZERO; segments + 1];
    for span in anchors.windows(2) {
        let ((i0, p0), (i1, p1)) = (span[0], span[1]);
        let slope = (p1 - p0) / ((i1 - i0) as f64 * h);
        for k in i0..i1 {
            let s = (k - i0) as f64 / (i1 - i0) as f64;
            positions[k] = p0 + (p1 - p0) * s;
            slopes[k] = slope;
        }
    }
    // Anchor nodes are assigned exactly, not through the interpolation
    // formula, so they match the requested points bitwise.
    for &(i, p) in anchors {
        positions[i] = p;
    }
    slopes[segments] = slopes[segments - 1];

    match boundary {
        Boundary::Positions { .. } => Trajectory::from_positions(h, t0, positions),
        Boundary::Phase { start, end } => {
            let mut nodes: Vec<PhasePoint> = positions
                .into_iter()
                .zip(slopes)
                .map(|(q, v)| PhasePoint::new(q, v))
                .collect();
            nodes[0].v = start.v;
            nodes[segments].v = end.v;
            Trajectory::from_phase(h, t0, nodes)
        }
    }
}

/// Clamped cubic spline through the anchors: second-derivative unknowns
/// solve the standard tridiagonal system with endpoint-slope conditions.
#[allow(clippy::needless_range_loop)] // the loop index doubles as the axis selector
fn spline_guess(
    anchors: &[(usize, Vec2)],
    boundary: &Boundary,
    segments: usize,
    h: f64,
    t0: f64,
) -> Result<Trajectory> {
    let (v_start, v_end) = match boundary {
        Boundary::Positions { .. } => (Vec2::ZERO, Vec2::ZERO),
        Boundary::Phase { start, end } => (start.v, end.v),
    };
    let ts: Vec<f64> = anchors.iter().map(|&(i, _)| i as f64 * h).collect();
    let n = anchors.len() - 1;

    // Per-component moments (second derivatives at the anchors).
    let mut moments = [Vec::new(), Vec::new()];
    for (c, moments_c) in moments.iter_mut().enumerate() {
        let ys: Vec<f64> = anchors
            .iter()
            .map(|&(_, p)| if c == 0 { p.x } else { p.y })
            .collect();
        let (v0, vn) = if c == 0 {
            (v_start.x, v_end.x)
        } else {
            (v_start.y, v_end.y)
        };
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n + 1];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n + 1];
        let dt = |i: usize| ts[i + 1] - ts[i];
        let dy = |i: usize| (ys[i + 1] - ys[i]) / dt(i);
        diag[0] = 2.0 * dt(0);
        upper[0] = dt(0);
        rhs[0] = 6.0 * (dy(0) - v0);
        for i in 1..n {
            lower[i - 1] = dt(i - 1);
            diag[i] = 2.0 * (dt(i - 1) + dt(i));
            upper[i] = dt(i);
            rhs[i] = 6.0 * (dy(i) - dy(i - 1));
        }
        lower[n - 1] = dt(n - 1);
        diag[n] = 2.0 * dt(n - 1);
        rhs[n] = 6.0 * (vn - dy(n - 1));
        *moments_c = solve_tridiagonal(&lower, &diag, &upper, &rhs)
            .ok_or_else(|| Error::BadParameter("degenerate spline system".into()))?;
    }

    // Evaluate the spline (and its slope) at every node.
    let mut positions = vec![Vec2::ZERO; segments + 1];
    let mut velocities = vec![Vec2::ZERO; segments + 1];
    let mut segment = 0usize;
    for k in 0..=segments {
        while anchors[segment + 1].0 < k {
            segment += 1;
        }
        let t = k as f64 * h;
        let (t_a, dt) = (ts[segment], ts[segment + 1] - ts[segment]);
        let s = t - t_a;
        for c in 0..2 {
            let get = |p: Vec2| if c == 0 { p.x } else { p.y };
            let (y0, y1) = (get(anchors[segment].1), get(anchors[segment + 1].1));
            let (m0, m1) = (moments[c][segment], moments[c][segment + 1]);
            let b = (y1 - y0) / dt - dt * (2.0 * m0 + m1) / 6.0;
            let value = y0 + b * s + 0.5 * m0 * s * s + (m1 - m0) / (6.0 * dt) * s * s * s;
            let slope = b + m0 * s + (m1 - m0) / (2.0 * dt) * s * s;
            if c == 0 {
                positions[k].x = value;
                velocities[k].x = slope;
            } else {
                positions[k].y = value;
                velocities[k].y = slope;
            }
        }
    }
    // Anchors and end slopes are assigned exactly.
    for &(i, p) in anchors {
        positions[i] = p;
    }
    velocities[0] = v_start;
    velocities[segments] = v_end;

    match boundary {
        Boundary::Positions { .. } => Trajectory::from_positions(h, t0, positions),
        Boundary::Phase { .. } => {
            let nodes = positions
                .into_iter()
                .zip(velocities)
                .map(|(q, v)| PhasePoint::new(q, v))
                .collect();
            Trajectory::from_phase(h, t0, nodes)
        }
    }
}

// ---------------------------------------------------------------------------
// Guess perturbation
// ---------------------------------------------------------------------------

/// Displace the interior of a trajectory by a smooth pseudo-random field:
/// per component, a sum of the three lowest sine modes (which vanish at the
/// ends) with coefficients drawn from the seeded generator, scaled so the
/// displacement never exceeds `amplitude`. Boundary nodes are untouched and
/// knot positions stay pinned (their velocities do move). The same seed
/// always produces the same perturbation.
pub fn perturb_interior(
    traj: &Trajectory,
    knots: &KnotSet,
    amplitude: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::BadParameter(format!(
            "perturbation amplitude must be non-negative, got {amplitude}"
        )));
    }
    check_knots(knots, traj)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = traj.segments();
    let scale = amplitude / 3.0;
    // One smooth displacement field per scalar channel, drawn in a fixed
    // order so the result is reproducible.
    let field = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let coeffs: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        (0..=n)
            .map(|k| {
                let base = std::f64::consts::PI * k as f64 / n as f64;
                scale
                    * (1..=3)
                        .map(|m| coeffs[m - 1] * (base * m as f64).sin())
                        .sum::<f64>()
            })
            .collect()
    };
    match traj.data() {
        TrajectoryData::Positions(nodes) => {
            let dx = field(&mut rng);
            let dy = field(&mut rng);
            let mut out = nodes.clone();
            for k in 1..n {
                out[k] += Vec2::new(dx[k], dy[k]);
            }
            Trajectory::from_positions(traj.h(), traj.t0(), out)
        }
        TrajectoryData::Phase(nodes) => {
            let dqx = field(&mut rng);
            let dqy = field(&mut rng);
            let dvx = field(&mut rng);
            let dvy = field(&mut rng);
            let mut out = nodes.clone();
            for k in 1..n {
                if knots.position_at(k).is_none() {
                    out[k].q += Vec2::new(dqx[k], dqy[k]);
                }
                out[k].v += Vec2::new(dvx[k], dvy[k]);
            }
            Trajectory::from_phase(traj.h(), traj.t0(), out)
        }
    }
}
