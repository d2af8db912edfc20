//! Discrete trajectories on a uniform time grid.
//!
//! A trajectory stores the node values of either a position path (`q_k`) or
//! a phase path (`(q_k, v_k)`), together with the step size `h` and start
//! time `t0`. Node `k` sits at time `t0 + k h`.

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// A point of the tangent bundle: position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint {
    pub q: Vec2,
    pub v: Vec2,
}

impl PhasePoint {
    pub fn new(q: Vec2, v: Vec2) -> Self {
        PhasePoint { q, v }
    }

    pub fn is_finite(self) -> bool {
        self.q.is_finite() && self.v.is_finite()
    }
}

/// Which kind of state a trajectory carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// Positions only; first-order problems.
    Positions,
    /// Position-velocity pairs; second-order problems.
    Phase,
}

impl std::fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrajectoryKind::Positions => write!(f, "positions"),
            TrajectoryKind::Phase => write!(f, "phase"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryData {
    Positions(Vec<Vec2>),
    Phase(Vec<PhasePoint>),
}

/// Node values on the uniform grid `t0, t0 + h, ..., t0 + N h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    data: TrajectoryData,
    h: f64,
    t0: f64,
}

impl Trajectory {
    pub fn from_positions(h: f64, t0: f64, nodes: Vec<Vec2>) -> Result<Self> {
        Self::validate_grid(h, t0, nodes.len())?;
        Ok(Trajectory {
            data: TrajectoryData::Positions(nodes),
            h,
            t0,
        })
    }

    pub fn from_phase(h: f64, t0: f64, nodes: Vec<PhasePoint>) -> Result<Self> {
        Self::validate_grid(h, t0, nodes.len())?;
        Ok(Trajectory {
            data: TrajectoryData::Phase(nodes),
            h,
            t0,
        })
    }

    fn validate_grid(h: f64, t0: f64, len: usize) -> Result<()> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::BadParameter(format!(
                "step size must be positive and finite, got {h}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::BadParameter(format!(
                "start time must be finite, got {t0}"
            )));
        }
        if len < 2 {
            return Err(Error::BadParameter(format!(
                "a trajectory needs at least 2 nodes, got {len}"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> TrajectoryKind {
        match self.data {
            TrajectoryData::Positions(_) => TrajectoryKind::Positions,
            TrajectoryData::Phase(_) => TrajectoryKind::Phase,
        }
    }

    pub fn data(&self) -> &TrajectoryData {
        &self.data
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of nodes (`N + 1` for `N` segments).
    pub fn len(&self) -> usize {
        match &self.data {
            TrajectoryData::Positions(v) => v.len(),
            TrajectoryData::Phase(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false // the constructors require at least two nodes
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.len() - 1
    }

    /// Time of node `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.h * k as f64
    }

    /// Position of node `k`, for either kind.
    pub fn position(&self, k: usize) -> Vec2 {
        match &self.data {
            TrajectoryData::Positions(v) => v[k],
            TrajectoryData::Phase(v) => v[k].q,
        }
    }

    /// Position nodes, when this is a position trajectory.
    pub fn positions(&self) -> Option<&[Vec2]> {
        match &self.data {
            TrajectoryData::Positions(v) => Some(v),
            TrajectoryData::Phase(_) => None,
        }
    }

    /// Phase nodes, when this is a phase trajectory.
    pub fn phase_points(&self) -> Option<&[PhasePoint]> {
        match &self.data {
            TrajectoryData::Phase(v) => Some(v),
            TrajectoryData::Positions(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            TrajectoryData::Positions(v) => v.iter().all(|q| q.is_finite()),
            TrajectoryData::Phase(v) => v.iter().all(|x| x.is_finite()),
        }
    }

    /// Double the number of segments, halving the step.
    ///
    /// Existing nodes are kept as-is. New position-kind midpoints are linear
    /// interpolants; new phase-kind midpoints evaluate the cubic Hermite
    /// interpolant of each segment at its center:
    ///
    /// ```text
    /// q(1/2) = (q0 + q1)/2 + (h/8)(v0 - v1)
    /// v(1/2) = 3(q1 - q0)/(2h) - (v0 + v1)/4
    /// ```
    pub fn refine(&self) -> Trajectory {
        let h = self.h;
        let data = match &self.data {
            TrajectoryData::Positions(nodes) => {
                let mut out = Vec::with_capacity(2 * nodes.len() - 1);
                for k in 0..nodes.len() - 1 {
                    out.push(nodes[k]);
                    out.push((nodes[k] + nodes[k + 1]) * 0.5);
                }
                out.push(nodes[nodes.len() - 1]);
                TrajectoryData::Positions(out)
            }
            TrajectoryData::Phase(nodes) => {
                let mut out = Vec::with_capacity(2 * nodes.len() - 1);
                for k in 0..nodes.len() - 1 {
                    let (x0, x1) = (nodes[k], nodes[k + 1]);
                    out.push(x0);
                    let q_mid = (x0.q + x1.q) * 0.5 + (x0.v - x1.v) * (h / 8.0);
                    let v_mid = (x1.q - x0.q) * (1.5 / h) - (x0.v + x1.v) * 0.25;
                    out.push(PhasePoint::new(q_mid, v_mid));
                }
                out.push(nodes[nodes.len() - 1]);
                TrajectoryData::Phase(out)
            }
        };
        Trajectory {
            data,
            h: 0.5 * h,
            t0: self.t0,
        }
    }
}
