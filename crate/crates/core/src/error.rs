//! Crate-wide error type.
//!
//! Everything that can fail — field evaluation, Lagrangian domain checks,
//! Newton solves inside a sweep, configuration validation — funnels into one
//! enum so solver entry points have a single error channel.

use std::fmt;

use crate::windexpr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The wind reaches or exceeds unit speed at a point, so the metric the
    /// time-optimal problem is built on is undefined there.
    WindTooStrong { x: f64, y: f64, speed: f64 },
    /// A segment velocity is too close to zero for the squared length
    /// functional to be twice differentiable.
    DegenerateVelocity { speed: f64 },
    /// A per-node Newton matrix was numerically singular. `index` is the
    /// trajectory node where it happened, when known.
    SingularSystem { index: Option<usize> },
    /// The inner Newton iteration of the exact update rule did not reach its
    /// tolerance within its iteration budget.
    InnerNewtonStalled { index: usize, iterations: usize },
    /// An iterate picked up a non-finite coordinate.
    NonFiniteState { sweep: usize, index: usize },
    /// Waypoints or knots are out of range, out of order, or duplicated.
    BadWaypoints(String),
    /// A scalar parameter failed validation (non-positive step size,
    /// damping outside `[0, 1)`, zero segment count, ...).
    BadParameter(String),
    /// A trajectory does not fit the problem or discretization it was used
    /// with (wrong kind, wrong length, boundary mismatch, ...).
    Mismatch(String),
    /// A wind-field expression failed to parse.
    Parse(ParseError),
    /// A wind-field expression hit a domain error during evaluation or
    /// differentiation.
    Domain(EvalError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::WindTooStrong { x, y, speed } => write!(
                f,
                "wind speed {speed} at ({x}, {y}) is not below 1; \
                 the time-optimal metric requires |W| < 1"
            ),
            Error::DegenerateVelocity { speed } => write!(
                f,
                "segment speed {speed} is too small for the squared \
                 travel-time density to be differentiated"
            ),
            Error::SingularSystem { index: Some(k) } => {
                write!(f, "singular update system at node {k}")
            }
            Error::SingularSystem { index: None } => write!(f, "singular update system"),
            Error::InnerNewtonStalled { index, iterations } => write!(
                f,
                "inner Newton iteration at node {index} did not converge \
                 after {iterations} iterations"
            ),
            Error::NonFiniteState { sweep, index } => {
                write!(f, "non-finite state at node {index} after sweep {sweep}")
            }
            Error::BadWaypoints(msg) => write!(f, "invalid waypoints: {msg}"),
            Error::BadParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Mismatch(msg) => write!(f, "mismatch: {msg}"),
            Error::Parse(err) => write!(f, "expression parse error: {err}"),
            Error::Domain(err) => write!(f, "expression domain error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Parse(err) => Some(err),
            Error::Domain(err) => Some(err),
            _ => None,
        }
    }
}

impl From<ParseError> for Error {
    fn from(err: ParseError) -> Self {
        Error::Parse(err)
    }
}

impl From<EvalError> for Error {
    fn from(err: EvalError) -> Self {
        Error::Domain(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_identify_the_failure_site() {
        let e = Error::SingularSystem { index: Some(17) };
        assert!(e.to_string().contains("node 17"));

        let e = Error::NonFiniteState { sweep: 3, index: 9 };
        let msg = e.to_string();
        assert!(msg.contains("sweep 3") && msg.contains("node 9"));

        let e = Error::WindTooStrong {
            x: 1.0,
            y: 2.0,
            speed: 1.25,
        };
        assert!(e.to_string().contains("1.25"));
    }

    #[test]
    fn expression_errors_convert_and_chain() {
        let parse_err = crate::windexpr::parse("1+*").unwrap_err();
        let e: Error = parse_err.into();
        assert!(matches!(e, Error::Parse(_)));
        assert!(std::error::Error::source(&e).is_some());
    }
}
