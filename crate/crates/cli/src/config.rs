//! Problem descriptions in TOML.
//!
//! A config file carries the same information as a built-in catalog entry:
//! the cost form and its grid, the wind field, boundary states, optional
//! pinned waypoints, and solver settings. Solver settings from the file are
//! defaults; command-line flags override them.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use delrelax::solver::{GuessKind, Knot, KnotSet};
use delrelax::trajectory::PhasePoint;
use delrelax::{
    trig_shear_field, vortex_field, Boundary, ProblemForm, ProblemSpec, SweepConfig, UpdateRule,
    Vec2, WindField,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    problem: ProblemSection,
    wind: WindSection,
    boundary: BoundarySection,
    #[serde(default)]
    knots: Vec<KnotEntry>,
    #[serde(default)]
    solver: SolverSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    /// "zermelo" (time-optimal), "fuel", or "smooth-control".
    form: String,
    /// Total duration `T`.
    horizon: f64,
    /// Segment count `N`.
    segments: usize,
    /// Thrust-rate weight; required for (and only for) "smooth-control".
    rate_weight: Option<f64>,
    /// Label used in output paths; defaults to the file stem.
    name: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindSection {
    /// A named built-in field: "zero", "vortex", or "trig-shear".
    builtin: Option<String>,
    /// Expression for the first component, in variables `x`, `y`.
    w1: Option<String>,
    /// Expression for the second component.
    w2: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundarySection {
    start: [f64; 2],
    end: [f64; 2],
    /// Required for (and only for) second-order problems.
    start_velocity: Option<[f64; 2]>,
    end_velocity: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnotEntry {
    index: usize,
    position: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    /// "newton" (one Newton step per node per sweep) or "exact" (inner
    /// Newton loop per node).
    rule: Option<String>,
    damping: Option<f64>,
    tolerance_factor: Option<f64>,
    max_sweeps: Option<usize>,
    parallel_width: Option<usize>,
    /// "straight", "piecewise", or "spline". "piecewise" and "spline"
    /// follow `waypoints` when given; "spline" falls back to the problem
    /// knots for second-order problems.
    guess: Option<String>,
    #[serde(default)]
    waypoints: Vec<KnotEntry>,
}

fn vec2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn knot(entry: &KnotEntry) -> Knot {
    Knot {
        index: entry.index,
        position: vec2(entry.position),
    }
}

pub fn parse_rule(name: &str) -> Result<UpdateRule> {
    match name {
        "exact" => Ok(UpdateRule::ExactParallel),
        "newton" => Ok(UpdateRule::JacobiNewton),
        other => bail!("unknown update rule '{other}'; expected 'exact' or 'newton'"),
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ConfigFile =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    fn wind(&self) -> Result<WindField> {
        match (&self.wind.builtin, &self.wind.w1, &self.wind.w2) {
            (Some(name), None, None) => match name.as_str() {
                "zero" => Ok(WindField::Zero),
                "vortex" => Ok(vortex_field()),
                "trig-shear" => Ok(trig_shear_field()),
                other => bail!(
                    "unknown built-in wind '{other}'; expected 'zero', 'vortex', or 'trig-shear'"
                ),
            },
            (None, Some(w1), Some(w2)) => {
                WindField::from_expressions(w1, w2).context("parsing wind expressions")
            }
            (None, _, _) => bail!("[wind] needs either `builtin` or both `w1` and `w2`"),
            (Some(_), _, _) => bail!("[wind] takes `builtin` or expressions, not both"),
        }
    }

    fn form(&self) -> Result<ProblemForm> {
        match (self.problem.form.as_str(), self.problem.rate_weight) {
            ("zermelo", None) => Ok(ProblemForm::TimeOptimal),
            ("fuel", None) => Ok(ProblemForm::Fuel),
            ("smooth-control", Some(rate_weight)) => Ok(ProblemForm::SmoothControl { rate_weight }),
            ("smooth-control", None) => bail!("form 'smooth-control' needs `rate_weight`"),
            (form @ ("zermelo" | "fuel"), Some(_)) => {
                bail!("`rate_weight` does not apply to form '{form}'")
            }
            (other, _) => {
                bail!("unknown form '{other}'; expected 'zermelo', 'fuel', or 'smooth-control'")
            }
        }
    }

    fn boundary(&self, form: &ProblemForm) -> Result<Boundary> {
        let b = &self.boundary;
        match form.kind() {
            delrelax::TrajectoryKind::Positions => {
                if b.start_velocity.is_some() || b.end_velocity.is_some() {
                    bail!("boundary velocities apply only to 'smooth-control' problems");
                }
                Ok(Boundary::Positions {
                    start: vec2(b.start),
                    end: vec2(b.end),
                })
            }
            delrelax::TrajectoryKind::Phase => {
                let (Some(v0), Some(v1)) = (b.start_velocity, b.end_velocity) else {
                    bail!("'smooth-control' needs `start_velocity` and `end_velocity`");
                };
                Ok(Boundary::Phase {
                    start: PhasePoint::new(vec2(b.start), vec2(v0)),
                    end: PhasePoint::new(vec2(b.end), vec2(v1)),
                })
            }
        }
    }

    fn guess(&self, knots: &KnotSet) -> Result<GuessKind> {
        let waypoints: Vec<Knot> = self.solver.waypoints.iter().map(knot).collect();
        let choice = self.solver.guess.as_deref();
        match (choice, waypoints.is_empty()) {
            (Some("straight") | None, true) => Ok(GuessKind::StraightLine),
            (Some("straight"), false) => {
                bail!("guess 'straight' does not take waypoints")
            }
            (Some("piecewise") | None, false) => Ok(GuessKind::PiecewiseLinear(waypoints)),
            (Some("piecewise"), true) => bail!("guess 'piecewise' needs [[solver.waypoints]]"),
            (Some("spline"), false) => Ok(GuessKind::CubicSpline(waypoints)),
            (Some("spline"), true) => {
                if knots.is_empty() {
                    bail!("guess 'spline' needs [[solver.waypoints]] or problem knots");
                }
                Ok(GuessKind::CubicSpline(knots.iter().cloned().collect()))
            }
            (Some(other), _) => {
                bail!("unknown guess '{other}'; expected 'straight', 'piecewise', or 'spline'")
            }
        }
    }

    /// Build and validate the problem this file describes.
    pub fn problem(&self, path: &Path) -> Result<ProblemSpec> {
        let form = self.form()?;
        let knots = KnotSet::new(self.knots.iter().map(knot).collect())?;
        let name = match &self.problem.name {
            Some(name) => name.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".into()),
        };
        let spec = ProblemSpec {
            name,
            form,
            wind: self.wind()?,
            horizon: self.problem.horizon,
            segments: self.problem.segments,
            boundary: self.boundary(&form)?,
            knots: knots.clone(),
            guess: self.guess(&knots)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Solver settings from the file, as overrides on the library defaults.
    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::default();
        if let Some(rule) = &self.solver.rule {
            cfg.rule = parse_rule(rule)?;
        }
        if let Some(d) = self.solver.damping {
            cfg.damping = d;
        }
        if let Some(t) = self.solver.tolerance_factor {
            cfg.tolerance_factor = t;
        }
        if let Some(m) = self.solver.max_sweeps {
            cfg.max_sweeps = m;
        }
        if let Some(w) = self.solver.parallel_width {
            cfg.parallel_width = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
