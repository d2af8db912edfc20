//! Self-describing CSV files for trajectories and residual histories.
//!
//! A trajectory file starts with `# kind=Q N=<int> h=<real> t0=<real>`
//! followed by a column header and one row per node. Floats are written
//! with Rust's shortest round-trip formatting, so reading a file back
//! reproduces every coordinate bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use delrelax::solver::ResidualReport;
use delrelax::trajectory::{PhasePoint, Trajectory, TrajectoryKind};
use delrelax::Vec2;

/// Render a trajectory as CSV text.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let (kind, columns) = match traj.kind() {
        TrajectoryKind::Positions => ("Q", "t,x,y"),
        TrajectoryKind::Phase => ("TQ", "t,x,y,vx,vy"),
    };
    writeln!(
        out,
        "# kind={kind} N={} h={} t0={}",
        traj.segments(),
        traj.h(),
        traj.t0()
    )
    .unwrap();
    writeln!(out, "{columns}").unwrap();
    match traj.kind() {
        TrajectoryKind::Positions => {
            for (k, q) in traj.positions().unwrap().iter().enumerate() {
                writeln!(out, "{},{},{}", traj.time(k), q.x, q.y).unwrap();
            }
        }
        TrajectoryKind::Phase => {
            for (k, x) in traj.phase_points().unwrap().iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    traj.time(k),
                    x.q.x,
                    x.q.y,
                    x.v.x,
                    x.v.y
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    std::fs::write(path, trajectory_csv(traj))
        .with_context(|| format!("writing {}", path.display()))
}

/// Parse a trajectory file produced by [`write_trajectory`]. Errors name
/// the offending line number.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_trajectory(&text).with_context(|| format!("in {}", path.display()))
}

fn parse_float(token: &str, what: &str, line_no: usize) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .with_context(|| format!("line {line_no}: bad {what} value '{token}'"))
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();

    let Some((_, header)) = lines.next() else {
        bail!("line 1: empty file, expected '# kind=... N=... h=... t0=...'");
    };
    let mut kind = None;
    let mut n = None;
    let mut h = None;
    let mut t0 = None;
    let Some(fields) = header.strip_prefix('#') else {
        bail!("line 1: expected a '# kind=... N=... h=... t0=...' header");
    };
    for field in fields.split_whitespace() {
        let Some((key, value)) = field.split_once('=') else {
            bail!("line 1: malformed header field '{field}'");
        };
        match key {
            "kind" => {
                kind = Some(match value {
                    "Q" => TrajectoryKind::Positions,
                    "TQ" => TrajectoryKind::Phase,
                    other => bail!("line 1: unknown kind '{other}', expected Q or TQ"),
                })
            }
            "N" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .with_context(|| format!("line 1: bad N value '{value}'"))?,
                )
            }
            "h" => h = Some(parse_float(value, "h", 1)?),
            "t0" => t0 = Some(parse_float(value, "t0", 1)?),
            other => bail!("line 1: unknown header key '{other}'"),
        }
    }
    let (Some(kind), Some(n), Some(h), Some(t0)) = (kind, n, h, t0) else {
        bail!("line 1: header must set kind, N, h, and t0");
    };

    let expected_columns = match kind {
        TrajectoryKind::Positions => 3,
        TrajectoryKind::Phase => 5,
    };
    match lines.next() {
        Some((_, columns)) if columns.split(',').count() == expected_columns => {}
        Some((idx, columns)) => bail!(
            "line {}: expected {expected_columns} column names, got '{columns}'",
            idx + 1
        ),
        None => bail!("line 2: missing column header"),
    }

    let mut positions: Vec<Vec2> = Vec::with_capacity(n + 1);
    let mut phase: Vec<PhasePoint> = Vec::with_capacity(n + 1);
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected_columns {
            bail!(
                "line {line_no}: expected {expected_columns} comma-separated values, got {}",
                cells.len()
            );
        }
        // cells[0] is the sample time, reconstructed from h and t0 instead.
        let x = parse_float(cells[1], "x", line_no)?;
        let y = parse_float(cells[2], "y", line_no)?;
        match kind {
            TrajectoryKind::Positions => positions.push(Vec2::new(x, y)),
            TrajectoryKind::Phase => {
                let vx = parse_float(cells[3], "vx", line_no)?;
                let vy = parse_float(cells[4], "vy", line_no)?;
                phase.push(PhasePoint::new(Vec2::new(x, y), Vec2::new(vx, vy)));
            }
        }
    }

    let rows = match kind {
        TrajectoryKind::Positions => positions.len(),
        TrajectoryKind::Phase => phase.len(),
    };
    if rows != n + 1 {
        bail!("expected {} data rows for N={n}, found {rows}", n + 1);
    }
    let traj = match kind {
        TrajectoryKind::Positions => Trajectory::from_positions(h, t0, positions)?,
        TrajectoryKind::Phase => Trajectory::from_phase(h, t0, phase)?,
    };
    Ok(traj)
}

/// Write the sweep-by-sweep convergence record as
/// `iteration,max_residual,wall_seconds` rows.
pub fn write_residual_history(path: &Path, report: &ResidualReport) -> Result<()> {
    let mut out = String::from("iteration,max_residual,wall_seconds\n");
    for sample in &report.history {
        writeln!(
            out,
            "{},{},{}",
            sample.sweep, sample.max_residual, sample.wall_seconds
        )
        .unwrap();
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Write per-node residual norms as `index,residual` rows. Entry `i` of
/// `residuals` belongs to interior node `i + 1`.
pub fn write_node_residuals(path: &Path, residuals: &[f64]) -> Result<()> {
    let mut out = String::from("index,residual\n");
    for (i, r) in residuals.iter().enumerate() {
        writeln!(out, "{},{r}", i + 1).unwrap();
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_trajectory_round_trips_bitwise() {
        let traj = Trajectory::from_positions(
            0.1,
            0.0,
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(0.721430216530, -1.0 / 3.0),
                Vec2::new(std::f64::consts::PI, 2.0),
            ],
        )
        .unwrap();
        let text = trajectory_csv(&traj);
        let back = parse_trajectory(&text).unwrap();
        assert_eq!(back.h().to_bits(), traj.h().to_bits());
        for (a, b) in back
            .positions()
            .unwrap()
            .iter()
            .zip(traj.positions().unwrap())
        {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }

    #[test]
    fn phase_trajectory_round_trips_bitwise() {
        let traj = Trajectory::from_phase(
            0.25,
            0.0,
            vec![
                PhasePoint::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, -0.3)),
                PhasePoint::new(Vec2::new(0.1, 0.7), Vec2::new(-2.0 / 7.0, 0.551)),
            ],
        )
        .unwrap();
        let back = parse_trajectory(&trajectory_csv(&traj)).unwrap();
        let (a, b) = (back.phase_points().unwrap(), traj.phase_points().unwrap());
        for (p, q) in a.iter().zip(b) {
            assert_eq!(p.q.x.to_bits(), q.q.x.to_bits());
            assert_eq!(p.v.y.to_bits(), q.v.y.to_bits());
        }
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let text = "# kind=Q N=2 h=0.5 t0=0\nt,x,y\n0,0,0\n0.5,oops,1\n1,2,2\n";
        let err = parse_trajectory(text).unwrap_err();
        assert!(format!("{err:#}").contains("line 4"));

        let text = "# kind=Q N=2 h=0.5 t0=0\nt,x,y\n0,0,0\n1,2,2\n";
        let err = parse_trajectory(text).unwrap_err();
        assert!(format!("{err:#}").contains("expected 3 data rows"));
    }
}
