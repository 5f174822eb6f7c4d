//! Trace and phase-record types plus their CSV wire formats.

use std::io::{self, Write};

use crate::geometry::{Environment, Position};

/// One recorded step of the kept world. `gamma` is the angle at the tracker
/// between the true and observed target locations, recorded for
/// unobstructed greedy runs and NaN elsewhere.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub t: f64,
    pub p: Position,
    pub q: Position,
    pub q_obs: Position,
    pub d: f64,
    pub phase: u64,
    pub d_i: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub dim: usize,
}

/// One completed adversary phase.
#[derive(Clone, Copy, Debug)]
pub struct PhaseRecord {
    pub i: u64,
    pub t_i: f64,
    pub d_i: f64,
    pub duration: f64,
    pub d_next: f64,
    pub predicted: f64,
    pub min_d: f64,
}

/// One tracker commitment boundary (disc-greedy phases).
#[derive(Clone, Copy, Debug)]
pub struct TrackerPhaseRecord {
    pub index: u64,
    pub t: f64,
    /// Kept-world distance at the commitment instant.
    pub d: f64,
}

fn coords_of(pos: &Position, env: &Environment, dim: usize) -> Vec<f64> {
    match pos {
        Position::Free(p) => p.coords().to_vec(),
        Position::Graph(loc) => match env {
            Environment::Graph(g) => g
                .location_xy(loc)
                .map(|xy| xy.to_vec())
                .unwrap_or_else(|| vec![f64::NAN; dim]),
            _ => vec![f64::NAN; dim],
        },
    }
}

impl Trace {
    /// Columns: t, px, py[, pz...], qx, qy[, ...], qobs_x, qobs_y[, ...],
    /// D, phase, d_i, gamma.
    pub fn write_csv(&self, w: &mut impl Write, env: &Environment) -> io::Result<()> {
        let axes = ["x", "y", "z", "w"];
        let mut header = vec!["t".to_string()];
        for prefix in ["p", "q", "qobs"] {
            for d in 0..self.dim {
                let axis = axes.get(d).map(|s| s.to_string()).unwrap_or(format!("{d}"));
                header.push(format!("{prefix}{}{axis}", if prefix == "qobs" { "_" } else { "" }));
            }
        }
        header.extend(["D".into(), "phase".into(), "d_i".into(), "gamma".into()]);
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut fields = vec![fmt_f64(row.t)];
            for pos in [&row.p, &row.q, &row.q_obs] {
                for c in coords_of(pos, env, self.dim) {
                    fields.push(fmt_f64(c));
                }
            }
            fields.push(fmt_f64(row.d));
            fields.push(row.phase.to_string());
            fields.push(fmt_f64(row.d_i));
            fields.push(fmt_f64(row.gamma));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

pub fn write_phase_csv(records: &[PhaseRecord], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "i,t_i,d_i,duration,d_next,predicted,minD")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.i,
            fmt_f64(r.t_i),
            fmt_f64(r.d_i),
            fmt_f64(r.duration),
            fmt_f64(r.d_next),
            fmt_f64(r.predicted),
            fmt_f64(r.min_d)
        )?;
    }
    Ok(())
}

/// Shortest-roundtrip float formatting: deterministic for identical bits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}
