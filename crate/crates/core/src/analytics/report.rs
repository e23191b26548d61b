//! Long-format CSV reports.

use std::io::{self, Write};

/// One line of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metric: String,
    /// State label, e.g. `1` or `1:2` for a pair.
    pub state: String,
    /// Lag, trial count or time, depending on the metric.
    pub at: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub theoretical: f64,
}

/// One point of a plot-ready curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub curve: String,
    pub state: String,
    pub x: f64,
    pub y: f64,
}

pub fn write_rows<W: Write>(out: &mut W, rows: &[ReportRow]) -> io::Result<()> {
    writeln!(out, "metric,state,lag_n,empirical,stderr,theoretical")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.10e},{:.10e},{:.10e}",
            r.metric, r.state, r.at, r.empirical, r.stderr, r.theoretical
        )?;
    }
    Ok(())
}

pub fn write_curves<W: Write>(out: &mut W, points: &[CurvePoint]) -> io::Result<()> {
    writeln!(out, "curve,state,x,y")?;
    for p in points {
        writeln!(out, "{},{},{:.10e},{:.10e}", p.curve, p.state, p.x, p.y)?;
    }
    Ok(())
}
