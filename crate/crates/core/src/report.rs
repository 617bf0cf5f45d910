//! CSV emitters for solver and simulator output.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd_oracle::ConvergenceRow;
use crate::field::{DiagnosticsRow, SweepRow};
use crate::stochastic::{LocalTimeCauchy, PathRecord};
use crate::theta_kernel::Side;
use crate::volterra::BoundaryTraces;

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::domain(format!("csv serialization failed: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::domain(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::domain(e.to_string()))
}

fn header_only(columns: &[&str]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    trace_minus: f64,
    trace_plus: f64,
    psi_minus: f64,
    psi_plus: f64,
}

/// Columns `t, trace_minus, trace_plus, psi_minus, psi_plus`, starting at `t = 0`.
pub fn traces_csv(tr: &BoundaryTraces) -> Result<String> {
    let times = tr.times_with_origin();
    let minus = tr.values_with_start(Side::Minus);
    let plus = tr.values_with_start(Side::Plus);
    to_csv((0..times.len()).map(|k| TraceRow {
        t: times[k],
        trace_minus: minus[k],
        trace_plus: plus[k],
        psi_minus: if k == 0 { 0.0 } else { tr.psi_minus[k - 1] },
        psi_plus: if k == 0 { 0.0 } else { tr.psi_plus[k - 1] },
    }))
}

#[derive(Serialize)]
struct SnapshotRow {
    r: f64,
    u: f64,
}

/// Columns `r, u`.
pub fn snapshot_csv(positions: &[f64], values: &[f64]) -> Result<String> {
    if positions.len() != values.len() {
        return Err(Error::domain("snapshot columns differ in length"));
    }
    if positions.is_empty() {
        return Ok(header_only(&["r", "u"]));
    }
    to_csv(positions.iter().zip(values).map(|(&r, &u)| SnapshotRow { r, u }))
}

/// Columns `t, mass, mass_drift, heat_residual, boundary_residual`.
pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> Result<String> {
    if rows.is_empty() {
        return Ok(header_only(&["t", "mass", "mass_drift", "heat_residual", "boundary_residual"]));
    }
    to_csv(rows)
}

/// Columns `sigma, t, gap_minus, gap_plus, sup_dist`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Ok(header_only(&["sigma", "t", "gap_minus", "gap_plus", "sup_dist"]));
    }
    to_csv(rows)
}

/// Columns `n_space, n_time, diff, order`.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> Result<String> {
    to_csv(rows)
}

#[derive(Serialize)]
struct LocalTimeCsvRow {
    n: usize,
    mean: f64,
    stderr: f64,
}

/// Columns `n, mean, stderr`, one row per lattice size.
pub fn local_time_csv(c: &LocalTimeCauchy) -> Result<String> {
    to_csv(c.rows.iter().map(|r| LocalTimeCsvRow {
        n: r.n,
        mean: r.mean,
        stderr: r.stderr,
    }))
}

#[derive(Serialize)]
struct PathRow {
    t: f64,
    position: f64,
    local_time: f64,
}

/// Columns `t, position, local_time`.
pub fn path_csv(p: &PathRecord) -> Result<String> {
    if p.is_empty() {
        return Ok(header_only(&["t", "position", "local_time"]));
    }
    to_csv((0..p.len()).map(|i| PathRow {
        t: p.times[i],
        position: p.positions[i],
        local_time: p.local_time[i],
    }))
}
