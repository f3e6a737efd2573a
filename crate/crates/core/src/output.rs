//! File outputs: CSV tables with 15 significant digits and JSON manifests.
//! All files of a run go into one directory under fixed names.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{Grid, Outcome, Snapshot};
use crate::threshold::{SweepRow, ThresholdEstimate};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SCAN_FILE: &str = "scan.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Renders `v` with 15 significant digits. Plain decimal for magnitudes in
/// `[1e-5, 1e15)`, scientific notation outside that range.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.14e}");
    let exp: i32 = sci[sci.find('e').map_or(sci.len(), |i| i + 1)..].parse().unwrap_or(0);
    if (-5..15).contains(&exp) {
        format!("{:.*}", (14 - exp) as usize, v)
    } else {
        sci
    }
}

/// `snapshot_T<value>.csv` with the requested time in shortest decimal form.
pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_T{t}.csv")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(csv_err)
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `T,N` samples.
pub fn write_trajectory(path: &Path, samples: &[(f64, f64)]) -> Result<()> {
    write_rows(
        path,
        &["T", "N"],
        samples.iter().map(|&(t, n)| vec![fmt_num(t), fmt_num(n)]),
    )
}

/// `X,rho` at every node; returns the path written.
pub fn write_snapshot(dir: &Path, snap: &Snapshot, grid: &Grid) -> Result<PathBuf> {
    let path = dir.join(snapshot_file_name(snap.requested));
    write_rows(
        &path,
        &["X", "rho"],
        snap.state
            .rho
            .iter()
            .enumerate()
            .map(|(i, &r)| vec![fmt_num(grid.node(i)), fmt_num(r)]),
    )?;
    Ok(path)
}

/// Probe trace of a single scan: `value,fate` in evaluation order.
pub fn write_scan_trace(path: &Path, fates: &[(f64, Outcome)]) -> Result<()> {
    write_rows(
        path,
        &["value", "fate"],
        fates.iter().map(|&(v, o)| vec![fmt_num(v), o.to_string()]),
    )
}

/// Status column of a sweep row.
pub fn row_status(result: &Result<ThresholdEstimate>) -> String {
    match result {
        Ok(est) if est.capped => format!("{};capped", est.status),
        Ok(est) => est.status.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

pub const SWEEP_HEADER: [&str; 6] = [
    "axis_value",
    "estimate",
    "bracket_lo",
    "bracket_hi",
    "evaluations",
    "status",
];

fn sweep_record(point: f64, result: &Result<ThresholdEstimate>) -> Vec<String> {
    match result {
        Ok(est) => vec![
            fmt_num(point),
            fmt_num(est.estimate),
            fmt_num(est.lower),
            fmt_num(est.upper),
            est.evaluations.to_string(),
            row_status(result),
        ],
        Err(_) => vec![
            fmt_num(point),
            String::new(),
            String::new(),
            String::new(),
            "0".into(),
            row_status(result),
        ],
    }
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(
        path,
        &SWEEP_HEADER,
        rows.iter().map(|r| sweep_record(r.point, &r.result)),
    )
}

/// Single-row table for a standalone threshold estimate.
pub fn write_single_estimate(path: &Path, axis_value: f64, result: &Result<ThresholdEstimate>) -> Result<()> {
    write_rows(path, &SWEEP_HEADER, [sweep_record(axis_value, result)])
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_digits() {
        assert_eq!(fmt_num(0.9451), "0.945100000000000");
        assert_eq!(fmt_num(12.0), "12.0000000000000");
        assert_eq!(fmt_num(-3.0), "-3.00000000000000");
        assert_eq!(fmt_num(1e-7), "1.00000000000000e-7");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265358979");
        let back: f64 = fmt_num(1.0 / 3.0).parse().unwrap();
        assert!((back - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rounding_across_a_decade() {
        assert_eq!(fmt_num(9.9999999999999999), "10.0000000000000");
        assert_eq!(fmt_num(0.099999999999999999), "0.100000000000000");
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_file_name(0.1), "snapshot_T0.1.csv");
        assert_eq!(snapshot_file_name(2.0), "snapshot_T2.csv");
        assert_eq!(snapshot_file_name(1e-5), "snapshot_T0.00001.csv");
    }
}
