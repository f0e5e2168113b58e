//! Files written by the harness.

use std::fs;
use std::path::Path;

use serde::Serialize;
use wulff_core::integrator::EnergyRecord;

use crate::error::{HarnessError, Result};

pub const ENERGY_HEADER: &str = "step,time,energy,min_detJ_ratio,max_abs_nu_minus_1";

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("diagnostics serialise");
    write_text(path, &text)
}

/// Header plus one line per row.
pub fn csv<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

pub fn energy_csv(records: &[EnergyRecord]) -> String {
    csv(
        ENERGY_HEADER,
        records.iter().map(|r| format!("{},{},{},{},{}", r.step, r.time, r.energy, r.min_det_ratio, r.max_abs_nu_minus_1)),
    )
}

/// Parses a CSV written by [`csv`] back into a header and numeric rows.
pub fn parse_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(|c| c.parse().ok()).collect()).collect::<Option<_>>()?;
    Some((header, rows))
}

/// Snapshot file name for time `t`, e.g. `snap_0.05.vtk`.
pub fn snapshot_name(t: f64, extension: &str) -> String {
    format!("snap_{t}.{extension}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_csv_round_trips() {
        let rec = EnergyRecord { step: 3, time: 0.003, energy: 12.5, min_det_ratio: 0.9, max_abs_nu_minus_1: 1e-3 };
        let text = energy_csv(&[rec]);
        let (header, rows) = parse_csv(&text).unwrap();
        assert_eq!(header.join(","), ENERGY_HEADER);
        assert_eq!(rows, vec![vec![3.0, 0.003, 12.5, 0.9, 1e-3]]);
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_name(0.05, "vtk"), "snap_0.05.vtk");
        assert_eq!(snapshot_name(0.0, "obj"), "snap_0.obj");
    }
}
