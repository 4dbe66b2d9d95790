//! CSV products and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::Axis;
use crate::Result;

/// Shortest text that parses back to the same value.
pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv(meta: &[(String, String)], columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "#meta {k} = {v}");
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Position and height of the maximum of `y`, refined by a parabola
/// through the three samples around it.
pub(crate) fn peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    let Some(k) = (0..y.len()).filter(|&i| y[i].is_finite()).max_by(|&a, &b| y[a].total_cmp(&y[b])) else {
        return (f64::NAN, f64::NAN);
    };
    if k == 0 || k + 1 >= y.len() {
        return (x[k], y[k]);
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let xp = (-b / (2.0 * a)).clamp(x0, x2);
    let yp = y1 + d01 * (xp - x1) + a * (xp - x0) * (xp - x1);
    (xp, yp)
}

/// Peak of the first signal along the native axis, one row per outer
/// value, with a straight-line fit of peak position against the outer axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSummary {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Peak shift per unit of the outer axis, in the units of the columns.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl PeakSummary {
    pub(crate) fn new(inner: &Axis, outer: &Axis, signal: &str, peaks: &[(f64, (f64, f64))]) -> Self {
        let rows: Vec<Vec<f64>> = peaks.iter().map(|(o, (x, y))| vec![*o, *x, *y]).collect();
        let pts: Vec<(f64, f64)> = peaks
            .iter()
            .map(|(o, (x, _))| (*o, *x))
            .filter(|(o, x)| o.is_finite() && x.is_finite())
            .collect();
        let (slope, intercept) = line_fit(&pts).unzip();
        Self {
            columns: vec![outer.column(), format!("peak_{}", inner.column()), format!("peak_{signal}")],
            rows,
            slope,
            intercept,
        }
    }

    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut m = meta.to_vec();
        m.push(("slope".into(), self.slope.map_or("none".into(), fmt_num)));
        m.push(("intercept".into(), self.intercept.map_or("none".into(), fmt_num)));
        csv(&m, &self.columns, &self.rows)
    }
}

fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// The table a scenario produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `#meta` records written above the header.
    pub meta: Vec<(String, String)>,
    pub summary: Option<PeakSummary>,
}

impl Product {
    pub fn to_csv(&self) -> String {
        csv(&self.meta, &self.columns, &self.rows)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Writes `<name>.csv` and, when present, `<name>.summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let main = dir.join(format!("{}.csv", self.name));
        std::fs::write(&main, self.to_csv())?;
        written.push(main);
        if let Some(s) = &self.summary {
            let path = dir.join(format!("{}.summary.csv", self.name));
            std::fs::write(&path, s.to_csv(&self.meta))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Provenance record for one run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub kind: String,
    pub inputs_sha256: String,
    pub version: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

/// Writes `<scenario>.manifest.json` next to the outputs.
pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join(format!("{}.manifest.json", manifest.scenario));
    let text = serde_json::to_string_pretty(manifest).map_err(|e| crate::Error::usage(e.to_string()))?;
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}
