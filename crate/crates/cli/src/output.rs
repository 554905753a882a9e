//! CSV and JSON files written by runs and sweeps.
//!
//! Floats are written in shortest round-trip form (see [`fmt_f64`]), so equal
//! data always gives equal bytes. Missing observables are empty fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use xxz_core::noise::CollisionHistogram;
use xxz_core::{ObservableSeries, PlateauReport};

use crate::CliError;

pub const SERIES_FILE: &str = "series.csv";
pub const STDERR_FILE: &str = "series_stderr.csv";
pub const REPORT_JSON: &str = "plateau_report.json";
pub const REPORT_CSV: &str = "plateau_report.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_FILE: &str = "config.resolved";
pub const EIGENVALUES_FILE: &str = "eigenvalues.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Columns shared by `plateau_report.csv` and the sweep summary.
pub const REPORT_COLUMNS: [&str; 11] = [
    "h", "rc", "nu", "delta", "D", "Z_J", "area", "P_h", "P_h_scaled", "tau", "horizon_flag",
];

/// Shortest round-trip text; exponent notation for very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn row(path: &Path, w: &mut csv::Writer<File>, fields: &[String]) -> Result<(), CliError> {
    w.write_record(fields).map_err(|e| CliError::io(path, e))
}

fn opt(v: Option<&Vec<f64>>, k: usize) -> String {
    v.map(|s| fmt_f64(s[k])).unwrap_or_default()
}

pub fn write_series(path: &Path, s: &ObservableSeries) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["t", "ipr", "ier", "imb", "svn"].map(String::from).to_vec();
    header.extend((1..=s.n_sites).map(|i| format!("n_{i}")));
    row(path, &mut w, &header)?;
    for (k, t) in s.times.iter().enumerate() {
        let mut fields = vec![
            fmt_f64(*t),
            opt(s.ipr.as_ref(), k),
            fmt_f64(s.ier[k]),
            opt(s.imb.as_ref(), k),
            opt(s.svn.as_ref(), k),
        ];
        fields.extend(s.site_density[k].iter().map(|&x| fmt_f64(x)));
        row(path, &mut w, &fields)?;
    }
    finish(path, w)
}

pub fn write_stderr(path: &Path, s: &ObservableSeries) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    row(path, &mut w, &["t", "ipr", "ier", "imb", "svn"].map(String::from))?;
    let e = &s.stderr;
    for (k, t) in s.times.iter().enumerate() {
        let fields = [
            fmt_f64(*t),
            opt(e.ipr.as_ref(), k),
            opt(e.ier.as_ref(), k),
            opt(e.imb.as_ref(), k),
            opt(e.svn.as_ref(), k),
        ];
        row(path, &mut w, &fields)?;
    }
    finish(path, w)
}

/// The `REPORT_COLUMNS` values of one report.
pub fn report_fields(r: &PlateauReport) -> Vec<String> {
    vec![
        fmt_f64(r.params.h),
        fmt_f64(r.params.rc),
        fmt_f64(r.params.nu),
        fmt_f64(r.params.delta),
        fmt_f64(r.d),
        fmt_f64(r.z_j),
        fmt_f64(r.area),
        fmt_f64(r.p_h),
        fmt_f64(r.p_h_scaled),
        r.tau.time().map(fmt_f64).unwrap_or_default(),
        u8::from(r.tau.is_beyond_horizon()).to_string(),
    ]
}

pub fn write_report_csv(path: &Path, r: &PlateauReport) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    row(path, &mut w, &REPORT_COLUMNS.map(String::from))?;
    row(path, &mut w, &report_fields(r))?;
    finish(path, w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io(path, e))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_eigenvalues(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    row(path, &mut w, &["index".into(), "energy".into()])?;
    for (i, e) in values.iter().enumerate() {
        row(path, &mut w, &[i.to_string(), fmt_f64(*e)])?;
    }
    finish(path, w)
}

/// One row per (site, bin); sites are 1-based.
pub fn write_histogram(path: &Path, h: &CollisionHistogram) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    row(path, &mut w, &["site", "bin_start", "count"].map(String::from))?;
    for (site, counts) in h.counts.iter().enumerate() {
        for (bin, c) in counts.iter().enumerate() {
            let start = bin as f64 * h.bin_width;
            row(path, &mut w, &[(site + 1).to_string(), fmt_f64(start), c.to_string()])?;
        }
    }
    finish(path, w)
}

/// A series file read back for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub times: Vec<f64>,
    pub ipr: Option<Vec<f64>>,
    pub ier: Vec<f64>,
    /// Site densities of the first row.
    pub first_density: Vec<f64>,
}

impl SeriesTable {
    pub fn n_sites(&self) -> usize {
        self.first_density.len()
    }
}

fn parse_cell(path: &Path, line: usize, col: &str, cell: &str) -> Result<Option<f64>, CliError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| CliError::Validation(format!("{}: line {line}, column {col}: bad number `{cell}`", path.display())))
}

pub fn read_series(path: &Path) -> Result<SeriesTable, CliError> {
    let bad = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (t_col, ipr_col, ier_col) = match (col("t"), col("ipr"), col("ier")) {
        (Some(t), Some(p), Some(e)) => (t, p, e),
        _ => return Err(bad("header must contain t, ipr and ier".into())),
    };
    let density_cols: Vec<usize> = (1..).map_while(|i| col(&format!("n_{i}"))).collect();

    let mut table = SeriesTable {
        times: Vec::new(),
        ipr: Some(Vec::new()),
        ier: Vec::new(),
        first_density: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| bad(e.to_string()))?;
        let get = |c: usize, name: &str| parse_cell(path, line, name, record.get(c).unwrap_or(""));
        table
            .times
            .push(get(t_col, "t")?.ok_or_else(|| bad(format!("line {line}: empty t")))?);
        table
            .ier
            .push(get(ier_col, "ier")?.ok_or_else(|| bad(format!("line {line}: empty ier")))?);
        match (get(ipr_col, "ipr")?, table.ipr.as_mut()) {
            (Some(v), Some(ipr)) => ipr.push(v),
            _ => table.ipr = None,
        }
        if i == 0 {
            for &c in &density_cols {
                table.first_density.push(get(c, &header[c])?.unwrap_or(0.0));
            }
        }
    }
    if table.times.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for x in [0.0, 1.0, 0.02, 30.0, 6.047538577766067e-37, -1.5e-9, 2.5e17, 0.1 + 0.2] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.02), "0.02");
        assert_eq!(fmt_f64(6.0e-37), "6e-37");
    }
}
