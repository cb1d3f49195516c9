//! Serialization of comparison reports: CSV with a fixed column order and
//! a JSON mirror. Numbers carry 12 significant digits and never depend on
//! the locale.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiment::{ComparisonReport, ComparisonRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Formats `x` with 12 significant digits in scientific notation; `inf`,
/// `-inf`, and `NaN` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

fn json_num(x: f64) -> Value {
    if x.is_finite() {
        // round-trip through the 12-digit text keeps CSV and JSON in step
        json!(fmt_num(x).parse::<f64>().unwrap_or(x))
    } else {
        json!(x.to_string())
    }
}

pub const COMPARISON_HEADER: [&str; 9] =
    ["n", "ell", "k", "threshold", "empirical_mean", "empirical_se", "eq5", "eq6", "zscore"];

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARISON_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.ell.to_string(),
            r.k.to_string(),
            fmt_num(r.threshold),
            fmt_num(r.empirical_mean),
            fmt_num(r.empirical_se),
            fmt_num(r.eq5),
            fmt_num(r.eq6),
            fmt_num(r.zscore),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_comparison_csv<R: Read>(input: R) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != COMPARISON_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> {
                rec[i].trim().parse().map_err(|e| Error::Parse(format!("column {}: {e}", COMPARISON_HEADER[i])))
            };
            let u = |i: usize| -> Result<usize> {
                rec[i].trim().parse().map_err(|e| Error::Parse(format!("column {}: {e}", COMPARISON_HEADER[i])))
            };
            Ok(ComparisonRow {
                n: u(0)?,
                ell: u(1)?,
                k: u(2)?,
                threshold: f(3)?,
                empirical_mean: f(4)?,
                empirical_se: f(5)?,
                eq5: f(6)?,
                eq6: f(7)?,
                zscore: f(8)?,
            })
        })
        .collect()
}

fn write_simplex_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "j", "threshold", "empirical_mean", "empirical_se", "eq8", "zscore"])?;
    for r in &report.simplex_rows {
        w.write_record([
            r.n.to_string(),
            r.j.to_string(),
            fmt_num(r.threshold),
            fmt_num(r.empirical_mean),
            fmt_num(r.empirical_se),
            fmt_num(r.eq8),
            fmt_num(r.zscore),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ks_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "kind", "index", "samples", "statistic"])?;
    for r in &report.ks_rows {
        w.write_record([r.n.to_string(), r.kind.clone(), r.index.to_string(), r.samples.to_string(), fmt_num(r.statistic)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_trials_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial", "stream", "discards", "points", "face_total", "partition_total", "morse_euler", "non_delaunay_facets",
    ])?;
    for t in &report.trial_log {
        w.write_record([
            t.trial.to_string(),
            t.stream.to_string(),
            t.discards.to_string(),
            t.points.to_string(),
            t.face_total.to_string(),
            t.partition_total.to_string(),
            t.morse_euler.to_string(),
            t.non_delaunay_facets.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The report as a JSON value whose `rows` mirror the CSV columns.
pub fn report_json(report: &ComparisonReport) -> Value {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n, "ell": r.ell, "k": r.k, "threshold": json_num(r.threshold),
                "empirical_mean": json_num(r.empirical_mean), "empirical_se": json_num(r.empirical_se),
                "eq5": json_num(r.eq5), "eq6": json_num(r.eq6), "zscore": json_num(r.zscore),
            })
        })
        .collect();
    let simplices: Vec<Value> = report
        .simplex_rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n, "j": r.j, "threshold": json_num(r.threshold),
                "empirical_mean": json_num(r.empirical_mean), "empirical_se": json_num(r.empirical_se),
                "eq8": json_num(r.eq8), "zscore": json_num(r.zscore),
            })
        })
        .collect();
    let ks: Vec<Value> = report
        .ks_rows
        .iter()
        .map(|r| json!({"n": r.n, "kind": r.kind, "index": r.index, "samples": r.samples, "statistic": json_num(r.statistic)}))
        .collect();
    json!({
        "n": report.n,
        "trials": report.trials,
        "discards": report.discards,
        "rows": rows,
        "simplices": simplices,
        "ks": ks,
        "trial_log": serde_json::to_value(&report.trial_log).unwrap_or(Value::Null),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}

/// Writes the report to `path`. CSV output also produces `<stem>_simplices`,
/// `<stem>_ks`, and `<stem>_trials` next to it. Returns the files written.
pub fn emit(report: &ComparisonReport, format: Format, path: &Path) -> Result<Vec<PathBuf>> {
    let create = |p: &Path| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(p)?)) };
    match format {
        Format::Json => {
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, &report_json(report))?;
            w.write_all(b"\n")?;
            w.flush()?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv => {
            write_comparison_csv(&report.rows, create(path)?)?;
            let extra = [
                (sibling(path, "simplices"), write_simplex_csv as fn(&ComparisonReport, BufWriter<File>) -> Result<()>),
                (sibling(path, "ks"), write_ks_csv),
                (sibling(path, "trials"), write_trials_csv),
            ];
            let mut written = vec![path.to_path_buf()];
            for (p, write) in extra {
                write(report, create(&p)?)?;
                written.push(p);
            }
            Ok(written)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ComparisonRow {
        ComparisonRow {
            n: 2, ell: 1, k: 2, threshold: f64::INFINITY, empirical_mean: 1234.5678901234,
            empirical_se: 0.1, eq5: 1.0 / 3.0, eq6: 2.0, zscore: -0.25,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_comparison_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", COMPARISON_HEADER.join(",")));
    }

    #[test]
    fn single_row_round_trip() {
        let mut buf = Vec::new();
        write_comparison_csv(&[row()], &mut buf).unwrap();
        let back = read_comparison_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!((b.n, b.ell, b.k, b.threshold), (2, 1, 2, f64::INFINITY));
        assert!((b.empirical_mean - 1234.5678901234).abs() < 1e-7);
        assert!((b.eq5 - 1.0 / 3.0).abs() < 1e-12);
        let mut again = Vec::new();
        write_comparison_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("/x/out.csv"), "ks"), PathBuf::from("/x/out_ks.csv"));
    }
}
