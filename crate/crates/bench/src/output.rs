//! Result files: the summary csv, per-realization log, plot series and a
//! JSON metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{BenchError, Result};
use crate::experiment::{CellRecord, ResultRow, ResultTable};

pub const CSV_HEADER: &str = "method,mode,dimension,mean_error,std_error,mean_fit_seconds";

/// Formats like C's `%.6g`: six significant digits, trailing zeros removed,
/// exponent form outside `1e-4 ..< 1e6`.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.method),
            csv_field(&r.mode),
            r.dimension,
            format_g6(r.mean_error),
            format_g6(r.std_error),
            format_g6(r.mean_fit_seconds)
        );
    }
    out
}

/// Parsed csv row: `(method, mode, dimension, mean_error, std_error, mean_fit_seconds)`.
pub type CsvRow = (String, String, usize, f64, f64, f64);

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(BenchError::Data("unexpected csv header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || BenchError::Data(format!("malformed csv row '{line}'"));
            if f.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok((
                f[0].to_string(),
                f[1].to_string(),
                f[2].parse().map_err(|_| bad())?,
                num(f[3])?,
                num(f[4])?,
                num(f[5])?,
            ))
        })
        .collect()
}

pub fn cells_string(cells: &[CellRecord]) -> String {
    let mut out = String::from("method,mode,dimension,realization,error,fit_seconds,status\n");
    for c in cells {
        let (err, secs, status) = match &c.outcome {
            Ok((e, s)) => (format_g6(*e), format_g6(*s), "ok".to_string()),
            Err(msg) => (String::new(), String::new(), csv_field(&format!("failed: {msg}"))),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{err},{secs},{status}",
            csv_field(&c.method),
            csv_field(&c.mode),
            c.dimension,
            c.realization
        );
    }
    out
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// One `(dimension, mean error)` series per method and mode, as
/// whitespace-separated columns with `#` comment headers.
pub fn plot_series(rows: &[ResultRow]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for r in rows {
        let file = format!("{}_{}.dat", slug(&r.method), r.mode);
        if out.last().map(|(f, _)| f != &file).unwrap_or(true) {
            out.push((file, format!("# {} ({})\n# dimension mean_error std_error\n", r.method, r.mode)));
        }
        let body = &mut out.last_mut().expect("pushed above").1;
        let _ = writeln!(body, "{} {} {}", r.dimension, format_g6(r.mean_error), format_g6(r.std_error));
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    PlotData,
}

/// Writes the requested formats into `dir` and returns the created files.
/// The metadata sidecar accompanies every format.
pub fn emit_results(table: &ResultTable, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        let path = dir.join("results.csv");
        write(&path, &csv_string(&table.rows))?;
        written.push(path);
        let path = dir.join("realizations.csv");
        write(&path, &cells_string(&table.cells))?;
        written.push(path);
    }
    if formats.contains(&Format::PlotData) {
        let plots = dir.join("plotdata");
        fs::create_dir_all(&plots).map_err(|e| BenchError::io(&plots, e))?;
        for (name, body) in plot_series(&table.rows) {
            let path = plots.join(name);
            write(&path, &body)?;
            written.push(path);
        }
    }
    let path = dir.join("results.meta.json");
    let meta = serde_json::to_string_pretty(&table.metadata).expect("metadata is plain JSON");
    write(&path, &(meta + "\n"))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        let cases = [
            (0.0, "0"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333"),
            (0.051, "0.051"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (999999.5, "1e+06"),
            (0.99999951, "1"),
            (-2.5, "-2.5"),
            (20.0, "20"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g6(x), want, "{x}");
        }
        assert_eq!(format_g6(f64::NAN), "nan");
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        assert!(parse_csv(&csv_string(&[])).unwrap().is_empty());
    }

    #[test]
    fn series_grouped_per_method() {
        let row = |m: &str, d: usize| ResultRow {
            method: m.into(),
            mode: "bi".into(),
            dimension: d,
            mean_error: 0.25,
            std_error: 0.0,
            mean_fit_seconds: 0.0,
            completed: 1,
            failures: 0,
        };
        let s = plot_series(&[row("2D-PCA", 2), row("2D-PCA", 4), row("GLRAM", 2)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].0, "2d_pca_bi.dat");
        assert!(s[0].1.ends_with("2 0.25 0\n4 0.25 0\n"));
    }
}
