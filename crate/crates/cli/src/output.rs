//! CSV and text rendering plus atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use phcomm_core::scenarios::{NormalizedSeries, ReceiverSeries};

use crate::config::RunConfig;
use crate::error::CliError;

pub const CONFIG_BEGIN: &str = "# --- config ---";
pub const CONFIG_END: &str = "# --- end config ---";

/// Fixed-width scientific notation; identical input gives identical text.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.12e}")
    }
}

/// Comment block carrying everything needed to repeat the run: the full
/// configuration (as TOML, one `# ` line each) and derived values.
pub fn header(command: &str, config: &RunConfig, notes: &[(String, String)]) -> String {
    let mut out = String::new();
    writeln!(out, "# phcomm {} {command}", env!("CARGO_PKG_VERSION")).unwrap();
    for (k, v) in notes {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    writeln!(out, "{CONFIG_BEGIN}").unwrap();
    for line in config.to_toml().lines() {
        if line.is_empty() {
            writeln!(out, "#").unwrap();
        } else {
            writeln!(out, "# {line}").unwrap();
        }
    }
    writeln!(out, "{CONFIG_END}").unwrap();
    out
}

pub const SERIES_COLUMNS: [&str; 5] = ["t_s", "c_h_M", "c_oh_M", "pH", "c_h_normalized"];

/// Receiver record as CSV; the normalized column is `nan` when the record
/// has no H⁺ pulse.
pub fn series_csv(header: &str, series: &ReceiverSeries, normalized: Option<&NormalizedSeries>) -> String {
    let mut out = String::with_capacity(header.len() + series.len() * 90);
    out.push_str(header);
    out.push_str(&SERIES_COLUMNS.join(","));
    out.push('\n');
    for k in 0..series.len() {
        let norm = normalized.map_or(f64::NAN, |n| n.values[k]);
        writeln!(
            out,
            "{},{},{},{},{}",
            num(series.times[k]),
            num(series.c_h[k]),
            num(series.c_oh[k]),
            num(series.ph[k]),
            num(norm)
        )
        .unwrap();
    }
    out
}

/// One table cell; numbers keep full precision in CSV and are shortened in
/// the text rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => num(*x),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) if x.is_nan() => "-".to_string(),
            Cell::Num(x) if *x == 0.0 || (1e-2..1e5).contains(&x.abs()) => format!("{x:.3}"),
            Cell::Num(x) => format!("{x:.4e}"),
            Cell::Flag(b) => if *b { "yes" } else { "no" }.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

/// A small result table rendered as CSV or as aligned text.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &str) -> String {
        let mut out = header.to_string();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| rows.iter().map(|r| r[c].len()).chain([self.columns[c].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (cell, &w))| if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.columns);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
        out.push('\n');
        for row in &rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_fixed_format() {
        assert_eq!(num(1e-7), "1.000000000000e-7");
        assert_eq!(num(0.0), "0.000000000000e0");
        assert_eq!(num(-2.5), "-2.500000000000e0");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn text_table_is_aligned() {
        let mut t = Table::new(&["id", "value"]);
        t.push(vec!["a".into(), 1.0.into()]);
        t.push(vec!["longer".into(), 2.5e-7.into()]);
        let text = t.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id          value");
        assert_eq!(lines[2], "a           1.000");
        assert_eq!(lines[3], "longer  2.5000e-7");
        assert!(t.to_csv("").ends_with("longer,2.500000000000e-7\n"));
    }

    #[test]
    fn header_embeds_parseable_config() {
        let cfg = RunConfig::parse(include_str!("../configs/acid_then_base.toml")).unwrap();
        let h = header("simulate", &cfg, &[("scenario".into(), "x".into())]);
        let body: String = h
            .lines()
            .skip_while(|l| *l != CONFIG_BEGIN)
            .skip(1)
            .take_while(|l| *l != CONFIG_END)
            .map(|l| l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#')))
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(RunConfig::parse(&body).unwrap(), cfg);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.csv", "one").unwrap();
        write_atomic(dir.path(), "a.csv", "two").unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("a.csv")).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
