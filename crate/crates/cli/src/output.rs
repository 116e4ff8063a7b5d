//! Tables, tidy series files and SVG line plots written by the experiments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Fixed formatting keeps CSV output byte-identical across runs.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v.is_nan() {
        "NA".into()
    } else if v > 0.0 {
        "Inf".into()
    } else {
        "-Inf".into()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// A row with a text label followed by numbers.
    pub fn push(&mut self, label: &str, values: &[f64]) {
        let mut row = vec![label.to_string()];
        row.extend(values.iter().map(|v| fmt_num(*v)));
        self.rows.push(row);
    }

    pub fn push_text(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width rendering for the terminal.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let mut s = format!("{}\n{}\n", self.name, line(&self.columns));
        for r in &self.rows {
            s.push_str(&line(r));
            s.push('\n');
        }
        s
    }
}

/// A named collection of equally indexed numeric columns.
#[derive(Debug, Clone)]
pub struct SeriesSet {
    pub name: String,
    pub index_name: String,
    pub index: Vec<String>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SeriesSet {
    pub fn new(name: &str, index_name: &str, index: Vec<String>) -> Self {
        Self { name: name.into(), index_name: index_name.into(), index, columns: Vec::new() }
    }

    pub fn with_range(name: &str, index_name: &str, start: i64, len: usize) -> Self {
        Self::new(name, index_name, (0..len as i64).map(|i| (start + i).to_string()).collect())
    }

    pub fn add(&mut self, name: &str, values: Vec<f64>) -> &mut Self {
        assert_eq!(values.len(), self.index.len(), "column {name} does not match the index");
        self.columns.push((name.into(), values));
        self
    }

    pub fn to_table(&self) -> Table {
        let mut cols = vec![self.index_name.as_str()];
        cols.extend(self.columns.iter().map(|(n, _)| n.as_str()));
        let mut t = Table::new(&self.name, &cols);
        for (r, idx) in self.index.iter().enumerate() {
            t.push(idx, &self.columns.iter().map(|(_, v)| v[r]).collect::<Vec<_>>());
        }
        t
    }

    pub fn to_svg(&self, title: &str) -> String {
        line_plot(title, &self.columns)
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

/// Minimal line chart: one polyline per series on a shared y-axis, x = position.
pub fn line_plot(title: &str, series: &[(String, Vec<f64>)]) -> String {
    let (w, h, m) = (800.0, 400.0, 50.0);
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(2);
    let x = |i: usize| m + (w - 2.0 * m) * i as f64 / (n - 1) as f64;
    let y = |v: f64| h - m - (h - 2.0 * m) * (v - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="#999"/>"##, w - 2.0 * m, h - 2.0 * m);
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(s, r##"<line x1="{m}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="#ccc"/>"##, w - m, y(0.0), y(0.0));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, m - 4.0, y(hi) + 4.0, fmt_tick(hi));
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, m - 4.0, y(lo) + 4.0, fmt_tick(lo));
    for (k, (name, v)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = v
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        let ly = m + 16.0 * (k as f64 + 1.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, w - m - 150.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Everything an experiment produces. `values` holds the headline numbers under
/// stable keys, compared against the expected-values file by `replicate-paper`.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub series: Vec<SeriesSet>,
    pub plots: Vec<(String, String)>,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Other files, written verbatim: (file name, contents).
    pub documents: Vec<(String, String)>,
}

impl Outcome {
    pub fn value(&self, key: &str) -> f64 {
        *self.values.get(key).unwrap_or_else(|| panic!("no value {key}"))
    }

    pub fn set(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    pub fn plot(&mut self, set: &SeriesSet, title: &str) {
        self.plots.push((set.name.clone(), set.to_svg(title)));
    }

    /// Writes tables, series and plots into `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let tables = self.tables.iter().cloned().chain(self.series.iter().map(SeriesSet::to_table));
        for t in tables {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv()?)?;
            written.push(p);
        }
        for (name, text) in &self.documents {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            written.push(p);
        }
        for (name, svg) in &self.plots {
            let p = dir.join(format!("{name}.svg"));
            std::fs::write(&p, svg)?;
            written.push(p);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv() {
        let mut t = Table::new("t", &["name", "a", "b"]);
        t.push("x", &[1.0, f64::INFINITY]);
        assert_eq!(t.to_csv().unwrap(), "name,a,b\nx,1.000000,Inf\n");
        assert!(t.render().contains("1.000000"));
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let mut s = SeriesSet::with_range("s", "t", 0, 3);
        s.add("a", vec![0.0, 1.0, -1.0]).add("b<c", vec![2.0, 2.0, f64::NAN]);
        let svg = s.to_svg("plot");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
    }
}
