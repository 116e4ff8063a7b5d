//! Monthly series ingestion and preprocessing: CSV loading, date alignment,
//! log-differencing with standardization, and outlier clipping.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{MssaError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    /// One vector per series, aligned with `dates`.
    pub values: Vec<Vec<f64>>,
    pub provenance: Vec<String>,
}

impl SeriesFrame {
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, values: Vec<Vec<f64>>, provenance: Vec<String>) -> Result<Self> {
        if names.len() != values.len() || provenance.len() != values.len() {
            return Err(MssaError::Data("names, provenance and value columns differ in count".into()));
        }
        if values.iter().any(|v| v.len() != dates.len()) {
            return Err(MssaError::Data("value column length differs from the date index".into()));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(MssaError::Data(format!("dates are not strictly increasing at {}", w[1])));
        }
        Ok(Self { dates, names, values, provenance })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].as_slice())
    }

    /// Rows are dates, columns are series.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.values.len(), |t, j| self.values[j][t])
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["date".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (t, d) in self.dates.iter().enumerate() {
            let mut rec = vec![d.format("%Y-%m-%d").to_string()];
            rec.extend(self.values.iter().map(|v| format!("{}", v[t])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d"))
        .ok()
}

/// Reads `date_column` and `value_columns` from a headed CSV file. Missing or
/// non-numeric cells (including the `.` placeholder) are errors that name the row.
pub fn load_csv(path: impl AsRef<Path>, date_column: &str, value_columns: &[&str]) -> Result<SeriesFrame> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| MssaError::Data(format!("{}: no column named {name}", path.display())))
    };
    let date_idx = find(date_column)?;
    let value_idx = value_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let mut dates = Vec::new();
    let mut values = vec![Vec::new(); value_idx.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        // header is line 1
        let line = row + 2;
        let raw_date = rec.get(date_idx).unwrap_or("");
        let date = parse_date(raw_date)
            .ok_or_else(|| MssaError::Data(format!("{} line {line}: bad date {raw_date:?}", path.display())))?;
        dates.push(date);
        for (col, &idx) in value_idx.iter().enumerate() {
            let cell = rec.get(idx).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| {
                MssaError::Data(format!("{} line {line}: missing or invalid value {cell:?} in {}", path.display(), value_columns[col]))
            })?;
            values[col].push(v);
        }
    }
    let source = path.display().to_string();
    SeriesFrame::new(
        dates,
        value_columns.iter().map(|s| s.to_string()).collect(),
        values,
        vec![source; value_columns.len()],
    )
}

/// Restricts all frames to their common dates and stacks the columns.
pub fn join(frames: &[SeriesFrame]) -> Result<SeriesFrame> {
    let first = frames.first().ok_or_else(|| MssaError::Data("nothing to join".into()))?;
    let mut common: Vec<NaiveDate> = first.dates.clone();
    for f in &frames[1..] {
        let set: std::collections::BTreeSet<_> = f.dates.iter().collect();
        common.retain(|d| set.contains(d));
    }
    if common.is_empty() {
        return Err(MssaError::Data("series have no dates in common".into()));
    }
    let (mut names, mut values, mut provenance) = (Vec::new(), Vec::new(), Vec::new());
    for f in frames {
        let index: BTreeMap<_, _> = f.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        for (j, col) in f.values.iter().enumerate() {
            names.push(f.names[j].clone());
            provenance.push(f.provenance[j].clone());
            values.push(common.iter().map(|d| col[index[d]]).collect());
        }
    }
    SeriesFrame::new(common, names, values, provenance)
}

/// Per series `x_t = log v_t - log v_{t-1}`, centered and scaled to unit sample variance.
pub fn log_diff_standardize(frame: &SeriesFrame) -> Result<SeriesFrame> {
    if frame.len() < 3 {
        return Err(MssaError::Data("need at least three observations".into()));
    }
    let mut values = Vec::with_capacity(frame.values.len());
    for (name, col) in frame.names.iter().zip(&frame.values) {
        if let Some((t, v)) = col.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(MssaError::Data(format!("{name}: non-positive level {v} at {}", frame.dates[t])));
        }
        let diffs: Vec<f64> = col.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if !(var > 1e-24) {
            return Err(MssaError::Data(format!("{name}: log-differences have zero variance")));
        }
        let sd = var.sqrt();
        values.push(diffs.iter().map(|d| (d - mean) / sd).collect());
    }
    SeriesFrame::new(frame.dates[1..].to_vec(), frame.names.clone(), values, frame.provenance.clone())
}

/// Clips every value to `[-k, k]` (standardized units) and reports how many were clipped.
pub fn trim_outliers(frame: &SeriesFrame, k_sigma: f64) -> (SeriesFrame, usize) {
    let mut clipped = 0;
    let values = frame
        .values
        .iter()
        .map(|col| {
            col.iter()
                .map(|&v| {
                    let c = v.clamp(-k_sigma, k_sigma);
                    if c != v {
                        clipped += 1;
                    }
                    c
                })
                .collect()
        })
        .collect();
    (SeriesFrame { values, ..frame.clone() }, clipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    fn monthly(start: (i32, u32), values: Vec<f64>) -> SeriesFrame {
        let dates = (0..values.len() as u32)
            .map(|i| {
                let m = start.1 - 1 + i;
                NaiveDate::from_ymd_opt(start.0 + (m / 12) as i32, m % 12 + 1, 1).unwrap()
            })
            .collect();
        SeriesFrame::new(dates, vec!["x".into()], vec![values], vec!["test".into()]).unwrap()
    }

    #[test]
    fn loads_fred_style_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "observation_date,INDPRO\n2020-01-01,100.5\n2020-02-01,101\n2020-03-01,99\n");
        let f = load_csv(&p, "observation_date", &["INDPRO"]).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.values[0], vec![100.5, 101.0, 99.0]);
    }

    #[test]
    fn missing_cell_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "date,v\n2020-01-01,1\n2020-02-01,.\n");
        let err = load_csv(&p, "date", &["v"]).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn join_keeps_intersection() {
        let a = monthly((2000, 1), (1..=12).map(f64::from).collect());
        let mut b = monthly((2000, 6), (1..=12).map(f64::from).collect());
        b.names = vec!["y".into()];
        let j = join(&[a, b]).unwrap();
        assert_eq!(j.len(), 7);
        assert_eq!(j.column("x").unwrap()[0], 6.0);
        assert_eq!(j.column("y").unwrap()[0], 1.0);
        let c = monthly((2010, 1), vec![1.0, 2.0]);
        assert!(join(&[monthly((2000, 1), vec![1.0]), c]).is_err());
    }

    #[test]
    fn standardization_moments() {
        let f = monthly((2000, 1), (0..50).map(|t| 100.0 + (t as f64 * 0.7).sin() * 3.0 + t as f64).collect());
        let s = log_diff_standardize(&f).unwrap();
        let x = &s.values[0];
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        assert_eq!(s.len(), 49);
    }

    #[test]
    fn degenerate_levels_are_flagged() {
        assert!(log_diff_standardize(&monthly((2000, 1), vec![5.0; 10])).is_err());
        assert!(log_diff_standardize(&monthly((2000, 1), (0..10).map(|t| 2f64.powi(t)).collect())).is_err());
        assert!(log_diff_standardize(&monthly((2000, 1), vec![1.0, 0.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn trimming() {
        let f = monthly((2000, 1), vec![0.5, -7.0, 6.0, 1.0]);
        let (t, n) = trim_outliers(&f, 5.0);
        assert_eq!(n, 2);
        assert_eq!(t.values[0], vec![0.5, -5.0, 5.0, 1.0]);
        let (t2, n2) = trim_outliers(&t, 5.0);
        assert_eq!((t2, n2), (t, 0));
        let (z, _) = trim_outliers(&f, 0.0);
        assert!(z.values[0].iter().all(|v| *v == 0.0));
    }
}
