//! CSV ingestion and emission.
//!
//! Time series use the header `interval,value` with 1-based, dense, strictly
//! increasing interval indices. Floats are printed in Rust's shortest
//! round-trip form, so parsing an emitted file reproduces the values bit for bit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cpgame_core::actions::FiniteActionLibrary;
use cpgame_core::dynamics::Trajectory;

use crate::error::AppError;

pub const SERIES_HEADER: [&str; 2] = ["interval", "value"];

fn csv_err(path: &Path, e: csv::Error) -> AppError {
    AppError::Format(format!("{}: {e}", path.display()))
}

/// Parses an `interval,value` series from text; `origin` names it in errors.
pub fn parse_series(text: &str, origin: &str) -> Result<Vec<f64>, AppError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let bad = |msg: String| AppError::Validation(format!("{origin}: {msg}"));
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
        return Err(bad(format!("expected header `interval,value`, found `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("row {} has {} fields", row + 1, record.len())));
        }
        let index: usize = record[0]
            .parse()
            .map_err(|_| bad(format!("row {}: bad interval `{}`", row + 1, &record[0])))?;
        if index != values.len() + 1 {
            return Err(bad(format!(
                "intervals must be 1-based, dense and increasing; expected {}, found {index}",
                values.len() + 1
            )));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| bad(format!("row {}: bad value `{}`", row + 1, &record[1])))?;
        if !value.is_finite() {
            return Err(bad(format!("row {}: non-finite value", row + 1)));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(values)
}

pub fn read_series(path: &Path) -> Result<Vec<f64>, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_series(&text, &path.display().to_string())
}

pub fn format_series(values: &[f64]) -> String {
    let mut out = String::from("interval,value\n");
    for (t, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t + 1, v));
    }
    out
}

/// Collects the files a command writes so they can be removed if it fails.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    created_root: bool,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, AppError> {
        let created_root = !root.exists();
        fs::create_dir_all(root).map_err(|e| AppError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            created_root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), AppError> {
        let path = self.path(name);
        let mut file = fs::File::create(&path).map_err(|e| AppError::io(&path, e))?;
        self.written.push(path.clone());
        file.write_all(contents.as_bytes()).map_err(|e| AppError::io(&path, e))
    }

    pub fn write_csv<R: AsRef<[String]>>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), AppError> {
        let path = self.path(name);
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).map_err(|e| csv_err(&path, e))?;
        for row in rows {
            writer.write_record(row.as_ref()).map_err(|e| csv_err(&path, e))?;
        }
        let bytes = writer.into_inner().map_err(|e| AppError::Format(e.to_string()))?;
        self.write(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Names written so far, in order.
    pub fn written(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    /// Deletes everything this command wrote.
    pub fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

/// `round,agent,interval,x` with 1-based intervals and agent ids as given.
pub fn trajectory_rows(traj: &Trajectory, agent_ids: &[u32], baselines: &[Vec<f64>]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for state in &traj.rounds {
        for ((id, base), action) in agent_ids.iter().zip(baselines).zip(&state.actions) {
            for (t, (b, d)) in base.iter().zip(action.deltas()).enumerate() {
                rows.push(vec![
                    state.round.to_string(),
                    id.to_string(),
                    (t + 1).to_string(),
                    (b + d).to_string(),
                ]);
            }
        }
    }
    rows
}

pub fn peak_series_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.peak_series
        .iter()
        .enumerate()
        .map(|(r, p)| vec![r.to_string(), p.to_string()])
        .collect()
}

/// One row per entry: index, label, then the per-interval deltas.
pub fn library_rows(library: &FiniteActionLibrary) -> (Vec<String>, Vec<Vec<String>>) {
    let n = library.get(0).len();
    let mut header = vec!["index".to_string(), "label".to_string()];
    header.extend((1..=n).map(|t| format!("t{t}")));
    let rows = library
        .actions()
        .iter()
        .zip(library.labels())
        .enumerate()
        .map(|(i, (a, label))| {
            let mut row = vec![i.to_string(), label.clone()];
            row.extend(a.deltas().iter().map(|d| d.to_string()));
            row
        })
        .collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_is_exact() {
        let values = vec![0.1, 1.0 / 3.0, 85_000.0, -2.5e-7, f64::MAX, 5e-324];
        assert_eq!(parse_series(&format_series(&values), "mem").unwrap(), values);
    }

    #[test]
    fn rejects_gaps_and_bad_headers() {
        assert!(parse_series("interval,value\n1,2\n3,4\n", "x").is_err());
        assert!(parse_series("interval,value\n0,2\n", "x").is_err());
        assert!(parse_series("t,v\n1,2\n", "x").is_err());
        assert!(parse_series("interval,value\n", "x").is_err());
        assert!(parse_series("interval,value\n1,abc\n", "x").is_err());
        assert!(parse_series("interval,value\n1,NaN\n", "x").is_err());
        assert_eq!(parse_series("interval,value\n1, 2.5\n", "x").unwrap(), vec![2.5]);
    }
}
