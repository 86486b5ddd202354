//! Scenario files.
//!
//! ```toml
//! seed = 7                      # optional master seed
//! cost_C = 5.72e9               # $ allocated over the coincident peak
//! tie_tolerance = 1e-6          # optional, MW
//! baseline_csv = "baseline.csv" # non-responsive load, `interval,value`
//! prices_csv = "prices.csv"     # $/MWh, `interval,value`
//!
//! [grid]
//! intervals = 96
//! interval_minutes = 15
//! label = "peak day"            # optional
//!
//! [[agents]]
//! id = 0
//! level = 1000.0                # flat baseline, MW ...
//! # baseline_csv = "agent0.csv" # ... or a profile
//! lower = 0.0                   # optional, default 0
//! upper = 1200.0
//! ```
//!
//! CSV paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use cpgame_core::model::{AgentSpec, Scenario, TimeGrid, DEFAULT_TIE_TOLERANCE_MW};
use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::io::parse_series;
use crate::presets::Day;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub intervals: usize,
    pub interval_minutes: u32,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_csv: Option<PathBuf>,
    #[serde(default)]
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "cost_C")]
    pub cost_c: f64,
    #[serde(default = "default_tie_tolerance")]
    pub tie_tolerance: f64,
    pub baseline_csv: PathBuf,
    pub prices_csv: PathBuf,
    pub grid: GridSection,
    #[serde(default)]
    pub agents: Vec<AgentSection>,
}

fn default_tie_tolerance() -> f64 {
    DEFAULT_TIE_TOLERANCE_MW
}

/// A parsed scenario file with its inputs loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ScenarioFile,
    pub day: Day,
    pub agents: Vec<AgentSpec>,
    /// Raw bytes of the file and every CSV it references, in read order;
    /// hashed into run manifests.
    pub inputs: Vec<(PathBuf, Vec<u8>)>,
}

impl LoadedConfig {
    pub fn scenario(&self) -> Result<Scenario, AppError> {
        if self.agents.is_empty() {
            return Err(AppError::Validation("scenario file lists no agents".into()));
        }
        self.day.with_agents(self.agents.clone())
    }
}

fn read_bytes(path: &Path, inputs: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<String, AppError> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| AppError::Validation(format!("{}: not UTF-8", path.display())))?;
    inputs.push((path.to_path_buf(), bytes));
    Ok(text)
}

fn read_csv(path: &Path, inputs: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<Vec<f64>, AppError> {
    let text = read_bytes(path, inputs)?;
    parse_series(&text, &path.display().to_string())
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, AppError> {
    let mut inputs = Vec::new();
    let text = read_bytes(path, &mut inputs)?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let n = file.grid.intervals;
    let check = |what: &str, v: &[f64]| {
        if v.len() == n {
            Ok(())
        } else {
            Err(AppError::Validation(format!(
                "{what} has {} intervals, grid has {n}",
                v.len()
            )))
        }
    };
    let baseline = read_csv(&dir.join(&file.baseline_csv), &mut inputs)?;
    check("baseline", &baseline)?;
    let prices = read_csv(&dir.join(&file.prices_csv), &mut inputs)?;
    check("prices", &prices)?;
    let label = if file.grid.label.is_empty() { "day" } else { file.grid.label.as_str() };
    let day = Day {
        grid: TimeGrid::new(n, file.grid.interval_minutes, label)?,
        baseline,
        prices,
        total_cost: file.cost_c,
        tie_tolerance_mw: file.tie_tolerance,
    };
    let mut agents = Vec::with_capacity(file.agents.len());
    for a in &file.agents {
        let profile = match (&a.level, &a.baseline_csv) {
            (Some(level), None) => vec![*level; n],
            (None, Some(csv)) => {
                let v = read_csv(&dir.join(csv), &mut inputs)?;
                check(&format!("agent {} baseline", a.id), &v)?;
                v
            }
            _ => {
                return Err(AppError::Validation(format!(
                    "agent {}: give exactly one of `level` or `baseline_csv`",
                    a.id
                )))
            }
        };
        agents.push(AgentSpec::new(a.id, profile, a.lower, a.upper)?);
    }
    Ok(LoadedConfig {
        file,
        day,
        agents,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::format_series;

    fn write_fixture(dir: &Path, config: &str) -> PathBuf {
        fs::write(dir.join("baseline.csv"), format_series(&[10.0, 20.0, 15.0])).unwrap();
        fs::write(dir.join("prices.csv"), format_series(&[1.0, 2.0, 3.0])).unwrap();
        let path = dir.join("scenario.toml");
        fs::write(&path, config).unwrap();
        path
    }

    const GOOD: &str = r#"
cost_C = 100.0
baseline_csv = "baseline.csv"
prices_csv = "prices.csv"
seed = 9
[grid]
intervals = 3
interval_minutes = 60
[[agents]]
id = 4
level = 2.0
upper = 3.0
"#;

    #[test]
    fn loads_a_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load_config(&write_fixture(dir.path(), GOOD)).unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.baseline, vec![10.0, 20.0, 15.0]);
        assert_eq!(s.agents[0].id, 4);
        assert_eq!(s.agents[0].energy_budget, 6.0);
        assert_eq!(cfg.file.seed, Some(9));
        assert_eq!(cfg.inputs.len(), 3);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let wrong_len = GOOD.replace("intervals = 3", "intervals = 4");
        assert!(matches!(load_config(&write_fixture(dir.path(), &wrong_len)), Err(AppError::Validation(_))));
        let unknown = format!("{GOOD}\nbogus = 1\n");
        assert!(load_config(&write_fixture(dir.path(), &unknown)).is_err());
        let both = GOOD.replace("level = 2.0", "level = 2.0\nbaseline_csv = \"baseline.csv\"");
        assert!(load_config(&write_fixture(dir.path(), &both)).is_err());
        let missing = dir.path().join("nope.toml");
        assert!(matches!(load_config(&missing), Err(AppError::Io { .. })));
    }
}
