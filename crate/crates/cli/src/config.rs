//! JSON configuration for the CLI. Unknown keys are rejected and relative
//! paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use liefield::field::GainSchedule;
use liefield::io::MatrixEntries;
use liefield::{Error, Result, SquareMatrix};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    /// Curve file for `simulate` and `field-grid`.
    pub curve: Option<PathBuf>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    pub initial_state: Option<MatrixEntries>,
    #[serde(default)]
    pub gains: GainSchedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_escape")]
    pub escape_magnitude: f64,
    #[serde(default = "default_on_curve")]
    pub on_curve_tolerance: f64,
    pub parallel: Option<bool>,
    pub workers: Option<usize>,
    pub generate: Option<GenerateConfig>,
    pub grid: Option<GridConfig>,
    pub check: Option<CheckConfig>,
}

fn default_dt() -> f64 {
    0.01
}

fn default_duration() -> f64 {
    150.0
}

fn default_escape() -> f64 {
    1e-3
}

fn default_on_curve() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub radius: Option<f64>,
    pub center: Option<[f64; 2]>,
    pub zeta: Option<Vec<f64>>,
    pub h0: Option<MatrixEntries>,
    pub closed: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[min, max, count]` along the first translation axis.
    pub x: (f64, f64, usize),
    /// `[min, max, count]` along the second translation axis.
    pub y: (f64, f64, usize),
    /// `SE(3)` only: pose whose x/y translation is swept.
    pub base: Option<MatrixEntries>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub group: Option<String>,
    pub trials: Option<usize>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut cfg: CliConfig = serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(curve) = &cfg.curve {
            if curve.is_relative() {
                cfg.curve = Some(base.join(curve));
            }
        }
        Ok((cfg, base))
    }

    pub fn curve_path(&self) -> Result<&Path> {
        self.curve.as_deref().ok_or_else(|| Error::InvalidConfig("config has no \"curve\"".into()))
    }
}

/// Square matrix of the given order from flat or nested entries.
pub fn matrix_from(entries: &MatrixEntries, n: usize) -> Result<SquareMatrix> {
    let flat = match entries {
        MatrixEntries::Flat(v) => v.clone(),
        MatrixEntries::Rows(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidConfig(format!("expected a {n}x{n} matrix")));
            }
            rows.concat()
        }
    };
    if flat.len() != n * n {
        return Err(Error::InvalidConfig(format!("expected {} matrix entries, got {}", n * n, flat.len())));
    }
    SquareMatrix::from_row_major(n, &flat)
}
