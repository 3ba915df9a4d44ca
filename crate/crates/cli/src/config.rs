use std::path::{Path, PathBuf};

use lvbif::Params;
use serde::{Deserialize, Serialize};

use crate::Fail;

/// Everything a run depends on. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params,
    pub grid: usize,
    pub modes: usize,
    /// Absolute β ceiling for continuation; `None` means
    /// `beta_max_factor · β_j`.
    pub beta_max: Option<f64>,
    pub beta_max_factor: f64,
    pub max_points: usize,
    pub ds_max: f64,
    pub amplitude: f64,
    pub mode: usize,
    pub seed: u64,
    pub draws: usize,
    pub betas_per_draw: usize,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params {
                mu: 16.0,
                sigma: 16.0,
                alpha: 2.0,
                gamma: 1.0,
                dim: 2,
            },
            grid: 512,
            modes: 4,
            beta_max: None,
            beta_max_factor: 20.0,
            max_points: 500,
            ds_max: 0.5,
            amplitude: 1e-2,
            mode: 1,
            seed: 20240601,
            draws: 1000,
            betas_per_draw: 100,
            workers: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Fail> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Fail::validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Fail::validation(format!("malformed config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Fail> {
        self.params.validate().map_err(Fail::from)?;
        let pos = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Fail::validation(format!("{name} must be positive")))
            }
        };
        if self.grid < 8 {
            return Err(Fail::validation(format!(
                "grid must be at least 8 cells, got {}",
                self.grid
            )));
        }
        pos("modes", self.modes > 0)?;
        pos("mode", self.mode > 0)?;
        pos("max_points", self.max_points > 0)?;
        pos("draws", self.draws > 0)?;
        pos("betas_per_draw", self.betas_per_draw > 0)?;
        pos("workers", self.workers.is_none_or(|w| w > 0))?;
        for (name, x) in [
            ("beta_max_factor", self.beta_max_factor),
            ("ds_max", self.ds_max),
            ("amplitude", self.amplitude),
        ] {
            pos(name, x.is_finite() && x > 0.0)?;
        }
        if self.beta_max_factor <= 1.0 {
            return Err(Fail::validation("beta_max_factor must exceed 1".into()));
        }
        if let Some(b) = self.beta_max {
            if !(b.is_finite() && b > self.params.beta_min()) {
                return Err(Fail::validation(format!(
                    "beta_max must exceed sigma/gamma = {}",
                    self.params.beta_min()
                )));
            }
        }
        Ok(())
    }
}
