//! Experiment settings: optional JSON file, overridden field by field by
//! command-line flags, then filled with defaults.

use std::fs;
use std::path::{Path, PathBuf};

use rkrp_core::{CodeKind, PolynomialNodes};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SweepN,
    SweepAlpha,
    SweepS,
    Cond,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SweepN => "sweep-n",
            Experiment::SweepAlpha => "sweep-alpha",
            Experiment::SweepS => "sweep-s",
            Experiment::Cond => "cond",
        }
    }
}

/// Every field optional; unset fields take the experiment's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub kinds: Option<Vec<CodeKind>>,
    /// K grid for sweep-n; a single K elsewhere.
    pub k: Option<Vec<usize>>,
    /// Fixed α for sweep-n; the α grid for sweep-alpha and cond.
    pub alpha: Option<Vec<f64>>,
    pub s_max: Option<usize>,
    pub num_trials: Option<usize>,
    pub base_seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub all_entries: Option<bool>,
    pub polynomial_nodes: Option<PolynomialNodes>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: ExperimentConfig) -> Self {
        Self {
            experiment: over.experiment.or(self.experiment),
            kinds: over.kinds.or(self.kinds),
            k: over.k.or(self.k),
            alpha: over.alpha.or(self.alpha),
            s_max: over.s_max.or(self.s_max),
            num_trials: over.num_trials.or(self.num_trials),
            base_seed: over.base_seed.or(self.base_seed),
            out: over.out.or(self.out),
            all_entries: over.all_entries.or(self.all_entries),
            polynomial_nodes: over.polynomial_nodes.or(self.polynomial_nodes),
        }
    }

    pub fn resolve(&self, experiment: Experiment) -> Result<Resolved, CliError> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(CliError::Config(format!(
                    "config file is for `{}`, command is `{}`",
                    e.name(),
                    experiment.name()
                )));
            }
        }
        let kinds = self.kinds.clone().unwrap_or_else(|| DEFAULT_KINDS.to_vec());
        let k_grid = self.k.clone().unwrap_or_else(|| match experiment {
            Experiment::SweepN => DEFAULT_K_GRID.to_vec(),
            _ => vec![49],
        });
        let alpha = self.alpha.clone().unwrap_or_else(|| match experiment {
            Experiment::SweepN => vec![0.1],
            Experiment::SweepAlpha => grid(0.05, 0.02, 20),
            Experiment::Cond => grid(0.0, 0.05, 20),
            Experiment::SweepS => Vec::new(),
        });
        let resolved = Resolved {
            experiment,
            kinds,
            k_grid,
            alpha,
            s_max: self.s_max.unwrap_or(26),
            num_trials: self.num_trials.unwrap_or(DEFAULT_TRIALS),
            base_seed: self.base_seed.unwrap_or(0),
            out: self.out.clone(),
            all_entries: self.all_entries.unwrap_or(false),
            polynomial_nodes: self.polynomial_nodes.unwrap_or_default(),
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_KINDS: [CodeKind; 3] = [CodeKind::RkrpSystematic, CodeKind::RkrpNonsystematic, CodeKind::Orthopoly];
pub const DEFAULT_K_GRID: [usize; 12] = [25, 30, 36, 40, 42, 49, 56, 64, 72, 81, 90, 100];

/// `count` points `start + i·step`, rounded to 6 decimals so they print
/// cleanly.
pub fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e6).round() / 1e6)
        .collect()
}

/// Fully specified settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub kinds: Vec<CodeKind>,
    pub k_grid: Vec<usize>,
    pub alpha: Vec<f64>,
    pub s_max: usize,
    pub num_trials: usize,
    pub base_seed: u64,
    pub out: Option<PathBuf>,
    pub all_entries: bool,
    pub polynomial_nodes: PolynomialNodes,
}

impl Resolved {
    fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: &str| Err(CliError::Config(msg.to_string()));
        if self.kinds.is_empty() {
            return fail("at least one code kind is required");
        }
        if self.num_trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return fail("K values must be positive and the grid nonempty");
        }
        if self.experiment != Experiment::SweepN && self.k_grid.len() != 1 {
            return fail("this experiment takes a single K");
        }
        match self.experiment {
            Experiment::SweepN if self.alpha.len() != 1 => fail("sweep-n takes a single alpha"),
            Experiment::SweepAlpha | Experiment::Cond if self.alpha.is_empty() => fail("alpha grid is empty"),
            _ if self.alpha.iter().any(|a| !a.is_finite()) => fail("alpha values must be finite"),
            _ => Ok(()),
        }
    }

    pub fn k(&self) -> usize {
        self.k_grid[0]
    }
}
