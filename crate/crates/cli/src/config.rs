//! Run configuration: a TOML file with one table per block, overridden by
//! command-line flags. `--dump-config` prints the merged result, which parses
//! back to the same configuration.

use std::path::{Path, PathBuf};

use review_pricing::dp::DpMethod;
use review_pricing::extended::{HorizonSeed, DEFAULT_GRID_POINTS, DEFAULT_MAX_HORIZON};
use review_pricing::model::{ModelParams, DEFAULT_LATTICE_TOL, DEFAULT_MAX_DENOMINATOR};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<BinaryModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extended: Option<ExtendedModel>,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Two-point market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinaryModel {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub delta: f64,
    pub x0: f64,
}

impl Default for BinaryModel {
    fn default() -> Self {
        Self {
            p: 0.6,
            q: 0.4,
            c: 0.43,
            delta: 0.99,
            x0: 0.5,
        }
    }
}

impl BinaryModel {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.p, self.q, self.c, self.delta, self.x0)?)
    }
}

/// General-quality market with a uniform prior on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendedModel {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub c: f64,
    pub delta: f64,
}

impl Default for ExtendedModel {
    fn default() -> Self {
        Self {
            lo: 0.4,
            hi: 0.6,
            points: DEFAULT_GRID_POINTS,
            c: 0.43,
            delta: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Dynamic,
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub mode: ModeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    /// Accuracy of the series solver.
    pub epsilon: f64,
    /// Width of the seeded band below `x = 1` in the lattice program.
    pub dp_seed_epsilon: f64,
    pub dp_method: DpMethod,
    pub max_denominator: u64,
    pub lattice_tol: f64,
    /// Horizon `M` of the extended program.
    pub horizon: usize,
    pub horizon_seed: HorizonSeed,
    pub price_points: usize,
    pub cost_points: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            mode: ModeKind::Dynamic,
            price: None,
            epsilon: 1e-6,
            dp_seed_epsilon: review_pricing::dp::DEFAULT_SEED_EPSILON,
            dp_method: DpMethod::default(),
            max_denominator: DEFAULT_MAX_DENOMINATOR,
            lattice_tol: DEFAULT_LATTICE_TOL,
            horizon: 1500,
            horizon_seed: HorizonSeed::default(),
            price_points: 60,
            cost_points: 10,
        }
    }
}

impl SolverBlock {
    pub fn check(&self) -> Result<(), CliError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Config(format!("solver.epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.horizon == 0 || self.horizon > DEFAULT_MAX_HORIZON {
            return Err(CliError::Config(format!(
                "solver.horizon must lie in [1, {DEFAULT_MAX_HORIZON}], got {}",
                self.horizon
            )));
        }
        if self.price_points == 0 || self.cost_points == 0 {
            return Err(CliError::Config("solver.price_points and solver.cost_points must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Dynamic,
    Static,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum QualityKind {
    Good,
    Bad,
    #[default]
    Prior,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    pub policy: PolicyKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_stop: Option<f64>,
    pub true_quality: QualityKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
    pub runs: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Dynamic,
            x_stop: None,
            true_quality: QualityKind::Prior,
            quality: None,
            runs: 10_000,
            horizon: 3000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Defaults per command: tables as CSV, single results as JSON.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn dump(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))
    }

    /// The binary block, created with defaults if absent.
    pub fn binary_mut(&mut self) -> Result<&mut BinaryModel, CliError> {
        if self.extended.is_some() {
            return Err(CliError::Config(
                "this command uses the [model] block, but the config has an [extended] block".into(),
            ));
        }
        Ok(self.model.get_or_insert_with(BinaryModel::default))
    }

    /// The extended block, created with defaults if absent.
    pub fn extended_mut(&mut self) -> Result<&mut ExtendedModel, CliError> {
        if self.model.is_some() {
            return Err(CliError::Config(
                "this command uses the [extended] block, but the config has a [model] block".into(),
            ));
        }
        Ok(self.extended.get_or_insert_with(ExtendedModel::default))
    }
}
