//! Run configuration: one strict JSON document per run.

use std::path::PathBuf;

use qkam_core::diagnostics::GridSpec;
use qkam_core::epsmax::ScanConfig;
use qkam_core::lmg::ModelParams;
use qkam_core::resonance::ResonanceLabel;
use qkam_core::scaling::{log_grid, ScalingTarget};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelParams,
    pub output_dir: Option<PathBuf>,
    pub cache: bool,
    pub workers: usize,
    pub spectrum: SpectrumBlock,
    pub floquet: FloquetBlock,
    pub husimi: HusimiBlock,
    pub poincare: PoincareBlock,
    pub epsmax: EpsmaxBlock,
    pub scaling: ScalingBlock,
    pub upt: UptBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            output_dir: None,
            cache: true,
            workers: 1,
            spectrum: SpectrumBlock::default(),
            floquet: FloquetBlock::default(),
            husimi: HusimiBlock::default(),
            poincare: PoincareBlock::default(),
            epsmax: EpsmaxBlock::default(),
            scaling: ScalingBlock::default(),
            upt: UptBlock::default(),
        }
    }
}

fn default_labels() -> Vec<ResonanceLabel> {
    [(1, 1), (2, 3), (2, 1), (3, 4), (3, 2)].iter().map(|&(m, n)| ResonanceLabel { m, n }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumBlock {
    /// Samples of the classical period curve.
    pub curve_points: usize,
    /// Resonances exported to the selection file.
    pub labels: Vec<ResonanceLabel>,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { curve_points: 400, labels: default_labels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloquetBlock {
    /// Also label states by continuation from `ε = 0`.
    pub track_labels: bool,
    /// Geometric `ε` steps of that continuation.
    pub track_steps: usize,
    pub labels: Vec<ResonanceLabel>,
}

impl Default for FloquetBlock {
    fn default() -> Self {
        Self { track_labels: true, track_steps: 12, labels: default_labels() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    /// Eigenstate `|E_k⟩` of `H0`.
    H0,
    /// Floquet state associated with level `k` at the model `ε`.
    Floquet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiState {
    pub source: StateSource,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiBlock {
    pub grid: GridSpec,
    pub states: Vec<HusimiState>,
}

impl Default for HusimiBlock {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            states: [220, 225, 227, 230].iter().map(|&k| HusimiState { source: StateSource::Floquet, k }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareBlock {
    pub rings: usize,
    pub per_ring: usize,
    pub n_periods: usize,
    /// Extra seeds placed on the classical resonant contours.
    pub resonance_seeds: Vec<ResonanceLabel>,
    pub seeds_per_resonance: usize,
}

impl Default for PoincareBlock {
    fn default() -> Self {
        Self {
            rings: 24,
            per_ring: 2,
            n_periods: 1000,
            resonance_seeds: vec![ResonanceLabel { m: 1, n: 1 }, ResonanceLabel { m: 2, n: 1 }, ResonanceLabel { m: 2, n: 3 }],
            seeds_per_resonance: 6,
        }
    }
}

/// Levels of an `ε_max` run: explicit indices, every level, or a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    All(AllLevels),
    List(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllLevels {
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsmaxBlock {
    /// Used when `target` is absent; NR tracking from `ε = 0`.
    pub levels: Levels,
    pub target: Option<ScalingTarget>,
    pub scan: ScanConfig,
}

impl Default for EpsmaxBlock {
    fn default() -> Self {
        Self { levels: Levels::List(Vec::new()), target: Some(ScalingTarget::Cr { label: ResonanceLabel { m: 1, n: 1 } }), scan: ScanConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JGrid {
    Log { lo: f64, hi: f64, n: usize },
    List(Vec<f64>),
}

impl JGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            JGrid::Log { lo, hi, n } => log_grid(*lo, *hi, *n),
            JGrid::List(v) => v.clone(),
        }
    }
}

impl Default for JGrid {
    fn default() -> Self {
        JGrid::Log { lo: 100.0, hi: 1000.0, n: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseBlock {
    /// `z = ε·J^power`.
    pub power: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    pub n_points: usize,
}

impl Default for CollapseBlock {
    fn default() -> Self {
        Self { power: 1.0, z_lo: 0.05, z_hi: 5.0, n_points: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingBlock {
    pub target: ScalingTarget,
    pub j_grid: JGrid,
    /// Cap on Floquet diagonalizations for the whole run.
    pub budget: usize,
    pub scan: ScanConfig,
    /// `F_max(ε)` curves against `z = ε·J^power` for collapse plots.
    pub collapse: Option<CollapseBlock>,
}

impl Default for ScalingBlock {
    fn default() -> Self {
        Self {
            target: ScalingTarget::Nr { energy_over_j: -0.85 },
            j_grid: JGrid::default(),
            budget: 20_000,
            scan: ScanConfig::default(),
            collapse: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UptBlock {
    pub targets: Vec<ScalingTarget>,
    /// Defaults to the model `J` alone.
    pub j_grid: Option<JGrid>,
}

impl Default for UptBlock {
    fn default() -> Self {
        Self {
            targets: vec![
                ScalingTarget::Nr { energy_over_j: -0.85 },
                ScalingTarget::Cr { label: ResonanceLabel { m: 2, n: 3 } },
                ScalingTarget::Er { label: ResonanceLabel { m: 1, n: 1 } },
            ],
            j_grid: None,
        }
    }
}

/// Flag values that override top-level scalars of the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub j: Option<f64>,
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub no_cache: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: Option<&std::path::Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::from_json(&text)
            }
            None => Ok(Self::default()),
        }
    }

    /// Applies flags, then the environment override of the output directory.
    pub fn resolve(mut self, o: &Overrides, env_out: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(j) = o.j {
            self.model.j = j;
        }
        if let Some(t) = o.tau {
            self.model.tau = t;
        }
        if let Some(e) = o.epsilon {
            self.model.epsilon = e;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if o.no_cache {
            self.cache = false;
        }
        if let Some(d) = o.out.clone().or(env_out) {
            self.output_dir = Some(d);
        }
        self.workers = self.workers.max(1);
        self.model.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("qkam-out"))
    }
}
