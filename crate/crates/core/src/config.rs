//! Experiment configuration: a single human-editable TOML file with an
//! explicit schema version. Every downstream parameter constraint is
//! re-validated at parse time so bad configs fail before any simulation
//! starts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::limits::{DriverSpec, Flavor, KernelKind, LimitSpec};
use crate::rng::SceneryLaw;
use crate::scenery::SchemaMode;
use crate::walks::{CollectingSpec, TimeGrid};

pub const SCHEMA_VERSION: u32 = 1;

/// What the `simulate` subcommand produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateTarget {
    /// The collecting walk itself (CSV of index, position).
    Walk,
    /// Walk in random scenery (CSV of index, value).
    WalkInScenery,
    /// Walk at random time (CSV of index, value).
    WalkAtRandomTime,
    /// A continuum limit process path (CSV of t, value).
    Limit,
    /// A reward-schema path (CSV of t, value).
    Schema,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub target: SimulateTarget,
    pub flavor: Flavor,
    pub kernel: KernelKind,
    #[serde(flatten)]
    pub walk: CollectingSpec,
    pub scenery: SceneryLaw,
    pub schema_mode: SchemaMode,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizesConfig {
    /// Steps of the discrete processes.
    pub n: usize,
    /// Copies in a reward schema.
    pub c_n: usize,
    /// Driver copies for product-measure processes.
    pub m_copies: usize,
    pub replicates: usize,
    /// Measure-grid cells.
    pub cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    pub steps: usize,
}

/// Top-level experiment configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub out_dir: String,
    pub model: ModelConfig,
    pub sizes: SizesConfig,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: crate::acceptance::DEFAULT_SEED,
            out_dir: "out".into(),
            model: ModelConfig {
                target: SimulateTarget::WalkAtRandomTime,
                flavor: Flavor::Delta,
                kernel: KernelKind::Indicator,
                walk: CollectingSpec::Simple,
                scenery: SceneryLaw::Gaussian,
                schema_mode: SchemaMode::Independent,
                alpha: 2.0,
            },
            sizes: SizesConfig { n: 1 << 12, c_n: 64, m_copies: 1 << 9, replicates: 1000, cells: 1 << 11 },
            grid: GridConfig { dt: 1.0 / 64.0, steps: 64 },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Re-validate every downstream parameter constraint.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.model.walk.validate()?;
        self.model.scenery.validate(self.model.alpha)?;
        crate::rng::StableParams::new(self.model.alpha, 1.0)?;
        if self.model.schema_mode == SchemaMode::SingleScenery && self.model.alpha <= 1.0 {
            return Err(Error::InvalidParameter(
                "single-scenery schema requires alpha > 1".into(),
            ));
        }
        if self.model.flavor == Flavor::Lambda && self.model.alpha <= 1.0 {
            return Err(Error::InvalidParameter("lambda processes require alpha > 1".into()));
        }
        if self.sizes.n == 0
            || self.sizes.c_n == 0
            || self.sizes.m_copies == 0
            || self.sizes.replicates == 0
            || self.sizes.cells == 0
        {
            return Err(Error::Config("all sizes must be >= 1".into()));
        }
        TimeGrid::new(self.grid.dt, self.grid.steps)?;
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.dt, self.grid.steps)
    }

    /// Limit-process spec assembled from the model section.
    pub fn limit_spec(&self) -> Result<LimitSpec> {
        let driver = match self.model.walk {
            CollectingSpec::Simple => DriverSpec::Fbm { hurst: 0.5 },
            CollectingSpec::GaussianDependent { hurst } => DriverSpec::Fbm { hurst },
            CollectingSpec::BetaStable { beta } => {
                DriverSpec::StableLevy { beta, resolution: 1 << 14 }
            }
        };
        let mut spec = LimitSpec::new(self.model.flavor, self.model.kernel, self.model.alpha, driver);
        spec.m_copies = self.sizes.m_copies;
        spec.cells = self.sizes.cells;
        spec.validate()?;
        Ok(spec)
    }

    /// Hex SHA-256 of the canonical TOML form; embedded in every report.
    pub fn hash(&self) -> Result<String> {
        let canonical = self.to_toml()?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}
