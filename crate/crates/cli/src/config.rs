//! Pipeline configuration: one TOML file with one section per stage.
//!
//! Precedence: command-line flags > `SHOTLINK_*` environment variables >
//! config file > built-in defaults. Stage seeds are derived from the single
//! global seed so one number reproduces a whole run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shotlink::constraints::ContextConfig;
use shotlink::embed::{LossConfig, LossKind, TrainConfig};
use shotlink::linker::LinkerConfig;
use shotlink::synth::ScenarioConfig;
use shotlink::tracklets::LinkAffinityConfig;

use crate::error::CliError;

/// Contextual-mining section; thresholds live in [`ContextConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextSection {
    pub enabled: bool,
    pub merge_threshold: f64,
    pub min_confidence_margin: Option<f64>,
}

impl Default for ContextSection {
    fn default() -> Self {
        Self {
            enabled: true,
            merge_threshold: 6.0,
            min_confidence_margin: None,
        }
    }
}

impl ContextSection {
    pub fn to_config(&self) -> ContextConfig {
        ContextConfig {
            merge_threshold: self.merge_threshold,
            min_confidence_margin: self.min_confidence_margin,
        }
    }
}

/// Training section: optimizer hyperparameters plus the model shape and the
/// mined-sample caps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Hidden layer widths; empty means a single linear layer.
    pub hidden_layers: Vec<usize>,
    pub embedding_dim: usize,
    /// Triplet cap per negative tracklet pair.
    pub max_triplets_per_negpair: usize,
    /// Pair caps (each class) for the contrastive loss.
    pub max_pairs_per_class: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let sgd = TrainConfig::default();
        Self {
            learning_rate: sgd.learning_rate,
            momentum: sgd.momentum,
            weight_decay: sgd.weight_decay,
            batch_size: sgd.batch_size,
            epochs: sgd.epochs,
            hidden_layers: vec![64],
            embedding_dim: 64,
            max_triplets_per_negpair: 50,
            max_pairs_per_class: 20_000,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
        }
    }

    /// `[F, hidden..., D]` for a given input feature dimension.
    pub fn layer_dims(&self, feature_dim: usize) -> Vec<usize> {
        let mut dims = vec![feature_dim];
        dims.extend(&self.hidden_layers);
        dims.push(self.embedding_dim);
        dims
    }
}

/// The whole pipeline configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed; stage seeds derive from it.
    pub seed: u64,
    /// Worker thread cap; 0 uses all cores.
    pub threads: usize,
    pub affinity: LinkAffinityConfig,
    pub context: ContextSection,
    pub loss: LossConfig,
    pub train: TrainSection,
    pub linker: LinkerConfig,
    pub scenario: ScenarioConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Apply environment variables, then flags, in increasing precedence.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        threads: Option<usize>,
        loss: Option<LossKind>,
    ) -> Result<(), CliError> {
        if let Some(v) = read_env_u64("SHOTLINK_SEED")? {
            self.seed = v;
        }
        if let Some(v) = read_env_u64("SHOTLINK_THREADS")? {
            self.threads = v as usize;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(t) = threads {
            self.threads = t;
        }
        if let Some(l) = loss {
            self.loss.kind = l;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = |r: shotlink::Result<()>| r.map_err(|e| CliError::Validation(e.to_string()));
        v(self.affinity.validate())?;
        v(self.context.to_config().validate())?;
        v(self.loss.validate())?;
        v(self.train.to_config(0).validate())?;
        v(self.linker.validate())?;
        v(self.scenario.validate())?;
        if self.train.embedding_dim == 0 {
            return Err(CliError::Validation("embedding_dim must be > 0".into()));
        }
        Ok(())
    }

    /// Seeds for the individual stages, all derived from the global seed.
    pub fn scenario_seed(&self) -> u64 {
        self.seed
    }

    pub fn train_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn sampling_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    pub fn model_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }

    /// Scenario config with the derived seed applied.
    pub fn scenario_with_seed(&self) -> ScenarioConfig {
        ScenarioConfig {
            seed: self.scenario_seed(),
            ..self.scenario.clone()
        }
    }

    /// Canonical serialized form used for the manifest hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn read_env_u64(name: &str) -> Result<Option<u64>, CliError> {
    match std::env::var(name) {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Validation(format!("{name} must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}
