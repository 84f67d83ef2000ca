//! Run settings resolved from flags, an optional JSON file and defaults.

use std::path::Path;

use cyberstc::compression::DEFAULT_EPSILON;
use cyberstc::predictor::{FeatureProvenance, TrainingConfig};
use cyberstc::{CompressionConfig, DeltaMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_WINDOW_S: f64 = 120.0;
pub const DEFAULT_HIDDEN: usize = 4;

/// One source of settings; unset fields fall through to the next layer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub epsilon: Option<f64>,
    pub window_s: Option<f64>,
    pub delta_mode: Option<DeltaMode>,
    pub hidden: Option<usize>,
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub split_fraction: Option<f64>,
}

impl ConfigLayer {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))
    }

    pub fn from_provenance(p: &FeatureProvenance) -> Self {
        ConfigLayer {
            epsilon: Some(p.epsilon),
            window_s: Some(p.window_s),
            delta_mode: Some(p.delta_mode),
            ..Default::default()
        }
    }

    fn or(self, lower: &ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            epsilon: self.epsilon.or(lower.epsilon),
            window_s: self.window_s.or(lower.window_s),
            delta_mode: self.delta_mode.or(lower.delta_mode),
            hidden: self.hidden.or(lower.hidden),
            seed: self.seed.or(lower.seed),
            learning_rate: self.learning_rate.or(lower.learning_rate),
            epochs: self.epochs.or(lower.epochs),
            split_fraction: self.split_fraction.or(lower.split_fraction),
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub compression: CompressionConfig,
    pub window_s: f64,
    pub hidden: usize,
    pub training: TrainingConfig,
}

impl RunConfig {
    /// Layers in decreasing precedence; defaults fill whatever is left.
    pub fn resolve(layers: &[&ConfigLayer]) -> Result<Self, CliError> {
        let merged = layers
            .iter()
            .fold(ConfigLayer::default(), |acc, l| acc.or(l));
        let train_defaults = TrainingConfig::default();
        let compression = CompressionConfig::new(
            merged.epsilon.unwrap_or(DEFAULT_EPSILON),
            merged.delta_mode.unwrap_or_default(),
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let window_s = merged.window_s.unwrap_or(DEFAULT_WINDOW_S);
        if !(window_s > 0.0 && window_s.is_finite()) {
            return Err(CliError::Usage(format!(
                "window must be > 0, got {window_s}"
            )));
        }
        let hidden = merged.hidden.unwrap_or(DEFAULT_HIDDEN);
        if hidden == 0 {
            return Err(CliError::Usage(
                "hidden layer needs at least one unit".into(),
            ));
        }
        let training = TrainingConfig {
            learning_rate: merged.learning_rate.unwrap_or(train_defaults.learning_rate),
            epochs: merged.epochs.unwrap_or(train_defaults.epochs),
            seed: merged.seed.unwrap_or(train_defaults.seed),
            split_fraction: merged
                .split_fraction
                .unwrap_or(train_defaults.split_fraction),
        };
        training
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(RunConfig {
            compression,
            window_s,
            hidden,
            training,
        })
    }

    pub fn feature_provenance(&self) -> FeatureProvenance {
        FeatureProvenance {
            epsilon: self.compression.epsilon(),
            window_s: self.window_s,
            delta_mode: self.compression.delta_mode(),
        }
    }
}
