use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compression::{DeltaMode, WindowFeature};
use crate::error::{Error, Result};

use super::network::{Head, Network};
use super::scaler::Scaler;
use super::train::TrainingConfig;
use super::Direction;

pub const MODEL_FORMAT: &str = "cyberstc-model";
pub const MODEL_VERSION: u32 = 1;

/// Feature-extraction settings the model was trained under.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureProvenance {
    pub epsilon: f64,
    pub window_s: f64,
    pub delta_mode: DeltaMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub training: TrainingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureProvenance>,
}

/// A trained network with the scalers that frame its inputs and outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub network: Network,
    pub input_scaler: Scaler,
    /// Target scaler; regression heads only.
    pub output_scaler: Option<Scaler>,
    pub provenance: Provenance,
}

/// Class decision plus the softmax output it came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub direction: Direction,
    pub probabilities: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    head: Head,
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    input_scaler: Scaler,
    output_scaler: Option<Scaler>,
    provenance: Provenance,
}

impl Model {
    pub fn head(&self) -> Head {
        self.network.head()
    }

    fn require(&self, head: Head) -> Result<()> {
        if self.head() != head {
            return Err(Error::HeadMismatch {
                expected: head.name(),
                found: self.head().name(),
            });
        }
        Ok(())
    }

    /// Predicted discomfort change for one window, in score units. `None`
    /// when the window has no defined rate change.
    pub fn predict_delta(&self, feature: &WindowFeature) -> Result<Option<f64>> {
        match feature.delta {
            None => {
                self.require(Head::Regression)?;
                Ok(None)
            }
            Some(delta) => self.predict_input([feature.rate, delta]).map(Some),
        }
    }

    /// Predicted change for a raw `[rate, delta]` pair.
    pub fn predict_input(&self, features: [f64; 2]) -> Result<f64> {
        self.require(Head::Regression)?;
        let input = self.input_scaler.transform(&features)?;
        let out = self.network.forward(&input)?;
        let scaler = self
            .output_scaler
            .as_ref()
            .ok_or_else(|| Error::Model("regression model without output scaler".into()))?;
        Ok(scaler.inverse(&out)?[0])
    }

    pub fn classify_direction(&self, feature: &WindowFeature) -> Result<Option<Classification>> {
        match feature.delta {
            None => {
                self.require(Head::Classifier)?;
                Ok(None)
            }
            Some(delta) => self.classify_input([feature.rate, delta]).map(Some),
        }
    }

    /// Direction for a raw `[rate, delta]` pair.
    pub fn classify_input(&self, features: [f64; 2]) -> Result<Classification> {
        self.require(Head::Classifier)?;
        let input = self.input_scaler.transform(&features)?;
        let p = self.network.forward(&input)?;
        let probabilities: [f64; 3] = p
            .try_into()
            .map_err(|_| Error::Model("classifier must have exactly 3 outputs".into()))?;
        Ok(Classification {
            direction: Direction::from_probabilities(probabilities),
            probabilities,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            head: self.head(),
            layer_sizes: self.network.layer_sizes().to_vec(),
            weights: self.network.weights().to_vec(),
            biases: self.network.biases().to_vec(),
            input_scaler: self.input_scaler.clone(),
            output_scaler: self.output_scaler.clone(),
            provenance: self.provenance.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unknown format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let network = Network::from_parts(file.layer_sizes, file.weights, file.biases, file.head)?;
        if file.input_scaler.width() != network.input_size() {
            return Err(Error::Model(
                "input scaler width does not match the network".into(),
            ));
        }
        match (&file.output_scaler, file.head) {
            (Some(s), Head::Regression) if s.width() == network.output_size() => {}
            (None, Head::Classifier) => {}
            _ => return Err(Error::Model("output scaler does not match the head".into())),
        }
        Ok(Model {
            network,
            input_scaler: file.input_scaler,
            output_scaler: file.output_scaler,
            provenance: file.provenance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        Model::from_json(&std::fs::read_to_string(path)?)
    }
}
