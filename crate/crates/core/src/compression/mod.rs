//! Trajectory compression and the windowed compression-rate signal.
//!
//! [`stc_compress`] is the opening-window spatiotemporal compressor: it
//! extrapolates from an (anchor, last) pair at constant velocity and drops
//! points that land within `epsilon` of the prediction. [`dp_compress`] is the
//! purely spatial Douglas-Peucker baseline. [`windowed_features`] turns a
//! trajectory into per-window `(rate, delta)` pairs.

mod dp;
mod features;
mod stc;

pub use dp::{dp_compress, point_segment_distance};
pub(crate) use features::window_spans;
pub use features::{
    read_features_csv, window_bounds, window_rate, windowed_features, windowed_features_with,
    write_features_csv, write_features_jsonl, FEATURES_HEADER,
};
pub use stc::{predict_position, stc_compress};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default elimination threshold in Unity Meters.
pub const DEFAULT_EPSILON: f64 = 0.4;

/// How consecutive window rates are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    /// `C_w / C_{w-1}`; undefined when the previous rate is zero.
    #[default]
    Ratio,
    /// `C_w - C_{w-1}`.
    Difference,
}

impl std::str::FromStr for DeltaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(DeltaMode::Ratio),
            "difference" | "diff" => Ok(DeltaMode::Difference),
            other => Err(Error::invalid(format!("unknown delta mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DeltaMode::Ratio => "ratio",
            DeltaMode::Difference => "difference",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionConfig {
    epsilon: f64,
    #[serde(default)]
    delta_mode: DeltaMode,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            epsilon: DEFAULT_EPSILON,
            delta_mode: DeltaMode::Ratio,
        }
    }
}

impl CompressionConfig {
    /// `epsilon` must be positive; `f64::INFINITY` is allowed.
    pub fn new(epsilon: f64, delta_mode: DeltaMode) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        Ok(CompressionConfig {
            epsilon,
            delta_mode,
        })
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, DeltaMode::default())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta_mode(&self) -> DeltaMode {
        self.delta_mode
    }
}

/// Partition of a compressed sequence into kept indices and a removed count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub kept: Vec<usize>,
    pub removed_count: usize,
    pub total_count: usize,
}

impl CompressionResult {
    pub(crate) fn from_keep_mask(keep: &[bool]) -> Self {
        let kept: Vec<usize> = keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect();
        CompressionResult {
            removed_count: keep.len() - kept.len(),
            total_count: keep.len(),
            kept,
        }
    }

    /// `removed / total`.
    pub fn rate(&self) -> Result<f64> {
        compression_rate(self)
    }
}

/// Fraction of points eliminated: `removed_count / total_count`.
pub fn compression_rate(result: &CompressionResult) -> Result<f64> {
    if result.total_count == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(result.removed_count as f64 / result.total_count as f64)
}

/// Change of rate between consecutive windows. `None` marks an undefined
/// delta (ratio against a zero previous rate).
pub fn delta_rate(c_w: f64, c_prev: f64, mode: DeltaMode) -> Option<f64> {
    match mode {
        DeltaMode::Ratio if c_prev == 0.0 => None,
        DeltaMode::Ratio => Some(c_w / c_prev),
        DeltaMode::Difference => Some(c_w - c_prev),
    }
}

/// Per-window compression feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFeature {
    pub window_index: usize,
    pub t0: f64,
    pub t1: f64,
    pub rate: f64,
    pub delta: Option<f64>,
    pub point_count: usize,
}
