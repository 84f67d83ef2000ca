//! Opening-window spatiotemporal trajectory compression, windowed
//! compression-rate features and a small feedforward network that maps the
//! compression-rate signal onto changes of a 0–10 discomfort score.
//!
//! The crate is organised as a pipeline:
//!
//! - [`trajectory`]: the `(tid, x, y, z, t)` point model, validation, window
//!   slicing and CSV I/O.
//! - [`compression`]: the opening-window compressor, a Douglas-Peucker
//!   baseline, and per-window rate / rate-change features.
//! - [`predictor`]: from-scratch network, min-max scaling, SGD training,
//!   the regression and direction heads, and the model file format.
//! - [`synth`]: seeded maze/race course generators and a synthetic
//!   discomfort model used as ground truth.
//! - [`eval`]: rank and linear correlation, curve-area error and confusion
//!   matrices.
//! - [`stream`]: bounded-memory, window-at-a-time processing of a live
//!   point stream.
//!
//! Data-parallel loops (per-window compression, seed sweeps, per-user
//! training) run on rayon when the `parallel` feature is enabled and fall
//! back to plain iterators otherwise; see [`exec::Execution`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compression;
pub mod error;
pub mod eval;
pub mod exec;
pub mod predictor;
pub mod stream;
pub mod synth;
pub mod trajectory;

pub use compression::{
    dp_compress, stc_compress, windowed_features, CompressionConfig, CompressionResult, DeltaMode,
    WindowFeature,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use trajectory::{DiscomfortReport, SessionLog, Tid, TrajPoint, Trajectory};
