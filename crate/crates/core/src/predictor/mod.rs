//! Feedforward predictor of discomfort changes from window features.
//!
//! Two heads share one network implementation: a regression head (sigmoid
//! output, one unit) that predicts the change in discomfort score per
//! window, and a 3-class softmax head that predicts its direction. Inputs are
//! the window's `(rate, delta)` pair, min-max scaled on the training set.
//! Every model is fitted on one user's data only.

mod model;
mod network;
mod scaler;
mod train;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use model::{
    Classification, FeatureProvenance, Model, Provenance, MODEL_FORMAT, MODEL_VERSION,
};
pub use network::{
    gradient_check, gradient_check_against, Gradients, Head, Network, Target, FD_STEP,
};
pub use scaler::Scaler;
pub use train::{dataset_loss, split_samples, train, TrainSample, TrainingConfig};

use crate::compression::WindowFeature;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::trajectory::{check_header, csv_error, parse_f64, DiscomfortReport};

/// Direction of a discomfort change between consecutive reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Same,
    Higher,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Lower, Direction::Same, Direction::Higher];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Self::ALL.get(i).copied()
    }

    pub fn from_change(change: i32) -> Direction {
        match change.signum() {
            -1 => Direction::Lower,
            0 => Direction::Same,
            _ => Direction::Higher,
        }
    }

    /// Argmax over `(lower, same, higher)`; any tie for the maximum resolves
    /// to [`Direction::Same`].
    pub fn from_probabilities(p: [f64; 3]) -> Direction {
        let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..3).filter(|&i| p[i] == max).collect();
        match winners.as_slice() {
            [only] => Direction::ALL[*only],
            _ => Direction::Same,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Same => "same",
            Direction::Higher => "higher",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Direction::Lower),
            "same" => Ok(Direction::Same),
            "higher" => Ok(Direction::Higher),
            other => Err(Error::invalid(format!("unknown direction label `{other}`"))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleTarget {
    Delta(f64),
    Direction(Direction),
}

/// `(rate, delta)` features with the observed discomfort outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledSample {
    pub features: [f64; 2],
    pub target: SampleTarget,
}

const ALIGN_TOL: f64 = 1e-6;

/// Checks that `reports` sit on the window boundaries of `features`:
/// one report at the first window's start and one at every window end.
pub fn check_alignment(features: &[WindowFeature], reports: &[DiscomfortReport]) -> Result<()> {
    if reports.len() != features.len() + 1 {
        return Err(Error::Alignment(format!(
            "{} windows need {} boundary reports, found {}",
            features.len(),
            features.len() + 1,
            reports.len()
        )));
    }
    for (w, f) in features.iter().enumerate() {
        if (reports[w].t - f.t0).abs() > ALIGN_TOL || (reports[w + 1].t - f.t1).abs() > ALIGN_TOL {
            return Err(Error::Alignment(format!(
                "window {w} spans [{}, {}) but reports are at {} and {}",
                f.t0,
                f.t1,
                reports[w].t,
                reports[w + 1].t
            )));
        }
    }
    Ok(())
}

fn score_changes<'a>(
    features: &'a [WindowFeature],
    reports: &'a [DiscomfortReport],
) -> Result<impl Iterator<Item = ([f64; 2], i32)> + 'a> {
    check_alignment(features, reports)?;
    Ok(features.iter().enumerate().filter_map(move |(w, f)| {
        f.delta.map(|d| {
            (
                [f.rate, d],
                reports[w + 1].score as i32 - reports[w].score as i32,
            )
        })
    }))
}

/// Regression samples: target is the score change across each window.
/// Windows without a defined rate change are skipped.
pub fn regression_samples(
    features: &[WindowFeature],
    reports: &[DiscomfortReport],
) -> Result<Vec<LabeledSample>> {
    Ok(score_changes(features, reports)?
        .map(|(features, change)| LabeledSample {
            features,
            target: SampleTarget::Delta(change as f64),
        })
        .collect())
}

/// Classifier samples labelled by the sign of the score change.
pub fn direction_samples(
    features: &[WindowFeature],
    reports: &[DiscomfortReport],
) -> Result<Vec<LabeledSample>> {
    Ok(score_changes(features, reports)?
        .map(|(features, change)| LabeledSample {
            features,
            target: SampleTarget::Direction(Direction::from_change(change)),
        })
        .collect())
}

/// Outcome of fitting one model.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub model: Model,
    pub history: Vec<f64>,
    pub train_len: usize,
    pub test_len: usize,
    pub train_loss: f64,
    /// `None` when nothing was held out.
    pub test_loss: Option<f64>,
    /// Held-out samples, for downstream evaluation.
    pub test_samples: Vec<LabeledSample>,
}

fn to_train_samples(
    samples: &[LabeledSample],
    input: &Scaler,
    output: Option<&Scaler>,
) -> Result<Vec<TrainSample>> {
    samples
        .iter()
        .map(|s| {
            let x = input.transform(&s.features)?;
            let target = match (s.target, output) {
                (SampleTarget::Delta(d), Some(o)) => Target::Values(o.transform(&[d])?),
                (SampleTarget::Direction(dir), None) => Target::Class(dir.index()),
                _ => return Err(Error::invalid("sample kind does not match the model head")),
            };
            Ok(TrainSample { input: x, target })
        })
        .collect()
}

fn fit(
    samples: &[LabeledSample],
    head: Head,
    hidden: usize,
    cfg: &TrainingConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let (train_set, test_set) = if cfg.split_fraction == 1.0 {
        (samples.to_vec(), Vec::new())
    } else {
        split_samples(samples, cfg.split_fraction, cfg.seed)?
    };
    if train_set.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let rows: Vec<[f64; 2]> = train_set.iter().map(|s| s.features).collect();
    let input_scaler = Scaler::fit(&rows)?;
    let (sizes, output_scaler) = match head {
        Head::Regression => {
            let targets = train_set
                .iter()
                .map(|s| match s.target {
                    SampleTarget::Delta(d) => Ok([d]),
                    SampleTarget::Direction(_) => {
                        Err(Error::invalid("direction label in a regression set"))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            (vec![2, hidden, 1], Some(Scaler::fit(&targets)?))
        }
        Head::Classifier => (vec![2, hidden, 3], None),
    };
    let train_data = to_train_samples(&train_set, &input_scaler, output_scaler.as_ref())?;
    let test_data = to_train_samples(&test_set, &input_scaler, output_scaler.as_ref())?;
    let net = Network::new_seeded(&sizes, head, cfg.seed)?;
    let (network, history) = train(net, &train_data, cfg)?;
    let train_loss = dataset_loss(&network, &train_data)?;
    let test_loss = if test_data.is_empty() {
        None
    } else {
        Some(dataset_loss(&network, &test_data)?)
    };
    Ok(FitReport {
        model: Model {
            network,
            input_scaler,
            output_scaler,
            provenance: Provenance {
                training: *cfg,
                features: None,
            },
        },
        history,
        train_len: train_set.len(),
        test_len: test_set.len(),
        train_loss,
        test_loss,
        test_samples: test_set,
    })
}

/// Fits a `2 -> hidden -> 1` regression model on one user's samples.
pub fn fit_regression(
    samples: &[LabeledSample],
    hidden: usize,
    cfg: &TrainingConfig,
) -> Result<FitReport> {
    fit(samples, Head::Regression, hidden, cfg)
}

/// Fits a `2 -> hidden -> 3` softmax direction classifier.
pub fn fit_classifier(
    samples: &[LabeledSample],
    hidden: usize,
    cfg: &TrainingConfig,
) -> Result<FitReport> {
    fit(samples, Head::Classifier, hidden, cfg)
}

/// Independent per-user regression fits; each user gets its own model.
pub fn fit_regression_per_user(
    users: &[(String, Vec<LabeledSample>)],
    hidden: usize,
    cfg: &TrainingConfig,
    exec: Execution,
) -> Vec<(String, Result<FitReport>)> {
    exec.map(users, |(user, samples)| {
        (user.clone(), fit_regression(samples, hidden, cfg))
    })
}

/// One point of a predicted discomfort curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedPoint {
    /// Window that ends at `t`; `None` for the anchor point.
    pub window: Option<usize>,
    pub t: f64,
    pub delta: Option<f64>,
    pub score: f64,
}

/// Cumulative scores starting at `anchor`; undefined deltas count as zero.
pub fn reconstruct_scores(anchor: f64, deltas: &[Option<f64>]) -> Vec<f64> {
    let mut score = anchor;
    let mut out = Vec::with_capacity(deltas.len() + 1);
    out.push(score);
    for d in deltas {
        score += d.unwrap_or(0.0);
        out.push(score);
    }
    out
}

/// Predicts a session's discomfort curve from its window features alone,
/// starting from `anchor` at the first window's start.
pub fn predict_session(
    model: &Model,
    features: &[WindowFeature],
    anchor: f64,
) -> Result<Vec<PredictedPoint>> {
    let deltas = features
        .iter()
        .map(|f| model.predict_delta(f))
        .collect::<Result<Vec<_>>>()?;
    let scores = reconstruct_scores(anchor, &deltas);
    let Some(first) = features.first() else {
        return Ok(Vec::new());
    };
    let mut out = vec![PredictedPoint {
        window: None,
        t: first.t0,
        delta: None,
        score: scores[0],
    }];
    for (w, f) in features.iter().enumerate() {
        out.push(PredictedPoint {
            window: Some(w),
            t: f.t1,
            delta: deltas[w],
            score: scores[w + 1],
        });
    }
    Ok(out)
}

pub const PREDICTION_HEADER: [&str; 4] = ["window", "t", "delta", "score"];

pub fn write_predictions_csv<W: Write>(out: W, points: &[PredictedPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PREDICTION_HEADER)?;
    for p in points {
        w.write_record([
            p.window.map(|w| w.to_string()).unwrap_or_default(),
            p.t.to_string(),
            p.delta.map(|d| d.to_string()).unwrap_or_default(),
            p.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv<R: Read>(input: R) -> Result<Vec<PredictedPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    check_header(&mut rdr, &PREDICTION_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let window = match &rec[0] {
            "" => None,
            s => Some(s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad window `{s}`"),
            })?),
        };
        let delta = match &rec[2] {
            "" => None,
            s => Some(parse_f64(s, "delta", line)?),
        };
        out.push(PredictedPoint {
            window,
            t: parse_f64(&rec[1], "t", line)?,
            delta,
            score: parse_f64(&rec[3], "score", line)?,
        });
    }
    Ok(out)
}
