use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::network::{Network, Target};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Share of samples used for training; the rest is held out. `1.0`
    /// trains on everything and holds nothing out.
    pub split_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.1,
            epochs: 2000,
            seed: 0,
            split_fraction: 0.7,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "split fraction must lie in (0, 1], got {}",
                self.split_fraction
            )));
        }
        Ok(())
    }
}

/// Network-ready sample: scaled input and target.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub input: Vec<f64>,
    pub target: Target,
}

/// Mean per-sample loss over `samples`.
pub fn dataset_loss(net: &Network, samples: &[TrainSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("loss over an empty set"));
    }
    let mut total = 0.0;
    for s in samples {
        total += net.loss(&s.input, &s.target)?;
    }
    Ok(total / samples.len() as f64)
}

/// Per-sample SGD with a seeded shuffle each epoch. Returns the trained
/// network and the mean loss recorded after every epoch.
pub fn train(
    mut net: Network,
    samples: &[TrainSample],
    cfg: &TrainingConfig,
) -> Result<(Network, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot train on an empty set"));
    }
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) || cfg.epochs == 0 {
        return Err(Error::invalid("learning rate must be >= 0 and epochs >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (_, grads) = net.backprop(&samples[i].input, &samples[i].target)?;
            net.apply_gradients(&grads, cfg.learning_rate);
        }
        history.push(dataset_loss(&net, samples)?);
    }
    if !net.is_finite() {
        return Err(Error::Degenerate(
            "training diverged to non-finite weights".into(),
        ));
    }
    Ok((net, history))
}

/// Seeded shuffle then split; `round(n * fraction)` items go to the first
/// set, clamped so both sets are non-empty.
pub fn split_samples<T: Clone>(
    samples: &[T],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if samples.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let n_train = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train]
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    let test = order[n_train..]
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::network::Head;

    fn xor_grid() -> Vec<TrainSample> {
        let mut out = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let (x, y) = (i as f64 / 5.0, j as f64 / 5.0);
                let t = if (x < 0.5) != (y < 0.5) { 0.9 } else { 0.1 };
                out.push(TrainSample {
                    input: vec![x, y],
                    target: Target::Values(vec![t]),
                });
            }
        }
        out
    }

    #[test]
    fn learns_xor_pattern() {
        let samples = xor_grid();
        let net = Network::new_seeded(&[2, 4, 1], Head::Regression, 1).unwrap();
        let (trained, history) = train(net, &samples, &TrainingConfig::default()).unwrap();
        assert_eq!(history.len(), 2000);
        assert!(
            dataset_loss(&trained, &samples).unwrap() < 0.05,
            "{:?}",
            history.last()
        );
    }

    #[test]
    fn zero_learning_rate_freezes() {
        let samples = xor_grid();
        let net = Network::new_seeded(&[2, 4, 1], Head::Regression, 1).unwrap();
        let cfg = TrainingConfig {
            learning_rate: 0.0,
            epochs: 5,
            ..Default::default()
        };
        let (trained, history) = train(net.clone(), &samples, &cfg).unwrap();
        assert_eq!(trained, net);
        assert!(history.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn deterministic_under_seed() {
        let samples = xor_grid();
        let cfg = TrainingConfig {
            epochs: 50,
            seed: 9,
            ..Default::default()
        };
        let net = Network::new_seeded(&[2, 4, 1], Head::Regression, 2).unwrap();
        let a = train(net.clone(), &samples, &cfg).unwrap();
        let b = train(net, &samples, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(train(
            Network::zeros(&[2, 1], Head::Regression).unwrap(),
            &[],
            &cfg
        )
        .is_err());
    }

    #[test]
    fn split_sizes_and_partition() {
        let xs: Vec<u32> = (0..10).collect();
        let (a, b) = split_samples(&xs, 0.7, 3).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(split_samples(&xs, 0.7, 3).unwrap(), (a.clone(), b.clone()));
        let mut all: Vec<u32> = a.into_iter().chain(b).collect();
        all.sort();
        assert_eq!(all, xs);
        let twenty: Vec<u32> = (0..20).collect();
        let (a, b) = split_samples(&twenty, 0.7, 0).unwrap();
        assert_eq!((a.len(), b.len()), (14, 6));
        assert!(split_samples(&xs, 1.0, 0).is_err());
        assert!(split_samples(&xs, 0.0, 0).is_err());
        assert!(split_samples(&xs[..1], 0.5, 0).is_err());
    }
}
