use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output layer kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Sigmoid outputs, squared-error loss.
    Regression,
    /// Softmax outputs, cross-entropy loss.
    Classifier,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Regression => "regression",
            Head::Classifier => "classifier",
        }
    }
}

/// Training target for one sample.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Values(Vec<f64>),
    Class(usize),
}

/// Fully connected network with sigmoid hidden layers.
///
/// `weights[l]` is row-major with shape `layer_sizes[l] x layer_sizes[l + 1]`:
/// entry `i * out + j` connects input unit `i` to output unit `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    head: Head,
}

/// Parameter gradients, shaped like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    /// Parameters flattened layer by layer: weights then biases.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }

    pub fn negated(&self) -> Gradients {
        let neg = |v: &Vec<Vec<f64>>| v.iter().map(|l| l.iter().map(|x| -x).collect()).collect();
        Gradients {
            weights: neg(&self.weights),
            biases: neg(&self.biases),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Shape(
            "a network needs at least an input and an output layer".into(),
        ));
    }
    if sizes.contains(&0) {
        return Err(Error::Shape(format!("zero-size layer in {sizes:?}")));
    }
    Ok(())
}

impl Network {
    /// Weights and biases drawn uniformly from `[-0.5, 0.5]` with a seeded RNG.
    pub fn new_seeded(layer_sizes: &[usize], head: Head, seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_sizes.windows(2) {
            weights.push(
                (0..pair[0] * pair[1])
                    .map(|_| rng.random_range(-0.5..=0.5))
                    .collect(),
            );
            biases.push((0..pair[1]).map(|_| rng.random_range(-0.5..=0.5)).collect());
        }
        Ok(Network {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            head,
        })
    }

    pub fn zeros(layer_sizes: &[usize], head: Head) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|p| vec![0.0; p[0] * p[1]])
            .collect();
        let biases = layer_sizes.windows(2).map(|p| vec![0.0; p[1]]).collect();
        Ok(Network {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            head,
        })
    }

    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        head: Head,
    ) -> Result<Self> {
        check_sizes(&layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::Shape(format!(
                "{} weight and {} bias layers for sizes {layer_sizes:?}",
                weights.len(),
                biases.len()
            )));
        }
        for (l, pair) in layer_sizes.windows(2).enumerate() {
            if weights[l].len() != pair[0] * pair[1] || biases[l].len() != pair[1] {
                return Err(Error::Shape(format!(
                    "layer {l} does not match {}x{}",
                    pair[0], pair[1]
                )));
            }
        }
        let net = Network {
            layer_sizes,
            weights,
            biases,
            head,
        };
        if !net.is_finite() {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite())
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    fn param_slot(&mut self, mut k: usize) -> &mut f64 {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if k < w.len() {
                return &mut w[k];
            }
            k -= w.len();
            if k < b.len() {
                return &mut b[k];
            }
            k -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// Reads parameter `k` in [`Gradients::flatten`] order.
    pub fn param(&self, mut k: usize) -> f64 {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            if k < w.len() {
                return w[k];
            }
            k -= w.len();
            if k < b.len() {
                return b[k];
            }
            k -= b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, k: usize, value: f64) {
        *self.param_slot(k) = value;
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::Shape(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.input_size()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite network input"));
        }
        Ok(())
    }

    /// Pre-activations and activations of every layer; `acts[0]` is the input.
    fn pass(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.weights.len();
        let mut acts = vec![input.to_vec()];
        let mut pre = Vec::with_capacity(layers);
        for l in 0..layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let a = &acts[l];
            let w = &self.weights[l];
            let z: Vec<f64> = (0..n_out)
                .map(|j| {
                    self.biases[l][j] + (0..n_in).map(|i| a[i] * w[i * n_out + j]).sum::<f64>()
                })
                .collect();
            let out = if l + 1 == layers && self.head == Head::Classifier {
                softmax(&z)
            } else {
                z.iter().map(|&v| sigmoid(v)).collect()
            };
            pre.push(z);
            acts.push(out);
        }
        (pre, acts)
    }

    /// Output activations: sigmoid units or a probability simplex.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.pass(input).1.pop().unwrap())
    }

    fn check_target(&self, target: &Target) -> Result<()> {
        match (self.head, target) {
            (Head::Regression, Target::Values(v)) if v.len() == self.output_size() => Ok(()),
            (Head::Classifier, Target::Class(c)) if *c < self.output_size() => Ok(()),
            _ => Err(Error::Shape(format!(
                "target {target:?} does not fit a {} head",
                self.head.name()
            ))),
        }
    }

    fn loss_from(&self, pre_out: &[f64], out: &[f64], target: &Target) -> f64 {
        match target {
            Target::Values(t) => {
                out.iter()
                    .zip(t)
                    .map(|(y, t)| (y - t) * (y - t))
                    .sum::<f64>()
                    / out.len() as f64
            }
            Target::Class(c) => log_sum_exp(pre_out) - pre_out[*c],
        }
    }

    /// Per-sample loss: mean squared error or cross-entropy.
    pub fn loss(&self, input: &[f64], target: &Target) -> Result<f64> {
        self.check_input(input)?;
        self.check_target(target)?;
        let (pre, acts) = self.pass(input);
        Ok(self.loss_from(pre.last().unwrap(), acts.last().unwrap(), target))
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn backprop(&self, input: &[f64], target: &Target) -> Result<(f64, Gradients)> {
        self.check_input(input)?;
        self.check_target(target)?;
        let (pre, acts) = self.pass(input);
        let layers = self.weights.len();
        let out = &acts[layers];
        let loss = self.loss_from(&pre[layers - 1], out, target);

        // dL/dz for the output layer
        let mut delta: Vec<f64> = match target {
            Target::Values(t) => {
                let m = out.len() as f64;
                out.iter()
                    .zip(t)
                    .map(|(y, t)| 2.0 * (y - t) / m * y * (1.0 - y))
                    .collect()
            }
            Target::Class(c) => out
                .iter()
                .enumerate()
                .map(|(j, p)| p - if j == *c { 1.0 } else { 0.0 })
                .collect(),
        };

        let mut gw = vec![Vec::new(); layers];
        let mut gb = vec![Vec::new(); layers];
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let a = &acts[l];
            gw[l] = (0..n_in * n_out)
                .map(|k| a[k / n_out] * delta[k % n_out])
                .collect();
            gb[l] = delta.clone();
            if l > 0 {
                let w = &self.weights[l];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|j| w[i * n_out + j] * delta[j]).sum();
                        back * a[i] * (1.0 - a[i])
                    })
                    .collect();
            }
        }
        Ok((
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        ))
    }

    /// Gradient-descent step `theta -= lr * grad`.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (p, g) in self.weights.iter_mut().zip(&grads.weights) {
            p.iter_mut()
                .zip(g)
                .for_each(|(p, g)| *p -= learning_rate * g);
        }
        for (p, g) in self.biases.iter_mut().zip(&grads.biases) {
            p.iter_mut()
                .zip(g)
                .for_each(|(p, g)| *p -= learning_rate * g);
        }
    }
}

/// Central-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// Largest relative deviation between `analytic` and central finite
/// differences of the loss, over every parameter. The denominator is
/// floored at `1e-6` so vanishing gradients compare absolutely.
pub fn gradient_check_against(
    net: &Network,
    input: &[f64],
    target: &Target,
    analytic: &Gradients,
) -> Result<f64> {
    let analytic = analytic.flatten();
    if analytic.len() != net.param_count() {
        return Err(Error::Shape("gradient does not match network".into()));
    }
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (k, a) in analytic.into_iter().enumerate() {
        let theta = net.param(k);
        probe.set_param(k, theta + FD_STEP);
        let up = probe.loss(input, target)?;
        probe.set_param(k, theta - FD_STEP);
        let down = probe.loss(input, target)?;
        probe.set_param(k, theta);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let scale = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}

/// [`gradient_check_against`] with the network's own backprop.
pub fn gradient_check(net: &Network, input: &[f64], target: &Target) -> Result<f64> {
    let (_, grads) = net.backprop(input, target)?;
    gradient_check_against(net, input, target, &grads)
}
