//! A small dense regression network for exercising quantization end to end.
//!
//! The network is a plain multilayer perceptron trained with minibatch SGD
//! on a synthetic two-input regression task.  It is deliberately tiny: the
//! point is not the model but having real trained weight tensors to feed
//! through quantization, compression, and the incremental scheduler — so
//! the trainer supports freezing individual weight tensors (their updates
//! are skipped while biases keep training), and the whole thing plugs into
//! the scheduler through [`ToyRetrainHook`].

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::inq::{RetrainHook, TensorId};
use crate::tensor::{Tensor, TensorSet};

/// Layer widths of the standard demo network: two inputs, five hidden
/// layers, one output.  Seven weight tensors in total.
pub const DEFAULT_WIDTHS: &[usize] = &[2, 16, 32, 32, 32, 16, 8, 1];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToyError {
    #[error("need at least an input and an output width")]
    TooFewLayers,
    #[error("layer widths must be positive")]
    ZeroWidth,
    #[error("output layer must have width 1, got {0}")]
    OutputNotScalar(usize),
    #[error("input length {got} does not match network input width {expected}")]
    InputMismatch { got: usize, expected: usize },
    #[error("weight set is missing tensor {0:?}")]
    MissingTensor(String),
    #[error("tensor {name:?} has {got} values, expected {expected}")]
    SizeMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("training diverged at step {step}")]
    Diverged { step: usize },
}

// ---------------------------------------------------------------------------
// Synthetic task
// ---------------------------------------------------------------------------

/// The regression target: a bumpy but smooth surface over `[-1, 1]^2`.
pub fn target_function(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() + x[1] * x[1]
}

/// Train/validation samples drawn uniformly from `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub train_inputs: Vec<Vec<f64>>,
    pub train_targets: Vec<f64>,
    pub val_inputs: Vec<Vec<f64>>,
    pub val_targets: Vec<f64>,
}

impl SyntheticTask {
    pub fn generate(seed: u64, n_train: usize, n_val: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| {
            let mut inputs = Vec::with_capacity(n);
            let mut targets = Vec::with_capacity(n);
            for _ in 0..n {
                let x = vec![rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
                targets.push(target_function(&x));
                inputs.push(x);
            }
            (inputs, targets)
        };
        let (train_inputs, train_targets) = draw(n_train);
        let (val_inputs, val_targets) = draw(n_val);
        Self {
            train_inputs,
            train_targets,
            val_inputs,
            val_targets,
        }
    }

    /// Validation-target variance: the loss of always predicting the mean.
    /// Training is only interesting relative to this.
    pub fn baseline_loss(&self) -> f64 {
        let n = self.val_targets.len() as f64;
        let mean = self.val_targets.iter().sum::<f64>() / n;
        self.val_targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n
    }
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

/// Multilayer perceptron with ReLU hidden layers and an identity output.
///
/// Weights are stored per layer in row-major `[out, in]` order; layer `l`
/// maps width `widths[l]` to `widths[l + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyNetwork {
    widths: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl ToyNetwork {
    /// Builds a network with weights drawn from `U[-r, r]`, `r = 1/sqrt(fan_in)`,
    /// and zero biases.
    pub fn new(widths: &[usize], seed: u64) -> Result<Self, ToyError> {
        if widths.len() < 2 {
            return Err(ToyError::TooFewLayers);
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(ToyError::ZeroWidth);
        }
        let last = *widths.last().expect("len checked");
        if last != 1 {
            return Err(ToyError::OutputNotScalar(last));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..widths.len() - 1 {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let r = 1.0 / (fan_in as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.gen_range(-r..=r)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn weight_name(layer: usize) -> String {
        format!("layer{layer}.weight")
    }

    pub fn bias_name(layer: usize) -> String {
        format!("layer{layer}.bias")
    }

    /// Forward pass returning every activation (index 0 is the input) and
    /// every pre-activation, which backpropagation needs.
    fn forward_trace(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), ToyError> {
        if x.len() != self.widths[0] {
            return Err(ToyError::InputMismatch {
                got: x.len(),
                expected: self.widths[0],
            });
        }
        let layers = self.layer_count();
        let mut activations = Vec::with_capacity(layers + 1);
        let mut preacts = Vec::with_capacity(layers);
        activations.push(x.to_vec());
        for l in 0..layers {
            let fan_in = self.widths[l];
            let prev = &activations[l];
            let w = &self.weights[l];
            let mut z = self.biases[l].clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                *zo += row.iter().zip(prev).map(|(wi, ai)| wi * ai).sum::<f64>();
            }
            let a = if l < layers - 1 {
                z.iter().map(|&v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            preacts.push(z);
            activations.push(a);
        }
        Ok((activations, preacts))
    }

    /// Scalar prediction for one input.
    pub fn predict(&self, x: &[f64]) -> Result<f64, ToyError> {
        let (activations, _) = self.forward_trace(x)?;
        Ok(activations.last().expect("output layer")[0])
    }

    /// Mean squared error over a sample set.
    pub fn mean_squared_loss(&self, inputs: &[Vec<f64>], targets: &[f64]) -> f64 {
        let n = inputs.len() as f64;
        inputs
            .iter()
            .zip(targets)
            .map(|(x, &y)| {
                let p = self.predict(x).expect("task inputs match network");
                (p - y).powi(2)
            })
            .sum::<f64>()
            / n
    }

    /// Weight tensors as a named set (`layer{l}.weight`, shape `[out, in]`).
    pub fn weight_set(&self) -> TensorSet {
        let tensors = (0..self.layer_count())
            .map(|l| {
                Tensor::new(
                    Self::weight_name(l),
                    vec![self.widths[l + 1], self.widths[l]],
                    self.weights[l].clone(),
                )
                .expect("weight shape consistent")
            })
            .collect();
        TensorSet::from_tensors(tensors).expect("unique layer names")
    }

    /// Bias tensors as a named set (`layer{l}.bias`, shape `[out]`).
    pub fn bias_set(&self) -> TensorSet {
        let tensors = (0..self.layer_count())
            .map(|l| {
                Tensor::new(
                    Self::bias_name(l),
                    vec![self.widths[l + 1]],
                    self.biases[l].clone(),
                )
                .expect("bias shape consistent")
            })
            .collect();
        TensorSet::from_tensors(tensors).expect("unique layer names")
    }

    /// Copies weight values in from a named set produced by [`Self::weight_set`].
    pub fn set_weights(&mut self, set: &TensorSet) -> Result<(), ToyError> {
        for l in 0..self.layer_count() {
            let name = Self::weight_name(l);
            let tensor = set
                .get(&name)
                .ok_or_else(|| ToyError::MissingTensor(name.clone()))?;
            if tensor.values.len() != self.weights[l].len() {
                return Err(ToyError::SizeMismatch {
                    name,
                    got: tensor.values.len(),
                    expected: self.weights[l].len(),
                });
            }
            self.weights[l].copy_from_slice(&tensor.values);
        }
        Ok(())
    }

    /// Copies bias values in from a named set produced by [`Self::bias_set`].
    pub fn set_biases(&mut self, set: &TensorSet) -> Result<(), ToyError> {
        for l in 0..self.layer_count() {
            let name = Self::bias_name(l);
            let tensor = set
                .get(&name)
                .ok_or_else(|| ToyError::MissingTensor(name.clone()))?;
            if tensor.values.len() != self.biases[l].len() {
                return Err(ToyError::SizeMismatch {
                    name,
                    got: tensor.values.len(),
                    expected: self.biases[l].len(),
                });
            }
            self.biases[l].copy_from_slice(&tensor.values);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Mean-squared-error loss and its gradients over one batch.
fn batch_gradients(
    net: &ToyNetwork,
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<(f64, Gradients), ToyError> {
    let layers = net.layer_count();
    let mut grads = Gradients {
        weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
        biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
    };
    let n = inputs.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in inputs.iter().zip(targets) {
        let (activations, preacts) = net.forward_trace(x)?;
        let err = activations[layers][0] - y;
        loss += err * err / n;

        // dL/dz at the identity output, then walk the layers backwards.
        let mut delta = vec![2.0 * err / n];
        for l in (0..layers).rev() {
            let fan_in = net.widths[l];
            let prev = &activations[l];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                for (g, &a) in row.iter_mut().zip(prev) {
                    *g += d * a;
                }
                grads.biases[l][o] += d;
            }
            if l > 0 {
                let w = &net.weights[l];
                let mut next = vec![0.0; fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    for (nx, &wi) in next.iter_mut().zip(row) {
                        *nx += wi * d;
                    }
                }
                // ReLU gate of the previous hidden layer.
                for (nx, &z) in next.iter_mut().zip(&preacts[l - 1]) {
                    if z <= 0.0 {
                        *nx = 0.0;
                    }
                }
                delta = next;
            }
        }
    }
    Ok((loss, grads))
}

/// Runs `steps` of minibatch SGD.  Weight tensors named in `frozen` receive
/// no updates; biases always train.
fn sgd_steps(
    net: &mut ToyNetwork,
    task: &SyntheticTask,
    rng: &mut ChaCha8Rng,
    lr: f64,
    batch: usize,
    steps: usize,
    frozen: &BTreeSet<TensorId>,
) -> Result<(), ToyError> {
    let n = task.train_inputs.len();
    let mut inputs = Vec::with_capacity(batch);
    let mut targets = Vec::with_capacity(batch);
    for step in 0..steps {
        inputs.clear();
        targets.clear();
        for _ in 0..batch {
            let i = rng.gen_range(0..n);
            inputs.push(task.train_inputs[i].clone());
            targets.push(task.train_targets[i]);
        }
        let (loss, grads) = batch_gradients(net, &inputs, &targets)?;
        if !loss.is_finite() {
            return Err(ToyError::Diverged { step });
        }
        for l in 0..net.layer_count() {
            if !frozen.contains(&ToyNetwork::weight_name(l)) {
                for (w, g) in net.weights[l].iter_mut().zip(&grads.weights[l]) {
                    *w -= lr * g;
                }
            }
            for (b, g) in net.biases[l].iter_mut().zip(&grads.biases[l]) {
                *b -= lr * g;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            lr: 0.05,
            batch: 16,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps_run: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Trains the network on the task; returns final train/validation losses.
pub fn train(
    net: &mut ToyNetwork,
    task: &SyntheticTask,
    cfg: &TrainConfig,
    frozen: &BTreeSet<TensorId>,
) -> Result<TrainReport, ToyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sgd_steps(net, task, &mut rng, cfg.lr, cfg.batch, cfg.steps, frozen)?;
    Ok(TrainReport {
        steps_run: cfg.steps,
        train_loss: net.mean_squared_loss(&task.train_inputs, &task.train_targets),
        val_loss: net.mean_squared_loss(&task.val_inputs, &task.val_targets),
    })
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
}

/// Central-difference check of the analytic gradients on a fixed batch.
/// `samples` parameters (weights and biases) are drawn at random and each
/// relative error is folded into the maximum.
pub fn gradient_check(
    net: &ToyNetwork,
    inputs: &[Vec<f64>],
    targets: &[f64],
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, ToyError> {
    const H: f64 = 1e-5;
    let (_, analytic) = batch_gradients(net, inputs, targets)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_err: f64 = 0.0;
    for _ in 0..samples {
        let l = rng.gen_range(0..net.layer_count());
        let check_bias = rng.gen_bool(0.25);
        let (slot, a) = if check_bias {
            let i = rng.gen_range(0..net.biases[l].len());
            (i, analytic.biases[l][i])
        } else {
            let i = rng.gen_range(0..net.weights[l].len());
            (i, analytic.weights[l][i])
        };
        let probe = |delta: f64| -> Result<f64, ToyError> {
            let mut shifted = net.clone();
            if check_bias {
                shifted.biases[l][slot] += delta;
            } else {
                shifted.weights[l][slot] += delta;
            }
            let (loss, _) = batch_gradients(&shifted, inputs, targets)?;
            Ok(loss)
        };
        let numeric = (probe(H)? - probe(-H)?) / (2.0 * H);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        max_rel_err = max_rel_err.max(rel);
    }
    Ok(GradCheckReport {
        checked: samples,
        max_rel_err,
    })
}

// ---------------------------------------------------------------------------
// Scheduler hook
// ---------------------------------------------------------------------------

/// Adapter that lets the incremental quantization scheduler retrain this
/// network.  The hook owns the network, task, and a persistent RNG; weight
/// tensors are synced in from the scheduler's set before every call and the
/// (possibly retrained) values synced back out.  Biases live only inside
/// the hook and keep training across calls.
pub struct ToyRetrainHook {
    net: ToyNetwork,
    task: SyntheticTask,
    rng: ChaCha8Rng,
    pub lr: f64,
    pub batch: usize,
    /// Set if a retrain call diverged; `evaluate` then reports infinity.
    pub diverged: bool,
}

impl ToyRetrainHook {
    pub fn new(net: ToyNetwork, task: SyntheticTask, seed: u64, lr: f64, batch: usize) -> Self {
        Self {
            net,
            task,
            rng: ChaCha8Rng::seed_from_u64(seed),
            lr,
            batch,
            diverged: false,
        }
    }

    pub fn network(&self) -> &ToyNetwork {
        &self.net
    }

    pub fn task(&self) -> &SyntheticTask {
        &self.task
    }

    pub fn into_network(self) -> ToyNetwork {
        self.net
    }
}

impl RetrainHook for ToyRetrainHook {
    fn retrain(&mut self, weights: &mut TensorSet, frozen: &BTreeSet<TensorId>, steps: usize) {
        if self.net.set_weights(weights).is_err() {
            self.diverged = true;
            return;
        }
        if sgd_steps(
            &mut self.net,
            &self.task,
            &mut self.rng,
            self.lr,
            self.batch,
            steps,
            frozen,
        )
        .is_err()
        {
            self.diverged = true;
            return;
        }
        // Frozen tensors were synced in and never updated, so writing the
        // whole set back keeps them bit-identical.
        *weights = self.net.weight_set();
    }

    fn evaluate(&mut self, weights: &TensorSet) -> f64 {
        if self.diverged || self.net.set_weights(weights).is_err() {
            return f64::INFINITY;
        }
        self.net
            .mean_squared_loss(&self.task.val_inputs, &self.task.val_targets)
    }
}

/// Convenience pairing of a hook with the weight set the scheduler should
/// drive: quantize the returned set, and the hook keeps the network in sync.
pub fn retrain_hook_for(
    net: ToyNetwork,
    task: SyntheticTask,
    seed: u64,
    lr: f64,
    batch: usize,
) -> (ToyRetrainHook, TensorSet) {
    let weights = net.weight_set();
    (ToyRetrainHook::new(net, task, seed, lr, batch), weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates_widths() {
        assert!(matches!(ToyNetwork::new(&[2], 0), Err(ToyError::TooFewLayers)));
        assert!(matches!(ToyNetwork::new(&[2, 0, 1], 0), Err(ToyError::ZeroWidth)));
        assert!(matches!(
            ToyNetwork::new(&[2, 4, 3], 0),
            Err(ToyError::OutputNotScalar(3))
        ));
        assert!(ToyNetwork::new(DEFAULT_WIDTHS, 0).is_ok());
    }

    #[test]
    fn weight_set_names_and_shapes() {
        let net = ToyNetwork::new(DEFAULT_WIDTHS, 1).unwrap();
        let set = net.weight_set();
        assert_eq!(set.len(), 7);
        let first = set.get("layer0.weight").unwrap();
        assert_eq!(first.shape, vec![16, 2]);
        let last = set.get("layer6.weight").unwrap();
        assert_eq!(last.shape, vec![1, 8]);
        let biases = net.bias_set();
        assert_eq!(biases.get("layer0.bias").unwrap().shape, vec![16]);
    }

    #[test]
    fn init_respects_fan_in_range_and_seed() {
        let net = ToyNetwork::new(&[2, 16, 1], 42).unwrap();
        let r0 = 1.0 / (2.0_f64).sqrt();
        assert!(net.weights[0].iter().all(|w| w.abs() <= r0));
        let r1 = 1.0 / (16.0_f64).sqrt();
        assert!(net.weights[1].iter().all(|w| w.abs() <= r1));
        assert!(net.biases.iter().flatten().all(|&b| b == 0.0));
        assert_eq!(net, ToyNetwork::new(&[2, 16, 1], 42).unwrap());
        assert_ne!(net, ToyNetwork::new(&[2, 16, 1], 43).unwrap());
    }

    #[test]
    fn forward_matches_hand_computation() {
        // widths [2, 2, 1]: hidden relu, output identity.
        let mut net = ToyNetwork::new(&[2, 2, 1], 0).unwrap();
        net.weights[0] = vec![1.0, -1.0, 0.5, 0.5]; // rows [1,-1] and [0.5,0.5]
        net.biases[0] = vec![0.0, -0.2];
        net.weights[1] = vec![2.0, -3.0];
        net.biases[1] = vec![0.25];
        // x = [0.4, 0.1]: z0 = [0.3, 0.05], relu -> [0.3, 0.05]? second is
        // 0.5*0.4+0.5*0.1-0.2 = 0.05 -> relu 0.05; out = 2*0.3 - 3*0.05 + 0.25.
        let p = net.predict(&[0.4, 0.1]).unwrap();
        assert!((p - (2.0 * 0.3 - 3.0 * 0.05 + 0.25)).abs() < 1e-12);
        // x = [-0.4, 0.1]: z0 = [-0.5, -0.35] -> relu zeros -> out = 0.25.
        let p = net.predict(&[-0.4, 0.1]).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        assert!(matches!(
            net.predict(&[1.0]),
            Err(ToyError::InputMismatch { got: 1, expected: 2 })
        ));
    }

    #[test]
    fn baseline_loss_matches_target_variance() {
        // Analytic variance of sin(3x) + y^2 over the square is about 0.612.
        let task = SyntheticTask::generate(3, 16, 8192);
        let base = task.baseline_loss();
        assert!((base - 0.612).abs() < 0.03, "baseline {base}");
    }

    #[test]
    fn gradients_agree_with_central_differences() {
        let net = ToyNetwork::new(&[2, 8, 4, 1], 5).unwrap();
        let task = SyntheticTask::generate(6, 32, 8);
        let report = gradient_check(
            &net,
            &task.train_inputs[..8].to_vec(),
            &task.train_targets[..8],
            60,
            7,
        )
        .unwrap();
        assert!(
            report.max_rel_err < 1e-4,
            "max rel err {}",
            report.max_rel_err
        );
    }

    #[test]
    fn training_beats_the_baseline_quickly() {
        let task = SyntheticTask::generate(21, 2048, 512);
        let mut net = ToyNetwork::new(&[2, 16, 16, 1], 22).unwrap();
        let cfg = TrainConfig {
            steps: 800,
            lr: 0.05,
            batch: 16,
            seed: 23,
        };
        let report = train(&mut net, &task, &cfg, &BTreeSet::new()).unwrap();
        assert!(
            report.val_loss < 0.5 * task.baseline_loss(),
            "val {} vs baseline {}",
            report.val_loss,
            task.baseline_loss()
        );
    }

    #[test]
    fn frozen_weights_stay_put_while_biases_train() {
        let task = SyntheticTask::generate(31, 256, 64);
        let mut net = ToyNetwork::new(&[2, 8, 1], 32).unwrap();
        let frozen: BTreeSet<String> = [ToyNetwork::weight_name(0)].into_iter().collect();
        let w0_before = net.weights[0].clone();
        let w1_before = net.weights[1].clone();
        let b0_before = net.biases[0].clone();
        let cfg = TrainConfig {
            steps: 50,
            lr: 0.05,
            batch: 8,
            seed: 33,
        };
        train(&mut net, &task, &cfg, &frozen).unwrap();
        assert_eq!(net.weights[0], w0_before, "frozen tensor moved");
        assert_ne!(net.weights[1], w1_before, "unfrozen tensor never moved");
        assert_ne!(net.biases[0], b0_before, "biases should keep training");
    }

    #[test]
    fn absurd_learning_rate_reports_divergence() {
        let task = SyntheticTask::generate(41, 256, 64);
        let mut net = ToyNetwork::new(&[2, 16, 1], 42).unwrap();
        let cfg = TrainConfig {
            steps: 2000,
            lr: 1e12,
            batch: 8,
            seed: 43,
        };
        assert!(matches!(
            train(&mut net, &task, &cfg, &BTreeSet::new()),
            Err(ToyError::Diverged { .. })
        ));
    }

    #[test]
    fn weight_roundtrip_is_exact() {
        let net = ToyNetwork::new(DEFAULT_WIDTHS, 50).unwrap();
        let set = net.weight_set();
        let mut other = ToyNetwork::new(DEFAULT_WIDTHS, 51).unwrap();
        other.set_weights(&set).unwrap();
        assert_eq!(other.weights, net.weights);
        let biases = net.bias_set();
        other.set_biases(&biases).unwrap();
        assert_eq!(other.biases, net.biases);

        let empty = TensorSet::from_tensors(vec![]).unwrap();
        assert!(matches!(
            other.set_weights(&empty),
            Err(ToyError::MissingTensor(_))
        ));
    }

    #[test]
    fn hook_retrains_without_touching_frozen() {
        let task = SyntheticTask::generate(61, 512, 128);
        let net = ToyNetwork::new(&[2, 8, 4, 1], 62).unwrap();
        let (mut hook, mut weights) = retrain_hook_for(net, task, 63, 0.05, 8);

        let before = hook.evaluate(&weights);
        assert!(before.is_finite());

        let frozen: BTreeSet<String> = [ToyNetwork::weight_name(0)].into_iter().collect();
        let frozen_values = weights.get("layer0.weight").unwrap().values.clone();
        hook.retrain(&mut weights, &frozen, 40);
        assert_eq!(
            weights.get("layer0.weight").unwrap().values,
            frozen_values,
            "hook must not move frozen tensors"
        );
        let after = hook.evaluate(&weights);
        assert!(after.is_finite());
        assert!(!hook.diverged);
    }
}
