//! A small deterministic classifier trained on weakly supervised groups.
//!
//! Every minibatch step takes EM targets from the live model, treats them as
//! constants, and follows the gradient of `L_U + L_S` back into the
//! parameters. Per-group gradients may be computed in parallel; they are
//! always reduced in group order so results are bitwise reproducible.

use std::str::FromStr;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{rng_for, LabeledData, WeakDataset};
use crate::error::{Error, Result};
use crate::losses::{CompiledSpec, LossWeights};
use crate::supervision::GroupSpec;
use crate::table::{log_softmax_rows, sigmoid, Table};

/// Initial weights are uniform in `±INIT_SCALE / sqrt(fan_in)`.
pub const INIT_SCALE: f64 = 0.1;

/// Largest class count for which permutation matching is attempted.
pub const MAX_PERMUTE_CLASSES: usize = 8;

/// How predicted classes are aligned with true classes at evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matching {
    None,
    /// Best accuracy over all relabelings of the predicted classes.
    Permute,
}

impl FromStr for Matching {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Matching::None),
            "permute" => Ok(Matching::Permute),
            other => Err(Error::InvalidParams(format!("unknown matching {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Linear,
    /// One `tanh` hidden layer.
    Mlp {
        hidden: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Softmax,
    /// Independent per-class sigmoids, for one-vs-rest annotations.
    Sigmoid,
}

impl OutputMode {
    /// Sigmoid outputs if any group carries a one-vs-rest annotation.
    pub fn for_dataset(dataset: &WeakDataset) -> Self {
        if dataset
            .groups
            .iter()
            .any(|g| matches!(g.spec, GroupSpec::MultiClass(_)))
        {
            OutputMode::Sigmoid
        } else {
            OutputMode::Softmax
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub architecture: Architecture,
    pub output: OutputMode,
    pub input_dim: usize,
    pub num_classes: usize,
    /// Hidden weights and biases (MLP only), then output weights and biases.
    /// Weight matrices are row-major with one row per unit.
    pub params: Vec<f64>,
}

/// Offsets of each parameter block.
#[derive(Debug, Clone, Copy)]
struct Layout {
    d: usize,
    h: Option<usize>,
    k: usize,
}

impl Layout {
    fn out_in(&self) -> usize {
        self.h.unwrap_or(self.d)
    }

    fn out_weights(&self) -> usize {
        self.h.map_or(0, |h| h * self.d + h)
    }

    fn out_bias(&self) -> usize {
        self.out_weights() + self.k * self.out_in()
    }

    fn total(&self) -> usize {
        self.out_bias() + self.k
    }
}

impl Model {
    /// Weights uniform in `±INIT_SCALE/sqrt(fan_in)`, biases zero.
    pub fn new(
        architecture: Architecture,
        output: OutputMode,
        input_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || num_classes < 2 {
            return Err(Error::InvalidParams(format!(
                "need input dimension >= 1 and >= 2 classes, got {input_dim} and {num_classes}"
            )));
        }
        if architecture == (Architecture::Mlp { hidden: 0 }) {
            return Err(Error::InvalidParams(
                "hidden width must be at least 1".into(),
            ));
        }
        let mut model = Model {
            architecture,
            output,
            input_dim,
            num_classes,
            params: Vec::new(),
        };
        let layout = model.layout();
        let mut rng = rng_for(seed, 2);
        let mut params = vec![0.0; layout.total()];
        let mut fill = |block: &mut [f64], fan_in: usize| {
            let bound = INIT_SCALE / (fan_in as f64).sqrt();
            for w in block {
                *w = rng.random_range(-bound..bound);
            }
        };
        if let Some(h) = layout.h {
            fill(&mut params[..h * layout.d], layout.d);
        }
        let (start, end) = (layout.out_weights(), layout.out_bias());
        fill(&mut params[start..end], layout.out_in());
        model.params = params;
        Ok(model)
    }

    fn layout(&self) -> Layout {
        Layout {
            d: self.input_dim,
            h: match self.architecture {
                Architecture::Linear => None,
                Architecture::Mlp { hidden } => Some(hidden),
            },
            k: self.num_classes,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn check_dims(&self, instances: &[Vec<f64>]) -> Result<()> {
        match instances.iter().find(|x| x.len() != self.input_dim) {
            Some(x) => Err(Error::shape(
                format!("{} features", self.input_dim),
                format!("{}", x.len()),
            )),
            None => Ok(()),
        }
    }

    /// Hidden activations (empty for linear models) and raw outputs for one
    /// instance.
    fn forward_one(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let layout = self.layout();
        let p = &self.params;
        let hidden: Vec<f64> = match layout.h {
            None => Vec::new(),
            Some(h) => (0..h)
                .map(|u| {
                    let w = &p[u * layout.d..(u + 1) * layout.d];
                    let pre = p[h * layout.d + u] + dot(w, x);
                    pre.tanh()
                })
                .collect(),
        };
        let input = if layout.h.is_some() { &hidden[..] } else { x };
        let n = layout.out_in();
        let (wo, bo) = (layout.out_weights(), layout.out_bias());
        let out = (0..layout.k)
            .map(|c| p[bo + c] + dot(&p[wo + c * n..wo + (c + 1) * n], input))
            .collect();
        (hidden, out)
    }

    /// Raw outputs: softmax logits or per-class sigmoid scores.
    pub fn outputs(&self, instances: &[Vec<f64>]) -> Result<Table> {
        self.check_dims(instances)?;
        let mut data = Vec::with_capacity(instances.len() * self.num_classes);
        for x in instances {
            data.extend(self.forward_one(x).1);
        }
        Table::from_vec(instances.len(), self.num_classes, data)
    }

    /// Class probabilities: softmax rows or independent sigmoids.
    pub fn predict(&self, instances: &[Vec<f64>]) -> Result<Table> {
        let outputs = self.outputs(instances)?;
        Ok(match self.output {
            OutputMode::Softmax => log_softmax_rows(&outputs).exp(),
            OutputMode::Sigmoid => outputs.map(sigmoid),
        })
    }

    /// Most probable class per instance; ties go to the lower index.
    pub fn classify(&self, instances: &[Vec<f64>]) -> Result<Vec<usize>> {
        let outputs = self.outputs(instances)?;
        Ok(outputs
            .iter_rows()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &v)| {
                        if v > best.1 {
                            (c, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect())
    }

    /// Accumulates the parameter gradient for `instances` given the gradient
    /// with respect to their raw outputs.
    fn backward(&self, instances: &[Vec<f64>], grad_out: &Table, grad: &mut [f64]) {
        let layout = self.layout();
        let n = layout.out_in();
        let (wo, bo) = (layout.out_weights(), layout.out_bias());
        for (j, x) in instances.iter().enumerate() {
            let (hidden, _) = self.forward_one(x);
            let input = if layout.h.is_some() {
                &hidden[..]
            } else {
                &x[..]
            };
            let g = grad_out.row(j);
            for (c, &gc) in g.iter().enumerate() {
                grad[bo + c] += gc;
                for (w, &v) in grad[wo + c * n..wo + (c + 1) * n].iter_mut().zip(input) {
                    *w += gc * v;
                }
            }
            if let Some(h) = layout.h {
                for u in 0..h {
                    let back: f64 = (0..layout.k)
                        .map(|c| g[c] * self.params[wo + c * n + u])
                        .sum();
                    let pre_grad = back * (1.0 - hidden[u] * hidden[u]);
                    grad[h * layout.d + u] += pre_grad;
                    for (w, &v) in grad[u * layout.d..(u + 1) * layout.d].iter_mut().zip(x) {
                        *w += pre_grad * v;
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Momentum {
        beta: f64,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn momentum() -> Self {
        Optimizer::Momentum { beta: 0.9 }
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "momentum" => Ok(Optimizer::momentum()),
            "adam" => Ok(Optimizer::adam()),
            other => Err(Error::InvalidParams(format!("unknown optimizer {other:?}"))),
        }
    }
}

struct OptimizerState {
    first: Vec<f64>,
    second: Vec<f64>,
    step: i32,
}

impl OptimizerState {
    fn new(n: usize) -> Self {
        OptimizerState {
            first: vec![0.0; n],
            second: vec![0.0; n],
            step: 0,
        }
    }

    fn apply(&mut self, optimizer: Optimizer, lr: f64, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        match optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Momentum { beta } => {
                for ((p, g), v) in params.iter_mut().zip(grad).zip(&mut self.first) {
                    *v = beta * *v + g;
                    *p -= lr * *v;
                }
            }
            Optimizer::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                for (i, (p, g)) in params.iter_mut().zip(grad).enumerate() {
                    let m = &mut self.first[i];
                    let v = &mut self.second[i];
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub epochs: usize,
    /// Groups per minibatch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub loss_weights: LossWeights,
    /// Evaluate test accuracy every this many epochs (and after the last).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::Linear,
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.01,
            optimizer: Optimizer::adam(),
            seed: 0,
            loss_weights: LossWeights::default(),
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::InvalidParams(
                "batch size and evaluation cadence must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        let LossWeights {
            unsupervised,
            supervised,
        } = self.loss_weights;
        if !(unsupervised >= 0.0 && supervised >= 0.0) {
            return Err(Error::InvalidParams(
                "loss coefficients must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Full-batch losses (mean per group) and test accuracy after an epoch.
/// Epoch 0 is the initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_u: f64,
    pub l_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.epochs.iter().rev().find_map(|e| e.test_accuracy)
    }
}

/// Labeled evaluation data and how to align classes.
#[derive(Debug, Clone, Copy)]
pub struct TestSet<'a> {
    pub data: &'a LabeledData,
    pub matching: Matching,
}

struct GroupResult {
    l_u: f64,
    l_s: f64,
    grad: Vec<f64>,
}

fn group_result(
    model: &Model,
    instances: &[Vec<f64>],
    spec: &CompiledSpec,
    weights: LossWeights,
    with_grad: bool,
) -> Result<GroupResult> {
    let outputs = model.outputs(instances)?;
    let (loss, grad_out) = spec.loss_and_grad(&outputs, weights)?;
    let mut grad = Vec::new();
    if with_grad {
        grad = vec![0.0; model.num_params()];
        model.backward(instances, &grad_out, &mut grad);
    }
    Ok(GroupResult {
        l_u: loss.l_u,
        l_s: loss.l_s,
        grad,
    })
}

fn batch_results(
    model: &Model,
    dataset: &WeakDataset,
    compiled: &[CompiledSpec],
    indices: &[usize],
    weights: LossWeights,
    with_grad: bool,
) -> Result<Vec<GroupResult>> {
    indices
        .par_iter()
        .map(|&g| {
            group_result(
                model,
                &dataset.groups[g].instances,
                &compiled[g],
                weights,
                with_grad,
            )
            .map_err(|e| e.in_group(g))
        })
        .collect()
}

/// Compiles every group once.
pub fn compile_groups(dataset: &WeakDataset) -> Result<Vec<CompiledSpec>> {
    dataset
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| CompiledSpec::new(&g.spec, dataset.num_classes).map_err(|e| e.in_group(i)))
        .collect()
}

fn snapshot(
    model: &Model,
    dataset: &WeakDataset,
    compiled: &[CompiledSpec],
    config: &TrainConfig,
    epoch: usize,
    test: Option<TestSet<'_>>,
) -> Result<EpochRecord> {
    let all: Vec<usize> = (0..dataset.groups.len()).collect();
    let results = batch_results(model, dataset, compiled, &all, config.loss_weights, false)?;
    let n = results.len().max(1) as f64;
    let (mut l_u, mut l_s) = (0.0, 0.0);
    for r in &results {
        l_u += r.l_u;
        l_s += r.l_s;
    }
    let due = epoch.is_multiple_of(config.eval_every) || epoch == config.epochs;
    let test_accuracy = match test {
        Some(t) if due => Some(evaluate(model, t.data, t.matching)?),
        _ => None,
    };
    Ok(EpochRecord {
        epoch,
        l_u: l_u / n,
        l_s: l_s / n,
        test_accuracy,
    })
}

/// Trains a fresh model on `dataset`. Errors from a group carry its index.
pub fn train(
    dataset: &WeakDataset,
    config: &TrainConfig,
    test: Option<TestSet<'_>>,
) -> Result<(Model, TrainingLog)> {
    config.validate()?;
    dataset.validate()?;
    if dataset.groups.is_empty() {
        return Err(Error::InvalidParams("dataset has no groups".into()));
    }
    let compiled = compile_groups(dataset)?;
    let mut model = Model::new(
        config.architecture,
        OutputMode::for_dataset(dataset),
        dataset.feature_dim,
        dataset.num_classes,
        config.seed,
    )?;
    let mut log = TrainingLog::default();
    log.epochs
        .push(snapshot(&model, dataset, &compiled, config, 0, test)?);
    let mut state = OptimizerState::new(model.num_params());
    let mut order: Vec<usize> = (0..dataset.groups.len()).collect();
    let mut rng = rng_for(config.seed, 3);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let results =
                batch_results(&model, dataset, &compiled, batch, config.loss_weights, true)?;
            let mut grad = vec![0.0; model.num_params()];
            for r in &results {
                for (acc, g) in grad.iter_mut().zip(&r.grad) {
                    *acc += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            state.apply(
                config.optimizer,
                config.learning_rate,
                &mut model.params,
                &grad,
            );
        }
        log.epochs
            .push(snapshot(&model, dataset, &compiled, config, epoch, test)?);
    }
    Ok((model, log))
}

/// Accuracy of predicted against true classes, optionally maximized over
/// relabelings of the predictions.
pub fn accuracy(
    predicted: &[usize],
    truth: &[usize],
    num_classes: usize,
    matching: Matching,
) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::shape(
            format!("{} predictions", truth.len()),
            format!("{}", predicted.len()),
        ));
    }
    if truth.is_empty() {
        return Err(Error::InvalidParams("empty evaluation set".into()));
    }
    if let Some(&y) = predicted.iter().chain(truth).find(|&&y| y >= num_classes) {
        return Err(Error::SymbolOutOfRange {
            symbol: y,
            num_symbols: num_classes,
        });
    }
    let mut counts = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let hits = match matching {
        Matching::None => (0..num_classes).map(|c| counts[c][c]).sum(),
        Matching::Permute => {
            if num_classes > MAX_PERMUTE_CLASSES {
                return Err(Error::InvalidParams(format!(
                    "permutation matching supports at most {MAX_PERMUTE_CLASSES} classes"
                )));
            }
            (0..num_classes)
                .permutations(num_classes)
                .map(|perm| (0..num_classes).map(|p| counts[p][perm[p]]).sum::<usize>())
                .max()
                .unwrap_or(0)
        }
    };
    Ok(hits as f64 / truth.len() as f64)
}

pub fn evaluate(model: &Model, data: &LabeledData, matching: Matching) -> Result<f64> {
    if data.num_classes != model.num_classes {
        return Err(Error::shape(
            format!("{} classes", model.num_classes),
            format!("{}", data.num_classes),
        ));
    }
    let predicted = model.classify(&data.features)?;
    accuracy(&predicted, &data.labels, model.num_classes, matching)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_gaussians, weaken, Gaussians, Setting, WeakenParams};

    fn gaussian_data(n: usize, seed: u64) -> LabeledData {
        gen_gaussians(n, &Gaussians::standard(2, 1.0).unwrap(), seed).unwrap()
    }

    #[test]
    fn zero_model_is_uniform() {
        let mut m = Model::new(Architecture::Linear, OutputMode::Softmax, 2, 3, 0).unwrap();
        m.params.iter_mut().for_each(|p| *p = 0.0);
        let p = m.predict(&[vec![1.0, -2.0], vec![0.3, 0.0]]).unwrap();
        for v in p.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(m.predict(&[vec![1.0]]).unwrap_err().code(), "ShapeMismatch");
    }

    #[test]
    fn margin_drives_probability_up() {
        let mut m = Model::new(Architecture::Linear, OutputMode::Softmax, 1, 2, 0).unwrap();
        m.params = vec![-1.0, 1.0, 0.0, 0.0];
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let p = m.predict(&xs).unwrap();
        for j in 1..8 {
            assert!(p.get(j, 1) >= p.get(j - 1, 1));
        }
        assert!(p.get(7, 1) > 0.999);
    }

    #[test]
    fn init_is_seeded() {
        let arch = Architecture::Mlp { hidden: 5 };
        let a = Model::new(arch, OutputMode::Softmax, 2, 2, 7).unwrap();
        let b = Model::new(arch, OutputMode::Softmax, 2, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_params(), 5 * 2 + 5 + 2 * 5 + 2);
        let x = [vec![0.4, -1.2]];
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        let bound = INIT_SCALE / 2f64.sqrt();
        assert!(a.params[..10].iter().all(|w| w.abs() < bound));
        assert!(a.params[10..15].iter().all(|&b| b == 0.0));
    }

    fn fd_check(arch: Architecture, output: OutputMode) {
        let model = Model::new(arch, output, 3, 3, 1).unwrap();
        let xs = vec![vec![0.5, -1.0, 2.0], vec![-0.3, 0.8, 0.1]];
        let g_out = Table::from_rows(&[[0.2, -0.5, 0.3], [1.0, 0.1, -0.4]]).unwrap();
        let objective = |m: &Model| -> f64 {
            let out = m.outputs(&xs).unwrap();
            out.as_slice()
                .iter()
                .zip(g_out.as_slice())
                .map(|(a, b)| a * b)
                .sum()
        };
        let mut grad = vec![0.0; model.num_params()];
        model.backward(&xs, &g_out, &mut grad);
        for (i, &analytic) in grad.iter().enumerate() {
            let mut plus = model.clone();
            plus.params[i] += 1e-6;
            let mut minus = model.clone();
            minus.params[i] -= 1e-6;
            let numeric = (objective(&plus) - objective(&minus)) / 2e-6;
            assert!((numeric - analytic).abs() < 1e-6, "param {i}");
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        fd_check(Architecture::Linear, OutputMode::Softmax);
        fd_check(Architecture::Mlp { hidden: 4 }, OutputMode::Sigmoid);
    }

    #[test]
    fn permutation_matching() {
        let truth = [0, 1, 0, 1];
        let flipped = [1, 0, 1, 0];
        assert_eq!(accuracy(&flipped, &truth, 2, Matching::None).unwrap(), 0.0);
        assert_eq!(
            accuracy(&flipped, &truth, 2, Matching::Permute).unwrap(),
            1.0
        );
        let good = [0, 1, 0, 0];
        assert_eq!(
            accuracy(&good, &truth, 2, Matching::None).unwrap(),
            accuracy(&good, &truth, 2, Matching::Permute).unwrap()
        );
        let cyc = [1, 2, 0];
        assert_eq!(
            accuracy(&cyc, &[0, 1, 2], 3, Matching::Permute).unwrap(),
            1.0
        );
        assert!(accuracy(&[], &[], 2, Matching::None).is_err());
    }

    #[test]
    fn zero_epochs_keeps_init() {
        let data = gaussian_data(20, 1);
        let ds = weaken(&data, Setting::Supervised, &WeakenParams::default(), 0).unwrap();
        let config = TrainConfig {
            epochs: 0,
            seed: 4,
            ..Default::default()
        };
        let test = TestSet {
            data: &data,
            matching: Matching::None,
        };
        let (model, log) = train(&ds, &config, Some(test)).unwrap();
        let init = Model::new(Architecture::Linear, OutputMode::Softmax, 2, 2, 4).unwrap();
        assert_eq!(model, init);
        assert_eq!(log.epochs.len(), 1);
        assert_eq!(
            log.final_accuracy(),
            Some(evaluate(&init, &data, Matching::None).unwrap())
        );
    }

    #[test]
    fn supervised_training_separates() {
        let data = gaussian_data(200, 2);
        let ds = weaken(&data, Setting::Supervised, &WeakenParams::default(), 0).unwrap();
        let config = TrainConfig {
            epochs: 20,
            ..Default::default()
        };
        let (model, _) = train(&ds, &config, None).unwrap();
        let train_acc = evaluate(&model, &data, Matching::None).unwrap();
        assert!(train_acc >= 0.97, "{train_acc}");
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let data = gaussian_data(50, 3);
        let ds = weaken(&data, Setting::Supervised, &WeakenParams::default(), 0).unwrap();
        let config = TrainConfig {
            epochs: 5,
            batch_size: ds.groups.len(),
            learning_rate: 0.05,
            optimizer: Optimizer::Sgd,
            ..Default::default()
        };
        let (_, log) = train(&ds, &config, None).unwrap();
        for pair in log.epochs.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert!(b.l_s < a.l_s, "{} -> {}", a.l_s, b.l_s);
            assert!(b.l_u + b.l_s <= a.l_u + a.l_s);
        }
    }

    #[test]
    fn training_is_reproducible() {
        let data = gaussian_data(100, 5);
        let params = WeakenParams {
            bags: 30,
            ..Default::default()
        };
        let ds = weaken(&data, Setting::LabelProportion, &params, 1).unwrap();
        let config = TrainConfig {
            epochs: 3,
            batch_size: 4,
            architecture: Architecture::Mlp { hidden: 6 },
            ..Default::default()
        };
        let a = train(&ds, &config, None).unwrap();
        let b = train(&ds, &config, None).unwrap();
        assert_eq!(a.0.params, b.0.params);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn bad_group_is_reported() {
        let data = gaussian_data(10, 1);
        let mut ds = weaken(&data, Setting::Supervised, &WeakenParams::default(), 0).unwrap();
        ds.groups[3].spec = crate::SupervisionSpec::PartialLabel {
            candidates: vec![vec![]],
        }
        .into();
        let err = train(&ds, &TrainConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::Group { index: 3, .. }), "{err}");
    }
}
