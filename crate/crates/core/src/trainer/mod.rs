//! Reference classifier: hashed n-gram features fed to a three-way softmax
//! regression trained with plain mini-batch SGD.
//!
//! Training is single threaded and uses a fixed summation order, so two runs
//! with the same split and config produce bit-identical parameters and
//! epoch records.

pub mod checkpoint;
pub mod features;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSplit, Label};
use crate::error::{Error, Result};
use crate::rng;
use features::{FeatureVector, Featurizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub hash_dim: usize,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub cross_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 6,
            learning_rate: 0.1,
            l2: 1e-6,
            batch_size: 64,
            hash_dim: 1 << 18,
            seed: 0,
            shuffle_each_epoch: true,
            cross_cap: Featurizer::DEFAULT_CROSS_CAP,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) || self.learning_rate * self.l2 >= 1.0 {
            return Err(Error::Config("l2 must be nonnegative with learning_rate * l2 < 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        self.featurizer().map(|_| ())
    }

    pub fn featurizer(&self) -> Result<Featurizer> {
        Featurizer::new(self.hash_dim, self.cross_cap)
    }
}

/// Linear softmax model: `weights` is 3 x `hash_dim`, row-major by label.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub hash_dim: usize,
    pub weights: Vec<f64>,
    pub bias: [f64; 3],
}

impl ModelParams {
    pub fn zeros(hash_dim: usize) -> Self {
        Self {
            hash_dim,
            weights: vec![0.0; 3 * hash_dim],
            bias: [0.0; 3],
        }
    }

    pub fn weight(&self, label: usize, feature: usize) -> f64 {
        self.weights[label * self.hash_dim + feature]
    }

    pub fn logits(&self, fv: &FeatureVector) -> [f64; 3] {
        let mut z = self.bias;
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.weights[k * self.hash_dim..(k + 1) * self.hash_dim];
            for (j, x) in fv.iter() {
                *zk += row[j] * x;
            }
        }
        z
    }

    pub fn predict_probs(&self, fv: &FeatureVector) -> [f64; 3] {
        softmax(&self.logits(fv))
    }

    pub fn predict(&self, fv: &FeatureVector) -> Label {
        Label::argmax(&self.predict_probs(fv))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

pub fn softmax(z: &[f64; 3]) -> [f64; 3] {
    let max = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - max).exp(), (z[1] - max).exp(), (z[2] - max).exp()];
    let sum = e[0] + e[1] + e[2];
    [e[0] / sum, e[1] / sum, e[2] / sum]
}

/// Cross-entropy of `gold` under logits `z`, computed as log-sum-exp minus
/// the gold logit.
fn cross_entropy(z: &[f64; 3], gold: Label) -> f64 {
    let max = z[0].max(z[1]).max(z[2]);
    let lse = max + ((z[0] - max).exp() + (z[1] - max).exp() + (z[2] - max).exp()).ln();
    lse - z[gold.index()]
}

/// One per-sample observation emitted after each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub guid: String,
    pub epoch: usize,
    pub probs: [f64; 3],
    pub predicted: Label,
    pub gold: Label,
}

impl EpochRecord {
    pub fn new(guid: String, epoch: usize, probs: [f64; 3], gold: Label) -> Self {
        Self {
            guid,
            epoch,
            predicted: Label::argmax(&probs),
            probs,
            gold,
        }
    }

    pub fn gold_prob(&self) -> f64 {
        self.probs[self.gold.index()]
    }
}

pub trait RecordSink {
    fn accept(&mut self, record: EpochRecord) -> Result<()>;
}

impl RecordSink for Vec<EpochRecord> {
    fn accept(&mut self, record: EpochRecord) -> Result<()> {
        self.push(record);
        Ok(())
    }
}

/// Discards records.
pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _record: EpochRecord) -> Result<()> {
        Ok(())
    }
}

/// Mean data loss and its gradient over a batch. Weight gradients are kept
/// only for touched features.
#[derive(Debug, Default)]
pub(crate) struct BatchGradient {
    pub weights: HashMap<u32, [f64; 3]>,
    pub bias: [f64; 3],
    pub loss: f64,
}

pub(crate) fn batch_gradient<'a, I, F>(batch: I, len: usize, logits: F) -> BatchGradient
where
    I: Iterator<Item = (&'a FeatureVector, Label)>,
    F: Fn(&FeatureVector) -> [f64; 3],
{
    let inv = 1.0 / len as f64;
    let mut grad = BatchGradient::default();
    for (fv, gold) in batch {
        let z = logits(fv);
        let p = softmax(&z);
        grad.loss += cross_entropy(&z, gold) * inv;
        let mut delta = p;
        delta[gold.index()] -= 1.0;
        for k in 0..3 {
            delta[k] *= inv;
            grad.bias[k] += delta[k];
        }
        for (&j, &x) in fv.indices.iter().zip(&fv.values) {
            let g = grad.weights.entry(j).or_insert([0.0; 3]);
            for k in 0..3 {
                g[k] += delta[k] * x;
            }
        }
    }
    grad
}

/// Regularized objective `mean CE + l2/2 * |W|^2` (bias unpenalized) and its
/// dense gradient, laid out like [`ModelParams`].
pub fn objective(params: &ModelParams, batch: &[(FeatureVector, Label)], l2: f64) -> (f64, ModelParams) {
    let data = batch_gradient(batch.iter().map(|(fv, l)| (fv, *l)), batch.len(), |fv| params.logits(fv));
    let mut grad = ModelParams::zeros(params.hash_dim);
    grad.bias = data.bias;
    let mut penalty = 0.0;
    for (i, w) in params.weights.iter().enumerate() {
        penalty += w * w;
        grad.weights[i] = l2 * w;
    }
    for (j, g) in data.weights {
        for k in 0..3 {
            grad.weights[k * params.hash_dim + j as usize] += g[k];
        }
    }
    (data.loss + 0.5 * l2 * penalty, grad)
}

/// Weights stored as `scale * raw` so the L2 shrink is O(1) per step.
struct ScaledParams {
    hash_dim: usize,
    raw: Vec<f64>,
    scale: f64,
    bias: [f64; 3],
}

impl ScaledParams {
    fn new(hash_dim: usize) -> Self {
        Self {
            hash_dim,
            raw: vec![0.0; 3 * hash_dim],
            scale: 1.0,
            bias: [0.0; 3],
        }
    }

    fn logits(&self, fv: &FeatureVector) -> [f64; 3] {
        let mut z = [0.0; 3];
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.raw[k * self.hash_dim..(k + 1) * self.hash_dim];
            for (j, x) in fv.iter() {
                *zk += row[j] * x;
            }
            *zk = *zk * self.scale + self.bias[k];
        }
        z
    }

    fn step(&mut self, grad: &BatchGradient, lr: f64, l2: f64) {
        self.scale *= 1.0 - lr * l2;
        let step = lr / self.scale;
        for (&j, g) in &grad.weights {
            for k in 0..3 {
                self.raw[k * self.hash_dim + j as usize] -= step * g[k];
            }
        }
        for k in 0..3 {
            self.bias[k] -= lr * grad.bias[k];
        }
        if self.scale < 1e-6 {
            self.fold();
        }
    }

    fn fold(&mut self) {
        if self.scale != 1.0 {
            for w in &mut self.raw {
                *w *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    fn fold_params(&mut self) -> ModelParams {
        self.fold();
        ModelParams {
            hash_dim: self.hash_dim,
            weights: self.raw.clone(),
            bias: self.bias,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean per-sample training loss (data term) seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn featurize_split(split: &DatasetSplit, featurizer: &Featurizer) -> Vec<FeatureVector> {
    split.samples.iter().map(|s| featurizer.featurize(s)).collect()
}

pub fn train<S: RecordSink + ?Sized>(split: &DatasetSplit, config: &TrainConfig, sink: &mut S) -> Result<ModelParams> {
    train_with_losses(split, config, sink).map(|o| o.params)
}

pub fn train_with_losses<S: RecordSink + ?Sized>(
    split: &DatasetSplit,
    config: &TrainConfig,
    sink: &mut S,
) -> Result<TrainOutcome> {
    config.validate()?;
    if split.is_empty() {
        return Err(Error::Data("cannot train on an empty split".into()));
    }
    let featurizer = config.featurizer()?;
    let features = featurize_split(split, &featurizer);
    let golds: Vec<Label> = split.samples.iter().map(|s| s.gold_label).collect();
    let n = split.len();

    let mut model = ScaledParams::new(config.hash_dim);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let order = if config.shuffle_each_epoch {
            rng::permutation(n, rng::derive_seed(config.seed, epoch as u64))
        } else {
            (0..n).collect()
        };
        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let grad = batch_gradient(
                chunk.iter().map(|&i| (&features[i], golds[i])),
                chunk.len(),
                |fv| model.logits(fv),
            );
            if !grad.loss.is_finite() {
                return Err(Error::Training { epoch, batch: batch_idx });
            }
            loss_sum += grad.loss * chunk.len() as f64;
            model.step(&grad, config.learning_rate, config.l2);
        }
        epoch_losses.push(loss_sum / n as f64);

        let params = model.fold_params();
        if !params.is_finite() {
            return Err(Error::Training { epoch, batch: order.len().div_ceil(config.batch_size) });
        }
        for (sample, fv) in split.samples.iter().zip(&features) {
            sink.accept(EpochRecord::new(
                sample.guid.clone(),
                epoch,
                params.predict_probs(fv),
                sample.gold_label,
            ))?;
        }
    }
    Ok(TrainOutcome {
        params: model.fold_params(),
        epoch_losses,
    })
}

/// Fraction of samples whose argmax prediction equals the gold label.
pub fn evaluate(model: &ModelParams, split: &DatasetSplit, featurizer: &Featurizer) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::Data("accuracy is undefined on an empty split".into()));
    }
    let correct = split
        .samples
        .iter()
        .filter(|s| model.predict(&featurizer.featurize(s)) == s.gold_label)
        .count();
    Ok(correct as f64 / split.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Sample, SplitKind};
    use rand::{Rng, SeedableRng};

    fn sample(guid: &str, s1: &str, s2: &str, gold: Label) -> Sample {
        Sample {
            guid: guid.into(),
            sentence1: s1.into(),
            sentence2: s2.into(),
            gold_label: gold,
        }
    }

    fn three_labels() -> DatasetSplit {
        DatasetSplit::new(
            SplitKind::Train,
            vec![
                sample("a", "one", "uno", Label::Entailment),
                sample("b", "two", "dos", Label::Contradiction),
                sample("c", "three", "tres", Label::Neutral),
            ],
        )
    }

    fn separable(copies: usize) -> DatasetSplit {
        let words = [("sun", Label::Entailment), ("moon", Label::Contradiction), ("star", Label::Neutral)];
        let mut samples = Vec::new();
        for c in 0..copies {
            for (w, l) in words {
                samples.push(sample(&format!("{w}{c}"), w, w, l));
            }
        }
        DatasetSplit::new(SplitKind::Train, samples)
    }

    fn small_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            hash_dim: 1 << 10,
            batch_size: 2,
            seed: 9,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ModelParams::zeros(16);
        let fv = FeatureVector { indices: vec![1, 5], values: vec![2.0, 1.0] };
        assert_eq!(m.predict_probs(&fv), [1.0 / 3.0; 3]);
    }

    #[test]
    fn large_bias_saturates() {
        let mut m = ModelParams::zeros(16);
        m.bias = [800.0, 0.0, 0.0];
        let p = m.predict_probs(&FeatureVector::default());
        assert_eq!(p[0], 1.0);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_matches_direct_evaluation() {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut m = ModelParams::zeros(8);
        for w in &mut m.weights {
            *w = r.gen_range(-0.5..0.5);
        }
        m.bias = [0.1, -0.2, 0.05];
        let fv = FeatureVector { indices: vec![0, 3, 7], values: vec![1.0, 2.0, 1.0] };
        let p = m.predict_probs(&fv);
        let z: Vec<f64> = (0..3)
            .map(|k| m.bias[k] + m.weight(k, 0) + 2.0 * m.weight(k, 3) + m.weight(k, 7))
            .collect();
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        for k in 0..3 {
            assert!((p[k] - z[k].exp() / denom).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn one_epoch_emits_one_record_per_sample() {
        let mut sink = Vec::new();
        train(&three_labels(), &small_config(1), &mut sink).unwrap();
        assert_eq!(sink.len(), 3);
        assert!(sink.iter().all(|r| r.epoch == 0));
        let guids: Vec<_> = sink.iter().map(|r| r.guid.as_str()).collect();
        assert_eq!(guids, ["a", "b", "c"]);
    }

    #[test]
    fn separable_set_is_fit() {
        let split = separable(4);
        let cfg = small_config(20);
        let model = train(&split, &cfg, &mut NullSink).unwrap();
        assert_eq!(evaluate(&model, &split, &cfg.featurizer().unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn same_seed_same_records() {
        let split = separable(5);
        let cfg = small_config(3);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let ma = train(&split, &cfg, &mut a).unwrap();
        let mb = train(&split, &cfg, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
    }

    #[test]
    fn loss_does_not_increase_with_small_rate() {
        let split = separable(6);
        let cfg = TrainConfig { learning_rate: 0.01, ..small_config(5) };
        let out = train_with_losses(&split, &cfg, &mut NullSink).unwrap();
        for w in out.epoch_losses.windows(2) {
            assert!(w[1] <= w[0], "{:?}", out.epoch_losses);
        }
    }

    #[test]
    fn records_cover_every_guid_and_epoch() {
        let split = separable(3);
        let mut sink = Vec::new();
        train(&split, &small_config(4), &mut sink).unwrap();
        assert_eq!(sink.len(), split.len() * 4);
        let mut keys: Vec<_> = sink.iter().map(|r| (r.guid.clone(), r.epoch)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), split.len() * 4);
        for r in &sink {
            assert!((r.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            assert_eq!(r.predicted, Label::argmax(&r.probs));
        }
    }

    #[test]
    fn zero_model_accuracy_uses_tie_rule() {
        let split = three_labels();
        let f = Featurizer::new(16, 30).unwrap();
        let acc = evaluate(&ModelParams::zeros(16), &split, &f).unwrap();
        assert!((acc - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_split_errors() {
        let f = Featurizer::new(16, 30).unwrap();
        assert!(evaluate(&ModelParams::zeros(16), &DatasetSplit::default(), &f).is_err());
        assert!(train(&DatasetSplit::default(), &small_config(1), &mut NullSink).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = TrainConfig { learning_rate: f64::MAX, l2: 0.0, ..small_config(3) };
        match train(&separable(2), &cfg, &mut NullSink) {
            Err(Error::Training { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn scaled_update_matches_dense_update() {
        let split = separable(2);
        let f = Featurizer::new(64, 30).unwrap();
        let batch: Vec<_> = split.samples.iter().map(|s| (f.featurize(s), s.gold_label)).collect();
        let (lr, l2) = (0.3, 0.05);
        let mut scaled = ScaledParams::new(64);
        let mut dense = ModelParams::zeros(64);
        for _ in 0..5 {
            let g = batch_gradient(batch.iter().map(|(fv, l)| (fv, *l)), batch.len(), |fv| scaled.logits(fv));
            scaled.step(&g, lr, l2);
            let (_, dg) = objective(&dense, &batch, l2);
            for (w, g) in dense.weights.iter_mut().zip(&dg.weights) {
                *w -= lr * g;
            }
            for k in 0..3 {
                dense.bias[k] -= lr * dg.bias[k];
            }
        }
        let p = scaled.fold_params();
        for (a, b) in p.weights.iter().zip(&dense.weights) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
