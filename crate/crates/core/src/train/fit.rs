use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::{confusion_by_snr, SnrMetrics};
use crate::error::{Error, Result};
use crate::model::{Batch, GraphInput, Model, ModelDims, ModelParams, Variant};
use crate::rng::substream;
use crate::tensor::{adam_step, AdamState, Array, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainHyper {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr0: f64,
    /// Epochs between learning-rate decays.
    pub lr_step: usize,
    pub lr_factor: f64,
    pub seed: u64,
    /// Inverse-frequency class weights in the loss.
    pub class_weighting: bool,
    pub variant: Variant,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 800,
            lr0: 0.01,
            lr_step: 200,
            lr_factor: 0.1,
            seed: 0,
            class_weighting: false,
            variant: Variant::Full,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.lr_step == 0 {
            return Err(Error::config("train: batch_size, epochs and lr_step must be >= 1"));
        }
        if !(self.lr0 > 0.0 && self.lr_factor > 0.0) {
            return Err(Error::config("train: lr0 and lr_factor must be positive"));
        }
        Ok(())
    }

    /// `lr0 · lr_factor^⌊epoch / lr_step⌋`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_factor.powi((epoch / self.lr_step) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: Variant,
    pub train_loss: Vec<f64>,
    /// Empty when there is no validation split.
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    /// Validation metrics of the returned checkpoint per SNR tag.
    pub per_snr: Vec<SnrMetrics>,
}

/// Inverse-frequency weights normalized to mean one over present classes.
pub fn class_weights(graphs: &[GraphInput]) -> [f64; 3] {
    let mut counts = [0u64; 3];
    for l in graphs.iter().filter_map(|g| g.labels.as_ref()).flatten() {
        counts[*l] += 1;
    }
    let total: u64 = counts.iter().sum();
    let present = counts.iter().filter(|c| **c > 0).count();
    let mut w = [1.0; 3];
    for k in 0..3 {
        if counts[k] > 0 {
            w[k] = total as f64 / (present as f64 * counts[k] as f64);
        }
    }
    w
}

/// Loss over `graphs` in chunks, each chunk weighted by its share of edged graphs.
pub fn dataset_loss(model: &Model, graphs: &[GraphInput], cw: Option<[f64; 3]>) -> Result<Option<f64>> {
    let mut acc = 0.0;
    let mut live_total = 0usize;
    for part in graphs.chunks(32) {
        let refs: Vec<&GraphInput> = part.iter().collect();
        let live = part.iter().filter(|g| g.n_edges() > 0).count();
        if live == 0 {
            continue;
        }
        let b = Batch::new(&refs)?;
        let mut t = Tape::new();
        let p = model.bind_frozen(&mut t);
        let f = model.forward(&mut t, &p, &b)?;
        let l = model.loss(&mut t, f.logits, &b, cw)?;
        acc += t.value(l).item() * live as f64;
        live_total += live;
    }
    Ok((live_total > 0).then(|| acc / live_total as f64))
}

/// One Adam step on `graphs`; returns the loss before the step, or `None` if no graph has edges.
pub fn train_step(
    model: &mut Model,
    graphs: &[&GraphInput],
    state: &mut AdamState,
    lr: f64,
    cw: Option<[f64; 3]>,
) -> Result<Option<f64>> {
    if graphs.iter().all(|g| g.n_edges() == 0) {
        return Ok(None);
    }
    let b = Batch::new(graphs)?;
    let mut t = Tape::new();
    let p = model.bind(&mut t);
    let f = model.forward(&mut t, &p, &b)?;
    let l = model.loss(&mut t, f.logits, &b, cw)?;
    let loss = t.value(l).item();
    if !loss.is_finite() {
        return Ok(Some(loss));
    }
    let mut g = t.backward(l)?;
    let grads: Vec<Array> = p
        .iter()
        .zip(&model.params.arrays)
        .map(|(v, a)| g.take(*v).unwrap_or_else(|| Array::zeros(a.shape())))
        .collect();
    adam_step(&mut model.params.arrays, &grads, state, lr)?;
    Ok(Some(loss))
}

/// Minibatch Adam with a stepped learning rate; returns the checkpoint
/// with the lowest validation loss (training loss without a validation split).
pub fn train(dataset: &Dataset, dims: &ModelDims, hyper: &TrainHyper) -> Result<(Model, TrainReport)> {
    hyper.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    if dataset.train.iter().all(|g| g.labels.is_none()) {
        return Err(Error::Missing("edge labels".into()));
    }
    let mut model = Model::init(dims, hyper.variant, &mut substream(hyper.seed, "init", 0))?;
    let cw = hyper.class_weighting.then(|| class_weights(&dataset.train));
    let mut state = AdamState::new(&model.params.arrays);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut report = TrainReport {
        variant: hyper.variant,
        train_loss: Vec::with_capacity(hyper.epochs),
        val_loss: Vec::new(),
        best_epoch: 0,
        per_snr: Vec::new(),
    };
    let mut best: Option<(f64, ModelParams)> = None;
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut substream(hyper.seed, "shuffle", epoch as u64));
        let lr = hyper.lr_at(epoch);
        let (mut sum, mut n) = (0.0, 0usize);
        for chunk in order.chunks(hyper.batch_size) {
            let graphs: Vec<&GraphInput> = chunk.iter().map(|&i| &dataset.train[i]).collect();
            if let Some(loss) = train_step(&mut model, &graphs, &mut state, lr, cw)? {
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, loss });
                }
                sum += loss;
                n += 1;
            }
        }
        let train_loss = if n > 0 { sum / n as f64 } else { 0.0 };
        report.train_loss.push(train_loss);
        let score = match dataset_loss(&model, &dataset.val, cw)? {
            Some(v) => {
                if !v.is_finite() {
                    return Err(Error::Divergence { epoch, loss: v });
                }
                report.val_loss.push(v);
                v
            }
            None => train_loss,
        };
        log::debug!("epoch {epoch}: lr {lr:.2e} train {train_loss:.4} select {score:.4}");
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, model.params.clone()));
            report.best_epoch = epoch;
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    let eval_set = if dataset.val.is_empty() { &dataset.train } else { &dataset.val };
    report.per_snr = confusion_by_snr(&model, eval_set)?;
    Ok((model, report))
}

/// Accuracy on the validation split for each message-passing depth.
///
/// Every depth reuses `dims` with `gat_dims` set to that many copies of its first width.
pub fn layer_sweep(
    dataset: &Dataset,
    dims: &ModelDims,
    hyper: &TrainHyper,
    layer_counts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let width = dims.gat_dims.first().copied().unwrap_or(dims.fused_dim());
    let eval_set = if dataset.val.is_empty() { &dataset.train } else { &dataset.val };
    layer_counts
        .iter()
        .map(|&n_g| {
            let d = ModelDims { gat_dims: vec![width; n_g], ..dims.clone() };
            let (model, _) = train(dataset, &d, hyper)?;
            let cm = super::confusion_and_accuracy(&model, eval_set, None)?;
            Ok((n_g, cm.accuracy()))
        })
        .collect()
}
