//! Loss assembly and the optimization loop.
//!
//! A batch is processed sample-by-sample (in parallel across a batch,
//! one tape per segment) and gradients are averaged in segment order, so
//! the batch loss equals the mean of per-segment losses exactly and runs
//! are bit-reproducible for a given seed regardless of thread count.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{sample_segment, DataError, LoadedTrack, Segment};
use crate::graph::{ModelError, ModelGraph};
use crate::optim::{adam_step_buffer, AdamParams, AdamState};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::TensorError;

const TRAIN_STREAM: u64 = 0x7261;
const VAL_STREAM: u64 = 0x7661;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at global step {step}: training diverged")]
    NonFiniteLoss { step: u64 },
    #[error("no usable tracks: every track is shorter than one segment")]
    NoUsableTracks,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub seed: u64,
    /// Checkpoint every N epochs (used by the CLI driver).
    pub checkpoint_interval: usize,
    pub val_batches: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_size: 16,
            epochs: 30,
            steps_per_epoch: 2000,
            seed: 0,
            checkpoint_interval: 1,
            val_batches: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub step: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub rows: Vec<HistoryRow>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,epoch,train_loss,val_loss\n");
        for r in &self.rows {
            let val = r.val_loss.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", r.step, r.epoch, r.train_loss, val));
        }
        out
    }

    pub fn extend(&mut self, other: History) {
        self.rows.extend(other.rows);
    }
}

/// Mean over sources of per-source MSE; the derived K-th source is
/// included, so its error gradient reaches the heads through the
/// mixture subtraction.
pub fn separation_loss<S: Scalar>(
    tape: &mut Tape<S>,
    preds: &[Var],
    targets: &[Var],
) -> Result<Var, TensorError> {
    assert_eq!(preds.len(), targets.len());
    let mut acc: Option<Var> = None;
    for (&p, &t) in preds.iter().zip(targets) {
        let e = tape.mse(p, t)?;
        acc = Some(match acc {
            None => e,
            Some(a) => tape.add(a, e)?,
        });
    }
    let total = acc.expect("at least one source");
    Ok(tape.scale(total, S::of_f64(1.0 / preds.len() as f64)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn stream_seed(seed: u64, stream: u64, epoch: usize, step: usize, sample: usize) -> u64 {
    let mut h = splitmix64(seed ^ stream.wrapping_mul(0xa076_1d64_78bd_642f));
    h = splitmix64(h ^ (epoch as u64).wrapping_mul(0xe703_7ed1_a0b4_28db));
    h = splitmix64(h ^ (step as u64).wrapping_mul(0x8ebc_6af0_9c88_c6e3));
    splitmix64(h ^ (sample as u64).wrapping_mul(0x5895_58f5_5c93_b28d))
}

/// The exact segments one (epoch, step) batch draws, derived from per-
/// sample seeded streams so interrupted runs resume identically.
pub fn batch_segments<S: Scalar>(
    tracks: &[LoadedTrack<S>],
    cfg: &TrainConfig,
    segment_length: usize,
    epoch: usize,
    step: usize,
    augment: bool,
) -> Result<Vec<Segment<S>>, TrainError> {
    let stream = if augment { TRAIN_STREAM } else { VAL_STREAM };
    if tracks.is_empty() {
        return Err(TrainError::NoUsableTracks);
    }
    (0..cfg.batch_size)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, stream, epoch, step, i));
            let track = &tracks[rng.random_range(0..tracks.len())];
            let seg = sample_segment(track, segment_length, &mut rng)?;
            Ok(if augment { seg.augment(&mut rng) } else { seg })
        })
        .collect()
}

/// Forward + loss for one segment without touching gradients.
pub fn segment_loss<S: Scalar>(
    model: &ModelGraph<S>,
    seg: &Segment<S>,
) -> Result<f64, TrainError> {
    let (loss, _) = forward_backward(model, seg, false)?;
    Ok(loss)
}

/// Loss and, for gradient passes, per-parameter gradients in order.
type SampleResult<S> = (f64, Option<Vec<Vec<S>>>);

/// Runs one segment through a fresh tape.
fn forward_backward<S: Scalar>(
    model: &ModelGraph<S>,
    seg: &Segment<S>,
    with_grad: bool,
) -> Result<SampleResult<S>, TrainError> {
    let mut tape = Tape::new();
    let params = model.bind(&mut tape, with_grad);
    let mixture = tape.leaf(seg.mixture.clone(), false);
    let targets: Vec<Var> = (0..seg.num_sources())
        .map(|k| tape.leaf(seg.source(k), false))
        .collect();
    let preds = model.forward_on_tape(&mut tape, mixture, &params)?;
    let loss = separation_loss(&mut tape, &preds, &targets)?;
    let loss_value = tape.value(loss).data()[0].as_f64();
    if !with_grad {
        return Ok((loss_value, None));
    }
    tape.backward(loss)?;
    let grads = params
        .iter()
        .zip(model.params())
        .map(|(&v, p)| {
            tape.grad(v)
                .map(|g| g.to_vec())
                .unwrap_or_else(|| vec![S::zero(); p.tensor.numel()])
        })
        .collect();
    Ok((loss_value, Some(grads)))
}

fn filter_usable<'a, S: Scalar>(
    tracks: &'a [LoadedTrack<S>],
    segment_length: usize,
    label: &str,
) -> Vec<&'a LoadedTrack<S>> {
    let (usable, short): (Vec<_>, Vec<_>) =
        tracks.iter().partition(|t| t.len() >= segment_length);
    for t in short {
        eprintln!(
            "warning: skipping {label} track '{}' ({} samples < segment {segment_length})",
            t.name,
            t.len()
        );
    }
    usable
}

/// Trains `epoch_range` epochs in place. Gradients of a batch are the
/// mean of per-segment gradients; one Adam step per batch. Aborts with
/// the failing global step index if the loss goes non-finite.
pub fn train_epochs<S: Scalar>(
    model: &mut ModelGraph<S>,
    train_tracks: &[LoadedTrack<S>],
    val_tracks: &[LoadedTrack<S>],
    cfg: &TrainConfig,
    epoch_range: Range<usize>,
    adam: &mut AdamState<S>,
) -> Result<History, TrainError> {
    let seg_len = model.config().segment_length;
    let usable: Vec<LoadedTrack<S>> = filter_usable(train_tracks, seg_len, "train")
        .into_iter()
        .cloned()
        .collect();
    if usable.is_empty() {
        return Err(TrainError::NoUsableTracks);
    }
    let val_usable: Vec<LoadedTrack<S>> = filter_usable(val_tracks, seg_len, "validation")
        .into_iter()
        .cloned()
        .collect();
    let hp = AdamParams::<S>::with_lr(cfg.lr);
    let mut history = History::default();

    for epoch in epoch_range {
        for step in 0..cfg.steps_per_epoch {
            let global_step = (epoch * cfg.steps_per_epoch + step) as u64 + 1;
            let segments = batch_segments(&usable, cfg, seg_len, epoch, step, true)?;
            let results: Vec<SampleResult<S>> = segments
                .par_iter()
                .map(|seg| forward_backward(model, seg, true))
                .collect::<Result<_, _>>()?;

            let batch_loss =
                results.iter().map(|(l, _)| l).sum::<f64>() / results.len() as f64;
            if !batch_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { step: global_step });
            }

            // Mean gradient, reduced in segment order.
            let inv = S::of_f64(1.0 / results.len() as f64);
            let mut grads: Vec<Vec<S>> = model
                .params()
                .iter()
                .map(|p| vec![S::zero(); p.tensor.numel()])
                .collect();
            for (_, g) in &results {
                let g = g.as_ref().expect("with_grad batch");
                for (acc, gi) in grads.iter_mut().zip(g) {
                    for (a, &v) in acc.iter_mut().zip(gi) {
                        *a += v;
                    }
                }
            }
            adam.t += 1;
            let t = adam.t;
            for ((param, grad), (m, v)) in model
                .params_mut()
                .iter_mut()
                .zip(&mut grads)
                .zip(adam.m.iter_mut().zip(adam.v.iter_mut()))
            {
                for g in grad.iter_mut() {
                    *g *= inv;
                }
                adam_step_buffer(param.tensor.data_mut(), grad, m, v, t, &hp);
            }

            let is_last = step + 1 == cfg.steps_per_epoch;
            let val_loss = if is_last && !val_usable.is_empty() && cfg.val_batches > 0 {
                Some(validation_loss(model, &val_usable, cfg, seg_len, epoch)?)
            } else {
                None
            };
            history.rows.push(HistoryRow {
                step: global_step,
                epoch,
                train_loss: batch_loss,
                val_loss,
            });
        }
    }
    Ok(history)
}

fn validation_loss<S: Scalar>(
    model: &ModelGraph<S>,
    val_tracks: &[LoadedTrack<S>],
    cfg: &TrainConfig,
    seg_len: usize,
    epoch: usize,
) -> Result<f64, TrainError> {
    let mut losses = Vec::new();
    for vb in 0..cfg.val_batches {
        let segments = batch_segments(val_tracks, cfg, seg_len, epoch, vb, false)?;
        let batch: Vec<f64> = segments
            .par_iter()
            .map(|seg| segment_loss(model, seg))
            .collect::<Result<_, _>>()?;
        losses.extend(batch);
    }
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Convenience wrapper: trains all configured epochs from scratch.
pub fn train_loop<S: Scalar>(
    model: &mut ModelGraph<S>,
    train_tracks: &[LoadedTrack<S>],
    val_tracks: &[LoadedTrack<S>],
    cfg: &TrainConfig,
) -> Result<(History, AdamState<S>), TrainError> {
    let mut adam = AdamState::new(model.params().iter().map(|p| p.tensor.numel()));
    let history = train_epochs(model, train_tracks, val_tracks, cfg, 0..cfg.epochs, &mut adam)?;
    Ok((history, adam))
}
