//! Signal-to-distortion ratio with silence handling and the report
//! shapes used by the `evaluate` command.

use thiserror::Error;

use crate::dataset::{stem_names, DataError, LoadedTrack};
use crate::graph::{ModelError, ModelGraph};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One-second windows at the 22050 Hz target rate.
pub const DEFAULT_SDR_WINDOW: usize = 22_050;
/// Windows whose reference mean square falls below this (~-60 dBFS on
/// [-1, 1] audio) are treated as silence and excluded from scoring.
pub const SILENCE_MEAN_SQUARE: f64 = 1e-6;
/// Scores are capped to +/- this, so a perfect reconstruction stays finite.
pub const SDR_CAP_DB: f64 = 100.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reference signal is all zero; filter silence before calling sdr")]
    AllZeroReference,
    #[error("shape mismatch: reference {reference:?} vs estimate {estimate:?}")]
    Shape {
        reference: Vec<usize>,
        estimate: Vec<usize>,
    },
    #[error("empty test split: nothing to evaluate")]
    EmptySplit,
    #[error("track '{track}' has {got} stems, model expects {expected}")]
    StemCount {
        track: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn energies<S: Scalar>(reference: &[S], estimate: &[S]) -> (f64, f64) {
    let mut ref_e = 0.0;
    let mut err_e = 0.0;
    for (&r, &e) in reference.iter().zip(estimate) {
        let r = r.as_f64();
        let d = r - e.as_f64();
        ref_e += r * r;
        err_e += d * d;
    }
    (ref_e, err_e)
}

fn db_from_energies(ref_e: f64, err_e: f64) -> f64 {
    if err_e == 0.0 {
        return SDR_CAP_DB;
    }
    (10.0 * (ref_e / err_e).log10()).clamp(-SDR_CAP_DB, SDR_CAP_DB)
}

/// 10 log10(sum ref^2 / sum (ref - est)^2), capped to +/-100 dB.
pub fn sdr<S: Scalar>(reference: &Tensor<S>, estimate: &Tensor<S>) -> Result<f64, EvalError> {
    if reference.shape() != estimate.shape() {
        return Err(EvalError::Shape {
            reference: reference.shape().to_vec(),
            estimate: estimate.shape().to_vec(),
        });
    }
    let (ref_e, err_e) = energies(reference.data(), estimate.data());
    if ref_e == 0.0 {
        return Err(EvalError::AllZeroReference);
    }
    Ok(db_from_energies(ref_e, err_e))
}

#[derive(Debug, Clone, Default)]
pub struct WindowScores {
    /// SDR per non-silent window, in window order.
    pub scores: Vec<f64>,
    pub silent: usize,
}

impl WindowScores {
    pub fn total_windows(&self) -> usize {
        self.scores.len() + self.silent
    }
}

/// Scores non-overlapping `window`-sample windows (energy pooled over
/// channels; a trailing partial window is kept). Windows whose reference
/// mean square is below [`SILENCE_MEAN_SQUARE`] are excluded and counted.
pub fn windowed_sdr<S: Scalar>(
    reference: &Tensor<S>,
    estimate: &Tensor<S>,
    window: usize,
) -> Result<WindowScores, EvalError> {
    if reference.shape() != estimate.shape() {
        return Err(EvalError::Shape {
            reference: reference.shape().to_vec(),
            estimate: estimate.shape().to_vec(),
        });
    }
    assert!(window >= 1);
    let (c, t_len) = reference
        .signal_dims()
        .map_err(|_| EvalError::Shape {
            reference: reference.shape().to_vec(),
            estimate: estimate.shape().to_vec(),
        })?;
    let mut out = WindowScores::default();
    let mut start = 0;
    while start < t_len {
        let n = window.min(t_len - start);
        let mut ref_e = 0.0;
        let mut err_e = 0.0;
        for ch in 0..c {
            let r = &reference.data()[ch * t_len + start..ch * t_len + start + n];
            let e = &estimate.data()[ch * t_len + start..ch * t_len + start + n];
            let (re, ee) = energies(r, e);
            ref_e += re;
            err_e += ee;
        }
        if ref_e / ((c * n) as f64) < SILENCE_MEAN_SQUARE {
            out.silent += 1;
        } else {
            out.scores.push(db_from_energies(ref_e, err_e));
        }
        start += n;
    }
    Ok(out)
}

fn mean(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        None
    } else {
        Some(scores.iter().sum::<f64>() / scores.len() as f64)
    }
}

pub fn median(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("capped dB values are finite"));
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

#[derive(Debug, Clone)]
pub struct SourceRow {
    pub source: String,
    pub mean_db: Option<f64>,
    pub median_db: Option<f64>,
    /// Number of scored (non-silent) windows.
    pub windows: usize,
    pub silent_windows: usize,
}

#[derive(Debug, Clone)]
pub struct TrackRow {
    pub track: String,
    pub source: String,
    pub mean_db: Option<f64>,
    pub windows: usize,
    pub silent_windows: usize,
}

/// Per-source aggregate over all windows of all tracks, plus the
/// per-track breakdown. Mean and median are taken over the same
/// non-silent window multiset.
#[derive(Debug, Clone)]
pub struct SdrReport {
    pub rows: Vec<SourceRow>,
    pub per_track: Vec<TrackRow>,
    pub window: usize,
}

impl SdrReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,mean_sdr_db,median_sdr_db,windows,silent_windows\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.source,
                r.mean_db.map(|v| format!("{v:.4}")).unwrap_or_default(),
                r.median_db.map(|v| format!("{v:.4}")).unwrap_or_default(),
                r.windows,
                r.silent_windows
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        fn fmt(v: Option<f64>) -> String {
            v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
        }
        let mut out = String::new();
        out.push_str(&format!(
            "# SDR over non-silent {}-sample windows; mean/median across all windows of all tracks\n",
            self.window
        ));
        out.push_str(&format!(
            "{:<10} {:>10} {:>12} {:>9} {:>15}\n",
            "Source", "Mean SDR", "Median SDR", "Windows", "Silent windows"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<10} {:>10} {:>12} {:>9} {:>15}\n",
                r.source,
                fmt(r.mean_db),
                fmt(r.median_db),
                r.windows,
                r.silent_windows
            ));
        }
        out
    }
}

/// Separates tracks by segment tiling and scores each source with
/// windowed SDR, pooling windows across tracks. Takes an iterator so
/// long test splits can be decoded one track at a time.
pub fn evaluate_stream<S: Scalar>(
    model: &ModelGraph<S>,
    tracks: impl Iterator<Item = Result<LoadedTrack<S>, DataError>>,
    window: usize,
) -> Result<SdrReport, EvalError> {
    let k = model.config().num_sources;
    let names = stem_names(k);
    let mut pooled: Vec<WindowScores> = vec![WindowScores::default(); k];
    let mut per_track = Vec::new();
    for track in tracks {
        let track = track?;
        if track.sources.len() != k {
            return Err(EvalError::StemCount {
                track: track.name.clone(),
                expected: k,
                got: track.sources.len(),
            });
        }
        let mixture = track.mixture();
        let estimates = model.separate(&mixture)?;
        let (c, t_len) = mixture.signal_dims().expect("mixture is [C, T]");
        for (kk, name) in names.iter().enumerate() {
            let est = Tensor::new(
                vec![c, t_len],
                estimates.data()[kk * c * t_len..(kk + 1) * c * t_len].to_vec(),
            )
            .expect("estimate slice");
            let scores = windowed_sdr(&track.sources[kk], &est, window)?;
            per_track.push(TrackRow {
                track: track.name.clone(),
                source: name.clone(),
                mean_db: mean(&scores.scores),
                windows: scores.scores.len(),
                silent_windows: scores.silent,
            });
            pooled[kk].scores.extend(scores.scores);
            pooled[kk].silent += scores.silent;
        }
    }
    if per_track.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let rows = names
        .iter()
        .zip(&pooled)
        .map(|(name, ws)| SourceRow {
            source: name.clone(),
            mean_db: mean(&ws.scores),
            median_db: median(&ws.scores),
            windows: ws.scores.len(),
            silent_windows: ws.silent,
        })
        .collect();
    Ok(SdrReport {
        rows,
        per_track,
        window,
    })
}

/// [`evaluate_stream`] over already-loaded tracks.
pub fn evaluate<S: Scalar>(
    model: &ModelGraph<S>,
    tracks: &[LoadedTrack<S>],
    window: usize,
) -> Result<SdrReport, EvalError> {
    evaluate_stream(model, tracks.iter().cloned().map(Ok), window)
}
