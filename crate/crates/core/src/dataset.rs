//! Dataset layout, segment sampling, amplitude augmentation, and mixing.
//!
//! Expected layout: `root/{train,validation,test}/<track>/<stem>.wav` with
//! one wav per source. K = 4 uses the canonical stem names; other K use
//! `source_1.wav` .. `source_K.wav`.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::wav::{self, WavError};

pub const TARGET_SAMPLE_RATE: u32 = 22_050;
pub const CANONICAL_STEMS: [&str; 4] = ["vocals", "drums", "bass", "other"];

/// Report row names and stem file names for a K-source model.
pub fn stem_names(num_sources: usize) -> Vec<String> {
    if num_sources == 4 {
        CANONICAL_STEMS.iter().map(|s| s.to_string()).collect()
    } else {
        (1..=num_sources).map(|k| format!("source_{k}")).collect()
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset at {root}: {} missing stems:\n{}", missing.len(),
            missing.iter().map(|(t, s)| format!("  track '{t}' is missing stem '{s}'"))
                .collect::<Vec<_>>().join("\n"))]
    MissingStems {
        root: String,
        missing: Vec<(String, String)>,
    },
    #[error("track '{track}': stems disagree on {what}")]
    InconsistentStems { track: String, what: String },
    #[error("track '{track}' has {len} samples, shorter than one {segment}-sample segment")]
    TrackTooShort {
        track: String,
        len: usize,
        segment: usize,
    },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("i/o error scanning {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Clone)]
pub struct Track {
    pub name: String,
    /// One path per stem, in `stem_names` order.
    pub stems: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrackSet {
    pub split: Split,
    pub tracks: Vec<Track>,
    pub sample_rate: u32,
}

/// Scans one split. A missing split directory yields an empty set; tracks
/// with missing stems are reported all at once, naming track and stem.
pub fn scan_dataset(root: &Path, split: Split, num_sources: usize) -> Result<TrackSet, DataError> {
    let stems = stem_names(num_sources);
    let dir = root.join(split.dir_name());
    let mut tracks = Vec::new();
    let mut missing = Vec::new();
    if dir.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| DataError::Io {
                path: dir.display().to_string(),
                source: e,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        entries.sort();
        for track_dir in entries {
            let name = track_dir
                .file_name()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();
            let paths: Vec<PathBuf> = stems
                .iter()
                .map(|s| track_dir.join(format!("{s}.wav")))
                .collect();
            let absent: Vec<&str> = stems
                .iter()
                .zip(&paths)
                .filter(|(_, p)| !p.is_file())
                .map(|(s, _)| s.as_str())
                .collect();
            if absent.is_empty() {
                tracks.push(Track { name, stems: paths });
            } else {
                for s in absent {
                    missing.push((name.clone(), s.to_string()));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(DataError::MissingStems {
            root: root.display().to_string(),
            missing,
        });
    }
    Ok(TrackSet {
        split,
        tracks,
        sample_rate: TARGET_SAMPLE_RATE,
    })
}

/// A track with all stems decoded, resampled to the target rate, and
/// validated for equal lengths and channel counts.
#[derive(Debug, Clone)]
pub struct LoadedTrack<S> {
    pub name: String,
    /// K stems, each `[C, T]`.
    pub sources: Vec<Tensor<S>>,
}

impl<S: Scalar> LoadedTrack<S> {
    pub fn channels(&self) -> usize {
        self.sources[0].shape()[0]
    }

    pub fn len(&self) -> usize {
        self.sources[0].shape()[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Plain unweighted sum of stems.
    pub fn mixture(&self) -> Tensor<S> {
        let mut mix = self.sources[0].clone();
        for s in &self.sources[1..] {
            for (m, &v) in mix.data_mut().iter_mut().zip(s.data()) {
                *m += v;
            }
        }
        mix
    }
}

pub fn load_track<S: Scalar>(track: &Track) -> Result<LoadedTrack<S>, DataError> {
    let mut sources = Vec::with_capacity(track.stems.len());
    for path in &track.stems {
        let (signal, sr) = wav::load_wav::<S>(path)?;
        let signal = if sr == TARGET_SAMPLE_RATE {
            signal
        } else {
            wav::resample_linear(&signal, sr, TARGET_SAMPLE_RATE)
        };
        sources.push(signal);
    }
    let (c0, t0) = sources[0].signal_dims().expect("load_wav returns [C, T]");
    for s in &sources[1..] {
        let (c, t) = s.signal_dims().expect("load_wav returns [C, T]");
        if c != c0 {
            return Err(DataError::InconsistentStems {
                track: track.name.clone(),
                what: format!("channel count ({c} vs {c0})"),
            });
        }
        if t != t0 {
            return Err(DataError::InconsistentStems {
                track: track.name.clone(),
                what: format!("length ({t} vs {t0})"),
            });
        }
    }
    Ok(LoadedTrack {
        name: track.name.clone(),
        sources,
    })
}

/// One training example: aligned source slices and their mixture.
/// The mixture is always the exact per-sample sum of `sources`.
#[derive(Debug, Clone)]
pub struct Segment<S> {
    /// `[K, C, T]`
    pub sources: Tensor<S>,
    /// `[C, T]`
    pub mixture: Tensor<S>,
    pub track: String,
    pub offset: usize,
}

impl<S: Scalar> Segment<S> {
    pub fn num_sources(&self) -> usize {
        self.sources.shape()[0]
    }

    /// Owned `[C, T]` copy of source k.
    pub fn source(&self, k: usize) -> Tensor<S> {
        let (c, t) = self.mixture.signal_dims().expect("segment mixture is [C, T]");
        let data = self.sources.data()[k * c * t..(k + 1) * c * t].to_vec();
        Tensor::new(vec![c, t], data).expect("source slice shape")
    }
}

fn mix_sources<S: Scalar>(sources: &Tensor<S>) -> Tensor<S> {
    let (k, c, t) = match sources.shape() {
        &[k, c, t] => (k, c, t),
        other => panic!("sources must be [K, C, T], got {other:?}"),
    };
    let mut mixture = Tensor::zeros(&[c, t]);
    for kk in 0..k {
        let block = &sources.data()[kk * c * t..(kk + 1) * c * t];
        for (m, &v) in mixture.data_mut().iter_mut().zip(block) {
            *m += v;
        }
    }
    mixture
}

/// Slices all stems at one uniform random offset in
/// `[0, len - segment_len]`; no augmentation.
pub fn sample_segment<S: Scalar>(
    track: &LoadedTrack<S>,
    segment_len: usize,
    rng: &mut impl Rng,
) -> Result<Segment<S>, DataError> {
    if track.len() < segment_len {
        return Err(DataError::TrackTooShort {
            track: track.name.clone(),
            len: track.len(),
            segment: segment_len,
        });
    }
    let offset = rng.random_range(0..=track.len() - segment_len);
    let k = track.sources.len();
    let c = track.channels();
    let t_total = track.len();
    let mut data = Vec::with_capacity(k * c * segment_len);
    for s in &track.sources {
        for ch in 0..c {
            data.extend_from_slice(&s.data()[ch * t_total + offset..ch * t_total + offset + segment_len]);
        }
    }
    let sources = Tensor::new(vec![k, c, segment_len], data).expect("segment shape");
    let mixture = mix_sources(&sources);
    Ok(Segment {
        sources,
        mixture,
        track: track.name.clone(),
        offset,
    })
}

/// Scales each source independently by u_k ~ Uniform[0.7, 1] and remixes
/// as the unweighted sum of the scaled sources.
pub fn augment_and_mix<S: Scalar>(sources: &Tensor<S>, rng: &mut impl Rng) -> (Tensor<S>, Tensor<S>) {
    let (k, c, t) = match sources.shape() {
        &[k, c, t] => (k, c, t),
        other => panic!("sources must be [K, C, T], got {other:?}"),
    };
    let mut scaled = sources.clone();
    for kk in 0..k {
        let u = S::of_f64(rng.random_range(0.7..=1.0));
        for v in &mut scaled.data_mut()[kk * c * t..(kk + 1) * c * t] {
            *v *= u;
        }
    }
    let mixture = mix_sources(&scaled);
    (scaled, mixture)
}

impl<S: Scalar> Segment<S> {
    /// Applies amplitude augmentation, keeping the mixture identity.
    pub fn augment(self, rng: &mut impl Rng) -> Segment<S> {
        let (sources, mixture) = augment_and_mix(&self.sources, rng);
        Segment {
            sources,
            mixture,
            track: self.track,
            offset: self.offset,
        }
    }
}
