//! Synthetic tone fixtures for toy-scale training, evaluation, and the
//! overfit test. Source k occupies its own frequency band, so separating
//! a mixture is learnable but not trivial.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{stem_names, LoadedTrack, Segment, Split, TARGET_SAMPLE_RATE};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::wav::{write_wav, WavCodec, WavError};

/// Cycles per 1024 samples for source band `k` (0-based): low band first.
fn band(k: usize) -> (f64, f64) {
    let lo = 2.0 + 7.0 * k as f64;
    (lo, lo + 3.0)
}

fn tone<S: Scalar>(len: usize, channels: usize, cycles: f64, amp: f64, phase: f64) -> Tensor<S> {
    let mut data = Vec::with_capacity(channels * len);
    for ch in 0..channels {
        // slight per-channel phase offset keeps stereo content distinct
        let p = phase + 0.3 * ch as f64;
        for t in 0..len {
            data.push(S::of_f64(amp * (TAU * cycles * t as f64 / 1024.0 + p).sin()));
        }
    }
    Tensor::new(vec![channels, len], data).expect("tone shape")
}

/// The fixed two-tone segment the overfit test trains on: K = 2, C = 1.
pub fn overfit_segment<S: Scalar>(len: usize) -> Segment<S> {
    let s1 = tone::<S>(len, 1, 5.0, 0.5, 0.0);
    let s2 = tone::<S>(len, 1, 23.0, 0.5, 0.7);
    let mut data = Vec::with_capacity(2 * len);
    data.extend_from_slice(s1.data());
    data.extend_from_slice(s2.data());
    let sources = Tensor::new(vec![2, 1, len], data).expect("segment shape");
    let mut mixture = s1;
    for (m, &v) in mixture.data_mut().iter_mut().zip(s2.data()) {
        *m += v;
    }
    Segment {
        sources,
        mixture,
        track: "overfit-tones".into(),
        offset: 0,
    }
}

/// One synthetic track: per-source random tone inside its band.
pub fn synth_track<S: Scalar>(
    name: &str,
    num_sources: usize,
    channels: usize,
    len: usize,
    rng: &mut impl Rng,
) -> LoadedTrack<S> {
    let sources = (0..num_sources)
        .map(|k| {
            let (lo, hi) = band(k);
            let cycles = rng.random_range(lo..=hi);
            let amp = rng.random_range(0.3..=0.45);
            let phase = rng.random_range(0.0..TAU);
            tone::<S>(len, channels, cycles, amp / num_sources as f64 * 2.0, phase)
        })
        .collect();
    LoadedTrack {
        name: name.to_string(),
        sources,
    }
}

/// Generates an in-memory toy split.
pub fn synth_tracks<S: Scalar>(
    num_tracks: usize,
    num_sources: usize,
    channels: usize,
    len: usize,
    seed: u64,
) -> Vec<LoadedTrack<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_tracks)
        .map(|i| synth_track(&format!("synth_{i:02}"), num_sources, channels, len, &mut rng))
        .collect()
}

/// Writes a complete toy dataset in the standard directory layout.
pub fn write_toy_dataset(
    root: &Path,
    num_sources: usize,
    channels: usize,
    track_len: usize,
    counts: (usize, usize, usize),
    seed: u64,
) -> Result<(), WavError> {
    let stems = stem_names(num_sources);
    let splits = [
        (Split::Train, counts.0),
        (Split::Validation, counts.1),
        (Split::Test, counts.2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (split, count) in splits {
        for i in 0..count {
            let name = format!("{}_track_{i:02}", split.dir_name());
            let track: LoadedTrack<f32> =
                synth_track(&name, num_sources, channels, track_len, &mut rng);
            let dir = root.join(split.dir_name()).join(&name);
            std::fs::create_dir_all(&dir).map_err(|e| WavError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            for (stem, signal) in stems.iter().zip(&track.sources) {
                write_wav(
                    dir.join(format!("{stem}.wav")),
                    signal,
                    TARGET_SAMPLE_RATE,
                    WavCodec::Float32,
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_track, scan_dataset};

    #[test]
    fn overfit_segment_mixes_exactly() {
        let seg = overfit_segment::<f64>(1024);
        assert_eq!(seg.sources.shape(), &[2, 1, 1024]);
        for t in 0..1024 {
            let sum = seg.sources.data()[t] + seg.sources.data()[1024 + t];
            assert_eq!(sum, seg.mixture.data()[t]);
        }
        assert!(seg.mixture.data().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn toy_dataset_round_trips_through_scan() {
        let dir = tempfile::tempdir().unwrap();
        write_toy_dataset(dir.path(), 2, 1, 4096, (2, 1, 1), 9).unwrap();
        let train = scan_dataset(dir.path(), Split::Train, 2).unwrap();
        assert_eq!(train.tracks.len(), 2);
        let loaded = load_track::<f32>(&train.tracks[0]).unwrap();
        assert_eq!(loaded.sources.len(), 2);
        assert_eq!(loaded.len(), 4096);
    }
}
