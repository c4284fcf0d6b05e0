pub mod ablate;
pub mod evaluate;
pub mod inspect;
pub mod separate;
pub mod train;

use std::path::Path;

use anyhow::Context;
use unmix_core::dataset::{load_track, scan_dataset, LoadedTrack, Split};
use unmix_core::Scalar;

/// Scans and decodes one split, reporting counts to stderr.
pub fn load_split<S: Scalar>(
    root: &Path,
    split: Split,
    num_sources: usize,
) -> anyhow::Result<Vec<LoadedTrack<S>>> {
    let set = scan_dataset(root, split, num_sources)?;
    let tracks: Vec<LoadedTrack<S>> = set
        .tracks
        .iter()
        .map(|t| load_track(t).with_context(|| format!("loading track '{}'", t.name)))
        .collect::<Result<_, _>>()?;
    eprintln!("{split}: {} tracks", tracks.len());
    Ok(tracks)
}
