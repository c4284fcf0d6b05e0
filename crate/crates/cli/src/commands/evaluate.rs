use anyhow::Context;
use unmix_core::checkpoint::load_checkpoint;
use unmix_core::dataset::{load_track, scan_dataset, Split};
use unmix_core::eval::{evaluate_stream, DEFAULT_SDR_WINDOW};
use unmix_core::ModelGraph;

use crate::EvaluateArgs;

pub fn run(args: EvaluateArgs) -> anyhow::Result<()> {
    let (model, _, _): (ModelGraph<f32>, _, _) = load_checkpoint(&args.ckpt)
        .with_context(|| format!("loading {}", args.ckpt.display()))?;
    let set = scan_dataset(&args.data, Split::Test, model.config().num_sources)?;
    eprintln!("test: {} tracks", set.tracks.len());
    // tracks decode lazily, one at a time
    let report = evaluate_stream(
        &model,
        set.tracks.iter().map(load_track::<f32>),
        DEFAULT_SDR_WINDOW,
    )?;
    std::fs::write(&args.report, report.to_csv())
        .with_context(|| format!("writing {}", args.report.display()))?;
    print!("{}", report.to_table());
    eprintln!("wrote {}", args.report.display());
    Ok(())
}
