use anyhow::Context;
use unmix_core::checkpoint::load_checkpoint;
use unmix_core::dataset::stem_names;
use unmix_core::wav::{load_wav, write_wav, WavCodec};
use unmix_core::{ModelGraph, Tensor};

use crate::SeparateArgs;

pub fn run(args: SeparateArgs) -> anyhow::Result<()> {
    let (model, _, _): (ModelGraph<f32>, _, _) = load_checkpoint(&args.ckpt)
        .with_context(|| format!("loading {}", args.ckpt.display()))?;
    let (mixture, sample_rate) = load_wav::<f32>(&args.input)?;
    let (c, t_len) = mixture
        .signal_dims()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    eprintln!(
        "separating {} ({c} ch, {t_len} samples @ {sample_rate} Hz) into {} sources",
        args.input.display(),
        model.config().num_sources
    );

    let estimates = model.separate(&mixture)?;
    std::fs::create_dir_all(&args.outdir)
        .with_context(|| format!("creating {}", args.outdir.display()))?;
    for (k, name) in stem_names(model.config().num_sources).iter().enumerate() {
        let data = estimates.data()[k * c * t_len..(k + 1) * c * t_len].to_vec();
        let signal = Tensor::new(vec![c, t_len], data).expect("estimate slice");
        let path = args.outdir.join(format!("{name}.wav"));
        write_wav(&path, &signal, sample_rate, WavCodec::Float32)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
