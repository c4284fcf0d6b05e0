use unmix_core::config::Arch;
use unmix_core::{dilation_schedule, receptive_field, ModelGraph};

use crate::runconfig::RunConfig;
use crate::InspectArgs;

pub fn run(args: InspectArgs) -> anyhow::Result<()> {
    let mut rc = RunConfig::default();
    if let Some(cfg) = &args.config {
        rc.apply_file(cfg)?;
    }
    for warning in rc.model.validate()? {
        eprintln!("warning: {warning}");
    }
    let model: ModelGraph<f32> = ModelGraph::build(&rc.model)?;
    let cfg = model.config();

    println!("arch: {}", cfg.arch);
    println!(
        "blocks: {} x {} layers, base filters {}, kernels {}/{} (down/up), K = {}, C = {}, segment {}",
        cfg.num_blocks,
        cfg.layers_per_block,
        cfg.base_filters,
        cfg.kernel_down,
        cfg.kernel_up,
        cfg.num_sources,
        cfg.channels,
        cfg.segment_length
    );
    println!("parameters: {}", model.num_params());
    if cfg.arch != Arch::WaveUnet {
        let sched = dilation_schedule(cfg.num_blocks, cfg.layers_per_block, cfg.dilation_mode);
        let blocks: Vec<String> = sched
            .blocks()
            .iter()
            .map(|b| {
                let inner: Vec<String> = b.iter().map(|d| d.to_string()).collect();
                format!("[{}]", inner.join(","))
            })
            .collect();
        println!("dilation schedule ({}): {}", cfg.dilation_mode, blocks.join(" "));
        println!("max dilation: {}", sched.max_rate());
        println!(
            "downstream receptive field: {} samples",
            receptive_field(&sched, cfg.kernel_down)
        );
    }
    println!();
    println!(
        "{:>4}  {:<22} {:<10} {:>3} {:>5} {:>11} {:>8} {:>10}",
        "idx", "layer", "kind", "k", "dil", "in->out", "T", "rf"
    );
    for info in model.describe() {
        let kd = if info.kernel == 0 {
            "-".to_string()
        } else {
            info.kernel.to_string()
        };
        let dil = if info.dilation == 0 {
            "-".to_string()
        } else {
            info.dilation.to_string()
        };
        println!(
            "{:>4}  {:<22} {:<10} {:>3} {:>5} {:>5}->{:<4} {:>8} {:>10}",
            info.index,
            info.name,
            info.kind,
            kd,
            dil,
            info.in_channels,
            info.out_channels,
            info.time_len,
            info.receptive_field
        );
    }
    Ok(())
}
