use anyhow::Context;
use unmix_core::config::{Arch, DilationMode, ModelConfig};
use unmix_core::dataset::{LoadedTrack, Split};
use unmix_core::eval::{evaluate, DEFAULT_SDR_WINDOW};
use unmix_core::synth::write_toy_dataset;
use unmix_core::train::{train_loop, TrainConfig};
use unmix_core::ModelGraph;

use crate::AblateArgs;

/// The comparison grid: three dilation schemes on the plain dilated
/// architecture, and depth {1, 3} with and without dense connections at
/// fixed dilation 512 — seven runs.
fn grid(base: &ModelConfig) -> Vec<(String, ModelConfig)> {
    let mut runs = Vec::new();
    for (label, mode) in [
        ("dilation-fixed1", DilationMode::Fixed(1)),
        ("dilation-fixed512", DilationMode::Fixed(512)),
        ("dilation-adaptive", DilationMode::Adaptive),
    ] {
        runs.push((
            label.to_string(),
            ModelConfig {
                arch: Arch::Dilated,
                dilation_mode: mode,
                ..base.clone()
            },
        ));
    }
    for blocks in [1usize, 3] {
        for (tag, arch) in [("plain", Arch::Dilated), ("dense", Arch::DilatedDense)] {
            runs.push((
                format!("blocks{blocks}-{tag}-fixed512"),
                ModelConfig {
                    arch,
                    num_blocks: blocks,
                    dilation_mode: DilationMode::Fixed(512),
                    ..base.clone()
                },
            ));
        }
    }
    runs
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn run(args: AblateArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let (base, train_cfg, data_root) = if args.toy {
        let base = ModelConfig {
            arch: Arch::Dilated,
            num_blocks: 2,
            layers_per_block: 3,
            base_filters: 4,
            num_sources: 2,
            channels: 1,
            segment_length: 1024,
            ..Default::default()
        };
        let tc = TrainConfig {
            lr: 1e-3,
            batch_size: 8,
            epochs: 1,
            steps_per_epoch: 120,
            seed: args.seed,
            ..Default::default()
        };
        let toy_root = args.out.join("toy-data");
        write_toy_dataset(&toy_root, base.num_sources, base.channels, 44_100, (4, 1, 2), args.seed)?;
        eprintln!("wrote synthetic two-tone dataset under {}", toy_root.display());
        (base, tc, toy_root)
    } else {
        let data = args.data.clone().ok_or_else(|| {
            anyhow::anyhow!(crate::runconfig::ConfigFileError {
                path: "<args>".into(),
                line: 0,
                message: "--data is required without --toy".into(),
            })
        })?;
        (
            ModelConfig::default(),
            TrainConfig {
                seed: args.seed,
                ..Default::default()
            },
            data,
        )
    };

    let train_tracks: Vec<LoadedTrack<f32>> =
        super::load_split(&data_root, Split::Train, base.num_sources)?;
    let val_tracks: Vec<LoadedTrack<f32>> =
        super::load_split(&data_root, Split::Validation, base.num_sources)?;
    let test_tracks: Vec<LoadedTrack<f32>> =
        super::load_split(&data_root, Split::Test, base.num_sources)?;

    let mut csv =
        String::from("config,config_hash,source,mean_sdr_db,median_sdr_db,windows,silent_windows\n");
    let runs = grid(&base);
    let total = runs.len();
    for (i, (label, mut cfg)) in runs.into_iter().enumerate() {
        cfg.init_seed = args.seed;
        let hash = fnv1a64(format!("{cfg:?}|{train_cfg:?}").as_bytes());
        eprintln!("[{}/{total}] {label} (config {hash:016x})", i + 1);
        let mut model: ModelGraph<f32> = ModelGraph::build(&cfg)?;
        train_loop(&mut model, &train_tracks, &val_tracks, &train_cfg)?;
        let report = evaluate(&model, &test_tracks, DEFAULT_SDR_WINDOW)?;
        for row in &report.rows {
            csv.push_str(&format!(
                "{label},{hash:016x},{},{},{},{},{}\n",
                row.source,
                row.mean_db.map(|v| format!("{v:.4}")).unwrap_or_default(),
                row.median_db.map(|v| format!("{v:.4}")).unwrap_or_default(),
                row.windows,
                row.silent_windows
            ));
        }
    }
    let out_csv = args.out.join("ablation.csv");
    std::fs::write(&out_csv, csv).with_context(|| format!("writing {}", out_csv.display()))?;
    eprintln!("wrote {}", out_csv.display());
    Ok(())
}
