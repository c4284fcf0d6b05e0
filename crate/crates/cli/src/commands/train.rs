use std::path::{Path, PathBuf};

use anyhow::Context;
use unmix_core::checkpoint::{load_checkpoint, save_checkpoint};
use unmix_core::dataset::Split;
use unmix_core::optim::AdamState;
use unmix_core::train::{train_epochs, History};
use unmix_core::{ModelGraph, Scalar};

use crate::runconfig::{Precision, RunConfig};
use crate::TrainArgs;

pub fn run(args: TrainArgs) -> anyhow::Result<()> {
    // On resume the checkpoint's model config is the baseline; file keys
    // and flags still apply on top (shape changes fail the load).
    let mut rc = RunConfig::default();
    if let Some(ckpt) = &args.resume {
        let raw = unmix_core::checkpoint::read_checkpoint(ckpt)
            .with_context(|| format!("reading {}", ckpt.display()))?;
        rc.model = raw.config;
    }
    if let Some(cfg) = &args.config {
        rc.apply_file(cfg)?;
    }
    if let Some(seed) = args.seed {
        rc.train.seed = seed;
    }
    for warning in rc.model.validate()? {
        eprintln!("warning: {warning}");
    }

    match rc.precision {
        Precision::F32 => run_typed::<f32>(&rc, &args),
        Precision::F64 => run_typed::<f64>(&rc, &args),
    }
}

fn run_typed<S: Scalar>(rc: &RunConfig, args: &TrainArgs) -> anyhow::Result<()> {
    let (mut model, mut adam, start_epoch): (ModelGraph<S>, AdamState<S>, usize) =
        match &args.resume {
            Some(ckpt) => {
                let (model, adam, epoch) = load_checkpoint::<S>(ckpt)
                    .with_context(|| format!("resuming from {}", ckpt.display()))?;
                let adam = adam.unwrap_or_else(|| {
                    AdamState::new(model.params().iter().map(|p| p.tensor.numel()))
                });
                eprintln!("resumed at epoch {epoch} from {}", ckpt.display());
                (model, adam, epoch as usize)
            }
            None => {
                let model = ModelGraph::build(&rc.model)?;
                let adam = AdamState::new(model.params().iter().map(|p| p.tensor.numel()));
                (model, adam, 0)
            }
        };

    let train_tracks = super::load_split::<S>(&args.data, Split::Train, rc.model.num_sources)?;
    let val_tracks =
        super::load_split::<S>(&args.data, Split::Validation, rc.model.num_sources)?;

    let mut history = History::default();
    let cfg = &rc.train;
    if start_epoch >= cfg.epochs {
        eprintln!(
            "checkpoint already at epoch {start_epoch} >= configured epochs {}; nothing to do",
            cfg.epochs
        );
    }
    for epoch in start_epoch..cfg.epochs {
        let rows = train_epochs(
            &mut model,
            &train_tracks,
            &val_tracks,
            cfg,
            epoch..epoch + 1,
            &mut adam,
        )?;
        let last = rows.rows.last().expect("steps_per_epoch >= 1");
        eprintln!(
            "epoch {epoch}: train_loss {:.6}{}",
            last.train_loss,
            last.val_loss
                .map(|v| format!(", val_loss {v:.6}"))
                .unwrap_or_default()
        );
        history.extend(rows);
        let done = epoch + 1;
        if done == cfg.epochs || done % cfg.checkpoint_interval.max(1) == 0 {
            save_checkpoint(&model, Some(&adam), done as u32, &args.out)
                .with_context(|| format!("writing {}", args.out.display()))?;
        }
    }
    if start_epoch >= cfg.epochs {
        // still write a checkpoint so the invocation has a tangible result
        save_checkpoint(&model, Some(&adam), start_epoch as u32, &args.out)?;
    }

    let history_path = args
        .history
        .clone()
        .unwrap_or_else(|| default_history_path(&args.out));
    std::fs::write(&history_path, history.to_csv())
        .with_context(|| format!("writing {}", history_path.display()))?;
    eprintln!(
        "wrote {} and {}",
        args.out.display(),
        history_path.display()
    );
    Ok(())
}

fn default_history_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".history.csv");
    PathBuf::from(s)
}
