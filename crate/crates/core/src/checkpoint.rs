//! Bit-exact binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "UNMIXCKP"
//! version    u32      1
//! config     arch u8, num_blocks u32, layers_per_block u32,
//!            base_filters u32, kernel_down u32, kernel_up u32,
//!            dilation tag u8 (0 adaptive | 1 fixed) + rate u32,
//!            leaky_slope f64, num_sources u32, channels u32,
//!            segment_length u64, init_seed u64, upstream_reverse u8
//! epoch      u32      epochs completed
//! params     u32 count, then per parameter:
//!            name (u16 len + utf-8), rank u8, dims u64 x rank,
//!            data f32 x numel
//! optimizer  u8 flag; when 1: t u64, then all m buffers, then all v
//!            buffers (f32 x numel, parameter order)
//! ```

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::{Arch, DilationMode, ModelConfig};
use crate::graph::{ModelError, ModelGraph};
use crate::optim::AdamState;
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"UNMIXCKP";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad checkpoint: {0}")]
    Format(String),
    #[error("parameter '{param}': {detail}")]
    Param { param: String, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Raw checkpoint contents, decoupled from any built graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub epoch: u32,
    pub params: Vec<(String, Vec<usize>, Vec<f32>)>,
    pub optimizer: Option<OptimizerSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSnapshot {
    pub t: u64,
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
}

struct Writer<W> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> io::Result<()> {
        self.inner.write_all(b)
    }

    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.bytes(&[v])
    }

    fn u16(&mut self, v: u16) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f32_slice(&mut self, vs: impl IntoIterator<Item = f32>) -> io::Result<()> {
        for v in vs {
            self.bytes(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    /// Parameter currently being decoded, for error messages.
    context: Option<String>,
}

impl<'a> Reader<'a> {
    fn fail(&self, detail: &str) -> CheckpointError {
        match &self.context {
            Some(param) => CheckpointError::Param {
                param: param.clone(),
                detail: detail.to_string(),
            },
            None => CheckpointError::Format(detail.to_string()),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(self.fail("truncated"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let raw = self.take(4 * n)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn encode<S: Scalar>(
    model: &ModelGraph<S>,
    optimizer: Option<&AdamState<S>>,
    epoch: u32,
) -> io::Result<Vec<u8>> {
    let cfg = model.config();
    let mut w = Writer { inner: Vec::new() };
    w.bytes(MAGIC)?;
    w.u32(VERSION)?;
    w.u8(match cfg.arch {
        Arch::WaveUnet => 0,
        Arch::Dilated => 1,
        Arch::DilatedDense => 2,
    })?;
    w.u32(cfg.num_blocks as u32)?;
    w.u32(cfg.layers_per_block as u32)?;
    w.u32(cfg.base_filters as u32)?;
    w.u32(cfg.kernel_down as u32)?;
    w.u32(cfg.kernel_up as u32)?;
    match cfg.dilation_mode {
        DilationMode::Adaptive => {
            w.u8(0)?;
            w.u32(0)?;
        }
        DilationMode::Fixed(n) => {
            w.u8(1)?;
            w.u32(n as u32)?;
        }
    }
    w.f64(cfg.leaky_slope)?;
    w.u32(cfg.num_sources as u32)?;
    w.u32(cfg.channels as u32)?;
    w.u64(cfg.segment_length as u64)?;
    w.u64(cfg.init_seed)?;
    w.u8(cfg.upstream_reverse_dilations as u8)?;
    w.u32(epoch)?;

    w.u32(model.params().len() as u32)?;
    for p in model.params() {
        let name = p.name.as_bytes();
        w.u16(name.len() as u16)?;
        w.bytes(name)?;
        w.u8(p.tensor.rank() as u8)?;
        for &d in p.tensor.shape() {
            w.u64(d as u64)?;
        }
        w.f32_slice(p.tensor.data().iter().map(|v| v.as_f64() as f32))?;
    }

    match optimizer {
        None => w.u8(0)?,
        Some(state) => {
            w.u8(1)?;
            w.u64(state.t)?;
            for buf in &state.m {
                w.f32_slice(buf.iter().map(|v| v.as_f64() as f32))?;
            }
            for buf in &state.v {
                w.f32_slice(buf.iter().map(|v| v.as_f64() as f32))?;
            }
        }
    }
    Ok(w.inner)
}

pub fn save_checkpoint<S: Scalar>(
    model: &ModelGraph<S>,
    optimizer: Option<&AdamState<S>>,
    epoch: u32,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    let bytes = encode(model, optimizer, epoch).map_err(|e| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    std::fs::write(path, bytes).map_err(|e| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CheckpointError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    decode(&bytes)
}

fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader {
        bytes,
        pos: 0,
        context: None,
    };
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::Format("wrong magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Format(format!(
            "unknown format version {version} (supported: {VERSION})"
        )));
    }
    let arch = match r.u8()? {
        0 => Arch::WaveUnet,
        1 => Arch::Dilated,
        2 => Arch::DilatedDense,
        other => return Err(CheckpointError::Format(format!("unknown arch tag {other}"))),
    };
    let num_blocks = r.u32()? as usize;
    let layers_per_block = r.u32()? as usize;
    let base_filters = r.u32()? as usize;
    let kernel_down = r.u32()? as usize;
    let kernel_up = r.u32()? as usize;
    let dilation_mode = match (r.u8()?, r.u32()?) {
        (0, _) => DilationMode::Adaptive,
        (1, n) => DilationMode::Fixed(n as usize),
        (tag, _) => {
            return Err(CheckpointError::Format(format!(
                "unknown dilation tag {tag}"
            )))
        }
    };
    let leaky_slope = r.f64()?;
    let num_sources = r.u32()? as usize;
    let channels = r.u32()? as usize;
    let segment_length = r.u64()? as usize;
    let init_seed = r.u64()?;
    let upstream_reverse_dilations = r.u8()? != 0;
    let epoch = r.u32()?;
    let config = ModelConfig {
        arch,
        num_blocks,
        layers_per_block,
        base_filters,
        kernel_down,
        kernel_up,
        dilation_mode,
        leaky_slope,
        num_sources,
        channels,
        segment_length,
        init_seed,
        upstream_reverse_dilations,
    };

    let count = r.u32()? as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| CheckpointError::Format("parameter name is not utf-8".into()))?;
        r.context = Some(name.clone());
        let rank = r.u8()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u64()? as usize);
        }
        let numel = dims.iter().product::<usize>();
        let data = r.f32_vec(numel)?;
        params.push((name, dims, data));
        r.context = None;
    }

    let optimizer = match r.u8()? {
        0 => None,
        1 => {
            let t = r.u64()?;
            let mut m = Vec::with_capacity(count);
            for (name, dims, _) in &params {
                r.context = Some(format!("{name} (adam m)"));
                m.push(r.f32_vec(dims.iter().product())?);
            }
            let mut v = Vec::with_capacity(count);
            for (name, dims, _) in &params {
                r.context = Some(format!("{name} (adam v)"));
                v.push(r.f32_vec(dims.iter().product())?);
            }
            r.context = None;
            Some(OptimizerSnapshot { t, m, v })
        }
        other => {
            return Err(CheckpointError::Format(format!(
                "unknown optimizer flag {other}"
            )))
        }
    };
    Ok(Checkpoint {
        config,
        epoch,
        params,
        optimizer,
    })
}

/// Overwrites a built model's parameters from a checkpoint. Every stored
/// parameter must match one built parameter by name and shape, and cover
/// all of them; conflicts are reported by parameter name.
pub fn apply_params<S: Scalar>(
    model: &mut ModelGraph<S>,
    ckpt: &Checkpoint,
) -> Result<(), CheckpointError> {
    let built: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();
    if ckpt.params.len() != built.len() {
        return Err(CheckpointError::Format(format!(
            "checkpoint has {} parameters, model has {}",
            ckpt.params.len(),
            built.len()
        )));
    }
    for (name, dims, data) in &ckpt.params {
        let idx = built.iter().position(|b| b == name).ok_or_else(|| {
            CheckpointError::Param {
                param: name.clone(),
                detail: "not present in the built model".into(),
            }
        })?;
        let p = &mut model.params_mut()[idx];
        if p.tensor.shape() != dims.as_slice() {
            return Err(CheckpointError::Param {
                param: name.clone(),
                detail: format!(
                    "shape conflict: checkpoint {:?}, model {:?}",
                    dims,
                    p.tensor.shape()
                ),
            });
        }
        for (dst, &src) in p.tensor.data_mut().iter_mut().zip(data) {
            *dst = S::of_f64(src as f64);
        }
    }
    Ok(())
}

/// Model, optional optimizer state, and completed-epoch counter.
pub type LoadedCheckpoint<S> = (ModelGraph<S>, Option<AdamState<S>>, u32);

/// Rebuilds the stored model (and optimizer state, when present).
pub fn load_checkpoint<S: Scalar>(
    path: impl AsRef<Path>,
) -> Result<LoadedCheckpoint<S>, CheckpointError> {
    let ckpt = read_checkpoint(path)?;
    let mut model = ModelGraph::build(&ckpt.config)?;
    apply_params(&mut model, &ckpt)?;
    let adam = ckpt.optimizer.as_ref().map(|o| AdamState {
        m: o.m
            .iter()
            .map(|b| b.iter().map(|&x| S::of_f64(x as f64)).collect())
            .collect(),
        v: o.v
            .iter()
            .map(|b| b.iter().map(|&x| S::of_f64(x as f64)).collect())
            .collect(),
        t: o.t,
    });
    Ok((model, adam, ckpt.epoch))
}
