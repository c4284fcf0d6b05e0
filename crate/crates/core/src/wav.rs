//! Minimal RIFF/WAVE reader and writer: PCM16 (format 1) and IEEE
//! float32 (format 3), little-endian, 1–2 channels. Files are written
//! with a 16-byte fmt chunk and no fact chunk, so an empty signal is
//! exactly the 44-byte header.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Error)]
pub enum WavError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed wav ({path}): chunk '{chunk}': {detail}")]
    Format {
        path: String,
        chunk: String,
        detail: String,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavCodec {
    Pcm16,
    Float32,
}

fn io_err(path: &Path, source: io::Error) -> WavError {
    WavError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, chunk: &str, detail: impl Into<String>) -> WavError {
    WavError::Format {
        path: path.display().to_string(),
        chunk: chunk.to_string(),
        detail: detail.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        if end > self.bytes.len() {
            return None;
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes(b.try_into().unwrap()))
    }

    fn tag(&mut self) -> Option<[u8; 4]> {
        self.take(4).map(|b| b.try_into().unwrap())
    }
}

struct Fmt {
    codec: WavCodec,
    channels: usize,
    sample_rate: u32,
    block_align: usize,
}

/// Loads a wav file as a channel-major `[C, T]` tensor in [-1, 1]
/// (PCM16 samples are divided by 32768) plus its sample rate.
pub fn load_wav<S: Scalar>(path: impl AsRef<Path>) -> Result<(Tensor<S>, u32), WavError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };

    let riff = cur
        .tag()
        .ok_or_else(|| format_err(path, "RIFF", "file shorter than header"))?;
    if &riff != b"RIFF" {
        return Err(format_err(path, "RIFF", "missing RIFF magic"));
    }
    cur.u32()
        .ok_or_else(|| format_err(path, "RIFF", "truncated size field"))?;
    let wave = cur
        .tag()
        .ok_or_else(|| format_err(path, "WAVE", "truncated form type"))?;
    if &wave != b"WAVE" {
        return Err(format_err(path, "WAVE", "form type is not WAVE"));
    }

    let mut fmt: Option<Fmt> = None;
    let mut data: Option<&[u8]> = None;
    while cur.pos < bytes.len() {
        let Some(id) = cur.tag() else { break };
        let chunk_id = String::from_utf8_lossy(&id).to_string();
        let size = cur
            .u32()
            .ok_or_else(|| format_err(path, &chunk_id, "truncated chunk size"))? as usize;
        let body = cur
            .take(size)
            .ok_or_else(|| format_err(path, &chunk_id, "chunk body exceeds file"))?;
        if size % 2 == 1 {
            cur.take(1); // pad byte
        }
        match &id {
            b"fmt " => {
                let mut f = Cursor { bytes: body, pos: 0 };
                let audio_format = f
                    .u16()
                    .ok_or_else(|| format_err(path, "fmt ", "chunk too short"))?;
                let channels = f.u16().unwrap_or(0) as usize;
                let sample_rate = f.u32().unwrap_or(0);
                f.u32(); // byte rate
                let block_align = f.u16().unwrap_or(0) as usize;
                let bits = f.u16().unwrap_or(0);
                let codec = match (audio_format, bits) {
                    (1, 16) => WavCodec::Pcm16,
                    (3, 32) => WavCodec::Float32,
                    (fmt_code, bits) => {
                        return Err(format_err(
                            path,
                            "fmt ",
                            format!("unsupported format {fmt_code} / {bits}-bit (PCM16 or float32 only)"),
                        ))
                    }
                };
                if !(1..=2).contains(&channels) {
                    return Err(format_err(path, "fmt ", format!("{channels} channels (1-2 supported)")));
                }
                fmt = Some(Fmt {
                    codec,
                    channels,
                    sample_rate,
                    block_align,
                });
            }
            b"data" => {
                data = Some(body);
            }
            _ => {}
        }
    }

    let fmt = fmt.ok_or_else(|| format_err(path, "fmt ", "chunk missing"))?;
    let data = data.ok_or_else(|| format_err(path, "data", "chunk missing"))?;
    let bytes_per_sample = match fmt.codec {
        WavCodec::Pcm16 => 2,
        WavCodec::Float32 => 4,
    };
    let expect_align = bytes_per_sample * fmt.channels;
    if fmt.block_align != expect_align {
        return Err(format_err(
            path,
            "fmt ",
            format!("block align {} != {expect_align}", fmt.block_align),
        ));
    }
    if data.len() % expect_align != 0 {
        return Err(format_err(path, "data", "size is not a whole number of frames"));
    }

    let frames = data.len() / expect_align;
    let c = fmt.channels;
    let mut out = vec![S::zero(); c * frames];
    match fmt.codec {
        WavCodec::Pcm16 => {
            for t in 0..frames {
                for ch in 0..c {
                    let off = (t * c + ch) * 2;
                    let v = i16::from_le_bytes([data[off], data[off + 1]]);
                    out[ch * frames + t] = S::of_f64(v as f64 / 32768.0);
                }
            }
        }
        WavCodec::Float32 => {
            for t in 0..frames {
                for ch in 0..c {
                    let off = (t * c + ch) * 4;
                    let v = f32::from_le_bytes(data[off..off + 4].try_into().unwrap());
                    out[ch * frames + t] = S::of_f64(v as f64);
                }
            }
        }
    }
    Ok((Tensor::new(vec![c, frames], out)?, fmt.sample_rate))
}

/// Writes a `[C, T]` tensor. PCM16 emission clamps to [-1, 1] and rounds
/// to `v * 32768`, saturating at 32767.
pub fn write_wav<S: Scalar>(
    path: impl AsRef<Path>,
    signal: &Tensor<S>,
    sample_rate: u32,
    codec: WavCodec,
) -> Result<(), WavError> {
    let path = path.as_ref();
    let (c, frames) = signal.signal_dims()?;
    let bytes_per_sample: usize = match codec {
        WavCodec::Pcm16 => 2,
        WavCodec::Float32 => 4,
    };
    let block_align = (c * bytes_per_sample) as u16;
    let data_size = (frames * c * bytes_per_sample) as u32;

    let mut out = Vec::with_capacity(44 + data_size as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    let format_code: u16 = match codec {
        WavCodec::Pcm16 => 1,
        WavCodec::Float32 => 3,
    };
    out.extend_from_slice(&format_code.to_le_bytes());
    out.extend_from_slice(&(c as u16).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&((bytes_per_sample * 8) as u16).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());

    for t in 0..frames {
        for ch in 0..c {
            let v = signal.data()[ch * frames + t];
            match codec {
                WavCodec::Pcm16 => {
                    let clamped = v.as_f64().clamp(-1.0, 1.0);
                    let q = (clamped * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    out.extend_from_slice(&q.to_le_bytes());
                }
                WavCodec::Float32 => {
                    out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Linear-interpolation resampling at the `round(T * to / from)` grid.
/// Output sample t' reads source position `t' * from / to`, interpolating
/// between neighbours with edge clamping. A low-quality convenience:
/// pre-resampled input is the supported path.
pub fn resample_linear<S: Scalar>(x: &Tensor<S>, from_hz: u32, to_hz: u32) -> Tensor<S> {
    assert!(from_hz > 0 && to_hz > 0);
    if from_hz == to_hz {
        return x.clone();
    }
    let (c, t_len) = x.signal_dims().expect("resample expects [C, T]");
    let t_out = ((t_len as f64) * (to_hz as f64) / (from_hz as f64)).round() as usize;
    let mut data = Vec::with_capacity(c * t_out);
    let step = from_hz as f64 / to_hz as f64;
    for ch in 0..c {
        let row = x.row(ch);
        for t in 0..t_out {
            let pos = t as f64 * step;
            let i0 = (pos.floor() as usize).min(t_len.saturating_sub(1));
            let i1 = (i0 + 1).min(t_len.saturating_sub(1));
            let frac = pos - pos.floor();
            let v = row[i0].as_f64() * (1.0 - frac) + row[i1].as_f64() * frac;
            data.push(S::of_f64(v));
        }
    }
    Tensor::new(vec![c, t_out], data).expect("resample shape")
}
