//! Network assembly: layer topology, seeded parameter initialization, and
//! forward execution on a tape for the three architectures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Arch, ConfigError, ModelConfig};
use crate::scalar::Scalar;
use crate::schedule::{dilation_schedule, DilationSchedule};
use crate::tape::{Tape, Var};
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("mixture has {got} channels, model expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("segment length {t} is not divisible by 2^12, required by the resampling ladder")]
    UndivisibleLength { t: usize },
}

/// Index into a graph's parameter list.
pub type ParamId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Param<S> {
    pub name: String,
    pub tensor: Tensor<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerKind {
    Conv {
        weight: ParamId,
        bias: ParamId,
        kernel: usize,
        dilation: usize,
    },
    ConvTranspose {
        weight: ParamId,
        bias: ParamId,
        kernel: usize,
        dilation: usize,
    },
    Decimate2,
    UpsampleLinear2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceRef {
    Mixture,
    Layer(usize),
}

/// One node of the topology. Multiple inputs are concatenated along the
/// channel axis in listed order before the op runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDesc {
    pub name: String,
    pub kind: LayerKind,
    pub inputs: Vec<SourceRef>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: Option<Activation>,
}

pub struct ModelGraph<S> {
    config: ModelConfig,
    layers: Vec<LayerDesc>,
    /// Layer indices of the K-1 source heads, in source order.
    heads: Vec<usize>,
    params: Vec<Param<S>>,
}

struct Builder<S> {
    layers: Vec<LayerDesc>,
    params: Vec<Param<S>>,
    rng: ChaCha8Rng,
}

impl<S: Scalar> Builder<S> {
    fn new(seed: u64) -> Self {
        Builder {
            layers: Vec::new(),
            params: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn weight(&mut self, name: String, shape: &[usize], fan_in: usize, fan_out: usize) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| S::of_f64((2.0 * self.rng.random::<f64>() - 1.0) * bound))
            .collect();
        self.push_param(name, Tensor::new(shape.to_vec(), data).expect("weight shape"))
    }

    fn bias(&mut self, name: String, c_out: usize) -> ParamId {
        self.push_param(name, Tensor::zeros(&[c_out]))
    }

    fn push_param(&mut self, name: String, tensor: Tensor<S>) -> ParamId {
        debug_assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter name {name}"
        );
        self.params.push(Param { name, tensor });
        self.params.len() - 1
    }

    #[allow(clippy::too_many_arguments)]
    fn conv(
        &mut self,
        name: &str,
        inputs: Vec<SourceRef>,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        dilation: usize,
        activation: Option<Activation>,
    ) -> usize {
        let weight = self.weight(
            format!("{name}.weight"),
            &[out_ch, in_ch, kernel],
            in_ch * kernel,
            out_ch * kernel,
        );
        let bias = self.bias(format!("{name}.bias"), out_ch);
        self.push_layer(LayerDesc {
            name: name.to_string(),
            kind: LayerKind::Conv {
                weight,
                bias,
                kernel,
                dilation,
            },
            inputs,
            in_channels: in_ch,
            out_channels: out_ch,
            activation,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn conv_transpose(
        &mut self,
        name: &str,
        inputs: Vec<SourceRef>,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        dilation: usize,
        activation: Option<Activation>,
    ) -> usize {
        let weight = self.weight(
            format!("{name}.weight"),
            &[in_ch, out_ch, kernel],
            in_ch * kernel,
            out_ch * kernel,
        );
        let bias = self.bias(format!("{name}.bias"), out_ch);
        self.push_layer(LayerDesc {
            name: name.to_string(),
            kind: LayerKind::ConvTranspose {
                weight,
                bias,
                kernel,
                dilation,
            },
            inputs,
            in_channels: in_ch,
            out_channels: out_ch,
            activation,
        })
    }

    fn resample(&mut self, name: &str, kind: LayerKind, input: SourceRef, ch: usize) -> usize {
        self.push_layer(LayerDesc {
            name: name.to_string(),
            kind,
            inputs: vec![input],
            in_channels: ch,
            out_channels: ch,
            activation: None,
        })
    }

    fn push_layer(&mut self, desc: LayerDesc) -> usize {
        self.layers.push(desc);
        self.layers.len() - 1
    }
}

/// Dilated U-Net (plain skips, no intra-block density).
pub fn build_dilated_unet<S: Scalar>(config: &ModelConfig) -> Result<ModelGraph<S>, ModelError> {
    build_dilated_family(config, false)
}

/// Dilated Dense U-Net: dense blocks with transitions, dense bottleneck,
/// and the cross-path skip concatenated into every upstream block layer.
pub fn build_dilated_dense_unet<S: Scalar>(
    config: &ModelConfig,
) -> Result<ModelGraph<S>, ModelError> {
    build_dilated_family(config, true)
}

fn build_dilated_family<S: Scalar>(
    config: &ModelConfig,
    dense: bool,
) -> Result<ModelGraph<S>, ModelError> {
    config.validate()?;
    let (blocks, layers_per_block, f) = (
        config.num_blocks,
        config.layers_per_block,
        config.base_filters,
    );
    let sched = dilation_schedule(blocks, layers_per_block, config.dilation_mode);
    let act = Some(Activation::LeakyRelu);
    let mut b = Builder::new(config.init_seed);

    let mut prev = SourceRef::Mixture;
    let mut prev_ch = config.channels;
    // Skip source per downstream block: last layer output, or the
    // transition output in the dense variant.
    let mut skips: Vec<(SourceRef, usize)> = Vec::with_capacity(blocks);

    for blk in 1..=blocks {
        let width = f * blk;
        let dims = sched.block(blk - 1);
        if dense {
            let block_input = prev;
            let block_input_ch = prev_ch;
            let mut members = vec![block_input];
            for l in 1..=layers_per_block {
                let in_ch = block_input_ch + (l - 1) * width;
                let idx = b.conv(
                    &format!("down.b{blk}.l{l}"),
                    members.clone(),
                    in_ch,
                    width,
                    config.kernel_down,
                    dims[l - 1],
                    act,
                );
                members.push(SourceRef::Layer(idx));
            }
            let trans_in = block_input_ch + layers_per_block * width;
            let idx = b.conv(
                &format!("down.b{blk}.transition"),
                members,
                trans_in,
                width,
                1,
                1,
                act,
            );
            prev = SourceRef::Layer(idx);
        } else {
            for l in 1..=layers_per_block {
                let idx = b.conv(
                    &format!("down.b{blk}.l{l}"),
                    vec![prev],
                    prev_ch,
                    width,
                    config.kernel_down,
                    dims[l - 1],
                    act,
                );
                prev = SourceRef::Layer(idx);
                prev_ch = width;
            }
        }
        prev_ch = width;
        skips.push((prev, width));
    }

    // Bottleneck: three dilation-1 layers one ladder step wider. The dense
    // variant densely connects them; its output is the last layer (no
    // transition), keeping the width identical to the plain variant.
    let bottleneck_width = f * (blocks + 1);
    if dense {
        let block_input = prev;
        let block_input_ch = prev_ch;
        let mut members = vec![block_input];
        for l in 1..=3 {
            let in_ch = block_input_ch + (l - 1) * bottleneck_width;
            let idx = b.conv(
                &format!("bottleneck.l{l}"),
                members.clone(),
                in_ch,
                bottleneck_width,
                config.kernel_down,
                1,
                act,
            );
            members.push(SourceRef::Layer(idx));
        }
        prev = *members.last().unwrap();
    } else {
        for l in 1..=3 {
            let idx = b.conv(
                &format!("bottleneck.l{l}"),
                vec![prev],
                prev_ch,
                bottleneck_width,
                config.kernel_down,
                1,
                act,
            );
            prev = SourceRef::Layer(idx);
            prev_ch = bottleneck_width;
        }
    }
    prev_ch = bottleneck_width;

    for up in 1..=blocks {
        let paired = blocks + 1 - up;
        let width = f * paired;
        let (skip, skip_ch) = skips[paired - 1];
        let mut dims: Vec<usize> = sched.block(paired - 1).to_vec();
        if config.upstream_reverse_dilations {
            dims.reverse();
        }
        if dense {
            let block_input = prev;
            let block_input_ch = prev_ch;
            let mut members = vec![block_input, skip];
            for l in 1..=layers_per_block {
                let in_ch = block_input_ch + skip_ch + (l - 1) * width;
                let idx = b.conv_transpose(
                    &format!("up.b{up}.l{l}"),
                    members.clone(),
                    in_ch,
                    width,
                    config.kernel_up,
                    dims[l - 1],
                    act,
                );
                members.push(SourceRef::Layer(idx));
            }
            let trans_in = block_input_ch + skip_ch + layers_per_block * width;
            let idx = b.conv(
                &format!("up.b{up}.transition"),
                members,
                trans_in,
                width,
                1,
                1,
                act,
            );
            prev = SourceRef::Layer(idx);
        } else {
            for l in 1..=layers_per_block {
                let (inputs, in_ch) = if l == 1 {
                    (vec![prev, skip], prev_ch + skip_ch)
                } else {
                    (vec![prev], prev_ch)
                };
                let idx = b.conv_transpose(
                    &format!("up.b{up}.l{l}"),
                    inputs,
                    in_ch,
                    width,
                    config.kernel_up,
                    dims[l - 1],
                    act,
                );
                prev = SourceRef::Layer(idx);
                prev_ch = width;
            }
        }
        prev_ch = width;
    }

    let heads = build_heads(&mut b, config, prev, prev_ch);
    Ok(ModelGraph {
        config: config.clone(),
        layers: b.layers,
        heads,
        params: b.params,
    })
}

/// Wave-U-Net baseline: 12 conv + decimate stages down, 12 upsample +
/// conv stages up, per-depth skip concatenations.
pub fn build_wave_unet_baseline<S: Scalar>(
    config: &ModelConfig,
) -> Result<ModelGraph<S>, ModelError> {
    config.validate()?;
    const DEPTH: usize = 12;
    if !config.segment_length.is_multiple_of(1 << DEPTH) {
        return Err(ModelError::UndivisibleLength {
            t: config.segment_length,
        });
    }
    let f = config.base_filters;
    let act = Some(Activation::LeakyRelu);
    let mut b = Builder::new(config.init_seed);

    let mut prev = SourceRef::Mixture;
    let mut prev_ch = config.channels;
    let mut skips = Vec::with_capacity(DEPTH);
    for i in 1..=DEPTH {
        let idx = b.conv(
            &format!("down.l{i}"),
            vec![prev],
            prev_ch,
            f * i,
            config.kernel_down,
            1,
            act,
        );
        skips.push((SourceRef::Layer(idx), f * i));
        let dec = b.resample(
            &format!("down.dec{i}"),
            LayerKind::Decimate2,
            SourceRef::Layer(idx),
            f * i,
        );
        prev = SourceRef::Layer(dec);
        prev_ch = f * i;
    }

    let idx = b.conv(
        "bottleneck",
        vec![prev],
        prev_ch,
        f * (DEPTH + 1),
        config.kernel_down,
        1,
        act,
    );
    prev = SourceRef::Layer(idx);
    prev_ch = f * (DEPTH + 1);

    for i in (1..=DEPTH).rev() {
        let us = b.resample(
            &format!("up.us{i}"),
            LayerKind::UpsampleLinear2,
            prev,
            prev_ch,
        );
        let (skip, skip_ch) = skips[i - 1];
        let idx = b.conv(
            &format!("up.l{i}"),
            vec![SourceRef::Layer(us), skip],
            prev_ch + skip_ch,
            f * i,
            config.kernel_up,
            1,
            act,
        );
        prev = SourceRef::Layer(idx);
        prev_ch = f * i;
    }

    let heads = build_heads(&mut b, config, prev, prev_ch);
    Ok(ModelGraph {
        config: config.clone(),
        layers: b.layers,
        heads,
        params: b.params,
    })
}

fn build_heads<S: Scalar>(
    b: &mut Builder<S>,
    config: &ModelConfig,
    features: SourceRef,
    feature_ch: usize,
) -> Vec<usize> {
    (1..config.num_sources)
        .map(|k| {
            b.conv(
                &format!("head.{k}"),
                vec![features],
                feature_ch,
                config.channels,
                1,
                1,
                Some(Activation::Tanh),
            )
        })
        .collect()
}

/// Row of the `inspect` layer table.
#[derive(Debug, Clone)]
pub struct LayerInfo {
    pub index: usize,
    pub name: String,
    pub kind: String,
    pub kernel: usize,
    pub dilation: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub time_len: usize,
    pub receptive_field: usize,
}

impl<S: Scalar> ModelGraph<S> {
    pub fn build(config: &ModelConfig) -> Result<Self, ModelError> {
        match config.arch {
            Arch::WaveUnet => build_wave_unet_baseline(config),
            Arch::Dilated => build_dilated_unet(config),
            Arch::DilatedDense => build_dilated_dense_unet(config),
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerDesc] {
        &self.layers
    }

    pub fn head_layers(&self) -> &[usize] {
        &self.heads
    }

    pub fn params(&self) -> &[Param<S>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<S>] {
        &mut self.params
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    pub fn schedule(&self) -> DilationSchedule {
        dilation_schedule(
            self.config.num_blocks,
            self.config.layers_per_block,
            self.config.dilation_mode,
        )
    }

    /// Registers every parameter as a tape leaf, in parameter order.
    pub fn bind(&self, tape: &mut Tape<S>, requires_grad: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| tape.leaf(p.tensor.clone(), requires_grad))
            .collect()
    }

    /// Runs the network on an already-bound mixture, returning the K
    /// source estimates (the last one is mixture minus the others).
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape<S>,
        mixture: Var,
        params: &[Var],
    ) -> Result<Vec<Var>, ModelError> {
        let (c, t) = tape.value(mixture).signal_dims()?;
        if c != self.config.channels {
            return Err(ModelError::ChannelMismatch {
                expected: self.config.channels,
                got: c,
            });
        }
        if self.config.arch == Arch::WaveUnet && t % (1 << 12) != 0 {
            return Err(ModelError::UndivisibleLength { t });
        }

        let mut outs: Vec<Var> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let resolved: Vec<Var> = layer
                .inputs
                .iter()
                .map(|r| match r {
                    SourceRef::Mixture => mixture,
                    SourceRef::Layer(i) => outs[*i],
                })
                .collect();
            let input = if resolved.len() == 1 {
                resolved[0]
            } else {
                tape.concat_channels(&resolved)?
            };
            let mut out = match layer.kind {
                LayerKind::Conv {
                    weight,
                    bias,
                    dilation,
                    ..
                } => tape.conv1d(input, params[weight], Some(params[bias]), dilation)?,
                LayerKind::ConvTranspose {
                    weight,
                    bias,
                    dilation,
                    ..
                } => tape.conv1d_transpose(input, params[weight], Some(params[bias]), dilation)?,
                LayerKind::Decimate2 => tape.decimate2(input)?,
                LayerKind::UpsampleLinear2 => tape.upsample_linear2(input)?,
            };
            out = match layer.activation {
                Some(Activation::LeakyRelu) => {
                    tape.leaky_relu(out, S::of_f64(self.config.leaky_slope))
                }
                Some(Activation::Tanh) => tape.tanh(out),
                None => out,
            };
            outs.push(out);
        }

        let mut sources: Vec<Var> = self.heads.iter().map(|&i| outs[i]).collect();
        let mut sum = sources[0];
        for &s in &sources[1..] {
            sum = tape.add(sum, s)?;
        }
        let residual = tape.sub(mixture, sum)?;
        sources.push(residual);
        Ok(sources)
    }

    /// Inference on one segment: returns stacked estimates `[K, C, T]`.
    pub fn forward(&self, mixture: &Tensor<S>) -> Result<Tensor<S>, ModelError> {
        let (c, t) = mixture.signal_dims()?;
        let mut tape = Tape::new();
        let params = self.bind(&mut tape, false);
        let mix = tape.leaf(mixture.clone(), false);
        let sources = self.forward_on_tape(&mut tape, mix, &params)?;
        let mut data = Vec::with_capacity(self.config.num_sources * c * t);
        for &s in &sources {
            data.extend_from_slice(tape.value(s).data());
        }
        Ok(Tensor::new(vec![self.config.num_sources, c, t], data)?)
    }

    /// Separates a full-length mixture by tiling non-overlapping segments
    /// (the final partial segment is zero-padded, then trimmed).
    pub fn separate(&self, mixture: &Tensor<S>) -> Result<Tensor<S>, ModelError> {
        let (c, t_total) = mixture.signal_dims()?;
        let seg = self.config.segment_length;
        let k = self.config.num_sources;
        let mut out = Tensor::zeros(&[k, c, t_total]);
        let mut start = 0;
        while start < t_total {
            let n = seg.min(t_total - start);
            let mut tile = Tensor::zeros(&[c, seg]);
            for ch in 0..c {
                let src = &mixture.data()[ch * t_total + start..ch * t_total + start + n];
                tile.data_mut()[ch * seg..ch * seg + n].copy_from_slice(src);
            }
            let est = self.forward(&tile)?;
            for kk in 0..k {
                for ch in 0..c {
                    let src = &est.data()[(kk * c + ch) * seg..(kk * c + ch) * seg + n];
                    let dst_off = (kk * c + ch) * t_total + start;
                    out.data_mut()[dst_off..dst_off + n].copy_from_slice(src);
                }
            }
            start += n;
        }
        Ok(out)
    }

    /// Layer table with per-layer time lengths (at the configured segment
    /// length) and the growing composite receptive field.
    pub fn describe(&self) -> Vec<LayerInfo> {
        let mut infos = Vec::with_capacity(self.layers.len());
        let mut time: Vec<usize> = Vec::with_capacity(self.layers.len());
        let mut rf: Vec<(usize, usize)> = Vec::with_capacity(self.layers.len()); // (rf, stride)
        for (i, layer) in self.layers.iter().enumerate() {
            // concatenated inputs share a time length and stride; the
            // receptive field is the widest of the wired paths
            let resolved: Vec<(usize, (usize, usize))> = layer
                .inputs
                .iter()
                .map(|r| match r {
                    SourceRef::Mixture => (self.config.segment_length, (1, 1)),
                    SourceRef::Layer(j) => (time[*j], rf[*j]),
                })
                .collect();
            let in_time = resolved.first().map_or(self.config.segment_length, |r| r.0);
            let in_rf = resolved
                .iter()
                .map(|r| r.1)
                .max_by_key(|&(r, _)| r)
                .unwrap_or((1, 1));
            let (kernel, dilation, out_time, out_rf) = match layer.kind {
                LayerKind::Conv {
                    kernel, dilation, ..
                }
                | LayerKind::ConvTranspose {
                    kernel, dilation, ..
                } => {
                    let (r, s) = in_rf;
                    (kernel, dilation, in_time, (r + (kernel - 1) * dilation * s, s))
                }
                LayerKind::Decimate2 => {
                    let (r, s) = in_rf;
                    (0, 0, in_time.div_ceil(2), (r, s * 2))
                }
                LayerKind::UpsampleLinear2 => {
                    let (r, s) = in_rf;
                    (0, 0, in_time * 2, (r, (s / 2).max(1)))
                }
            };
            time.push(out_time);
            rf.push(out_rf);
            let kind = match layer.kind {
                LayerKind::Conv { .. } => "conv",
                LayerKind::ConvTranspose { .. } => "conv_t",
                LayerKind::Decimate2 => "decimate2",
                LayerKind::UpsampleLinear2 => "upsample2",
            };
            infos.push(LayerInfo {
                index: i,
                name: layer.name.clone(),
                kind: kind.to_string(),
                kernel,
                dilation,
                in_channels: layer.in_channels,
                out_channels: layer.out_channels,
                time_len: out_time,
                receptive_field: out_rf.0,
            });
        }
        infos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config(arch: Arch) -> ModelConfig {
        ModelConfig {
            arch,
            num_blocks: 2,
            layers_per_block: 3,
            base_filters: 4,
            num_sources: 2,
            channels: 1,
            segment_length: 64,
            ..Default::default()
        }
    }

    #[test]
    fn plain_downstream_channel_ladder() {
        let cfg = ModelConfig {
            arch: Arch::Dilated,
            ..Default::default()
        };
        let g: ModelGraph<f32> = ModelGraph::build(&cfg).unwrap();
        let widths: Vec<usize> = (1..=6)
            .map(|b| {
                g.layers()
                    .iter()
                    .find(|l| l.name == format!("down.b{b}.l3"))
                    .unwrap()
                    .out_channels
            })
            .collect();
        assert_eq!(widths, vec![15, 30, 45, 60, 75, 90]);
        let bn = g.layers().iter().find(|l| l.name == "bottleneck.l1").unwrap();
        assert_eq!(bn.out_channels, 105);
    }

    #[test]
    fn builds_are_deterministic() {
        let cfg = toy_config(Arch::DilatedDense);
        let a: ModelGraph<f32> = ModelGraph::build(&cfg).unwrap();
        let b: ModelGraph<f32> = ModelGraph::build(&cfg).unwrap();
        assert_eq!(a.params().len(), b.params().len());
        for (pa, pb) in a.params().iter().zip(b.params()) {
            assert_eq!(pa.name, pb.name);
            assert_eq!(pa.tensor.data(), pb.tensor.data());
        }
    }

    #[test]
    fn dense_wiring_matches_closed_forms() {
        let cfg = toy_config(Arch::DilatedDense);
        let g: ModelGraph<f64> = ModelGraph::build(&cfg).unwrap();
        let f = cfg.base_filters;
        // downstream block 2: input f, growth 2f
        let g2 = 2 * f;
        for l in 1..=3 {
            let layer = g
                .layers()
                .iter()
                .find(|d| d.name == format!("down.b2.l{l}"))
                .unwrap();
            assert_eq!(layer.in_channels, f + (l - 1) * g2);
        }
        let trans = g
            .layers()
            .iter()
            .find(|d| d.name == "down.b2.transition")
            .unwrap();
        assert_eq!(trans.in_channels, f + 3 * g2);
        // upstream block 1: input 3f (bottleneck), skip 2f, growth 2f
        for l in 1..=3 {
            let layer = g
                .layers()
                .iter()
                .find(|d| d.name == format!("up.b1.l{l}"))
                .unwrap();
            assert_eq!(layer.in_channels, 3 * f + 2 * f + (l - 1) * 2 * f);
        }
    }

    #[test]
    fn dense_and_plain_share_topology_when_density_off() {
        let cfg = toy_config(Arch::Dilated);
        let plain: ModelGraph<f32> = build_dilated_unet(&cfg).unwrap();
        let family: ModelGraph<f32> = build_dilated_family(&cfg, false).unwrap();
        assert_eq!(plain.layers(), family.layers());
        assert_eq!(plain.params(), family.params());
    }

    #[test]
    fn wave_unet_structure() {
        let cfg = ModelConfig {
            arch: Arch::WaveUnet,
            segment_length: 4096,
            num_sources: 2,
            channels: 1,
            ..Default::default()
        };
        let g: ModelGraph<f32> = ModelGraph::build(&cfg).unwrap();
        let n_skip_concats = g
            .layers()
            .iter()
            .filter(|l| l.name.starts_with("up.l") && l.inputs.len() == 2)
            .count();
        assert_eq!(n_skip_concats, 12);
        // depth-i conv output lives at T / 2^(i-1); after its decimation T / 2^i
        let infos = g.describe();
        let bottleneck = infos.iter().find(|i| i.name == "bottleneck").unwrap();
        assert_eq!(bottleneck.time_len, 1);

        // at the default 16384-sample segment the bottleneck sees 4 samples
        let g16: ModelGraph<f32> = ModelGraph::build(&ModelConfig {
            segment_length: 16_384,
            ..cfg.clone()
        })
        .unwrap();
        let infos = g16.describe();
        assert_eq!(
            infos.iter().find(|i| i.name == "bottleneck").unwrap().time_len,
            4
        );

        let bad = ModelConfig {
            segment_length: 4100,
            ..cfg
        };
        assert!(matches!(
            build_wave_unet_baseline::<f32>(&bad),
            Err(ModelError::UndivisibleLength { .. })
        ));
    }

    #[test]
    fn forward_head_identity_and_range() {
        for arch in [Arch::Dilated, Arch::DilatedDense] {
            let cfg = toy_config(arch);
            let g: ModelGraph<f64> = ModelGraph::build(&cfg).unwrap();
            let mix = Tensor::new(
                vec![1, 64],
                (0..64).map(|i| ((i as f64) * 0.37).sin() * 0.8).collect(),
            )
            .unwrap();
            let out = g.forward(&mix).unwrap();
            assert_eq!(out.shape(), &[2, 1, 64]);
            let (est, resid) = out.data().split_at(64);
            assert!(est.iter().all(|v| v.abs() < 1.0), "tanh head range");
            for t in 0..64 {
                let sum = est[t] + resid[t];
                assert!((sum - mix.data()[t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_channel_mismatch() {
        let cfg = toy_config(Arch::Dilated);
        let g: ModelGraph<f64> = ModelGraph::build(&cfg).unwrap();
        let mix = Tensor::zeros(&[2, 64]);
        assert!(matches!(
            g.forward(&mix),
            Err(ModelError::ChannelMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn all_dilated_time_lengths_preserved() {
        let cfg = toy_config(Arch::DilatedDense);
        let g: ModelGraph<f64> = ModelGraph::build(&cfg).unwrap();
        for info in g.describe() {
            assert_eq!(info.time_len, 64, "layer {}", info.name);
        }
    }

    #[test]
    fn separate_trims_to_input_length() {
        let cfg = toy_config(Arch::Dilated);
        let g: ModelGraph<f64> = ModelGraph::build(&cfg).unwrap();
        // 150 samples: two full 64-tiles plus a 22-sample remainder
        let mix = Tensor::new(vec![1, 150], (0..150).map(|i| (i as f64 * 0.1).sin()).collect())
            .unwrap();
        let out = g.separate(&mix).unwrap();
        assert_eq!(out.shape(), &[2, 1, 150]);
        let (est, resid) = out.data().split_at(150);
        for t in 0..150 {
            assert!((est[t] + resid[t] - mix.data()[t]).abs() < 1e-12);
        }
    }
}
