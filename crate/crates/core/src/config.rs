use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
#[error("invalid model config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    WaveUnet,
    Dilated,
    DilatedDense,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Arch::WaveUnet => "wave_unet",
            Arch::Dilated => "dilated",
            Arch::DilatedDense => "dilated_dense",
        };
        f.write_str(s)
    }
}

impl FromStr for Arch {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wave_unet" => Ok(Arch::WaveUnet),
            "dilated" => Ok(Arch::Dilated),
            "dilated_dense" => Ok(Arch::DilatedDense),
            other => Err(ConfigError(format!(
                "unknown arch '{other}' (expected wave_unet | dilated | dilated_dense)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DilationMode {
    Adaptive,
    Fixed(usize),
}

impl fmt::Display for DilationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DilationMode::Adaptive => f.write_str("adaptive"),
            DilationMode::Fixed(n) => write!(f, "fixed:{n}"),
        }
    }
}

impl FromStr for DilationMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "adaptive" {
            return Ok(DilationMode::Adaptive);
        }
        if let Some(n) = s.strip_prefix("fixed:") {
            let n: usize = n
                .parse()
                .map_err(|_| ConfigError(format!("bad fixed dilation '{n}'")))?;
            if n < 1 {
                return Err(ConfigError("fixed dilation must be >= 1".into()));
            }
            return Ok(DilationMode::Fixed(n));
        }
        Err(ConfigError(format!(
            "unknown dilation mode '{s}' (expected adaptive | fixed:<n>)"
        )))
    }
}

/// Full architectural description of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub num_blocks: usize,
    pub layers_per_block: usize,
    pub base_filters: usize,
    pub kernel_down: usize,
    pub kernel_up: usize,
    pub dilation_mode: DilationMode,
    pub leaky_slope: f64,
    pub num_sources: usize,
    pub channels: usize,
    pub segment_length: usize,
    pub init_seed: u64,
    /// Upstream blocks mirror the paired downstream block's dilations in
    /// reversed order when true (identical order when false).
    pub upstream_reverse_dilations: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::DilatedDense,
            num_blocks: 6,
            layers_per_block: 3,
            base_filters: 15,
            kernel_down: 15,
            kernel_up: 5,
            dilation_mode: DilationMode::Adaptive,
            leaky_slope: 0.2,
            num_sources: 4,
            channels: 2,
            segment_length: 16_384,
            init_seed: 0,
            upstream_reverse_dilations: true,
        }
    }
}

impl ModelConfig {
    /// Validates hard constraints; returns human-readable warnings for
    /// soft ones (e.g. a receptive field smaller than the segment).
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        if self.num_blocks < 1 {
            return Err(ConfigError("num_blocks must be >= 1".into()));
        }
        if self.layers_per_block < 1 {
            return Err(ConfigError("layers_per_block must be >= 1".into()));
        }
        if self.base_filters < 1 {
            return Err(ConfigError("base_filters must be >= 1".into()));
        }
        if self.kernel_down < 1 || self.kernel_up < 1 {
            return Err(ConfigError("kernel sizes must be >= 1".into()));
        }
        if self.num_sources < 2 {
            return Err(ConfigError("num_sources must be >= 2".into()));
        }
        if self.channels < 1 {
            return Err(ConfigError("channels must be >= 1".into()));
        }
        if self.segment_length < 1 {
            return Err(ConfigError("segment_length must be >= 1".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(ConfigError("leaky_slope must lie in (0, 1)".into()));
        }
        if let DilationMode::Fixed(n) = self.dilation_mode {
            if n < 1 {
                return Err(ConfigError("fixed dilation must be >= 1".into()));
            }
        }
        let mut warnings = Vec::new();
        if self.arch != Arch::WaveUnet {
            let sched = crate::schedule::dilation_schedule(
                self.num_blocks,
                self.layers_per_block,
                self.dilation_mode,
            );
            let rf = crate::schedule::receptive_field(&sched, self.kernel_down);
            if rf < self.segment_length {
                warnings.push(format!(
                    "receptive field {rf} is smaller than the {}-sample segment",
                    self.segment_length
                ));
            }
        }
        Ok(warnings)
    }
}
