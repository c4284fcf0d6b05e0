//! Line-oriented `key = value` run configuration with `#` comments.
//! Unknown keys and bad values are rejected with their line number.
//! Precedence: built-in defaults < checkpoint config (on resume) <
//! config file < command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use unmix_core::{ModelConfig, TrainConfig};

#[derive(Debug)]
pub struct ConfigFileError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.path, self.line, self.message)
    }
}

impl std::error::Error for ConfigFileError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub precision: Precision,
    pub data_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            precision: Precision::F32,
            data_dir: None,
        }
    }
}

impl RunConfig {
    /// Applies a config file on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigFileError> {
        let err = |line: usize, message: String| ConfigFileError {
            path: path.display().to_string(),
            line,
            message,
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, format!("cannot read config: {e}")))?;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(line_no, format!("expected 'key = value', got '{raw}'")));
            };
            let (key, value) = (key.trim(), value.trim());
            self.apply_key(key, value)
                .map_err(|message| err(line_no, message))?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| format!("bad value '{value}' for {key}: {e}"))
        }
        match key {
            "arch" => self.model.arch = parse(key, value)?,
            "num_blocks" => self.model.num_blocks = parse(key, value)?,
            "layers_per_block" => self.model.layers_per_block = parse(key, value)?,
            "base_filters" => self.model.base_filters = parse(key, value)?,
            "kernel_down" => self.model.kernel_down = parse(key, value)?,
            "kernel_up" => self.model.kernel_up = parse(key, value)?,
            "dilation_mode" => self.model.dilation_mode = parse(key, value)?,
            "leaky_slope" => self.model.leaky_slope = parse(key, value)?,
            "num_sources" => self.model.num_sources = parse(key, value)?,
            "channels" => self.model.channels = parse(key, value)?,
            "segment_length" => self.model.segment_length = parse(key, value)?,
            "init_seed" => self.model.init_seed = parse(key, value)?,
            "upstream_reverse_dilations" => {
                self.model.upstream_reverse_dilations = parse(key, value)?
            }
            "lr" => self.train.lr = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "steps_per_epoch" => self.train.steps_per_epoch = parse(key, value)?,
            "seed" => self.train.seed = parse(key, value)?,
            "checkpoint_interval" => self.train.checkpoint_interval = parse(key, value)?,
            "val_batches" => self.train.val_batches = parse(key, value)?,
            "precision" => {
                self.precision = match value {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    other => return Err(format!("bad value '{other}' for precision (f32 | f64)")),
                }
            }
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }
}
