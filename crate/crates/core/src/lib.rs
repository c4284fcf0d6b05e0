//! Time-domain music source separation.
//!
//! Three architectures over a shared tape-based autodiff core: the
//! Wave-U-Net resampling baseline, a Dilated U-Net that swaps resampling
//! for exponentially growing dilation rates, and a Dilated Dense U-Net
//! that adds dense intra-block and cross-path connectivity. Training,
//! separation, and windowed-SDR evaluation are included.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`): training
//! runs in `f32`, oracle and gradient tests in `f64`.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod graph;
mod kernels;
pub mod optim;
pub mod scalar;
pub mod schedule;
pub mod synth;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod wav;

pub use config::{Arch, DilationMode, ModelConfig};
pub use graph::{ModelGraph, Param};
pub use scalar::Scalar;
pub use schedule::{dilation_schedule, receptive_field, DilationSchedule};
pub use tape::{Tape, Var};
pub use tensor::{Tensor, TensorError};
pub use train::TrainConfig;

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Tape32 = Tape<f32>;
pub type Tape64 = Tape<f64>;
pub type ModelGraph32 = ModelGraph<f32>;
pub type ModelGraph64 = ModelGraph<f64>;
