use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("data length {got} does not match shape {shape:?} (expected {expected})")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("backward requires a scalar loss, got {numel} elements")]
    NonScalarLoss { numel: usize },
}

/// Dense row-major tensor. Signals are `[channels, time]`, conv weights
/// `[out_channels, in_channels, kernel]`, stacked sources `[K, C, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self, TensorError> {
        let expected = shape.iter().product::<usize>();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![S::zero(); n],
        }
    }

    pub fn filled(shape: &[usize], value: S) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn scalar(value: S) -> Self {
        Tensor {
            shape: vec![],
            data: vec![value],
        }
    }

    /// 1-D tensor from a plain vector.
    pub fn from_vec(data: Vec<S>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    /// Interprets the tensor as `[rows, row_len]` with `row_len` = last extent.
    pub fn row(&self, r: usize) -> &[S] {
        let len = *self.shape.last().expect("row() on rank-0 tensor");
        &self.data[r * len..(r + 1) * len]
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Shape check for signal tensors `[C, T]`.
    pub fn signal_dims(&self) -> Result<(usize, usize), TensorError> {
        match self.shape.as_slice() {
            &[c, t] => Ok((c, t)),
            other => Err(TensorError::Dimension(format!(
                "expected a [channels, time] signal, got shape {other:?}"
            ))),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|x| x.as_f64()).collect()
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Result<Self, TensorError> {
        Tensor::new(shape.to_vec(), data.iter().map(|&x| S::of_f64(x)).collect())
    }
}
