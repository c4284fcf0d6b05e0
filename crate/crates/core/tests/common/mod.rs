//! Test-side oracles, independent of the library's kernels: naive
//! direct-loop convolutions and central finite differences.

#![allow(dead_code)]
#![allow(clippy::too_many_arguments)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unmix_core::Tensor;

pub fn pad_left(kernel: usize, dilation: usize) -> usize {
    ((kernel - 1) * dilation) / 2
}

/// Direct quadruple-loop cross-correlation with zero padding:
/// out[co, t] = bias[co] + sum_{ci, j} w[co, ci, j] * x[ci, t + j*d - pl]
pub fn naive_conv1d(
    x: &[f64],
    c_in: usize,
    t_len: usize,
    w: &[f64],
    c_out: usize,
    kernel: usize,
    dilation: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let pl = pad_left(kernel, dilation) as isize;
    let mut out = vec![0.0; c_out * t_len];
    for co in 0..c_out {
        for t in 0..t_len {
            let mut acc = bias.map_or(0.0, |b| b[co]);
            for ci in 0..c_in {
                for j in 0..kernel {
                    let s = t as isize + (j * dilation) as isize - pl;
                    if s >= 0 && (s as usize) < t_len {
                        acc += w[(co * c_in + ci) * kernel + j] * x[ci * t_len + s as usize];
                    }
                }
            }
            out[co * t_len + t] = acc;
        }
    }
    out
}

/// Adjoint of [`naive_conv1d`] written as a scatter: every input sample
/// y[a, t] scatters w[a, b, j] to out[b, t + j*d - pl]. This is the
/// transpose of the conv's gather by construction.
pub fn naive_convt1d(
    y: &[f64],
    a_dim: usize,
    t_len: usize,
    w: &[f64],
    b_dim: usize,
    kernel: usize,
    dilation: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let pl = pad_left(kernel, dilation) as isize;
    let mut out = vec![0.0; b_dim * t_len];
    if let Some(bias) = bias {
        for (b, row) in out.chunks_mut(t_len).enumerate() {
            row.fill(bias[b]);
        }
    }
    for a in 0..a_dim {
        for t in 0..t_len {
            let v = y[a * t_len + t];
            for b in 0..b_dim {
                for j in 0..kernel {
                    // the conv's gather at output t reads input t + j*d - pl,
                    // so its adjoint scatters y[a, t] to exactly there
                    let s = t as isize + (j * dilation) as isize - pl;
                    if s >= 0 && (s as usize) < t_len {
                        out[b * t_len + s as usize] += w[(a * b_dim + b) * kernel + j] * v;
                    }
                }
            }
        }
    }
    out
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central finite differences of a scalar function at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let hi = f(&probe);
        probe[i] = x[i] - step;
        let lo = f(&probe);
        probe[i] = x[i];
        grad[i] = (hi - lo) / (2.0 * step);
    }
    grad
}

/// Largest mixed absolute/relative error between analytic and numeric
/// gradients: |a - n| / max(1, |a|, |n|).
pub fn max_grad_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / 1.0_f64.max(a.abs()).max(n.abs()))
        .fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
}

pub fn random_tensor(rng: &mut impl Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), random_vec(rng, n, scale)).unwrap()
}

/// Values bounded away from zero, for kinked activations.
pub fn random_tensor_off_zero(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag = 0.1 + 0.9 * rng.random::<f64>();
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}
