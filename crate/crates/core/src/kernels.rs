//! Inner loops of the 1-D convolution pair.
//!
//! A stride-1 same-padded (transposed) convolution is a sum over kernel
//! taps of channel-mixing matrix products on time-shifted views, so each
//! pass runs one GEMM per tap with clipped column ranges standing in for
//! zero padding. Shapes: signals `[C, T]` row-major, conv weights
//! `[C_out, C_in, k]`, transposed-conv weights `[C_in, C_out, k]`.

#![allow(clippy::too_many_arguments)]

use crate::scalar::Scalar;

/// Left padding for same-length output; the remainder pads the right.
pub fn pad_left(kernel: usize, dilation: usize) -> usize {
    ((kernel - 1) * dilation) / 2
}

/// Tap offset of tap `j`: output index `t` reads input index `t + off`.
fn tap_offset(j: usize, dilation: usize, pl: usize) -> isize {
    (j * dilation) as isize - pl as isize
}

/// Output rows `[lo, lo+n)` read input rows `[lo+off, lo+off+n)`, both in
/// `[0, t_len)`. Returns `None` when the ranges do not overlap.
fn gather_range(t_len: usize, off: isize) -> Option<(usize, usize)> {
    let lo = 0.max(-off);
    let hi = (t_len as isize).min(t_len as isize - off);
    if hi <= lo {
        return None;
    }
    Some((lo as usize, (hi - lo) as usize))
}

/// out[co, t] = bias[co] + sum_{ci, j} w[co, ci, j] * x[ci, t + off_j]
pub fn conv1d_fwd<S: Scalar>(
    x: &[S],
    c_in: usize,
    t_len: usize,
    w: &[S],
    c_out: usize,
    kernel: usize,
    dilation: usize,
    bias: Option<&[S]>,
    out: &mut [S],
) {
    debug_assert_eq!(x.len(), c_in * t_len);
    debug_assert_eq!(w.len(), c_out * c_in * kernel);
    debug_assert_eq!(out.len(), c_out * t_len);
    for (co, row) in out.chunks_mut(t_len).enumerate() {
        let b = bias.map_or(S::zero(), |b| b[co]);
        row.fill(b);
    }
    let pl = pad_left(kernel, dilation);
    for j in 0..kernel {
        let off = tap_offset(j, dilation, pl);
        let Some((lo, n)) = gather_range(t_len, off) else {
            continue;
        };
        unsafe {
            S::gemm(
                c_out,
                c_in,
                n,
                S::one(),
                w.as_ptr().add(j),
                (c_in * kernel) as isize,
                kernel as isize,
                x.as_ptr().add((lo as isize + off) as usize),
                t_len as isize,
                1,
                S::one(),
                out.as_mut_ptr().add(lo),
                t_len as isize,
                1,
            );
        }
    }
}

/// dx[ci, s] += sum_{co, j} w[co, ci, j] * g[co, s - off_j]
pub fn conv1d_dinput<S: Scalar>(
    g: &[S],
    c_out: usize,
    t_len: usize,
    w: &[S],
    c_in: usize,
    kernel: usize,
    dilation: usize,
    dx: &mut [S],
) {
    debug_assert_eq!(g.len(), c_out * t_len);
    debug_assert_eq!(dx.len(), c_in * t_len);
    let pl = pad_left(kernel, dilation);
    for j in 0..kernel {
        let off = tap_offset(j, dilation, pl);
        let Some((lo, n)) = gather_range(t_len, -off) else {
            continue;
        };
        unsafe {
            S::gemm(
                c_in,
                c_out,
                n,
                S::one(),
                w.as_ptr().add(j),
                kernel as isize,
                (c_in * kernel) as isize,
                g.as_ptr().add((lo as isize - off) as usize),
                t_len as isize,
                1,
                S::one(),
                dx.as_mut_ptr().add(lo),
                t_len as isize,
                1,
            );
        }
    }
}

/// dw[co, ci, j] += sum_t g[co, t] * x[ci, t + off_j]
pub fn conv1d_dweight<S: Scalar>(
    g: &[S],
    c_out: usize,
    t_len: usize,
    x: &[S],
    c_in: usize,
    kernel: usize,
    dilation: usize,
    dw: &mut [S],
) {
    debug_assert_eq!(dw.len(), c_out * c_in * kernel);
    let pl = pad_left(kernel, dilation);
    for j in 0..kernel {
        let off = tap_offset(j, dilation, pl);
        let Some((lo, n)) = gather_range(t_len, off) else {
            continue;
        };
        unsafe {
            S::gemm(
                c_out,
                n,
                c_in,
                S::one(),
                g.as_ptr().add(lo),
                t_len as isize,
                1,
                x.as_ptr().add((lo as isize + off) as usize),
                1,
                t_len as isize,
                S::one(),
                dw.as_mut_ptr().add(j),
                (c_in * kernel) as isize,
                kernel as isize,
            );
        }
    }
}

/// out[b, s] = bias[b] + sum_{a, j} w[a, b, j] * x[a, s - off_j]
///
/// This is the exact adjoint of [`conv1d_fwd`] with the same geometry:
/// correlation with the taps reversed, padded on the opposite side.
pub fn convt1d_fwd<S: Scalar>(
    x: &[S],
    a_dim: usize,
    t_len: usize,
    w: &[S],
    b_dim: usize,
    kernel: usize,
    dilation: usize,
    bias: Option<&[S]>,
    out: &mut [S],
) {
    debug_assert_eq!(x.len(), a_dim * t_len);
    debug_assert_eq!(w.len(), a_dim * b_dim * kernel);
    debug_assert_eq!(out.len(), b_dim * t_len);
    for (b, row) in out.chunks_mut(t_len).enumerate() {
        let v = bias.map_or(S::zero(), |bs| bs[b]);
        row.fill(v);
    }
    let pl = pad_left(kernel, dilation);
    for j in 0..kernel {
        let off = tap_offset(j, dilation, pl);
        let Some((lo, n)) = gather_range(t_len, -off) else {
            continue;
        };
        unsafe {
            S::gemm(
                b_dim,
                a_dim,
                n,
                S::one(),
                w.as_ptr().add(j),
                kernel as isize,
                (b_dim * kernel) as isize,
                x.as_ptr().add((lo as isize - off) as usize),
                t_len as isize,
                1,
                S::one(),
                out.as_mut_ptr().add(lo),
                t_len as isize,
                1,
            );
        }
    }
}

/// dx[a, t] += sum_{b, j} w[a, b, j] * g[b, t + off_j]
pub fn convt1d_dinput<S: Scalar>(
    g: &[S],
    b_dim: usize,
    t_len: usize,
    w: &[S],
    a_dim: usize,
    kernel: usize,
    dilation: usize,
    dx: &mut [S],
) {
    debug_assert_eq!(g.len(), b_dim * t_len);
    debug_assert_eq!(dx.len(), a_dim * t_len);
    let pl = pad_left(kernel, dilation);
    for j in 0..kernel {
        let off = tap_offset(j, dilation, pl);
        let Some((lo, n)) = gather_range(t_len, off) else {
            continue;
        };
        unsafe {
            S::gemm(
                a_dim,
                b_dim,
                n,
                S::one(),
                w.as_ptr().add(j),
                (b_dim * kernel) as isize,
                kernel as isize,
                g.as_ptr().add((lo as isize + off) as usize),
                t_len as isize,
                1,
                S::one(),
                dx.as_mut_ptr().add(lo),
                t_len as isize,
                1,
            );
        }
    }
}

/// dw[a, b, j] += sum_t x[a, t] * g[b, t + off_j]
pub fn convt1d_dweight<S: Scalar>(
    g: &[S],
    b_dim: usize,
    t_len: usize,
    x: &[S],
    a_dim: usize,
    kernel: usize,
    dilation: usize,
    dw: &mut [S],
) {
    debug_assert_eq!(dw.len(), a_dim * b_dim * kernel);
    let pl = pad_left(kernel, dilation);
    for j in 0..kernel {
        let off = tap_offset(j, dilation, pl);
        let Some((lo, n)) = gather_range(t_len, off) else {
            continue;
        };
        unsafe {
            S::gemm(
                a_dim,
                n,
                b_dim,
                S::one(),
                x.as_ptr().add(lo),
                t_len as isize,
                1,
                g.as_ptr().add((lo as isize + off) as usize),
                1,
                t_len as isize,
                S::one(),
                dw.as_mut_ptr().add(j),
                (b_dim * kernel) as isize,
                kernel as isize,
            );
        }
    }
}

/// db[r] += sum_t g[r, t]
pub fn row_sums_acc<S: Scalar>(g: &[S], rows: usize, t_len: usize, db: &mut [S]) {
    debug_assert_eq!(g.len(), rows * t_len);
    debug_assert_eq!(db.len(), rows);
    for (r, row) in g.chunks(t_len).enumerate() {
        let mut acc = S::zero();
        for &v in row {
            acc += v;
        }
        db[r] += acc;
    }
}
