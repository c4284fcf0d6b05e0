//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Operations record themselves in forward order; `backward` replays them
//! in exact reverse order, accumulating gradients by addition so a value
//! consumed by several ops receives the sum of per-consumer gradients.

use crate::kernels;
use crate::scalar::Scalar;
use crate::tensor::{Tensor, TensorError};

/// Identity of a value on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

struct Node<S> {
    value: Tensor<S>,
    grad: Option<Vec<S>>,
    requires_grad: bool,
}

enum Op<S> {
    Conv1d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
        out: Var,
    },
    ConvTranspose1d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
        out: Var,
    },
    LeakyRelu {
        input: Var,
        slope: S,
        out: Var,
    },
    Tanh {
        input: Var,
        out: Var,
    },
    ConcatChannels {
        inputs: Vec<Var>,
        out: Var,
    },
    Decimate2 {
        input: Var,
        out: Var,
    },
    UpsampleLinear2 {
        input: Var,
        out: Var,
    },
    Mse {
        a: Var,
        b: Var,
        out: Var,
    },
    Add {
        a: Var,
        b: Var,
        out: Var,
    },
    Sub {
        a: Var,
        b: Var,
        out: Var,
    },
    Scale {
        input: Var,
        factor: S,
        out: Var,
    },
    Sum {
        input: Var,
        out: Var,
    },
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
    ops: Vec<Op<S>>,
    backward_done: bool,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            ops: Vec::new(),
            backward_done: false,
        }
    }

    /// Registers a leaf value. `requires_grad` marks it for gradient
    /// retrieval after `backward`.
    pub fn leaf(&mut self, value: Tensor<S>, requires_grad: bool) -> Var {
        self.push_node(value, requires_grad)
    }

    fn push_node(&mut self, value: Tensor<S>, requires_grad: bool) -> Var {
        let id = self.nodes.len();
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
        });
        Var(id)
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` loss w.r.t. `v`, if any flowed.
    pub fn grad(&self, v: Var) -> Option<&[S]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    // ── forward ops ──────────────────────────────────────────────────

    /// Stride-1 same-padded dilated cross-correlation.
    /// x: [C_in, T], w: [C_out, C_in, k], bias: [C_out] → [C_out, T].
    pub fn conv1d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
    ) -> Result<Var, TensorError> {
        let (c_in, t_len) = self.value(input).signal_dims()?;
        let (c_out, w_cin, kernel) = conv_weight_dims(self.value(weight))?;
        check_conv_args(c_in, w_cin, kernel, dilation)?;
        if let Some(b) = bias {
            check_bias(self.value(b), c_out)?;
        }
        let mut out = Tensor::zeros(&[c_out, t_len]);
        kernels::conv1d_fwd(
            self.value(input).data(),
            c_in,
            t_len,
            self.value(weight).data(),
            c_out,
            kernel,
            dilation,
            bias.map(|b| self.value(b).data()),
            out.data_mut(),
        );
        let out = self.push_node(out, false);
        self.ops.push(Op::Conv1d {
            input,
            weight,
            bias,
            dilation,
            out,
        });
        Ok(out)
    }

    /// Adjoint of [`Tape::conv1d`] with the same geometry.
    /// x: [C_in, T], w: [C_in, C_out, k], bias: [C_out] → [C_out, T].
    pub fn conv1d_transpose(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        dilation: usize,
    ) -> Result<Var, TensorError> {
        let (c_in, t_len) = self.value(input).signal_dims()?;
        let (w_cin, c_out, kernel) = conv_weight_dims(self.value(weight))?;
        check_conv_args(c_in, w_cin, kernel, dilation)?;
        if let Some(b) = bias {
            check_bias(self.value(b), c_out)?;
        }
        let mut out = Tensor::zeros(&[c_out, t_len]);
        kernels::convt1d_fwd(
            self.value(input).data(),
            c_in,
            t_len,
            self.value(weight).data(),
            c_out,
            kernel,
            dilation,
            bias.map(|b| self.value(b).data()),
            out.data_mut(),
        );
        let out = self.push_node(out, false);
        self.ops.push(Op::ConvTranspose1d {
            input,
            weight,
            bias,
            dilation,
            out,
        });
        Ok(out)
    }

    /// Elementwise max(x, slope * x), slope in (0, 1).
    pub fn leaky_relu(&mut self, input: Var, slope: S) -> Var {
        let out = self.value(input).map(|x| x.max(slope * x));
        let out = self.push_node(out, false);
        self.ops.push(Op::LeakyRelu { input, slope, out });
        out
    }

    pub fn tanh(&mut self, input: Var) -> Var {
        let out = self.value(input).map(|x| x.tanh());
        let out = self.push_node(out, false);
        self.ops.push(Op::Tanh { input, out });
        out
    }

    /// Channel-axis concatenation of `[C_i, T]` signals sharing `T`.
    pub fn concat_channels(&mut self, inputs: &[Var]) -> Result<Var, TensorError> {
        if inputs.is_empty() {
            return Err(TensorError::Parameter(
                "concat_channels needs at least one input".into(),
            ));
        }
        let (_, t_len) = self.value(inputs[0]).signal_dims()?;
        let mut c_total = 0;
        for &v in inputs {
            let (c, t) = self.value(v).signal_dims()?;
            if t != t_len {
                return Err(TensorError::Dimension(format!(
                    "concat_channels: time length {t} != {t_len}"
                )));
            }
            c_total += c;
        }
        let mut data = Vec::with_capacity(c_total * t_len);
        for &v in inputs {
            data.extend_from_slice(self.value(v).data());
        }
        let out = Tensor::new(vec![c_total, t_len], data)?;
        let out = self.push_node(out, false);
        self.ops.push(Op::ConcatChannels {
            inputs: inputs.to_vec(),
            out,
        });
        Ok(out)
    }

    /// Keeps even time indices: [C, T] → [C, ceil(T/2)].
    pub fn decimate2(&mut self, input: Var) -> Result<Var, TensorError> {
        let (c, t_len) = self.value(input).signal_dims()?;
        let t_out = t_len.div_ceil(2);
        let mut data = Vec::with_capacity(c * t_out);
        for ch in 0..c {
            let row = self.value(input).row(ch);
            data.extend(row.iter().step_by(2));
        }
        let out = Tensor::new(vec![c, t_out], data)?;
        let out = self.push_node(out, false);
        self.ops.push(Op::Decimate2 { input, out });
        Ok(out)
    }

    /// Linear 2x upsampling: out[2t] = x[t], out[2t+1] = (x[t] + x[t+1]) / 2,
    /// the final midpoint replicating the edge sample. [C, T] → [C, 2T].
    pub fn upsample_linear2(&mut self, input: Var) -> Result<Var, TensorError> {
        let (c, t_len) = self.value(input).signal_dims()?;
        let half = S::of_f64(0.5);
        let mut data = Vec::with_capacity(c * t_len * 2);
        for ch in 0..c {
            let row = self.value(input).row(ch);
            for t in 0..t_len {
                let next = row[(t + 1).min(t_len - 1)];
                data.push(row[t]);
                data.push(half * (row[t] + next));
            }
        }
        let out = Tensor::new(vec![c, t_len * 2], data)?;
        let out = self.push_node(out, false);
        self.ops.push(Op::UpsampleLinear2 { input, out });
        Ok(out)
    }

    /// Mean over all elements of (a - b)^2, as a scalar.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        check_same_shape(self.value(a), self.value(b), "mse")?;
        let n = S::of_f64(self.value(a).numel() as f64);
        let mut acc = S::zero();
        for (&x, &y) in self.value(a).data().iter().zip(self.value(b).data()) {
            let d = x - y;
            acc += d * d;
        }
        let out = self.push_node(Tensor::scalar(acc / n), false);
        self.ops.push(Op::Mse { a, b, out });
        Ok(out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        check_same_shape(self.value(a), self.value(b), "add")?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let out = self.push_node(out, false);
        self.ops.push(Op::Add { a, b, out });
        Ok(out)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        check_same_shape(self.value(a), self.value(b), "sub")?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x - y)
            .collect();
        let out = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let out = self.push_node(out, false);
        self.ops.push(Op::Sub { a, b, out });
        Ok(out)
    }

    /// Multiplication by a constant (not differentiated through).
    pub fn scale(&mut self, input: Var, factor: S) -> Var {
        let out = self.value(input).map(|x| factor * x);
        let out = self.push_node(out, false);
        self.ops.push(Op::Scale { input, factor, out });
        out
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, input: Var) -> Var {
        let mut acc = S::zero();
        for &x in self.value(input).data() {
            acc += x;
        }
        let out = self.push_node(Tensor::scalar(acc), false);
        self.ops.push(Op::Sum { input, out });
        out
    }

    // ── backward ─────────────────────────────────────────────────────

    /// Populates gradients of everything reachable from the scalar `loss`,
    /// replaying recorded ops in reverse order.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        if self.value(loss).numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                numel: self.value(loss).numel(),
            });
        }
        assert!(
            !self.backward_done,
            "backward may run once per tape; build a fresh tape per pass"
        );
        self.backward_done = true;
        self.nodes[loss.0].requires_grad = true;
        self.nodes[loss.0].grad = Some(vec![S::one()]);
        for i in (0..self.ops.len()).rev() {
            self.backward_op(i);
        }
        Ok(())
    }

    /// Consumes the output gradient of an op. Every downstream consumer
    /// has already accumulated into it by the time its producer runs, so
    /// taking it avoids both a clone and a borrow of `self`.
    fn take_grad(&mut self, v: Var) -> Option<Vec<S>> {
        self.nodes[v.0].grad.take()
    }

    fn take_grad_or_zeros(&mut self, v: Var) -> Vec<S> {
        let numel = self.nodes[v.0].value.numel();
        self.nodes[v.0]
            .grad
            .take()
            .unwrap_or_else(|| vec![S::zero(); numel])
    }

    fn put_grad(&mut self, v: Var, g: Vec<S>) {
        self.nodes[v.0].grad = Some(g);
    }

    /// Output gradients are only retained for nodes marked requires_grad
    /// (the loss); everything else frees its buffer as the sweep passes.
    fn restore_out_grad(&mut self, v: Var, g: Vec<S>) {
        if self.nodes[v.0].requires_grad {
            self.nodes[v.0].grad = Some(g);
        }
    }

    fn value_data(&self, v: Var) -> &[S] {
        self.nodes[v.0].value.data()
    }

    fn backward_op(&mut self, idx: usize) {
        // Ops hold only Vars and small attrs; moving one out keeps the
        // borrow checker away from self during the match.
        let op = std::mem::replace(
            &mut self.ops[idx],
            Op::Sum {
                input: Var(0),
                out: Var(0),
            },
        );
        match &op {
            Op::Conv1d {
                input,
                weight,
                bias,
                dilation,
                out,
            } => {
                if let Some(g) = self.take_grad(*out) {
                    let (c_in, t_len) = self.nodes[input.0].value.signal_dims().unwrap();
                    let shape = self.nodes[weight.0].value.shape();
                    let (c_out, kernel) = (shape[0], shape[2]);
                    let mut dx = self.take_grad_or_zeros(*input);
                    kernels::conv1d_dinput(
                        &g,
                        c_out,
                        t_len,
                        self.value_data(*weight),
                        c_in,
                        kernel,
                        *dilation,
                        &mut dx,
                    );
                    self.put_grad(*input, dx);
                    let mut dw = self.take_grad_or_zeros(*weight);
                    kernels::conv1d_dweight(
                        &g,
                        c_out,
                        t_len,
                        self.value_data(*input),
                        c_in,
                        kernel,
                        *dilation,
                        &mut dw,
                    );
                    self.put_grad(*weight, dw);
                    if let Some(b) = bias {
                        let mut db = self.take_grad_or_zeros(*b);
                        kernels::row_sums_acc(&g, c_out, t_len, &mut db);
                        self.put_grad(*b, db);
                    }
                    self.restore_out_grad(*out, g);
                }
            }
            Op::ConvTranspose1d {
                input,
                weight,
                bias,
                dilation,
                out,
            } => {
                if let Some(g) = self.take_grad(*out) {
                    let (a_dim, t_len) = self.nodes[input.0].value.signal_dims().unwrap();
                    let shape = self.nodes[weight.0].value.shape();
                    let (b_dim, kernel) = (shape[1], shape[2]);
                    let mut dx = self.take_grad_or_zeros(*input);
                    kernels::convt1d_dinput(
                        &g,
                        b_dim,
                        t_len,
                        self.value_data(*weight),
                        a_dim,
                        kernel,
                        *dilation,
                        &mut dx,
                    );
                    self.put_grad(*input, dx);
                    let mut dw = self.take_grad_or_zeros(*weight);
                    kernels::convt1d_dweight(
                        &g,
                        b_dim,
                        t_len,
                        self.value_data(*input),
                        a_dim,
                        kernel,
                        *dilation,
                        &mut dw,
                    );
                    self.put_grad(*weight, dw);
                    if let Some(b) = bias {
                        let mut db = self.take_grad_or_zeros(*b);
                        kernels::row_sums_acc(&g, b_dim, t_len, &mut db);
                        self.put_grad(*b, db);
                    }
                    self.restore_out_grad(*out, g);
                }
            }
            Op::LeakyRelu { input, slope, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let slope = *slope;
                    let mut dx = self.take_grad_or_zeros(*input);
                    for ((d, &gv), &xv) in dx.iter_mut().zip(&g).zip(self.value_data(*input)) {
                        *d += gv * if xv >= S::zero() { S::one() } else { slope };
                    }
                    self.put_grad(*input, dx);
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Tanh { input, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let mut dx = self.take_grad_or_zeros(*input);
                    for ((d, &gv), &yv) in dx.iter_mut().zip(&g).zip(self.value_data(*out)) {
                        *d += gv * (S::one() - yv * yv);
                    }
                    self.put_grad(*input, dx);
                    self.restore_out_grad(*out, g);
                }
            }
            Op::ConcatChannels { inputs, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let mut offset = 0;
                    for &v in inputs {
                        let n = self.nodes[v.0].value.numel();
                        let mut dx = self.take_grad_or_zeros(v);
                        for (d, &gv) in dx.iter_mut().zip(&g[offset..offset + n]) {
                            *d += gv;
                        }
                        self.put_grad(v, dx);
                        offset += n;
                    }
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Decimate2 { input, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let (c, t_len) = self.nodes[input.0].value.signal_dims().unwrap();
                    let t_out = t_len.div_ceil(2);
                    let mut dx = self.take_grad_or_zeros(*input);
                    for ch in 0..c {
                        for t in 0..t_out {
                            dx[ch * t_len + 2 * t] += g[ch * t_out + t];
                        }
                    }
                    self.put_grad(*input, dx);
                    self.restore_out_grad(*out, g);
                }
            }
            Op::UpsampleLinear2 { input, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let (c, t_len) = self.nodes[input.0].value.signal_dims().unwrap();
                    let half = S::of_f64(0.5);
                    let mut dx = self.take_grad_or_zeros(*input);
                    for ch in 0..c {
                        let (src, dst) = (ch * 2 * t_len, ch * t_len);
                        for t in 0..t_len {
                            let gm = g[src + 2 * t + 1] * half;
                            dx[dst + t] += g[src + 2 * t] + gm;
                            dx[dst + (t + 1).min(t_len - 1)] += gm;
                        }
                    }
                    self.put_grad(*input, dx);
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Mse { a, b, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let n = self.nodes[a.0].value.numel();
                    let scale = g[0] * S::of_f64(2.0 / n as f64);
                    for (v, sign) in [(*a, S::one()), (*b, -S::one())] {
                        let mut dv = self.take_grad_or_zeros(v);
                        let (av, bv) = (self.value_data(*a), self.value_data(*b));
                        for ((d, &x), &y) in dv.iter_mut().zip(av).zip(bv) {
                            *d += sign * scale * (x - y);
                        }
                        self.put_grad(v, dv);
                    }
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Add { a, b, out } => {
                if let Some(g) = self.take_grad(*out) {
                    for v in [*a, *b] {
                        let mut dx = self.take_grad_or_zeros(v);
                        for (d, &gv) in dx.iter_mut().zip(&g) {
                            *d += gv;
                        }
                        self.put_grad(v, dx);
                    }
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Sub { a, b, out } => {
                if let Some(g) = self.take_grad(*out) {
                    for (v, sign) in [(*a, S::one()), (*b, -S::one())] {
                        let mut dx = self.take_grad_or_zeros(v);
                        for (d, &gv) in dx.iter_mut().zip(&g) {
                            *d += sign * gv;
                        }
                        self.put_grad(v, dx);
                    }
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Scale { input, factor, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let factor = *factor;
                    let mut dx = self.take_grad_or_zeros(*input);
                    for (d, &gv) in dx.iter_mut().zip(&g) {
                        *d += factor * gv;
                    }
                    self.put_grad(*input, dx);
                    self.restore_out_grad(*out, g);
                }
            }
            Op::Sum { input, out } => {
                if let Some(g) = self.take_grad(*out) {
                    let g0 = g[0];
                    let mut dx = self.take_grad_or_zeros(*input);
                    for d in dx.iter_mut() {
                        *d += g0;
                    }
                    self.put_grad(*input, dx);
                    self.restore_out_grad(*out, g);
                }
            }
        }
        self.ops[idx] = op;
    }
}

fn conv_weight_dims<S: Scalar>(w: &Tensor<S>) -> Result<(usize, usize, usize), TensorError> {
    match w.shape() {
        &[a, b, k] => Ok((a, b, k)),
        other => Err(TensorError::Dimension(format!(
            "conv weight must be rank 3, got shape {other:?}"
        ))),
    }
}

fn check_conv_args(
    c_in: usize,
    w_cin: usize,
    kernel: usize,
    dilation: usize,
) -> Result<(), TensorError> {
    if dilation < 1 {
        return Err(TensorError::Parameter("dilation must be >= 1".into()));
    }
    if kernel < 1 {
        return Err(TensorError::Parameter("kernel must be >= 1".into()));
    }
    if w_cin != c_in {
        return Err(TensorError::Dimension(format!(
            "weight expects {w_cin} input channels, signal has {c_in}"
        )));
    }
    Ok(())
}

fn check_bias<S: Scalar>(b: &Tensor<S>, c_out: usize) -> Result<(), TensorError> {
    if b.shape() != [c_out] {
        return Err(TensorError::Dimension(format!(
            "bias shape {:?} does not match {c_out} output channels",
            b.shape()
        )));
    }
    Ok(())
}

fn check_same_shape<S: Scalar>(
    a: &Tensor<S>,
    b: &Tensor<S>,
    what: &str,
) -> Result<(), TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::Dimension(format!(
            "{what}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(data: &[f64]) -> Tensor<f64> {
        Tensor::new(vec![1, data.len()], data.to_vec()).unwrap()
    }

    #[test]
    fn conv1d_identity_kernel() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0, 3.0, 4.0]), false);
        let w = tape.leaf(Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap(), false);
        let b = tape.leaf(Tensor::from_vec(vec![0.0]), false);
        let y = tape.conv1d(x, w, Some(b), 1).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn conv1d_all_ones_k3() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0, 3.0, 4.0]), false);
        let w = tape.leaf(Tensor::new(vec![1, 1, 3], vec![1.0; 3]).unwrap(), false);
        let y = tape.conv1d(x, w, None, 1).unwrap();
        assert_eq!(tape.value(y).data(), &[3.0, 6.0, 9.0, 7.0]);
    }

    #[test]
    fn conv1d_dilation_2() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0, 3.0, 4.0, 5.0]), false);
        let w = tape.leaf(Tensor::new(vec![1, 1, 3], vec![1.0; 3]).unwrap(), false);
        let y = tape.conv1d(x, w, None, 2).unwrap();
        assert_eq!(tape.value(y).data(), &[4.0, 6.0, 9.0, 6.0, 8.0]);
    }

    #[test]
    fn conv1d_rejects_channel_mismatch_and_zero_dilation() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(&[2, 4]), false);
        let w = tape.leaf(Tensor::zeros(&[1, 3, 3]), false);
        assert!(tape.conv1d(x, w, None, 1).is_err());
        let w2 = tape.leaf(Tensor::zeros(&[1, 2, 3]), false);
        assert!(tape.conv1d(x, w2, None, 0).is_err());
    }

    #[test]
    fn conv1d_transpose_identity_kernel() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0, 3.0, 4.0]), false);
        let w = tape.leaf(Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap(), false);
        let y = tape.conv1d_transpose(x, w, None, 1).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn conv1d_transpose_impulse_scatters_kernel() {
        // Adjoint of conv scatters the un-reversed taps around the impulse:
        // value computed from the inner-product identity, not by inspection.
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 0.0, 0.0, 0.0]), false);
        let w = tape.leaf(Tensor::new(vec![1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap(), false);
        let y = tape.conv1d_transpose(x, w, None, 1).unwrap();
        assert_eq!(tape.value(y).data(), &[2.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn span_larger_than_signal_is_legal() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0]), false);
        let w = tape.leaf(Tensor::new(vec![1, 1, 3], vec![1.0; 3]).unwrap(), false);
        // span (3-1)*4+1 = 9 > 2: padding dominates, length preserved
        let y = tape.conv1d(x, w, None, 4).unwrap();
        assert_eq!(tape.value(y).shape(), &[1, 2]);
        assert_eq!(tape.value(y).data(), &[1.0, 2.0]);
    }

    #[test]
    fn leaky_relu_and_tanh_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[-1.0, 0.0, 2.0]), false);
        let y = tape.leaky_relu(x, 0.2);
        assert_eq!(tape.value(y).data(), &[-0.2, 0.0, 2.0]);
        let z = tape.tanh(x);
        assert_eq!(tape.value(z).data()[1], 0.0);
        assert!(tape.value(z).data()[2] > 0.96 && tape.value(z).data()[2] < 1.0);
        let big = tape.leaf(signal(&[30.0]), false);
        let tb = tape.tanh(big);
        assert!(tape.value(tb).data()[0] <= 1.0 && tape.value(tb).data()[0] > 0.9999);
    }

    #[test]
    fn concat_channel_counts() {
        let mut tape = Tape::<f64>::new();
        let a = tape.leaf(Tensor::zeros(&[1, 4]), false);
        let b = tape.leaf(Tensor::zeros(&[2, 4]), false);
        let y = tape.concat_channels(&[a, b]).unwrap();
        assert_eq!(tape.value(y).shape(), &[3, 4]);
        let single = tape.concat_channels(&[a]).unwrap();
        assert_eq!(tape.value(single).data(), tape.value(a).data());
        let c = tape.leaf(Tensor::zeros(&[1, 5]), false);
        assert!(tape.concat_channels(&[a, c]).is_err());
    }

    #[test]
    fn decimate_keeps_even_indices() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0, 3.0, 4.0]), false);
        let y = tape.decimate2(x).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 3.0]);
        let one = tape.leaf(signal(&[7.0]), false);
        let y1 = tape.decimate2(one).unwrap();
        assert_eq!(tape.value(y1).data(), &[7.0]);
    }

    #[test]
    fn upsample_midpoints_and_edge() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 3.0]), false);
        let y = tape.upsample_linear2(x).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 2.0, 3.0, 3.0]);
        let c = tape.leaf(signal(&[5.0, 5.0, 5.0]), false);
        let yc = tape.upsample_linear2(c).unwrap();
        assert!(tape.value(yc).data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn mse_values() {
        let mut tape = Tape::new();
        let a = tape.leaf(signal(&[0.0, 0.0]), false);
        let b = tape.leaf(signal(&[1.0, 1.0]), false);
        let zero = tape.mse(a, a).unwrap();
        assert_eq!(tape.value(zero).data()[0], 0.0);
        let one = tape.mse(a, b).unwrap();
        assert_eq!(tape.value(one).data()[0], 1.0);
        let c = tape.leaf(signal(&[1.0]), false);
        assert!(tape.mse(a, c).is_err());
    }

    #[test]
    fn backward_sum_gives_ones_and_disconnected_stays_none() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0, 3.0]), true);
        let unused = tape.leaf(signal(&[9.0]), true);
        let s = tape.sum(x);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[1.0, 1.0, 1.0]);
        assert!(tape.grad(unused).is_none());
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0]), true);
        assert!(matches!(
            tape.backward(x),
            Err(TensorError::NonScalarLoss { numel: 2 })
        ));
    }

    #[test]
    fn gradients_accumulate_across_consumers() {
        // y = sum(x) + sum(x) -> dx = 2 everywhere
        let mut tape = Tape::new();
        let x = tape.leaf(signal(&[1.0, 2.0]), true);
        let s1 = tape.sum(x);
        let s2 = tape.sum(x);
        let tot = tape.add(s1, s2).unwrap();
        tape.backward(tot).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[2.0, 2.0]);
    }
}
