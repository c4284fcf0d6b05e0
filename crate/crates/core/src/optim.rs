use crate::scalar::Scalar;

/// Adam hyperparameters; defaults follow the training setup
/// (lr 1e-4, beta1 0.9, beta2 0.999, eps 1e-8).
#[derive(Debug, Clone, Copy)]
pub struct AdamParams<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
}

impl<S: Scalar> Default for AdamParams<S> {
    fn default() -> Self {
        AdamParams {
            lr: S::of_f64(1e-4),
            beta1: S::of_f64(0.9),
            beta2: S::of_f64(0.999),
            eps: S::of_f64(1e-8),
        }
    }
}

impl<S: Scalar> AdamParams<S> {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr: S::of_f64(lr),
            ..Default::default()
        }
    }
}

/// First/second moment buffers, one pair per parameter tensor, plus the
/// shared step counter used for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    pub m: Vec<Vec<S>>,
    pub v: Vec<Vec<S>>,
    pub t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(param_sizes: impl IntoIterator<Item = usize>) -> Self {
        let m: Vec<Vec<S>> = param_sizes.into_iter().map(|n| vec![S::zero(); n]).collect();
        let v = m.clone();
        AdamState { m, v, t: 0 }
    }
}

/// One Adam update on a single parameter buffer. `t` is the step count
/// *after* increment (t >= 1), shared across all buffers of one step.
pub fn adam_step_buffer<S: Scalar>(
    param: &mut [S],
    grad: &[S],
    m: &mut [S],
    v: &mut [S],
    t: u64,
    hp: &AdamParams<S>,
) {
    debug_assert_eq!(param.len(), grad.len());
    debug_assert_eq!(param.len(), m.len());
    debug_assert_eq!(param.len(), v.len());
    let one = S::one();
    let bc1 = one - hp.beta1.powi(t as i32);
    let bc2 = one - hp.beta2.powi(t as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = hp.beta1 * m[i] + (one - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (one - hp.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = vec![0.5f64, -0.25];
        let mut m = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        adam_step_buffer(&mut p, &[0.0, 0.0], &mut m, &mut v, 1, &AdamParams::default());
        assert_eq!(p, vec![0.5, -0.25]);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        // With constant g = c, bias correction gives m_hat = c, v_hat = c^2,
        // so the first update is -lr * c / (|c| + eps).
        let hp = AdamParams::<f64>::with_lr(1e-4);
        for &c in &[3.0, -0.02] {
            let mut p = vec![1.0];
            let mut m = vec![0.0];
            let mut v = vec![0.0];
            adam_step_buffer(&mut p, &[c], &mut m, &mut v, 1, &hp);
            let delta = p[0] - 1.0;
            assert!(delta.abs() <= 1e-4 * (1.0 + 1e-9), "delta {delta}");
            let expected = -1e-4 * c / (c.abs() + 1e-8);
            assert!((delta - expected).abs() < 1e-15, "{delta} vs {expected}");
        }
    }

    #[test]
    fn deterministic_given_identical_inputs() {
        let run = || {
            let mut p = vec![0.1f32, 0.2, 0.3];
            let mut m = vec![0.0; 3];
            let mut v = vec![0.0; 3];
            for t in 1..=5 {
                adam_step_buffer(
                    &mut p,
                    &[0.01, -0.02, 0.03],
                    &mut m,
                    &mut v,
                    t,
                    &AdamParams::default(),
                );
            }
            p
        };
        assert_eq!(run(), run());
    }
}
