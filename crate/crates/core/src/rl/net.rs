//! Dense networks with manual forward and backward passes, plus Adam.
//!
//! Parameters live in one flat `Vec<f64>` per network (weights then bias,
//! layer by layer), which keeps the optimizer, gradient clipping, finite
//! difference checks and checkpointing uniform. Hidden activations are tanh,
//! the output layer is linear.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Fully connected network, tanh hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    dims: Vec<usize>,
    params: Vec<f64>,
    /// Per layer: (weight offset, bias offset) into `params`.
    offsets: Vec<(usize, usize)>,
}

/// Cached activations of one forward pass, needed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Post-activation vectors, layer by layer; index 0 is the input.
    activations: Vec<Vec<f64>>,
    /// Pre-activation vectors per layer.
    pre: Vec<Vec<f64>>,
}

impl DenseNet {
    /// Zero-initialized network with the given layer widths.
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        let mut offsets = Vec::new();
        let mut len = 0;
        for l in 0..dims.len() - 1 {
            offsets.push((len, len + dims[l] * dims[l + 1]));
            len += dims[l] * dims[l + 1] + dims[l + 1];
        }
        DenseNet {
            dims: dims.to_vec(),
            params: vec![0.0; len],
            offsets,
        }
    }

    /// Orthogonal-style initialization: per layer, rows of the weight matrix
    /// are Gram-Schmidt orthonormalized from a Gaussian draw and scaled by
    /// `hidden_gain` (`output_gain` for the last layer). Biases stay zero.
    pub fn orthogonal(
        dims: &[usize],
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut net = Self::zeros(dims);
        for l in 0..dims.len() - 1 {
            let gain = if l == dims.len() - 2 {
                output_gain
            } else {
                hidden_gain
            };
            let rows = dims[l + 1];
            let cols = dims[l];
            let mut mat: Vec<Vec<f64>> = (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                        .collect()
                })
                .collect();
            // modified Gram-Schmidt over rows (re-randomize a degenerate row)
            for i in 0..rows {
                for j in 0..i.min(cols) {
                    let dot: f64 = (0..cols).map(|k| mat[i][k] * mat[j][k]).sum();
                    for k in 0..cols {
                        mat[i][k] -= dot * mat[j][k];
                    }
                }
                let norm: f64 = mat[i].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    for k in 0..cols {
                        mat[i][k] /= norm;
                    }
                }
            }
            let (w_off, _) = net.offsets[l];
            for i in 0..cols {
                for j in 0..rows {
                    net.params[w_off + i * rows + j] = gain * mat[j][i];
                }
            }
        }
        net
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn output_len(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer(&self, l: usize) -> (&[f64], &[f64], usize, usize) {
        let (w_off, b_off) = self.offsets[l];
        let fan_in = self.dims[l];
        let fan_out = self.dims[l + 1];
        (
            &self.params[w_off..w_off + fan_in * fan_out],
            &self.params[b_off..b_off + fan_out],
            fan_in,
            fan_out,
        )
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).0
    }

    /// Forward pass keeping the activations for `backward`.
    pub fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, ForwardCache) {
        assert_eq!(input.len(), self.dims[0], "input width mismatch");
        let n_layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        let mut pre = Vec::with_capacity(n_layers);
        activations.push(input.to_vec());
        let mut x = input.to_vec();
        for l in 0..n_layers {
            let (w, b, fan_in, fan_out) = self.layer(l);
            let mut z = b.to_vec();
            for i in 0..fan_in {
                let xi = x[i];
                if xi != 0.0 {
                    let row = &w[i * fan_out..(i + 1) * fan_out];
                    for (zj, wj) in z.iter_mut().zip(row) {
                        *zj += xi * wj;
                    }
                }
            }
            pre.push(z.clone());
            x = if l + 1 == n_layers {
                z
            } else {
                z.iter().map(|v| v.tanh()).collect()
            };
            activations.push(x.clone());
        }
        let out = activations.last().unwrap().clone();
        (out, ForwardCache { activations, pre })
    }

    /// Backpropagates `d_output` (dLoss/dOutput) through the cached pass,
    /// accumulating parameter gradients into `grad` (same layout as
    /// `params`). Returns dLoss/dInput.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64], grad: &mut [f64]) -> Vec<f64> {
        assert_eq!(grad.len(), self.params.len());
        let n_layers = self.dims.len() - 1;
        let mut delta = d_output.to_vec();
        for l in (0..n_layers).rev() {
            let (w, _, fan_in, fan_out) = self.layer(l);
            if l + 1 != n_layers {
                let z = &cache.pre[l];
                for j in 0..fan_out {
                    let t = z[j].tanh();
                    delta[j] *= 1.0 - t * t;
                }
            }
            let (w_off, b_off) = self.offsets[l];
            let a_prev = &cache.activations[l];
            for j in 0..fan_out {
                grad[b_off + j] += delta[j];
            }
            for i in 0..fan_in {
                let ai = a_prev[i];
                if ai != 0.0 {
                    for j in 0..fan_out {
                        grad[w_off + i * fan_out + j] += ai * delta[j];
                    }
                }
            }
            if l > 0 {
                let mut delta_prev = vec![0.0; fan_in];
                for i in 0..fan_in {
                    let row = &w[i * fan_out..(i + 1) * fan_out];
                    let mut acc = 0.0;
                    for j in 0..fan_out {
                        acc += row[j] * delta[j];
                    }
                    delta_prev[i] = acc;
                }
                delta = delta_prev;
            } else {
                let mut d_input = vec![0.0; fan_in];
                for i in 0..fan_in {
                    let row = &w[i * fan_out..(i + 1) * fan_out];
                    let mut acc = 0.0;
                    for j in 0..fan_out {
                        acc += row[j] * delta[j];
                    }
                    d_input[i] = acc;
                }
                return d_input;
            }
        }
        unreachable!("loop always returns at layer 0");
    }
}

/// Standard Adam with bias correction, over one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update step in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Rescales `grad` in place so its global L2 norm is at most `max_norm`.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) {
    let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_for;
    use approx::assert_relative_eq;

    #[test]
    fn zero_network_outputs_zero() {
        let net = DenseNet::zeros(&[3, 4, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]), vec![0.0, 0.0]);
        assert_eq!(net.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn identity_linear_layer_passes_input_through() {
        let mut net = DenseNet::zeros(&[3, 3]);
        // single (output) layer is linear; set W = I
        for i in 0..3 {
            net.params_mut()[i * 3 + i] = 1.0;
        }
        let x = [0.3, -1.2, 4.0];
        assert_eq!(net.forward(&x), x.to_vec());
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = rng_for(1, "net-det");
        let net = DenseNet::orthogonal(&[5, 8, 2], 1.0, 0.01, &mut rng);
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert_eq!(net.forward(&x), net.forward(&x));
    }

    #[test]
    fn orthogonal_rows_are_orthonormal_times_gain() {
        let mut rng = rng_for(2, "net-orth");
        let net = DenseNet::orthogonal(&[8, 4], 1.0, 0.7, &mut rng);
        // rows of the 4x8 output matrix: w[i*4+j] column-major per input i
        let w = net.params();
        for j in 0..4 {
            let row: Vec<f64> = (0..8).map(|i| w[i * 4 + j]).collect();
            let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert_relative_eq!(norm, 0.7, max_relative = 1e-10);
            for j2 in 0..j {
                let other: Vec<f64> = (0..8).map(|i| w[i * 4 + j2]).collect();
                let dot: f64 = row.iter().zip(&other).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rng_for(3, "net-fd");
        let mut net = DenseNet::orthogonal(&[3, 2, 1], 1.0, 1.0, &mut rng);
        let x = [0.4, -0.7, 1.1];
        // loss = output[0]; gradient of output wrt every parameter
        let (_, cache) = net.forward_cached(&x);
        let mut grad = vec![0.0; net.param_count()];
        net.backward(&cache, &[1.0], &mut grad);
        let h = 1e-5;
        for p in 0..net.param_count() {
            let orig = net.params()[p];
            net.params_mut()[p] = orig + h;
            let up = net.forward(&x)[0];
            net.params_mut()[p] = orig - h;
            let down = net.forward(&x)[0];
            net.params_mut()[p] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(grad[p].abs()).max(1e-8);
            assert!(
                (fd - grad[p]).abs() / denom < 1e-4,
                "param {p}: fd {fd} vs analytic {}",
                grad[p]
            );
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut adam = Adam::new(0.1, 2);
        let mut params = vec![1.0, -2.0];
        adam.step(&mut params, &[0.0, 0.0]);
        assert_eq!(params, vec![1.0, -2.0]);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let mut adam = Adam::new(0.1, 1);
        let mut params = vec![1.0];
        adam.step(&mut params, &[0.5]);
        // bias correction makes m_hat/sqrt(v_hat) = sign(g) up to eps
        assert_relative_eq!(params[0], 0.9, max_relative = 1e-6);
    }

    #[test]
    fn adam_two_step_reference_sequence() {
        // hand-computed recurrence: p0=1, g=0.5 twice, lr=0.1
        let mut adam = Adam::new(0.1, 1);
        let mut params = vec![1.0];
        adam.step(&mut params, &[0.5]);
        assert_relative_eq!(params[0], 0.90000000199999996, max_relative = 1e-12);
        adam.step(&mut params, &[0.5]);
        assert_relative_eq!(params[0], 0.80000000399999992, max_relative = 1e-12);
    }

    #[test]
    fn grad_clip_rescales_to_max_norm() {
        let mut g = vec![3.0, 4.0];
        clip_grad_norm(&mut g, 0.5);
        let norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(norm, 0.5, max_relative = 1e-12);
        let mut small = vec![0.1, 0.1];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
