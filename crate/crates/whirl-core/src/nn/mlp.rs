//! Multilayer perceptron with exact reverse-mode gradients.

use crate::nn::NnError;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed in terms of the pre-activation.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Fully connected network: affine layers with the given activation on
/// hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    /// Row-major (out x in) weight matrix per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
}

/// Per-layer gradients matching an [`Mlp`]'s shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> MlpGrads {
        MlpGrads {
            weights: mlp.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &MlpGrads, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * scale;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * scale;
            }
        }
    }
}

/// Cached forward pass: inputs to every layer plus pre-activations.
pub struct MlpCache {
    /// layer_inputs[l] is the input vector to layer l; the last entry is the
    /// network output.
    pub layer_inputs: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.layer_inputs.last().expect("cache holds the output")
    }
}

impl Mlp {
    /// Scaled-uniform initialization: weights uniform in
    /// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    pub fn new_seeded(layer_sizes: &[usize], activation: Activation, rng: &mut impl Rng) -> Mlp {
        assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for l in 0..layer_sizes.len() - 1 {
            let fan_in = layer_sizes[l];
            let fan_out = layer_sizes[l + 1];
            let gain = 1.0 / (fan_in as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-gain..gain)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Mlp { layer_sizes: layer_sizes.to_vec(), weights, biases, activation }
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("non-empty sizes")
    }

    pub fn check_shapes(&self) -> Result<(), NnError> {
        for l in 0..self.n_layers() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != fan_in * fan_out || self.biases[l].len() != fan_out {
                return Err(NnError::ShapeMismatch {
                    what: format!("layer {l} parameter blocks"),
                    expected: fan_in * fan_out,
                    got: self.weights[l].len(),
                });
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut cache = self.forward_cached(input)?;
        Ok(cache.layer_inputs.pop().expect("cache holds the output"))
    }

    /// Forward pass retaining everything the backward pass needs.
    pub fn forward_cached(&self, input: &[f64]) -> Result<MlpCache, NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch {
                what: "network input".into(),
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let n = self.n_layers();
        let mut layer_inputs = Vec::with_capacity(n + 1);
        let mut pre_activations = Vec::with_capacity(n);
        layer_inputs.push(input.to_vec());
        for l in 0..n {
            let x = &layer_inputs[l];
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            let mut pre = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let mut acc = self.biases[l][o];
                for (w, xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                pre[o] = acc;
            }
            let out = if l + 1 == n {
                pre.clone()
            } else {
                pre.iter().map(|p| self.activation.apply(*p)).collect()
            };
            pre_activations.push(pre);
            layer_inputs.push(out);
        }
        Ok(MlpCache { layer_inputs, pre_activations })
    }

    /// Exact gradients of the forward map for a given output cotangent.
    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, cache: &MlpCache, output_grad: &[f64]) -> (MlpGrads, Vec<f64>) {
        let n = self.n_layers();
        assert_eq!(output_grad.len(), self.output_dim(), "output gradient dimension");
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = output_grad.to_vec();
        for l in (0..n).rev() {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            // The output layer is linear; hidden layers apply the activation.
            if l + 1 != n {
                for (d, pre) in delta.iter_mut().zip(&cache.pre_activations[l]) {
                    *d *= self.activation.derivative(*pre);
                }
            }
            let x = &cache.layer_inputs[l];
            for o in 0..fan_out {
                let row = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += delta[o] * xi;
                }
                grads.biases[l][o] += delta[o];
            }
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += delta[o] * w;
                }
            }
            delta = prev;
        }
        (grads, delta)
    }

    /// Flat views used by the optimizer and the gradient checker.
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let mut i = idx;
        for w in &mut self.weights {
            if i < w.len() {
                return &mut w[i];
            }
            i -= w.len();
        }
        for b in &mut self.biases {
            if i < b.len() {
                return &mut b[i];
            }
            i -= b.len();
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn grad_at(grads: &MlpGrads, idx: usize) -> f64 {
        let mut i = idx;
        for w in &grads.weights {
            if i < w.len() {
                return w[i];
            }
            i -= w.len();
        }
        for b in &grads.biases {
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("gradient index {idx} out of range");
    }
}
