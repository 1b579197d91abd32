//! Small fully connected network with rectifier hidden layers and a linear
//! output layer, plus exact backpropagation for the DQN loss.

use serde::{Deserialize, Serialize};

use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| (2.0 * rng::unit_f64(rng) - 1.0) * limit)
            .collect();
        Dense { inputs, outputs, weights, biases: vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Gradients with the same layout as [`Mlp::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` lists every layer width, input first, e.g. `[1, 24, 24, 8]`.
    pub fn random(sizes: &[usize], rng: &mut SimRng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        Mlp { layers: sizes.windows(2).map(|w| Dense::random(w[0], w[1], rng)).collect() }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp { layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Checks layer chaining and that every parameter is finite.
    pub fn is_well_formed(&self) -> bool {
        !self.layers.is_empty()
            && self.layers.windows(2).all(|w| w[0].outputs == w[1].inputs)
            && self.layers.iter().all(|l| {
                l.weights.len() == l.inputs * l.outputs
                    && l.biases.len() == l.outputs
                    && l.weights.iter().chain(&l.biases).all(|v| v.is_finite())
            })
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        let mut y = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&x, &mut y);
            if i < last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut x, &mut y);
        }
        x
    }

    /// Activations of every layer, input first. Hidden entries are post-rectifier.
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![input.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = Vec::new();
            layer.apply(acts.last().expect("non-empty"), &mut y);
            if i < last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(y);
        }
        acts
    }

    /// Mean squared error over `(input, action, target)` samples, where only
    /// the chosen action's output is compared to its target. Returns the loss
    /// and its exact gradient.
    pub fn loss_and_gradients(&self, batch: &[(Vec<f64>, usize, f64)]) -> (f64, Gradients) {
        let mut grads = Gradients {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        };
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for (input, action, target) in batch {
            let acts = self.forward_trace(input);
            let out = acts.last().expect("non-empty");
            let err = out[*action] - target;
            loss += err * err / n;

            let mut delta = vec![0.0; out.len()];
            delta[*action] = 2.0 * err / n;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let x = &acts[li];
                let g = &mut grads.layers[li];
                for o in 0..layer.outputs {
                    if delta[o] == 0.0 {
                        continue;
                    }
                    g.biases[o] += delta[o];
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, xv) in row.iter_mut().zip(x) {
                        *gw += delta[o] * xv;
                    }
                }
                if li == 0 {
                    break;
                }
                // Back through the weights, then through the rectifier of the layer below.
                let mut below = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (b, w) in below.iter_mut().zip(row) {
                        *b += delta[o] * w;
                    }
                }
                for (b, a) in below.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = below;
            }
        }
        (loss, grads)
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *v = it.next().expect("parameter count mismatch");
            }
        }
        assert!(it.next().is_none(), "parameter count mismatch");
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        Mlp { layers: self.layers.clone() }.params()
    }
}
