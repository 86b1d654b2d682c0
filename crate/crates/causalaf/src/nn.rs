//! Small feed-forward networks with hand-written reverse-mode gradients,
//! plus the first-order adaptive-moment optimizer used for policy-gradient
//! updates. Everything operates on `f64` and is deterministic given the RNG.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One dense layer, `y = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            w: Array2::zeros((outputs, inputs)),
            b: Array1::zeros(outputs),
        }
    }

    fn xavier<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let scale = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-scale..scale));
        Dense {
            w,
            b: Array1::zeros(outputs),
        }
    }

    fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w.dot(x) + &self.b
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Multi-layer perceptron with tanh hidden activations and a linear output
/// layer. The output layer is zero-initialized so a fresh network maps every
/// input to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Cached activations from a forward pass, consumed by [`Mlp::backward`].
pub struct ForwardCache {
    /// Input followed by each hidden activation (post-tanh).
    activations: Vec<Array1<f64>>,
}

/// Parameter-shaped gradient accumulator for one [`Mlp`].
#[derive(Debug, Clone)]
pub struct MlpGrad {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` lists layer widths input-first, e.g. `[in, 64, 64, out]`.
    /// Hidden layers get Xavier-uniform weights; the final layer is zeroed.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for k in 0..sizes.len() - 1 {
            let last = k == sizes.len() - 2;
            layers.push(if last {
                Dense::zeros(sizes[k], sizes[k + 1])
            } else {
                Dense::xavier(sizes[k], sizes[k + 1], rng)
            });
        }
        Mlp { layers }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().unwrap().b.len()
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.forward_cached(x).0
    }

    /// Forward pass that keeps the activations needed for backprop.
    pub fn forward_cached(&self, x: &Array1<f64>) -> (Array1<f64>, ForwardCache) {
        debug_assert_eq!(x.len(), self.input_len());
        let mut activations = Vec::with_capacity(self.layers.len());
        activations.push(x.clone());
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(&h);
            if k + 1 < self.layers.len() {
                z.mapv_inplace(f64::tanh);
                activations.push(z.clone());
            }
            h = z;
        }
        (h, ForwardCache { activations })
    }

    /// Accumulates `d(loss)/d(params)` into `grad` given `d(loss)/d(output)`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array1<f64>, grad: &mut MlpGrad) {
        let mut delta = d_out.clone();
        for k in (0..self.layers.len()).rev() {
            let input = &cache.activations[k];
            // dW = delta ⊗ input, db = delta
            let g = &mut grad.layers[k];
            for (r, &d) in delta.iter().enumerate() {
                g.b[r] += d;
                let mut row = g.w.row_mut(r);
                for (c, &a) in input.iter().enumerate() {
                    row[c] += d * a;
                }
            }
            if k > 0 {
                let mut back = self.layers[k].w.t().dot(&delta);
                // through tanh: (1 - a^2)
                for (v, &a) in back.iter_mut().zip(input.iter()) {
                    *v *= 1.0 - a * a;
                }
                delta = back;
            }
        }
    }

    pub fn zero_grad(&self) -> MlpGrad {
        MlpGrad {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.w.ncols(), l.b.len()))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }

    /// Appends one flag per parameter in flat order; final-layer weight rows
    /// and bias entries satisfying `select(row, rows)` are marked true.
    pub fn mark_output_rows(&self, mask: &mut Vec<bool>, select: impl Fn(usize, usize) -> bool) {
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let rows = l.b.len();
            if k == last {
                for row in 0..rows {
                    let flag = select(row, rows);
                    for _ in 0..l.w.ncols() {
                        mask.push(flag);
                    }
                }
                for row in 0..rows {
                    mask.push(select(row, rows));
                }
            } else {
                for _ in 0..l.param_count() {
                    mask.push(false);
                }
            }
        }
    }

    pub fn read_flat(&mut self, data: &[f64], offset: &mut usize) {
        for l in &mut self.layers {
            for v in l.w.iter_mut() {
                *v = data[*offset];
                *offset += 1;
            }
            for v in l.b.iter_mut() {
                *v = data[*offset];
                *offset += 1;
            }
        }
    }
}

impl MlpGrad {
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.w.mapv_inplace(|v| v * factor);
            l.b.mapv_inplace(|v| v * factor);
        }
    }

    pub fn add(&mut self, other: &MlpGrad) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w += &b.w;
            a.b += &b.b;
        }
    }
}

/// Adaptive-moment gradient ascent over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    /// Ascends `params` along `grad` (maximization convention).
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let mhat = self.m[k] / b1t;
            let vhat = self.v[k] / b2t;
            params[k] += self.learning_rate * mhat / (vhat.sqrt() + self.epsilon);
        }
    }
}
