//! Autoregressive affine normalizing flow over behavioral graphs.
//!
//! Node rows and edge slices are drawn one step at a time. For each step a
//! conditioner network maps the flattened context of everything generated so
//! far to per-coordinate moments `(mu, log sigma)`; the sample is the affine
//! transform `mu + sigma * eps` of a Gaussian latent whose variance is the
//! sampling temperature. Because the transform is invertible with a
//! triangular Jacobian, the exact log-likelihood of a sampled graph is the
//! base log-density of the recovered latent minus the sum of `log sigma`
//! terms, and its gradient with respect to all conditioner weights is
//! available in closed form for score-function (policy-gradient) updates.

pub mod checkpoint;
pub mod context;

pub use checkpoint::{load_flow, save_flow};

use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BehavioralGraph, GraphDims};
use crate::nn::{Mlp, MlpGrad};

/// Smooth lower bound on `log sigma`: sigma never drops below 0.1, keeping
/// per-coordinate score magnitudes (which scale like 1/sigma) bounded.
pub const LOG_SIGMA_LOWER: f64 = 2.302585092994046;
/// Smooth upper bound on `log sigma`: sigma never exceeds 3. Temperature,
/// not sigma, carries exploration; an unbounded sigma lets policy-gradient
/// runs escape into a saturated high-entropy regime they cannot leave.
pub const LOG_SIGMA_UPPER: f64 = 1.0986122886681098;

const HALF_LN_TWO_PI: f64 = 0.9189385332046727;

/// Smooth asymmetric squash of the raw log-sigma head: identity slope at the
/// origin (so zero-initialized nets give sigma = 1), saturating at
/// `LOG_SIGMA_UPPER` above and `-LOG_SIGMA_LOWER` below.
pub fn bounded_log_sigma(raw: f64) -> f64 {
    let b = if raw >= 0.0 {
        LOG_SIGMA_UPPER
    } else {
        LOG_SIGMA_LOWER
    };
    b * (raw / b).tanh()
}

/// Derivative of [`bounded_log_sigma`] expressed through its output value.
pub fn bounded_log_sigma_slope(log_sigma: f64) -> f64 {
    let b = if log_sigma >= 0.0 {
        LOG_SIGMA_UPPER
    } else {
        LOG_SIGMA_LOWER
    };
    let t = log_sigma / b;
    1.0 - t * t
}

/// Flow hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dims: GraphDims,
    /// Number of stacked affine layers per step.
    pub layers: usize,
    /// Hidden widths of each conditioner network.
    pub hidden: Vec<usize>,
}

impl FlowConfig {
    pub fn new(dims: GraphDims) -> Self {
        FlowConfig {
            dims,
            layers: 1,
            hidden: vec![64, 64],
        }
    }

    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.hidden = hidden.to_vec();
        self
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }
}

/// Per-coordinate moments of one affine layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMoments {
    pub mu: Array1<f64>,
    pub log_sigma: Array1<f64>,
}

impl LayerMoments {
    pub fn sigma(&self) -> Array1<f64> {
        self.log_sigma.mapv(f64::exp)
    }
}

/// Which object a generation step produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Node { index: usize },
    Edge { from: usize, to: usize },
}

/// Everything recorded about one sampling step: the conditioning context,
/// the per-layer moments, the latent draw and the raw continuous value
/// (pre-discretization, pre-masking), plus this step's log-density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub kind: StepKind,
    pub context: Array1<f64>,
    pub layers: Vec<LayerMoments>,
    pub latent: Array1<f64>,
    pub value: Array1<f64>,
    pub log_density: f64,
}

/// Record of one sampled behavioral graph: all steps in generation order and
/// the accumulated log-likelihood under the sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub temperature: f64,
    pub steps: Vec<StepRecord>,
}

impl SampleRecord {
    pub fn new(temperature: f64) -> Self {
        SampleRecord {
            temperature,
            steps: Vec::new(),
        }
    }

    /// Accumulated log-likelihood, the sum of per-step log-densities.
    pub fn log_likelihood(&self) -> f64 {
        self.steps.iter().map(|s| s.log_density).sum()
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }
}

/// Parameter gradient for a whole flow, flattened in the same order as
/// [`FlowModel::to_flat`].
pub type FlowGrad = Vec<f64>;

/// The flow's learnable state: one conditioner stack for node steps and one
/// for edge steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowModel {
    config: FlowConfig,
    node_nets: Vec<Mlp>,
    edge_nets: Vec<Mlp>,
}

impl FlowModel {
    /// Fresh flow; hidden layers random, output layers zero, so every step
    /// initially has `mu = 0`, `sigma = 1`.
    pub fn new<R: Rng>(config: FlowConfig, rng: &mut R) -> Self {
        let ctx = config.dims.context_len();
        let node_out = 2 * config.dims.type_count;
        let edge_out = 2 * config.dims.edge_dim();
        let sizes = |out: usize| -> Vec<usize> {
            let mut v = vec![ctx];
            v.extend(&config.hidden);
            v.push(out);
            v
        };
        let node_nets = (0..config.layers)
            .map(|_| Mlp::new(&sizes(node_out), rng))
            .collect();
        let edge_nets = (0..config.layers)
            .map(|_| Mlp::new(&sizes(edge_out), rng))
            .collect();
        FlowModel {
            config,
            node_nets,
            edge_nets,
        }
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn dims(&self) -> GraphDims {
        self.config.dims
    }

    fn check_dims(&self, bg: &BehavioralGraph) -> Result<()> {
        if bg.dims() != self.config.dims {
            return Err(Error::ShapeMismatch(format!(
                "graph dims {:?} vs flow dims {:?}",
                bg.dims(),
                self.config.dims
            )));
        }
        Ok(())
    }

    fn moments_from_output(out: &Array1<f64>) -> LayerMoments {
        let w = out.len() / 2;
        let mu = out.slice(ndarray::s![..w]).to_owned();
        let log_sigma = out.slice(ndarray::s![w..]).mapv(bounded_log_sigma);
        LayerMoments { mu, log_sigma }
    }

    /// Per-layer moments for a node step given its context.
    pub fn node_moments(&self, ctx: &Array1<f64>) -> Vec<LayerMoments> {
        self.node_nets
            .iter()
            .map(|net| Self::moments_from_output(&net.forward(ctx)))
            .collect()
    }

    /// Per-layer moments for an edge step given its context.
    pub fn edge_moments(&self, ctx: &Array1<f64>) -> Vec<LayerMoments> {
        self.edge_nets
            .iter()
            .map(|net| Self::moments_from_output(&net.forward(ctx)))
            .collect()
    }

    /// Effective `(mu, sigma)` of the composed affine transform for node `i`
    /// conditioned on the graph as given (no visibility masking; callers
    /// apply masks by passing a masked context through [`node_moments`]).
    pub fn condition_node(
        &self,
        bg: &BehavioralGraph,
        i: usize,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_dims(bg)?;
        let ctx = context::node_context(bg, i);
        Ok(compose_moments(&self.node_moments(&ctx)))
    }

    /// Effective `(mu, sigma)` for edge `(i, j)`.
    pub fn condition_edge(
        &self,
        bg: &BehavioralGraph,
        i: usize,
        j: usize,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_dims(bg)?;
        let ctx = context::edge_context(bg, i, j);
        Ok(compose_moments(&self.edge_moments(&ctx)))
    }

    /// Recomputes the log-likelihood of a record from the current parameters
    /// and the record's stored contexts and values.
    pub fn log_likelihood(&self, record: &SampleRecord) -> Result<f64> {
        let mut total = 0.0;
        for step in &record.steps {
            let moments = self.step_moments(step)?;
            let (logp, _) = step_log_density(&moments, &step.value, record.temperature);
            total += logp;
        }
        Ok(total)
    }

    fn step_moments(&self, step: &StepRecord) -> Result<Vec<LayerMoments>> {
        if step.context.len() != self.config.dims.context_len() {
            return Err(Error::IncompleteRecord(format!(
                "context length {} does not match flow dims",
                step.context.len()
            )));
        }
        if step.layers.len() != self.config.layers {
            return Err(Error::IncompleteRecord(format!(
                "step has {} layers, flow has {}",
                step.layers.len(),
                self.config.layers
            )));
        }
        Ok(match step.kind {
            StepKind::Node { .. } => self.node_moments(&step.context),
            StepKind::Edge { .. } => self.edge_moments(&step.context),
        })
    }

    /// Exact reverse-mode gradient of [`log_likelihood`] with respect to all
    /// parameters, flattened in [`to_flat`] order.
    pub fn grad_log_likelihood(&self, record: &SampleRecord) -> Result<FlowGrad> {
        let mut node_grads: Vec<MlpGrad> = self.node_nets.iter().map(Mlp::zero_grad).collect();
        let mut edge_grads: Vec<MlpGrad> = self.edge_nets.iter().map(Mlp::zero_grad).collect();
        for step in &record.steps {
            self.accumulate_step_grad(step, record.temperature, &mut node_grads, &mut edge_grads)?;
        }
        let mut flat = Vec::with_capacity(self.param_count());
        for g in &node_grads {
            g.write_flat(&mut flat);
        }
        for g in &edge_grads {
            g.write_flat(&mut flat);
        }
        Ok(flat)
    }

    fn accumulate_step_grad(
        &self,
        step: &StepRecord,
        temperature: f64,
        node_grads: &mut [MlpGrad],
        edge_grads: &mut [MlpGrad],
    ) -> Result<()> {
        let (nets, grads) = match step.kind {
            StepKind::Node { .. } => (&self.node_nets, node_grads),
            StepKind::Edge { .. } => (&self.edge_nets, edge_grads),
        };
        if step.context.len() != self.config.dims.context_len()
            || step.layers.len() != self.config.layers
        {
            return Err(Error::IncompleteRecord("step shape mismatch".into()));
        }
        let width = step.value.len();
        if width == 0 {
            return Ok(());
        }

        // Forward through each layer net, keeping caches.
        let mut caches = Vec::with_capacity(nets.len());
        let mut moments = Vec::with_capacity(nets.len());
        for net in nets.iter() {
            let (out, cache) = net.forward_cached(&step.context);
            moments.push(Self::moments_from_output(&out));
            caches.push(cache);
        }

        // Invert to get the per-layer inputs y_{k-1}.
        let (_, ys) = step_log_density(&moments, &step.value, temperature);

        // d logp / d y_0 for the Gaussian base.
        let mut g: Array1<f64> = ys[0].mapv(|z| -z / temperature);
        for (k, m) in moments.iter().enumerate() {
            let sigma = m.sigma();
            // seeds in (mu, log sigma) space
            let d_mu: Array1<f64> = -&g / &sigma;
            let mut d_log_sigma: Array1<f64> = -(&g * &ys[k]) - 1.0;
            // through the smooth log-sigma bound
            for (v, &ls) in d_log_sigma.iter_mut().zip(m.log_sigma.iter()) {
                *v *= bounded_log_sigma_slope(ls);
            }
            let mut d_out = Array1::zeros(2 * width);
            d_out.slice_mut(ndarray::s![..width]).assign(&d_mu);
            d_out.slice_mut(ndarray::s![width..]).assign(&d_log_sigma);
            nets[k].backward(&caches[k], &d_out, &mut grads[k]);
            g = &g / &sigma;
        }
        Ok(())
    }

    /// Recovers the per-step latents of a record by inverting the affine
    /// layers under the current parameters. Round-tripping the result through
    /// [`affine_transform`] reproduces the recorded continuous values.
    pub fn invert(&self, record: &SampleRecord) -> Result<Vec<Array1<f64>>> {
        let mut out = Vec::with_capacity(record.steps.len());
        for step in &record.steps {
            let moments = self.step_moments(step)?;
            out.push(invert_layers(&moments, &step.value));
        }
        Ok(out)
    }

    pub fn param_count(&self) -> usize {
        self.node_nets
            .iter()
            .chain(&self.edge_nets)
            .map(Mlp::param_count)
            .sum()
    }

    /// Marks the flat coordinates that parameterize the log-sigma head of
    /// each conditioner (final-layer rows and biases for the upper half of
    /// the output). Trainers use this to run sigma on a slower timescale
    /// than mu.
    pub fn sigma_param_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.param_count());
        for net in self.node_nets.iter().chain(&self.edge_nets) {
            net.mark_output_rows(&mut mask, |row, rows| row >= rows / 2);
        }
        mask
    }

    /// All parameters as one flat vector: node nets first, then edge nets.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for net in self.node_nets.iter().chain(&self.edge_nets) {
            net.write_flat(&mut flat);
        }
        flat
    }

    /// Overwrites all parameters from a flat vector.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut off = 0;
        for net in self.node_nets.iter_mut().chain(self.edge_nets.iter_mut()) {
            net.read_flat(flat, &mut off);
        }
    }
}

/// Composes stacked affine layers into one effective `(mu, sigma)` pair.
pub fn compose_moments(layers: &[LayerMoments]) -> (Array1<f64>, Array1<f64>) {
    let width = layers[0].mu.len();
    let mut mu = Array1::zeros(width);
    let mut sigma = Array1::ones(width);
    for layer in layers {
        let s = layer.sigma();
        mu = &layer.mu + &(&s * &mu);
        sigma = &sigma * &s;
    }
    (mu, sigma)
}

/// The deterministic core of sampling: `mu + sigma * eps`.
pub fn affine_transform(
    mu: &Array1<f64>,
    sigma: &Array1<f64>,
    eps: &Array1<f64>,
) -> Array1<f64> {
    mu + &(sigma * eps)
}

/// Draws `mu + sigma * eps` with `eps ~ N(0, T I)`. Errors on `T <= 0`.
pub fn affine_sample<R: Rng>(
    mu: &Array1<f64>,
    sigma: &Array1<f64>,
    temperature: f64,
    rng: &mut R,
) -> Result<Array1<f64>> {
    let eps = draw_latent(mu.len(), temperature, rng)?;
    Ok(affine_transform(mu, sigma, &eps))
}

/// Gaussian latent of the given width and variance (temperature).
pub fn draw_latent<R: Rng>(width: usize, temperature: f64, rng: &mut R) -> Result<Array1<f64>> {
    if temperature <= 0.0 {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    let scale = temperature.sqrt();
    Ok(Array1::from_shape_fn(width, |_| {
        scale * rng.sample::<f64, _>(StandardNormal)
    }))
}

/// Pushes a latent through the affine layer stack.
pub fn apply_layers(layers: &[LayerMoments], latent: &Array1<f64>) -> Array1<f64> {
    let mut v = latent.clone();
    for layer in layers {
        v = affine_transform(&layer.mu, &layer.sigma(), &v);
    }
    v
}

/// Inverts the affine layer stack, recovering the latent from a value.
pub fn invert_layers(layers: &[LayerMoments], value: &Array1<f64>) -> Array1<f64> {
    let mut v = value.clone();
    for layer in layers.iter().rev() {
        v = (&v - &layer.mu) / layer.sigma();
    }
    v
}

/// Exact log-density of `value` under the layered affine flow with base
/// `N(0, T I)`, along with the per-layer inputs `y_0 .. y_{K-1}` produced by
/// inversion (`y_0` is the latent).
pub fn step_log_density(
    layers: &[LayerMoments],
    value: &Array1<f64>,
    temperature: f64,
) -> (f64, Vec<Array1<f64>>) {
    let mut ys = vec![Array1::zeros(0); layers.len()];
    let mut v = value.clone();
    for k in (0..layers.len()).rev() {
        v = (&v - &layers[k].mu) / layers[k].sigma();
        ys[k] = v.clone();
    }
    let z0 = &ys[0];
    let mut logp = 0.0;
    for &z in z0.iter() {
        logp += -HALF_LN_TWO_PI - 0.5 * temperature.ln() - z * z / (2.0 * temperature);
    }
    for layer in layers {
        logp -= layer.log_sigma.sum();
    }
    (logp, ys)
}

/// Replaces the first `onehot_width` entries with a one-hot vector at their
/// argmax (ties broken toward the lowest index); the remaining entries pass
/// through unchanged.
pub fn discretize(v: &Array1<f64>, onehot_width: usize) -> Array1<f64> {
    assert!(onehot_width <= v.len());
    let mut out = v.clone();
    if onehot_width == 0 {
        return out;
    }
    let mut best = 0;
    for k in 1..onehot_width {
        if v[k] > v[best] {
            best = k;
        }
    }
    for k in 0..onehot_width {
        out[k] = if k == best { 1.0 } else { 0.0 };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_flow(seed: u64) -> FlowModel {
        let dims = GraphDims::new(2, 2, 1, 1);
        let config = FlowConfig::new(dims).with_hidden(&[8]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FlowModel::new(config, &mut rng)
    }

    #[test]
    fn fresh_flow_is_standard_normal() {
        let flow = tiny_flow(0);
        let bg = BehavioralGraph::new(flow.dims());
        let (mu, sigma) = flow.condition_node(&bg, 0).unwrap();
        assert!(mu.iter().all(|&v| v == 0.0));
        assert!(sigma.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dims_mismatch_is_rejected() {
        let flow = tiny_flow(0);
        let bg = BehavioralGraph::new(GraphDims::new(3, 2, 1, 1));
        assert!(matches!(
            flow.condition_node(&bg, 0),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn affine_transform_identities() {
        let mu = Array1::from_vec(vec![0.0]);
        let sigma = Array1::from_vec(vec![1.0]);
        let eps = Array1::from_vec(vec![0.0]);
        assert_eq!(affine_transform(&mu, &sigma, &eps)[0], 0.0);

        let mu = Array1::from_vec(vec![1.0, 2.0]);
        let sigma = Array1::from_vec(vec![0.5, 0.5]);
        let eps = Array1::from_vec(vec![2.0, -2.0]);
        let x = affine_transform(&mu, &sigma, &eps);
        assert_eq!(x.to_vec(), vec![2.0, 1.0]);
    }

    #[test]
    fn non_positive_temperature_is_rejected() {
        let mu = Array1::zeros(1);
        let sigma = Array1::ones(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            affine_sample(&mu, &sigma, 0.0, &mut rng),
            Err(Error::NonPositiveTemperature(_))
        ));
    }

    #[test]
    fn sampled_variance_tracks_temperature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu = Array1::zeros(1);
        let sigma = Array1::ones(1);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let x = affine_sample(&mu, &sigma, 10.0, &mut rng).unwrap()[0];
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((var - 10.0).abs() < 0.3, "empirical variance {var}");
    }

    #[test]
    fn discretize_examples() {
        let v = Array1::from_vec(vec![0.2, 0.9, 0.1]);
        assert_eq!(discretize(&v, 3).to_vec(), vec![0.0, 1.0, 0.0]);

        let tie = Array1::from_vec(vec![0.5, 0.5]);
        assert_eq!(discretize(&tie, 2).to_vec(), vec![1.0, 0.0]);

        let edge = Array1::from_vec(vec![0.1, 0.7, 3.0, -1.0, 0.25, 9.0]);
        let d = discretize(&edge, 2);
        assert_eq!(d.to_vec(), vec![0.0, 1.0, 3.0, -1.0, 0.25, 9.0]);
    }

    #[test]
    fn log_density_analytic_cases() {
        // standard normal at zero
        let layers = vec![LayerMoments {
            mu: Array1::zeros(1),
            log_sigma: Array1::zeros(1),
        }];
        let (logp, _) = step_log_density(&layers, &Array1::zeros(1), 1.0);
        assert_relative_eq!(logp, -0.9189385332046727, epsilon = 1e-9);

        // x = 2, mu = 0, sigma = 2
        let layers = vec![LayerMoments {
            mu: Array1::zeros(1),
            log_sigma: Array1::from_vec(vec![2.0f64.ln()]),
        }];
        let (logp, _) = step_log_density(&layers, &Array1::from_vec(vec![2.0]), 1.0);
        assert_relative_eq!(logp, -0.9189385332046727 - 2.0f64.ln() - 0.5, epsilon = 1e-9);
    }

    #[test]
    fn invert_recovers_latent() {
        let layers = vec![LayerMoments {
            mu: Array1::from_vec(vec![1.0]),
            log_sigma: Array1::from_vec(vec![2.0f64.ln()]),
        }];
        // x = 5 -> z = (5 - 1) / 2 = 2
        let z = invert_layers(&layers, &Array1::from_vec(vec![5.0]));
        assert_relative_eq!(z[0], 2.0, epsilon = 1e-12);
        // x = mu -> z = 0
        let z = invert_layers(&layers, &Array1::from_vec(vec![1.0]));
        assert_eq!(z[0], 0.0);
    }

    #[test]
    fn stack_roundtrip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layers: Vec<LayerMoments> = (0..3)
            .map(|_| LayerMoments {
                mu: Array1::from_shape_fn(4, |_| rng.random_range(-2.0..2.0)),
                log_sigma: Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0)),
            })
            .collect();
        for _ in 0..20 {
            let x = Array1::from_shape_fn(4, |_| rng.random_range(-5.0..5.0));
            let z = invert_layers(&layers, &x);
            let back = apply_layers(&layers, &z);
            for (a, b) in x.iter().zip(back.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
