//! A small dense network `φ(y, r, R)` trained to pick the worst-case rate of
//! the ambiguous-rate driver, and the driver built from it.
//!
//! Hidden layers use the rectifier, the output layer is affine. The training
//! loss is the batch mean of `clamp(φ(y, r, R), r, R) · y`, whose minimizer is
//! `R` for `y < 0` and `r` for `y ≥ 0`. Gradients are zero wherever the clamp
//! is active.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bsde::Driver;
use crate::{Error, Result};

/// Layer widths used for the rate network: three inputs, three hidden layers
/// of eleven units, one output.
pub const AIR_LAYERS: [usize; 5] = [3, 11, 11, 11, 1];

/// Widest layer handled without heap allocation in [`Mlp::eval`].
const STACK_WIDTH: usize = 64;

/// Dense layer `x ↦ W x + b` with `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64], relu: bool) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.bias[o];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *slot = if relu { acc.max(0.0) } else { acc };
        }
    }

    fn params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Network with all weights and biases zero.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Mlp {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// He-normal weights and zero biases, deterministic in `seed`.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Mlp::zeros(sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let scale = libm::sqrt(2.0 / layer.inputs as f64);
            for w in &mut layer.weights {
                *w = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(net)
    }

    /// [`Mlp::init`] with the output layer shrunk by ten and its bias at
    /// `0.5`, so initial rates sit inside typical bounds `r ≤ 0.5 ≤ R` where
    /// the clamped loss has a gradient.
    pub fn init_rate_network(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut net = Mlp::init(sizes, seed)?;
        let last = net.layers.len() - 1;
        let out = &mut net.layers[last];
        out.weights.iter_mut().for_each(|w| *w *= 0.1);
        out.bias.iter_mut().for_each(|b| *b = 0.5);
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::precondition("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return Err(Error::precondition(format!("layer {i} has zero width")));
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::shape(
                    format!("{}x{} weights and {} biases", l.outputs, l.inputs, l.outputs),
                    format!("{} weights and {} biases", l.weights.len(), l.bias.len()),
                ));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::shape(
                    format!("layer {i} input width {}", layers[i - 1].outputs),
                    l.inputs,
                ));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::precondition(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Widths including input and output, e.g. `[3, 11, 11, 11, 1]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::params).sum()
    }

    /// All parameters, layer by layer, weights (row-major) then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`Mlp::flatten`] for the given widths.
    pub fn unflatten(sizes: &[usize], params: &[f64]) -> Result<Self> {
        let mut net = Mlp::zeros(sizes)?;
        if params.len() != net.num_params() {
            return Err(Error::shape(format!("{} parameters", net.num_params()), params.len()));
        }
        net.assign(params);
        Mlp::from_layers(net.layers)
    }

    fn assign(&mut self, params: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
    }

    fn max_width(&self) -> usize {
        self.layers.iter().map(|l| l.inputs.max(l.outputs)).max().unwrap_or(0)
    }

    /// Scalar output for one input vector.
    ///
    /// Panics if the network does not have a single output or `x` has the
    /// wrong length.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_dim(), "input width");
        assert_eq!(self.output_dim(), 1, "eval needs a single output");
        if self.max_width() <= STACK_WIDTH {
            let mut a = [0.0; STACK_WIDTH];
            let mut b = [0.0; STACK_WIDTH];
            a[..x.len()].copy_from_slice(x);
            let last = self.layers.len() - 1;
            for (i, l) in self.layers.iter().enumerate() {
                l.apply(&a[..l.inputs], &mut b[..l.outputs], i < last);
                core::mem::swap(&mut a, &mut b);
            }
            a[0]
        } else {
            let acts = self.activations(x);
            acts[acts.len() - 1][0]
        }
    }

    /// Per-layer activations; entry 0 is the input, the last entry the output.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, l) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; l.outputs];
            l.apply(&acts[i], &mut out, i < last);
            acts.push(out);
        }
        acts
    }

    /// Outputs for a row-major `P × input_dim` batch, as `P × output_dim`.
    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let n_in = self.input_dim();
        if !inputs.len().is_multiple_of(n_in) {
            return Err(Error::shape(format!("rows of {n_in} inputs"), inputs.len()));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::precondition("network inputs must be finite"));
        }
        let mut out = Vec::with_capacity(inputs.len() / n_in * self.output_dim());
        for x in inputs.chunks_exact(n_in) {
            let acts = self.activations(x);
            out.extend_from_slice(&acts[acts.len() - 1]);
        }
        Ok(out)
    }

    /// Gradient of `Σ_p ⟨g_p, φ(x_p)⟩` with respect to all parameters, in
    /// [`Mlp::flatten`] order, where `g` holds one row of output sensitivities
    /// per input row.
    pub fn backward(&self, inputs: &[f64], grad_out: &[f64]) -> Result<Vec<f64>> {
        let n_in = self.input_dim();
        let n_out = self.output_dim();
        if !inputs.len().is_multiple_of(n_in) || grad_out.len() != inputs.len() / n_in * n_out {
            return Err(Error::shape(
                format!("{} output sensitivities", inputs.len() / n_in * n_out),
                grad_out.len(),
            ));
        }
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        for (x, g) in inputs.chunks_exact(n_in).zip(grad_out.chunks_exact(n_out)) {
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            let acts = self.activations(x);
            let mut delta = g.to_vec();
            for i in (0..self.layers.len()).rev() {
                let l = &self.layers[i];
                let input = &acts[i];
                let gl = &mut grads[i];
                for o in 0..l.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gl.bias[o] += d;
                    for (gw, xi) in gl.weights[o * l.inputs..(o + 1) * l.inputs].iter_mut().zip(input) {
                        *gw += d * xi;
                    }
                }
                if i == 0 {
                    break;
                }
                // Back through the weights, then the rectifier of layer i - 1.
                let mut prev = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&l.weights[o * l.inputs..(o + 1) * l.inputs]) {
                        *p += d * w;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok(Mlp { layers: grads }.flatten())
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::precondition(format!(
            "need at least two positive layer widths, got {sizes:?}"
        )));
    }
    Ok(())
}

/// `max(r, min(R, raw))`.
pub fn clamp_rate(raw: f64, lower: f64, upper: f64) -> f64 {
    raw.min(upper).max(lower)
}

/// Elementwise [`clamp_rate`]; errors if any `r > R`.
pub fn clamp_beta(raw: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if lower.len() != raw.len() || upper.len() != raw.len() {
        return Err(Error::shape(
            format!("{} bounds", raw.len()),
            format!("{} lower and {} upper", lower.len(), upper.len()),
        ));
    }
    if let Some(i) = (0..raw.len()).find(|&i| !(lower[i] <= upper[i])) {
        return Err(Error::precondition(format!(
            "rate bounds out of order at {i}: r = {} > R = {}",
            lower[i], upper[i]
        )));
    }
    Ok(raw
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&x, (&r, &u))| clamp_rate(x, r, u))
        .collect())
}

/// Adam with the usual bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; params],
            v: vec![0.0; params],
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.learning_rate * mh / (libm::sqrt(vh) + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::precondition("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::precondition("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Draws `(y, r, R)` rows: `y` standard normal, `r ≤ R` the sorted pair of
/// two uniforms on `[0, 1]`.
pub fn sample_training_batch(rng: &mut impl Rng, batch: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * batch);
    for _ in 0..batch {
        let y: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        out.extend_from_slice(&[y, u.min(v), u.max(v)]);
    }
    out
}

/// Batch loss `mean(clamp(φ) · y)` and its gradient.
pub fn rate_loss(net: &Mlp, batch: &[f64]) -> Result<(f64, Vec<f64>)> {
    let raw = net.forward(batch)?;
    let p = raw.len();
    let mut loss = 0.0;
    let mut sens = vec![0.0; p];
    for (i, row) in batch.chunks_exact(3).enumerate() {
        let (y, r, u) = (row[0], row[1], row[2]);
        loss += clamp_rate(raw[i], r, u) * y;
        if raw[i] > r && raw[i] < u {
            sens[i] = y / p as f64;
        }
    }
    Ok((loss / p as f64, net.backward(batch, &sens)?))
}

/// Trains `net` with one Adam step per epoch on a fresh batch. Returns the
/// trained network and the per-epoch batch loss.
pub fn train(net: Mlp, cfg: &TrainConfig) -> Result<(Mlp, Vec<f64>)> {
    cfg.validate()?;
    if net.input_dim() != 3 || net.output_dim() != 1 {
        return Err(Error::shape("network R^3 -> R", format!("{:?}", net.sizes())));
    }
    let mut net = net;
    let mut params = net.flatten();
    let mut opt = Adam::new(params.len(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let batch = sample_training_batch(&mut rng, cfg.batch_size);
        let (loss, grad) = rate_loss(&net, &batch)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training { epoch });
        }
        history.push(loss);
        opt.update(&mut params, &grad);
        net.assign(&params);
    }
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training { epoch: cfg.epochs });
    }
    Ok((net, history))
}

/// `f(t, x, y, z) = -clamp(φ(y, r, R), r, R) · y` for fixed rate bounds.
#[derive(Debug, Clone)]
pub struct NetworkDriver {
    net: Mlp,
    lower: f64,
    upper: f64,
}

impl NetworkDriver {
    pub fn new(net: Mlp, lower: f64, upper: f64) -> Result<Self> {
        if net.input_dim() != 3 || net.output_dim() != 1 {
            return Err(Error::shape("network R^3 -> R", format!("{:?}", net.sizes())));
        }
        if !(lower <= upper) {
            return Err(Error::precondition("need r <= R for the rate bounds"));
        }
        Ok(NetworkDriver { net, lower, upper })
    }

    /// The clamped rate chosen at `y`.
    pub fn rate(&self, y: f64) -> f64 {
        clamp_rate(self.net.eval(&[y, self.lower, self.upper]), self.lower, self.upper)
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }
}

impl Driver for NetworkDriver {
    fn eval(&self, _: f64, _: f64, y: f64, _: f64) -> f64 {
        -self.rate(y) * y
    }
    fn name(&self) -> &str {
        "network"
    }
}

pub fn network_driver(net: Mlp, lower: f64, upper: f64) -> Result<NetworkDriver> {
    NetworkDriver::new(net, lower, upper)
}
