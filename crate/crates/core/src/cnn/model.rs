use std::borrow::Cow;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::{ArchitectureSpec, LayerPlan, LayerSpec, Padding, Shape};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Per-channel activations of one convolution layer, channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub layer_index: usize,
    pub channels: usize,
    pub timesteps: usize,
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.timesteps..(c + 1) * self.timesteps]
    }

    /// Mean over channels at every timestep.
    pub fn channel_mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.timesteps];
        for c in 0..self.channels {
            for (o, v) in out.iter_mut().zip(self.channel(c)) {
                *o += v;
            }
        }
        let n = self.channels as f64;
        out.iter_mut().for_each(|v| *v /= n);
        out
    }
}

/// Output of [`Model::forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub probabilities: Vec<f64>,
    /// One entry per convolution layer, in layer order.
    pub feature_maps: Vec<FeatureMap>,
}

impl Forward {
    /// Arg-max class, ties resolved to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.probabilities)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A 1D CNN: its architecture plus one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ArchitectureSpec,
    seed: u64,
    params: Vec<f64>,
    plan: Arc<Vec<LayerPlan>>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.seed == other.seed && self.params == other.params
    }
}

/// Builds a model with weights and biases drawn uniformly from
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn build_model(spec: &ArchitectureSpec, seed: u64) -> Result<Model> {
    let plan = spec.plan()?;
    let total = plan.iter().map(LayerPlan::param_count).sum();
    let mut params = Vec::with_capacity(total);
    let mut rng = seeded(seed);
    for p in &plan {
        if p.param_count() == 0 {
            continue;
        }
        let bound = 1.0 / (p.fan_in as f64).sqrt();
        for _ in 0..p.param_count() {
            params.push(rng.random_range(-bound..=bound));
        }
    }
    Ok(Model {
        spec: spec.clone(),
        seed,
        params,
        plan: Arc::new(plan),
    })
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct Trace {
    /// `activations[0]` is the input; `activations[i + 1]` the output of layer `i`.
    activations: Vec<Vec<f64>>,
    /// Arg-max source index for every max-pool output, keyed by layer.
    pool_sources: Vec<Vec<usize>>,
    pub(crate) probabilities: Vec<f64>,
    pub(crate) log_sum_exp: f64,
    pub(crate) logits: Vec<f64>,
}

impl Model {
    /// Assembles a model from stored parts, validating shapes and values.
    pub fn from_parts(spec: ArchitectureSpec, seed: u64, params: Vec<f64>) -> Result<Model> {
        let plan = spec.plan()?;
        let total: usize = plan.iter().map(LayerPlan::param_count).sum();
        if params.len() != total {
            return Err(Error::Shape(format!(
                "architecture needs {total} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        Ok(Model {
            spec,
            seed,
            params,
            plan: Arc::new(plan),
        })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_len(&self) -> usize {
        self.spec.input_len
    }

    pub fn class_count(&self) -> usize {
        self.spec.class_count()
    }

    pub(crate) fn plan(&self) -> &[LayerPlan] {
        &self.plan
    }

    /// A copy with replaced parameters; same architecture and seed.
    pub fn with_params(&self, params: Vec<f64>) -> Result<Model> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        Ok(Model {
            params,
            ..self.clone()
        })
    }

    /// Zeroes every parameter. Mostly useful in tests.
    pub fn zeroed(&self) -> Model {
        Model {
            params: vec![0.0; self.params.len()],
            ..self.clone()
        }
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_len {
            return Err(Error::Shape(format!(
                "model expects {} samples, got {}",
                self.spec.input_len,
                input.len()
            )));
        }
        Ok(())
    }

    /// Class probabilities and every convolution layer's feature map.
    pub fn forward(&self, input: &[f64]) -> Result<Forward> {
        self.check_input(input)?;
        let trace = trace(&self.plan, &self.params, input);
        let feature_maps = self
            .plan
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p.layer, LayerSpec::Conv1d { .. }))
            .map(|(i, p)| FeatureMap {
                layer_index: i,
                channels: p.output.channels,
                timesteps: p.output.len,
                values: trace.activations[i + 1].clone(),
            })
            .collect();
        Ok(Forward {
            probabilities: trace.probabilities,
            feature_maps,
        })
    }

    /// Class probabilities only.
    pub fn predict_proba(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(trace(&self.plan, &self.params, input).probabilities)
    }

    pub fn predict(&self, input: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(input)?))
    }

    /// Activations of a single convolution layer.
    pub fn feature_map(&self, input: &[f64], layer: usize) -> Result<FeatureMap> {
        self.check_input(input)?;
        match self.plan.get(layer) {
            Some(p) if matches!(p.layer, LayerSpec::Conv1d { .. }) => {
                let t = trace(&self.plan, &self.params, input);
                Ok(FeatureMap {
                    layer_index: layer,
                    channels: p.output.channels,
                    timesteps: p.output.len,
                    values: t.activations[layer + 1].clone(),
                })
            }
            _ => Err(Error::Layer(layer)),
        }
    }

    /// Mean cross-entropy over `batch` without gradients.
    pub fn mean_loss(&self, batch: &[(&[f64], usize)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut total = 0.0;
        for (x, y) in batch {
            self.check_input(x)?;
            self.check_label(*y)?;
            let t = trace(&self.plan, &self.params, x);
            total += t.log_sum_exp - t.logits[*y];
        }
        Ok(total / batch.len() as f64)
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.class_count() {
            return Err(Error::Label {
                id: String::new(),
                label: y,
                class_count: self.class_count(),
            });
        }
        Ok(())
    }
}

/// Mean cross-entropy loss and its exact gradient over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    /// Same layout as [`Model::params`].
    pub gradient: Vec<f64>,
}

/// Analytic gradient of the mean cross-entropy over `batch`.
pub fn gradient_of_loss(model: &Model, batch: &[(&[f64], usize)]) -> Result<LossGradient> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut gradient = vec![0.0; model.params.len()];
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (x, y) in batch {
        model.check_input(x)?;
        model.check_label(*y)?;
        loss += accumulate(&model.plan, &model.params, x, *y, scale, &mut gradient);
    }
    Ok(LossGradient {
        loss: loss * scale,
        gradient,
    })
}

/// Adds `scale * dLoss/dParams` of one example into `grad`, returns its loss.
pub(crate) fn accumulate(
    plan: &[LayerPlan],
    params: &[f64],
    input: &[f64],
    label: usize,
    scale: f64,
    grad: &mut [f64],
) -> f64 {
    let t = trace(plan, params, input);
    let loss = t.log_sum_exp - t.logits[label];
    backward(plan, params, &t, label, scale, grad);
    loss
}

pub(crate) fn trace(plan: &[LayerPlan], params: &[f64], input: &[f64]) -> Trace {
    let mut activations = Vec::with_capacity(plan.len() + 1);
    activations.push(input.to_vec());
    let mut pool_sources = vec![Vec::new(); plan.len()];
    let mut logits = Vec::new();
    for (i, p) in plan.iter().enumerate() {
        let x = &activations[i];
        let out = match p.layer {
            LayerSpec::Conv1d {
                kernel_size,
                padding,
                ..
            } => conv_forward(p, params, &pad(x, p.input, kernel_size, padding), kernel_size),
            LayerSpec::MaxPool { window } => {
                let (out, src) = pool_forward(p, x, window);
                pool_sources[i] = src;
                out
            }
            LayerSpec::GlobalAvgPool => {
                let len = p.input.len as f64;
                x.chunks(p.input.len).map(|c| c.iter().sum::<f64>() / len).collect()
            }
            LayerSpec::DenseSoftmax { classes } => {
                let w = &params[p.offset..p.offset + p.weights];
                let b = &params[p.offset + p.weights..p.offset + p.weights + p.biases];
                logits = (0..classes)
                    .map(|j| {
                        let row = &w[j * p.input.channels..(j + 1) * p.input.channels];
                        b[j] + dot(row, x)
                    })
                    .collect();
                Vec::new()
            }
        };
        activations.push(out);
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probabilities = exps.iter().map(|e| e / sum).collect();
    Trace {
        activations,
        pool_sources,
        probabilities,
        log_sum_exp: max + sum.ln(),
        logits,
    }
}

/// Left and right zero counts of a convolution.
fn pad_amounts(k: usize, padding: Padding) -> (usize, usize) {
    match padding {
        Padding::Valid => (0, 0),
        Padding::Same => ((k - 1) / 2, k - 1 - (k - 1) / 2),
    }
}

fn pad(x: &[f64], shape: Shape, k: usize, padding: Padding) -> Cow<'_, [f64]> {
    let (left, right) = pad_amounts(k, padding);
    if left + right == 0 {
        return Cow::Borrowed(x);
    }
    let width = shape.len + left + right;
    let mut out = vec![0.0; shape.channels * width];
    for (c, row) in x.chunks(shape.len).enumerate() {
        out[c * width + left..c * width + left + shape.len].copy_from_slice(row);
    }
    Cow::Owned(out)
}

/// `x` is already padded to `lout + k - 1` samples per channel.
fn conv_forward(p: &LayerPlan, params: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    let cin = p.input.channels;
    let lin = p.output.len + k - 1;
    let (cout, lout) = (p.output.channels, p.output.len);
    let w = &params[p.offset..p.offset + p.weights];
    let b = &params[p.offset + p.weights..p.offset + p.weights + p.biases];
    let mut out = vec![0.0; cout * lout];
    for o in 0..cout {
        let row = &mut out[o * lout..(o + 1) * lout];
        row.fill(b[o]);
        for i in 0..cin {
            let xi = &x[i * lin..(i + 1) * lin];
            for j in 0..k {
                let wv = w[(o * cin + i) * k + j];
                axpy(wv, &xi[j..j + lout], row);
            }
        }
        row.iter_mut().for_each(|v| *v = v.tanh());
    }
    out
}

fn pool_forward(p: &LayerPlan, x: &[f64], window: usize) -> (Vec<f64>, Vec<usize>) {
    let (lin, lout) = (p.input.len, p.output.len);
    let mut out = Vec::with_capacity(p.output.size());
    let mut src = Vec::with_capacity(p.output.size());
    for c in 0..p.input.channels {
        for t in 0..lout {
            let start = c * lin + t * window;
            let mut best = start;
            for s in start + 1..start + window {
                if x[s] > x[best] {
                    best = s;
                }
            }
            out.push(x[best]);
            src.push(best);
        }
    }
    (out, src)
}

fn backward(plan: &[LayerPlan], params: &[f64], t: &Trace, label: usize, scale: f64, grad: &mut [f64]) {
    // d(loss)/d(logits) = softmax - onehot
    let mut upstream: Vec<f64> = t
        .probabilities
        .iter()
        .enumerate()
        .map(|(j, p)| scale * (p - if j == label { 1.0 } else { 0.0 }))
        .collect();
    for (i, p) in plan.iter().enumerate().rev() {
        let x = &t.activations[i];
        upstream = match p.layer {
            LayerSpec::DenseSoftmax { classes } => {
                let cin = p.input.channels;
                let w = &params[p.offset..p.offset + p.weights];
                let mut dx = vec![0.0; cin];
                for j in 0..classes {
                    let g = upstream[j];
                    axpy(g, x, &mut grad[p.offset + j * cin..p.offset + (j + 1) * cin]);
                    grad[p.offset + p.weights + j] += g;
                    axpy(g, &w[j * cin..(j + 1) * cin], &mut dx);
                }
                dx
            }
            LayerSpec::GlobalAvgPool => {
                let len = p.input.len;
                let inv = 1.0 / len as f64;
                upstream
                    .iter()
                    .flat_map(|g| std::iter::repeat_n(g * inv, len))
                    .collect()
            }
            LayerSpec::MaxPool { .. } => {
                let mut dx = vec![0.0; p.input.size()];
                for (g, &s) in upstream.iter().zip(&t.pool_sources[i]) {
                    dx[s] += g;
                }
                dx
            }
            LayerSpec::Conv1d {
                kernel_size,
                padding,
                ..
            } => {
                let xp = pad(x, p.input, kernel_size, padding);
                let dxp = conv_backward(p, params, &xp, &t.activations[i + 1], &upstream, kernel_size, grad, i > 0);
                let (left, _) = pad_amounts(kernel_size, padding);
                if i == 0 || xp.len() == x.len() {
                    dxp
                } else {
                    let width = p.output.len + kernel_size - 1;
                    dxp.chunks(width)
                        .flat_map(|row| row[left..left + p.input.len].iter().copied())
                        .collect()
                }
            }
        };
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    p: &LayerPlan,
    params: &[f64],
    x: &[f64],
    y: &[f64],
    dy: &[f64],
    k: usize,
    grad: &mut [f64],
    need_dx: bool,
) -> Vec<f64> {
    let (cout, lout) = (p.output.channels, p.output.len);
    let (cin, lin) = (p.input.channels, lout + k - 1);
    let w = &params[p.offset..p.offset + p.weights];
    let dpre: Vec<f64> = dy.iter().zip(y).map(|(g, a)| g * (1.0 - a * a)).collect();
    let mut dx = if need_dx { vec![0.0; cin * lin] } else { Vec::new() };
    for o in 0..cout {
        let d = &dpre[o * lout..(o + 1) * lout];
        grad[p.offset + p.weights + o] += d.iter().sum::<f64>();
        for i in 0..cin {
            let xi = &x[i * lin..(i + 1) * lin];
            for j in 0..k {
                let widx = (o * cin + i) * k + j;
                grad[p.offset + widx] += dot(d, &xi[j..j + lout]);
                if need_dx {
                    axpy(w[widx], d, &mut dx[i * lin + j..i * lin + j + lout]);
                }
            }
        }
    }
    dx
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}
