//! Stacked LSTM layers with a scalar dense head, forward and backward.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::{backward_sequence, dot, forward_sequence, LstmLayerParams, SequenceCache};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// LSTM stack plus dense head. The same shape doubles as a gradient buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub lstm: Vec<LstmLayerParams>,
    pub dense: DenseParams,
}

impl Network {
    pub fn zeros(hidden_sizes: &[usize]) -> Result<Self> {
        if hidden_sizes.is_empty() || hidden_sizes.contains(&0) {
            return Err(Error::invalid("hidden_sizes", "need at least one layer, all sizes positive"));
        }
        let mut lstm = Vec::with_capacity(hidden_sizes.len());
        let mut input = 1;
        for &h in hidden_sizes {
            lstm.push(LstmLayerParams::zeros(input, h));
            input = h;
        }
        Ok(Self {
            lstm,
            dense: DenseParams {
                weights: vec![0.0; input],
                bias: 0.0,
            },
        })
    }

    pub fn init_uniform<R: Rng + ?Sized>(hidden_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(hidden_sizes)?;
        let mut input = 1;
        for (layer, &h) in net.lstm.iter_mut().zip(hidden_sizes) {
            *layer = LstmLayerParams::init_uniform(input, h, rng);
            input = h;
        }
        let bound = 1.0 / libm::sqrt(input as f64);
        for w in net.dense.weights.iter_mut() {
            *w = rng.random_range(-bound..bound);
        }
        Ok(net)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            lstm: self
                .lstm
                .iter()
                .map(|l| LstmLayerParams::zeros(l.input_size, l.hidden_size))
                .collect(),
            dense: DenseParams {
                weights: vec![0.0; self.dense.weights.len()],
                bias: 0.0,
            },
        }
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.lstm.iter().map(|l| l.hidden_size).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut input = 1;
        for layer in &self.lstm {
            layer.validate()?;
            if layer.input_size != input {
                return Err(Error::ShapeMismatch {
                    what: "lstm layer input size",
                    expected: input,
                    actual: layer.input_size,
                });
            }
            input = layer.hidden_size;
        }
        if self.lstm.is_empty() {
            return Err(Error::invalid("lstm", "network has no LSTM layers"));
        }
        if self.dense.weights.len() != input {
            return Err(Error::ShapeMismatch {
                what: "dense weights",
                expected: input,
                actual: self.dense.weights.len(),
            });
        }
        for (k, &v) in self.tensors().iter().flat_map(|t| t.iter()).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: k, value: v });
            }
        }
        Ok(())
    }

    /// Every parameter tensor in a fixed order: per layer `w, u, b`, then
    /// dense weights and bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(3 * self.lstm.len() + 2);
        for l in &self.lstm {
            out.extend([&l.w[..], &l.u[..], &l.b[..]]);
        }
        out.push(&self.dense.weights);
        out.push(core::slice::from_ref(&self.dense.bias));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(3 * self.lstm.len() + 2);
        for l in &mut self.lstm {
            out.push(&mut l.w);
            out.push(&mut l.u);
            out.push(&mut l.b);
        }
        out.push(&mut self.dense.weights);
        out.push(core::slice::from_mut(&mut self.dense.bias));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Inverted-dropout masks: entries are 0 or `1/(1-rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    /// Over the first layer's output sequence (`steps × hidden`); absent for
    /// a single-layer stack.
    pub first: Option<Vec<f64>>,
    /// Over the last layer's final hidden state.
    pub last: Vec<f64>,
}

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(net: &Network, steps: usize, rate: f64, rng: &mut R) -> Self {
        let keep = 1.0 - rate;
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect()
        };
        let first = (net.lstm.len() >= 2).then(|| draw(steps * net.lstm[0].hidden_size));
        let last = draw(net.lstm[net.lstm.len() - 1].hidden_size);
        Self { first, last }
    }
}

pub(crate) struct ForwardCache {
    layer_inputs: Vec<Vec<f64>>,
    caches: Vec<SequenceCache>,
    head_input: Vec<f64>,
    pub output: f64,
}

pub(crate) fn forward_cached(net: &Network, window: &[f64], masks: Option<&DropoutMasks>) -> ForwardCache {
    let steps = window.len();
    let mut layer_inputs = Vec::with_capacity(net.lstm.len());
    let mut caches: Vec<SequenceCache> = Vec::with_capacity(net.lstm.len());
    let mut input = window.to_vec();
    for (k, layer) in net.lstm.iter().enumerate() {
        let cache = forward_sequence(layer, &input, steps);
        let mut next = cache.hs.clone();
        if k == 0 {
            if let Some(m) = masks.and_then(|m| m.first.as_ref()) {
                next.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
            }
        }
        layer_inputs.push(core::mem::replace(&mut input, next));
        caches.push(cache);
    }
    let last = net.lstm.last().expect("validated stack");
    let mut head_input = caches.last().expect("validated stack").last_hidden(last.hidden_size).to_vec();
    if let Some(m) = masks {
        head_input.iter_mut().zip(&m.last).for_each(|(v, s)| *v *= s);
    }
    let output = net.dense.bias + dot(&net.dense.weights, &head_input);
    ForwardCache {
        layer_inputs,
        caches,
        head_input,
        output,
    }
}

/// Accumulates `d_output · ∂output/∂θ` into `grad`.
pub(crate) fn backward(
    net: &Network,
    cache: &ForwardCache,
    masks: Option<&DropoutMasks>,
    d_output: f64,
    grad: &mut Network,
) {
    grad.dense.bias += d_output;
    for (g, &x) in grad.dense.weights.iter_mut().zip(&cache.head_input) {
        *g += d_output * x;
    }
    let layers = net.lstm.len();
    let steps = cache.caches[0].steps;
    let top_h = net.lstm[layers - 1].hidden_size;
    let mut dhs = vec![0.0; steps * top_h];
    for (k, d) in dhs[(steps - 1) * top_h..].iter_mut().enumerate() {
        let m = masks.map_or(1.0, |m| m.last[k]);
        *d = d_output * net.dense.weights[k] * m;
    }
    for k in (0..layers).rev() {
        let mut dxs = backward_sequence(
            &net.lstm[k],
            &cache.layer_inputs[k],
            &cache.caches[k],
            &dhs,
            &mut grad.lstm[k],
        );
        if k == 0 {
            break;
        }
        if k == 1 {
            if let Some(m) = masks.and_then(|m| m.first.as_ref()) {
                dxs.iter_mut().zip(m).for_each(|(v, s)| *v *= s);
            }
        }
        dhs = dxs;
    }
}
