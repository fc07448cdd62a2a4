//! One LSTM layer: parameters, the cell step, and BPTT over a sequence.
//!
//! Gate equations (σ = logistic):
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)    g = tanh(W_g x + U_g h + b_g)
//! c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
//! ```
//!
//! Weights of the four gates are stacked row-wise in the order i, f, o, g.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub input_size: usize,
    pub hidden_size: usize,
    /// `4·hidden × input`, row-major.
    pub w: Vec<f64>,
    /// `4·hidden × hidden`, row-major.
    pub u: Vec<f64>,
    /// `4·hidden`.
    pub b: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let rows = 4 * hidden_size;
        Self {
            input_size,
            hidden_size,
            w: vec![0.0; rows * input_size],
            u: vec![0.0; rows * hidden_size],
            b: vec![0.0; rows],
        }
    }

    /// Uniform in `±1/sqrt(input + hidden)`, forget-gate bias 1.
    pub fn init_uniform<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let bound = 1.0 / libm::sqrt((input_size + hidden_size) as f64);
        for v in p.w.iter_mut().chain(p.u.iter_mut()) {
            *v = rng.random_range(-bound..bound);
        }
        let h = hidden_size;
        p.b[h..2 * h].fill(1.0);
        p
    }

    pub fn validate(&self) -> Result<()> {
        let rows = 4 * self.hidden_size;
        let checks = [
            ("lstm input weights", rows * self.input_size, self.w.len()),
            ("lstm recurrent weights", rows * self.hidden_size, self.u.len()),
            ("lstm bias", rows, self.b.len()),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(Error::ShapeMismatch { what, expected, actual });
            }
        }
        if self.hidden_size == 0 || self.input_size == 0 {
            return Err(Error::invalid("hidden_size", "layer sizes must be positive"));
        }
        Ok(())
    }

    fn rows(&self, gate: Gate) -> core::ops::Range<usize> {
        let h = self.hidden_size;
        gate as usize * h..(gate as usize + 1) * h
    }

    pub fn gate_input_weights(&self, gate: Gate) -> &[f64] {
        let r = self.rows(gate);
        &self.w[r.start * self.input_size..r.end * self.input_size]
    }

    pub fn gate_recurrent_weights(&self, gate: Gate) -> &[f64] {
        let r = self.rows(gate);
        &self.u[r.start * self.hidden_size..r.end * self.hidden_size]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        &self.b[self.rows(gate)]
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.rows(gate);
        &mut self.b[r]
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Activated gates `[i | f | o | g]` for one step.
fn gates_into(p: &LstmLayerParams, x: &[f64], h_prev: &[f64], out: &mut [f64]) {
    let (n_in, n_h) = (p.input_size, p.hidden_size);
    for (r, z) in out.iter_mut().enumerate() {
        *z = p.b[r] + dot(&p.w[r * n_in..(r + 1) * n_in], x) + dot(&p.u[r * n_h..(r + 1) * n_h], h_prev);
    }
    let (ifo, g) = out.split_at_mut(3 * n_h);
    ifo.iter_mut().for_each(|z| *z = sigmoid(*z));
    g.iter_mut().for_each(|z| *z = libm::tanh(*z));
}

/// One cell update; returns `(h_t, c_t)`.
pub fn lstm_cell_step(
    params: &LstmLayerParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    let h = params.hidden_size;
    for (what, expected, actual) in [
        ("cell input", params.input_size, x.len()),
        ("previous hidden state", h, h_prev.len()),
        ("previous cell state", h, c_prev.len()),
    ] {
        if expected != actual {
            return Err(Error::ShapeMismatch { what, expected, actual });
        }
    }
    let mut gates = vec![0.0; 4 * h];
    gates_into(params, x, h_prev, &mut gates);
    let mut h_t = vec![0.0; h];
    let mut c_t = vec![0.0; h];
    for k in 0..h {
        let (i, f, o, g) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
        c_t[k] = f * c_prev[k] + i * g;
        h_t[k] = o * libm::tanh(c_t[k]);
    }
    Ok((h_t, c_t))
}

/// Activations kept from a forward pass over `steps` inputs, all row-major by step.
#[derive(Debug, Clone)]
pub(crate) struct SequenceCache {
    pub steps: usize,
    pub hs: Vec<f64>,
    pub cs: Vec<f64>,
    pub tanh_cs: Vec<f64>,
    pub gates: Vec<f64>,
}

impl SequenceCache {
    pub fn last_hidden(&self, hidden: usize) -> &[f64] {
        &self.hs[(self.steps - 1) * hidden..]
    }
}

/// Runs the layer over `xs` (`steps × input`) from a zero state.
pub(crate) fn forward_sequence(p: &LstmLayerParams, xs: &[f64], steps: usize) -> SequenceCache {
    let (n_in, h) = (p.input_size, p.hidden_size);
    debug_assert_eq!(xs.len(), steps * n_in);
    let mut cache = SequenceCache {
        steps,
        hs: vec![0.0; steps * h],
        cs: vec![0.0; steps * h],
        tanh_cs: vec![0.0; steps * h],
        gates: vec![0.0; steps * 4 * h],
    };
    let zeros = vec![0.0; h];
    for t in 0..steps {
        let x = &xs[t * n_in..(t + 1) * n_in];
        let (done_h, hs) = cache.hs.split_at_mut(t * h);
        let (done_c, cs) = cache.cs.split_at_mut(t * h);
        let (prev_h, prev_c) = if t == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&done_h[(t - 1) * h..], &done_c[(t - 1) * h..])
        };
        let gates = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
        gates_into(p, x, prev_h, gates);
        let tanh_cs = &mut cache.tanh_cs[t * h..(t + 1) * h];
        for k in 0..h {
            let (i, f, o, g) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let c = f * prev_c[k] + i * g;
            let tc = libm::tanh(c);
            cs[k] = c;
            tanh_cs[k] = tc;
            hs[k] = o * tc;
        }
    }
    cache
}

/// Backpropagates `dhs` (loss gradient w.r.t. every step's hidden output)
/// through the layer, accumulating into `grad`. Returns the gradient w.r.t.
/// the inputs, `steps × input`.
pub(crate) fn backward_sequence(
    p: &LstmLayerParams,
    xs: &[f64],
    cache: &SequenceCache,
    dhs: &[f64],
    grad: &mut LstmLayerParams,
) -> Vec<f64> {
    let (n_in, h) = (p.input_size, p.hidden_size);
    let steps = cache.steps;
    let mut dxs = vec![0.0; steps * n_in];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    let zeros = vec![0.0; h];

    for t in (0..steps).rev() {
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let (prev_h, prev_c) = if t == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&cache.hs[(t - 1) * h..t * h], &cache.cs[(t - 1) * h..t * h])
        };
        for k in 0..h {
            let (i, f, o, g) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let tc = cache.tanh_cs[t * h + k];
            let dh = dhs[t * h + k] + dh_next[k];
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dz[k] = dc * g * i * (1.0 - i);
            dz[h + k] = dc * prev_c[k] * f * (1.0 - f);
            dz[2 * h + k] = dh * tc * o * (1.0 - o);
            dz[3 * h + k] = dc * i * (1.0 - g * g);
            dc_next[k] = dc * f;
        }
        let x = &xs[t * n_in..(t + 1) * n_in];
        let dx = &mut dxs[t * n_in..(t + 1) * n_in];
        dh_next.fill(0.0);
        for (r, &d) in dz.iter().enumerate() {
            grad.b[r] += d;
            axpy(d, x, &mut grad.w[r * n_in..(r + 1) * n_in]);
            axpy(d, prev_h, &mut grad.u[r * h..(r + 1) * h]);
            axpy(d, &p.w[r * n_in..(r + 1) * n_in], dx);
            axpy(d, &p.u[r * h..(r + 1) * h], &mut dh_next);
        }
    }
    dxs
}
