use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{backward, forward_cached, DropoutMasks, Network};
use super::{EpochLoss, LstmForecaster};
use crate::dataset::{shuffle, SplitDataset, WindowedSample};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub hidden_sizes: Vec<usize>,
    pub optimizer: Optimizer,
    /// Global gradient-norm ceiling; `0` disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            dropout_rate: 0.2,
            hidden_sizes: vec![64, 64, 64],
            optimizer: Optimizer::Adam,
            clip_norm: 5.0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid("dropout_rate", "must lie in [0, 1)"));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::invalid("hidden_sizes", "need at least one layer, all sizes positive"));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return Err(Error::invalid("clip_norm", "must be finite and non-negative"));
        }
        Ok(())
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: Network,
    v: Network,
    step: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Self {
            m: net.zeros_like(),
            v: net.zeros_like(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Network, grad: &Network, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(BETA1, self.step as f64);
        let c2 = 1.0 - libm::pow(BETA2, self.step as f64);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            for k in 0..p.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPS);
            }
        }
    }
}

fn sgd_update(params: &mut Network, grad: &Network, lr: f64) {
    for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
        for (pk, gk) in p.iter_mut().zip(g) {
            *pk -= lr * gk;
        }
    }
}

/// Mean squared error over `samples` and its gradient. Samples must already
/// be normalized. With `masks`, sample `k` uses `masks[k]`.
pub fn loss_and_gradient(
    model: &LstmForecaster,
    samples: &[WindowedSample],
    masks: Option<&[DropoutMasks]>,
) -> Result<(f64, Network)> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }
    if let Some(m) = masks {
        if m.len() != samples.len() {
            return Err(Error::ShapeMismatch {
                what: "dropout masks",
                expected: samples.len(),
                actual: m.len(),
            });
        }
    }
    let mut grad = model.network.zeros_like();
    let loss = accumulate(model, samples.iter(), |k| masks.map(|m| &m[k]), &mut grad)?;
    Ok((loss, grad))
}

fn accumulate<'a, 'm>(
    model: &LstmForecaster,
    samples: impl ExactSizeIterator<Item = &'a WindowedSample>,
    mut mask_for: impl FnMut(usize) -> Option<&'m DropoutMasks>,
    grad: &mut Network,
) -> Result<f64> {
    let n = samples.len() as f64;
    let mut loss = 0.0;
    for (k, s) in samples.enumerate() {
        model.check_window(&s.input)?;
        let masks = mask_for(k);
        let cache = forward_cached(&model.network, &s.input, masks);
        let err = cache.output - s.target;
        loss += err * err / n;
        backward(&model.network, &cache, masks, 2.0 * err / n, grad);
    }
    Ok(loss)
}

/// Minibatch training on the normalized train split. Loss is MSE in
/// normalized units; the per-epoch mean is appended to `training_log`.
pub fn train(mut model: LstmForecaster, dataset: &SplitDataset, config: &TrainConfig) -> Result<LstmForecaster> {
    config.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }
    let norm = model.normalizer;
    let samples: Vec<WindowedSample> = dataset
        .train
        .iter()
        .map(|s| {
            model.check_window(&s.input)?;
            Ok(WindowedSample {
                input: s.input.iter().map(|&v| norm.apply(v)).collect(),
                target: norm.apply(s.target),
                origin_index: s.origin_index,
            })
        })
        .collect::<Result<_>>()?;

    model.dropout_rate = config.dropout_rate;
    model.seed = config.seed;
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    order_rng.set_stream(2);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(3);

    let mut adam = Adam::new(&model.network);
    let indices: Vec<usize> = (0..samples.len()).collect();
    let first_epoch = model.training_log.len();
    let mut last_finite = model.training_log.last().map(|e| e.loss);

    for epoch in first_epoch..first_epoch + config.epochs {
        let order = shuffle(&indices, rand::RngCore::next_u64(&mut order_rng));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let masks: Vec<DropoutMasks> = if config.dropout_rate > 0.0 {
                batch
                    .iter()
                    .map(|_| {
                        DropoutMasks::sample(&model.network, model.input_length, config.dropout_rate, &mut dropout_rng)
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let mut grad = model.network.zeros_like();
            let loss = accumulate(
                &model,
                batch.iter().map(|&i| &samples[i]),
                |k| masks.get(k),
                &mut grad,
            )?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    last_finite_loss: last_finite,
                });
            }
            epoch_loss += loss * batch.len() as f64;

            if config.clip_norm > 0.0 {
                let norm = libm::sqrt(grad.squared_norm());
                if norm > config.clip_norm {
                    grad.scale(config.clip_norm / norm);
                }
            }
            match config.optimizer {
                Optimizer::Adam => adam.update(&mut model.network, &grad, config.learning_rate),
                Optimizer::Sgd => sgd_update(&mut model.network, &grad, config.learning_rate),
            }
        }
        let epoch_loss = epoch_loss / samples.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite_loss: last_finite,
            });
        }
        last_finite = Some(epoch_loss);
        model.training_log.push(EpochLoss { epoch, loss: epoch_loss });
    }
    Ok(model)
}
