//! Stacked-LSTM forecaster trained by backpropagation through time.
//!
//! Layout: Input → LSTM → Dropout → LSTM → … → LSTM → Dropout → Dense(1).
//! With the default three hidden layers that is seven layers.

mod cell;
mod network;
mod train;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cell::{lstm_cell_step, Gate, LstmLayerParams};
pub use network::{DenseParams, DropoutMasks, Network};
pub use train::{loss_and_gradient, train, Optimizer, TrainConfig};

use crate::series::{Normalizer, Origin, TimeSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Input { length: usize },
    Lstm { hidden_size: usize },
    Dropout { rate: f64 },
    Dense { outputs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmForecaster {
    pub network: Network,
    pub dropout_rate: f64,
    pub input_length: usize,
    pub horizon: usize,
    pub normalizer: Normalizer,
    pub seed: u64,
    pub training_log: Vec<EpochLoss>,
}

impl LstmForecaster {
    /// Randomly initialized model for windows of `input_length` predicting
    /// `horizon` steps past the window.
    pub fn new(config: &TrainConfig, input_length: usize, horizon: usize, normalizer: Normalizer) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let network = Network::init_uniform(&config.hidden_sizes, &mut rng)?;
        Self::from_network(network, config.dropout_rate, input_length, horizon, normalizer, config.seed)
    }

    /// All parameters zero.
    pub fn zeroed(hidden_sizes: &[usize], input_length: usize, horizon: usize, normalizer: Normalizer) -> Result<Self> {
        Self::from_network(Network::zeros(hidden_sizes)?, 0.0, input_length, horizon, normalizer, 0)
    }

    pub fn from_network(
        network: Network,
        dropout_rate: f64,
        input_length: usize,
        horizon: usize,
        normalizer: Normalizer,
        seed: u64,
    ) -> Result<Self> {
        network.validate()?;
        if input_length == 0 {
            return Err(Error::invalid("input_length", "must be at least 1"));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::invalid("dropout_rate", "must lie in [0, 1)"));
        }
        Ok(Self {
            network,
            dropout_rate,
            input_length,
            horizon,
            normalizer,
            seed,
            training_log: Vec::new(),
        })
    }

    pub fn layout(&self) -> Vec<LayerKind> {
        let mut out = Vec::with_capacity(self.network.lstm.len() + 4);
        out.push(LayerKind::Input {
            length: self.input_length,
        });
        let last = self.network.lstm.len() - 1;
        for (k, layer) in self.network.lstm.iter().enumerate() {
            out.push(LayerKind::Lstm {
                hidden_size: layer.hidden_size,
            });
            if k == 0 || k == last {
                out.push(LayerKind::Dropout {
                    rate: self.dropout_rate,
                });
            }
        }
        out.push(LayerKind::Dense { outputs: 1 });
        out
    }

    pub(crate) fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.input_length {
            return Err(Error::ShapeMismatch {
                what: "input window",
                expected: self.input_length,
                actual: window.len(),
            });
        }
        Ok(())
    }

    /// Inference on a normalized window; dropout off.
    pub fn forward(&self, window: &[f64]) -> Result<f64> {
        self.check_window(window)?;
        Ok(network::forward_cached(&self.network, window, None).output)
    }

    /// Training-mode pass with freshly sampled dropout masks.
    pub fn forward_training<R: Rng + ?Sized>(&self, window: &[f64], rng: &mut R) -> Result<f64> {
        let masks = self.sample_masks(rng);
        self.forward_with_masks(window, &masks)
    }

    pub fn forward_with_masks(&self, window: &[f64], masks: &DropoutMasks) -> Result<f64> {
        self.check_window(window)?;
        Ok(network::forward_cached(&self.network, window, Some(masks)).output)
    }

    pub fn sample_masks<R: Rng + ?Sized>(&self, rng: &mut R) -> DropoutMasks {
        DropoutMasks::sample(&self.network, self.input_length, self.dropout_rate, rng)
    }

    /// Raw-scale prediction for every window of `series`. Element `i` is
    /// the forecast for source index `i + T + t - 1`.
    pub fn predict_series(&self, series: &[f64]) -> Result<TimeSeries> {
        let span = self.input_length + self.horizon;
        if series.len() < span {
            return Err(Error::InsufficientData {
                required: span,
                actual: series.len(),
            });
        }
        let normalized: Vec<f64> = series.iter().map(|&v| self.normalizer.apply(v)).collect();
        let out = normalized
            .windows(self.input_length)
            .take(series.len() + 1 - span)
            .map(|w| self.normalizer.invert(network::forward_cached(&self.network, w, None).output))
            .collect();
        TimeSeries::new(out, 1.0, Origin::Derived)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_samples, split, WindowSpec};

    fn small_config() -> TrainConfig {
        TrainConfig {
            hidden_sizes: alloc::vec![4, 4],
            epochs: 3,
            batch_size: 4,
            ..Default::default()
        }
    }

    #[test]
    fn default_layout_has_seven_layers() {
        let model = LstmForecaster::new(&TrainConfig::default(), 50, 1, Normalizer::IDENTITY).unwrap();
        let layout = model.layout();
        assert_eq!(layout.len(), 7);
        assert!(matches!(layout[0], LayerKind::Input { length: 50 }));
        assert!(matches!(layout[2], LayerKind::Dropout { .. }));
        assert!(matches!(layout[5], LayerKind::Dropout { .. }));
        assert!(matches!(layout[6], LayerKind::Dense { outputs: 1 }));
    }

    #[test]
    fn zeroed_model_predicts_dense_bias() {
        let mut model = LstmForecaster::zeroed(&[3, 3], 4, 1, Normalizer::IDENTITY).unwrap();
        model.network.dense.bias = -1.25;
        assert_eq!(model.forward(&[9.0, -3.0, 0.5, 2.0]).unwrap(), -1.25);
    }

    #[test]
    fn inference_is_deterministic() {
        let model = LstmForecaster::new(&small_config(), 6, 1, Normalizer::IDENTITY).unwrap();
        let w = [0.3, -0.1, 0.8, 0.0, 1.2, -0.7];
        assert_eq!(model.forward(&w).unwrap().to_bits(), model.forward(&w).unwrap().to_bits());
    }

    #[test]
    fn wrong_window_length_is_rejected() {
        let model = LstmForecaster::new(&small_config(), 6, 1, Normalizer::IDENTITY).unwrap();
        assert!(matches!(model.forward(&[1.0; 5]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn predict_series_length_and_alignment() {
        let model = LstmForecaster::new(&small_config(), 5, 3, Normalizer::new(1.0, 2.0).unwrap()).unwrap();
        let series: Vec<f64> = (0..30).map(|k| libm::sin(k as f64 * 0.3)).collect();
        let preds = model.predict_series(&series).unwrap();
        assert_eq!(preds.len(), 30 - 5 - 3 + 1);
        let spec = WindowSpec::multi_step(5, 3).unwrap();
        for (k, s) in build_samples(&series, &spec).unwrap().iter().enumerate() {
            assert_eq!(s.origin_index, k + 5 + 3 - 1);
            let window: Vec<f64> = s.input.iter().map(|&v| (v - 1.0) / 2.0).collect();
            assert_eq!(preds[k], model.forward(&window).unwrap() * 2.0 + 1.0);
        }
        assert!(matches!(
            model.predict_series(&series[..7]),
            Err(Error::InsufficientData { required: 8, actual: 7 })
        ));
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let series: Vec<f64> = (0..60).map(|k| libm::cos(k as f64 * 0.2)).collect();
        let data = split(build_samples(&series, &WindowSpec::single_step(6).unwrap()).unwrap(), 0.8).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            ..small_config()
        };
        let model = LstmForecaster::new(&config, 6, 1, Normalizer::IDENTITY).unwrap();
        let trained = train(model.clone(), &data, &config).unwrap();
        assert_eq!(trained.network, model.network);
        assert_eq!(trained.training_log.len(), 3);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let series: Vec<f64> = (0..60).map(|k| libm::sin(k as f64 * 0.4)).collect();
        let data = split(build_samples(&series, &WindowSpec::multi_step(6, 2).unwrap()).unwrap(), 0.8).unwrap();
        let config = small_config();
        let run = || {
            let m = LstmForecaster::new(&config, 6, 2, Normalizer::IDENTITY).unwrap();
            train(m, &data, &config).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_is_reported() {
        let series: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let data = split(build_samples(&series, &WindowSpec::single_step(4).unwrap()).unwrap(), 0.8).unwrap();
        let config = TrainConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 1e300,
            clip_norm: 0.0,
            dropout_rate: 0.0,
            ..small_config()
        };
        let model = LstmForecaster::new(&config, 4, 1, Normalizer::IDENTITY).unwrap();
        assert!(matches!(train(model, &data, &config), Err(Error::Diverged { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { dropout_rate: 1.0, ..Default::default() },
            TrainConfig { learning_rate: -1.0, ..Default::default() },
            TrainConfig { hidden_sizes: alloc::vec![], ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::InvalidParameter { .. })), "{c:?}");
        }
    }
}
