//! JSON checkpoints for fitted models.
//!
//! Floats are written with shortest round-trip formatting and parsed back
//! exactly, so a loaded model reproduces predictions bit for bit.

use std::path::Path;

use laap_core::arima::ArimaModel;
use laap_core::lstm::{EpochLoss, LayerKind, LstmForecaster, Network};
use laap_core::series::Normalizer;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::formats::{read_json, write_json};

const LSTM_FORMAT: &str = "laap-lstm";
const ARIMA_FORMAT: &str = "laap-arima";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmCheckpoint {
    pub format: String,
    pub version: u32,
    pub layout: Vec<LayerKind>,
    pub input_length: usize,
    pub horizon: usize,
    pub dropout_rate: f64,
    pub normalizer: Normalizer,
    pub seed: u64,
    /// Parameter tensors; each matrix row-major.
    pub network: Network,
    pub training_log: Vec<EpochLoss>,
}

impl LstmCheckpoint {
    pub fn from_model(model: &LstmForecaster) -> Self {
        Self {
            format: LSTM_FORMAT.into(),
            version: VERSION,
            layout: model.layout(),
            input_length: model.input_length,
            horizon: model.horizon,
            dropout_rate: model.dropout_rate,
            normalizer: model.normalizer,
            seed: model.seed,
            network: model.network.clone(),
            training_log: model.training_log.clone(),
        }
    }

    pub fn into_model(self) -> Result<LstmForecaster> {
        check_header(&self.format, self.version, LSTM_FORMAT)?;
        let mut model = LstmForecaster::from_network(
            self.network,
            self.dropout_rate,
            self.input_length,
            self.horizon,
            self.normalizer,
            self.seed,
        )?;
        let actual = model.layout();
        if actual != self.layout {
            return Err(CliError::Config(format!(
                "checkpoint layout {:?} does not match its parameter tensors {:?}",
                self.layout, actual
            )));
        }
        model.training_log = self.training_log;
        Ok(model)
    }
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(CliError::Config(format!("expected a `{expected}` checkpoint, found `{format}`")));
    }
    if version != VERSION {
        return Err(CliError::Config(format!("unsupported checkpoint version {version}")));
    }
    Ok(())
}

pub fn save_lstm(path: &Path, model: &LstmForecaster) -> Result<()> {
    write_json(path, &LstmCheckpoint::from_model(model))
}

pub fn load_lstm(path: &Path) -> Result<LstmForecaster> {
    read_json::<LstmCheckpoint>(path)?.into_model()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArimaCheckpoint {
    pub format: String,
    pub version: u32,
    pub model: ArimaModel,
}

pub fn save_arima(path: &Path, model: &ArimaModel) -> Result<()> {
    write_json(
        path,
        &ArimaCheckpoint {
            format: ARIMA_FORMAT.into(),
            version: VERSION,
            model: model.clone(),
        },
    )
}

pub fn load_arima(path: &Path) -> Result<ArimaModel> {
    let ck: ArimaCheckpoint = read_json(path)?;
    check_header(&ck.format, ck.version, ARIMA_FORMAT)?;
    let m = ck.model;
    let mut model = ArimaModel::new(m.spec, m.ar, m.ma, m.intercept, m.sigma2)?;
    model.fitted_on = m.fitted_on;
    Ok(model)
}
