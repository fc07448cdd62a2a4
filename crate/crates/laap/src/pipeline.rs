//! End-to-end run: statistics, per-horizon training, ARIMA baseline,
//! evaluation and detector comparison.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use laap_core::arima::{auto_difference_order, fit, ArimaModel, ArimaSpec};
use laap_core::dataset::{build_samples, split, train_count, WindowSpec};
use laap_core::detect::{absolute_detect, laap_detect, DetectionTrace};
use laap_core::eval::{
    compare_detectors, extract_events, rmse, zone_accuracy, DetectionReport, EvaluationReport, EventList,
    HorizonReport,
};
use laap_core::lstm::{train, LstmForecaster, TrainConfig};
use laap_core::series::{classify_zone, compute_stats, fit_normalizer, Normalizer, SeriesStats, Zone};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const THREADS_ENV: &str = "LAAP_THREADS";

/// Statistics and scaling taken from the first `floor(ratio * Q)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prepared {
    pub stats: SeriesStats,
    pub normalizer: Normalizer,
    pub train_points: usize,
}

pub fn prepare(series: &[f64], split_ratio: f64) -> Result<Prepared> {
    let n = train_count(series.len(), split_ratio)?;
    let prefix = &series[..n];
    Ok(Prepared {
        stats: compute_stats(prefix)?,
        normalizer: fit_normalizer(prefix)?,
        train_points: n,
    })
}

/// Worker count: `LAAP_THREADS` if set and positive, else the available cores.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn train_horizon(
    series: &[f64],
    input_length: usize,
    horizon: usize,
    split_ratio: f64,
    normalizer: Normalizer,
    config: &TrainConfig,
) -> Result<LstmForecaster> {
    let spec = WindowSpec::multi_step(input_length, horizon)?;
    let data = split(build_samples(series, &spec)?, split_ratio)?;
    let model = LstmForecaster::new(config, input_length, horizon, normalizer)?;
    Ok(train(model, &data, config)?)
}

/// One model per horizon, returned in the order of `config.window.horizons`.
/// Results do not depend on `threads`.
pub fn train_horizons(series: &[f64], config: &RunConfig, threads: usize) -> Result<Vec<LstmForecaster>> {
    let prepared = prepare(series, config.window.split_ratio)?;
    let horizons = &config.window.horizons;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<LstmForecaster>>>> = Mutex::new(horizons.iter().map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, horizons.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&t) = horizons.get(k) else { break };
                let out = train_horizon(
                    series,
                    config.window.input_length,
                    t,
                    config.window.split_ratio,
                    prepared.normalizer,
                    &config.train,
                );
                results.lock().expect("no worker panics while holding the lock")[k] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every horizon was claimed"))
        .collect()
}

/// Fits the baseline on the training prefix.
pub fn fit_arima(series: &[f64], config: &RunConfig) -> Result<ArimaModel> {
    let prepared = prepare(series, config.window.split_ratio)?;
    let prefix = &series[..prepared.train_points];
    let mut spec = config.arima.spec();
    if config.arima.auto_difference {
        spec = ArimaSpec::new(spec.p, auto_difference_order(prefix, config.arima.max_d), spec.q)?;
    }
    Ok(fit(prefix, spec)?)
}

/// Aligned test-split predictions for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonOutcome {
    pub horizon: usize,
    /// Source index of the first test target.
    pub first_target: usize,
    pub truth: Vec<f64>,
    pub lstm: Vec<f64>,
    pub arima: Vec<f64>,
}

impl HorizonOutcome {
    pub fn report(&self, stats: &SeriesStats, kind: laap_core::eval::AccuracyKind) -> Result<HorizonReport> {
        Ok(HorizonReport {
            horizon: self.horizon,
            test_points: self.truth.len(),
            rmse_lstm: rmse(&self.lstm, &self.truth)?,
            rmse_arima: rmse(&self.arima, &self.truth)?,
            zone1_accuracy: zone_accuracy(&self.lstm, &self.truth, stats, Zone::Zone1, kind)?,
            zone4_accuracy: zone_accuracy(&self.lstm, &self.truth, stats, Zone::Zone4, kind)?,
        })
    }
}

pub fn forecast_test_split(
    series: &[f64],
    split_ratio: f64,
    model: &LstmForecaster,
    arima: &ArimaModel,
) -> Result<HorizonOutcome> {
    let spec = WindowSpec::multi_step(model.input_length, model.horizon)?;
    let samples = spec.sample_count(series.len());
    let n_train = train_count(samples, split_ratio)?;
    if n_train == samples {
        return Err(laap_core::Error::InsufficientData {
            required: spec.span() + 1,
            actual: series.len(),
        }
        .into());
    }
    let first_target = spec.target_index(n_train);
    let lstm = model.predict_series(&series[n_train..])?.into_values();
    let mut rolled = arima.rolling_forecast(series, &spec)?.into_values();
    let arima = rolled.split_off(n_train);
    Ok(HorizonOutcome {
        horizon: model.horizon,
        first_target,
        truth: series[first_target..].to_vec(),
        lstm,
        arima,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub report: DetectionReport,
    pub laap: DetectionTrace,
    pub absolute: DetectionTrace,
    /// Source index of trace position 0.
    pub first_index: usize,
    pub true_events: EventList,
}

/// Generator onsets inside the test window, or else zone 1/4 run onsets of
/// the true test values. Indices are relative to `outcome.first_target`.
pub fn true_events(outcome: &HorizonOutcome, stats: &SeriesStats, generator_events: Option<&[usize]>) -> Result<EventList> {
    match generator_events {
        Some(events) => Ok(EventList::new(events.to_vec())
            .rebase(outcome.first_target..outcome.first_target + outcome.truth.len())),
        None => {
            let flags = outcome
                .truth
                .iter()
                .map(|&v| classify_zone(v, stats).map(Zone::is_extreme))
                .collect::<laap_core::Result<Vec<bool>>>()?;
            Ok(extract_events(&flags))
        }
    }
}

pub fn detect(
    outcome: &HorizonOutcome,
    stats: &SeriesStats,
    generator_events: Option<&[usize]>,
    config: &RunConfig,
) -> Result<Detection> {
    let truth = true_events(outcome, stats, generator_events)?;
    let laap = laap_detect(&outcome.lstm, &config.detect.laap())?;
    let absolute = absolute_detect(&outcome.lstm, stats);
    let comparison = compare_detectors(("laap", &laap), ("absolute", &absolute), &truth, config.eval.bin_width)?;
    Ok(Detection {
        report: DetectionReport {
            horizon: outcome.horizon,
            true_events: truth.len(),
            comparison,
        },
        laap,
        absolute,
        first_index: outcome.first_target,
        true_events: truth,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub outcomes: Vec<HorizonOutcome>,
    pub detection: Option<Detection>,
}

/// Scores every model on the test split. Detection runs on the model whose
/// horizon is `config.detect.horizon`, if one was given.
pub fn evaluate(
    series: &[f64],
    generator_events: Option<&[usize]>,
    models: &[LstmForecaster],
    arima: &ArimaModel,
    config: &RunConfig,
) -> Result<Evaluation> {
    if models.is_empty() {
        return Err(CliError::Config("no models to evaluate".into()));
    }
    let prepared = prepare(series, config.window.split_ratio)?;
    let mut outcomes = Vec::with_capacity(models.len());
    let mut horizons = Vec::with_capacity(models.len());
    for model in models {
        if model.normalizer != prepared.normalizer {
            return Err(CliError::Config(format!(
                "model for horizon {} was trained with normalizer {:?}, this data gives {:?}",
                model.horizon, model.normalizer, prepared.normalizer
            )));
        }
        let outcome = forecast_test_split(series, config.window.split_ratio, model, arima)?;
        horizons.push(outcome.report(&prepared.stats, config.eval.accuracy)?);
        outcomes.push(outcome);
    }
    let detection = outcomes
        .iter()
        .find(|o| o.horizon == config.detect.horizon)
        .map(|o| detect(o, &prepared.stats, generator_events, config))
        .transpose()?;
    Ok(Evaluation {
        report: EvaluationReport {
            stats: prepared.stats,
            accuracy_kind: config.eval.accuracy,
            horizons,
            detection: detection.as_ref().map(|d| d.report.clone()),
        },
        outcomes,
        detection,
    })
}
