//! Forecasting and anomaly detection for bursty one-dimensional time series.
//!
//! The pipeline has three stages:
//!
//! 1. **Preprocessing** ([`series`], [`dataset`]): global statistics and the
//!    four-zone split around the mean, z-score normalization, and
//!    sliding-window sample construction for a fixed forecast horizon.
//! 2. **Prediction** ([`lstm`], [`arima`]): a stacked LSTM forecaster trained
//!    per horizon by backpropagation through time, and an ARIMA baseline
//!    fitted by conditional-sum-of-squares likelihood.
//! 3. **Detection** ([`detect`], [`eval`]): the local-average detector with
//!    adaptive band width, the fixed-threshold baseline, and the metrics used
//!    to compare them.
//!
//! [`datagen`] produces seeded synthetic series with known burst onsets.
//!
//! The crate is `no_std` and needs only `alloc`. All transcendental functions
//! go through `libm` so results are identical across platforms.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arima;
mod compensated;
pub mod datagen;
pub mod dataset;
pub mod detect;
mod error;
pub mod eval;
pub mod lstm;
mod optim;
pub mod series;

pub use error::{Error, Result};
