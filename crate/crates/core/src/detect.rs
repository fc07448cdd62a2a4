//! Local Average with Adaptive Parameters (LAAP) and the fixed-threshold
//! baseline detector.
//!
//! For every index `i` LAAP looks at the centered window
//! `[i - W/2, i + W/2]` (truncated at the series ends) and computes the local
//! mean `μ`, the local population standard deviation `σ` and the slope
//! `k = (s[hi] - s[lo]) / (hi - lo)` between the window's end points. On a
//! falling slope (`k < 0`) the point is flagged when `s < μ - α·σ`,
//! otherwise when `s > μ + α·σ`.
//!
//! The batch detector is [`LaapStream`] run over a slice. Window sums are
//! kept in double-double precision, so sliding the window in O(1) per step
//! matches a from-scratch recomputation to the last bit or two.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::compensated::Dd;
use crate::eval::{extract_events, EventList};
use crate::series::SeriesStats;
use crate::{Error, Result};

/// Denominator used for the local mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowDivisor {
    /// Number of points actually in the window (`W + 1` in the interior).
    #[default]
    SampleCount,
    /// Always `W`, even though the centered window holds `W + 1` points.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaapConfig {
    /// Window length `W`; even and at least 2.
    pub window_length: usize,
    /// Adaptive rate `α` in `[0, 1]`: band half-width in local standard deviations.
    pub alpha: f64,
    pub divisor: WindowDivisor,
}

impl Default for LaapConfig {
    fn default() -> Self {
        Self {
            window_length: 20,
            alpha: 0.5,
            divisor: WindowDivisor::SampleCount,
        }
    }
}

impl LaapConfig {
    pub fn new(window_length: usize, alpha: f64) -> Result<Self> {
        let config = Self {
            window_length,
            alpha,
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 || self.window_length % 2 != 0 {
            return Err(Error::invalid("window_length", "must be even and at least 2"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn half(&self) -> usize {
        self.window_length / 2
    }
}

/// Truncated window bounds `[lo, hi]` around `i`.
fn window_bounds(len: usize, i: usize, window_length: usize) -> (usize, usize) {
    let half = window_length / 2;
    (i.saturating_sub(half), (i + half).min(len - 1))
}

/// Mean and population std from double-double sums of `s` and `s²`.
fn moments(sum: Dd, sum_sq: Dd, count: usize, divisor: f64) -> (f64, f64) {
    let mean = sum.div_f64(divisor);
    // Σ(s - μ)² = Σs² - μ·(2Σs - nμ)
    let t = sum
        .add(sum)
        .sub(mean.mul(Dd::from_f64(count as f64)));
    let m2 = sum_sq.sub(mean.mul(t));
    let var = m2.div_f64(divisor).to_f64().max(0.0);
    (mean.to_f64(), libm::sqrt(var))
}

fn window_moments(values: &[f64], i: usize, window_length: usize) -> (f64, f64) {
    let (lo, hi) = window_bounds(values.len(), i, window_length);
    let (sum, sum_sq) = values[lo..=hi].iter().fold((Dd::ZERO, Dd::ZERO), |(s, q), &v| {
        (s.add(Dd::from_f64(v)), q.add(Dd::square_of(v)))
    });
    let n = hi - lo + 1;
    moments(sum, sum_sq, n, n as f64)
}

/// Mean of the (truncated) window centered at `i`.
///
/// # Panics
/// If `i` is out of bounds.
pub fn local_average(values: &[f64], i: usize, window_length: usize) -> f64 {
    assert!(i < values.len(), "index {i} out of bounds");
    window_moments(values, i, window_length).0
}

/// Population standard deviation over the same window as [`local_average`].
pub fn local_std(values: &[f64], i: usize, window_length: usize) -> f64 {
    assert!(i < values.len(), "index {i} out of bounds");
    window_moments(values, i, window_length).1
}

/// `(s[hi] - s[lo]) / (hi - lo)`; zero for a single-point window.
pub fn local_slope(values: &[f64], i: usize, window_length: usize) -> f64 {
    assert!(i < values.len(), "index {i} out of bounds");
    let (lo, hi) = window_bounds(values.len(), i, window_length);
    slope_between(values[lo], values[hi], hi - lo)
}

fn slope_between(first: f64, last: f64, span: usize) -> f64 {
    if span == 0 {
        0.0
    } else {
        (last - first) / span as f64
    }
}

/// The LAAP decision for one point.
#[inline]
pub fn laap_label(value: f64, mean: f64, std: f64, slope: f64, alpha: f64) -> bool {
    if slope < 0.0 {
        value < mean - alpha * std
    } else {
        value > mean + alpha * std
    }
}

/// Local features and decision for one index, as emitted by [`LaapStream`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaapPoint {
    pub index: usize,
    pub value: f64,
    pub mean: f64,
    pub std: f64,
    pub slope: f64,
    pub label: bool,
}

/// Online LAAP. Point `i` is emitted once `i + W/2` has been pushed;
/// [`finish`](Self::finish) flushes the last `W/2` points with truncated windows.
#[derive(Debug, Clone)]
pub struct LaapStream {
    config: LaapConfig,
    window: VecDeque<(usize, f64)>,
    sum: Dd,
    sum_sq: Dd,
    pushed: usize,
    next_emit: usize,
}

impl LaapStream {
    pub fn new(config: LaapConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            window: VecDeque::with_capacity(config.window_length + 2),
            sum: Dd::ZERO,
            sum_sq: Dd::ZERO,
            pushed: 0,
            next_emit: 0,
        })
    }

    pub fn push(&mut self, value: f64) -> Option<LaapPoint> {
        let j = self.pushed;
        self.pushed += 1;
        self.window.push_back((j, value));
        self.sum = self.sum.add(Dd::from_f64(value));
        self.sum_sq = self.sum_sq.add(Dd::square_of(value));
        if j >= self.config.half() {
            Some(self.emit())
        } else {
            None
        }
    }

    pub fn finish(mut self) -> Vec<LaapPoint> {
        let mut out = Vec::with_capacity(self.pushed - self.next_emit);
        while self.next_emit < self.pushed {
            out.push(self.emit());
        }
        out
    }

    fn emit(&mut self) -> LaapPoint {
        let i = self.next_emit;
        self.next_emit += 1;
        let lo = i.saturating_sub(self.config.half());
        while let Some(&(idx, v)) = self.window.front() {
            if idx >= lo {
                break;
            }
            self.window.pop_front();
            self.sum = self.sum.sub(Dd::from_f64(v));
            self.sum_sq = self.sum_sq.sub(Dd::square_of(v));
        }
        let &(first_idx, first) = self.window.front().expect("window holds index i");
        let &(last_idx, last) = self.window.back().expect("window holds index i");
        let value = self.window[i - first_idx].1;
        let count = self.window.len();
        let divisor = match self.config.divisor {
            WindowDivisor::SampleCount => count as f64,
            WindowDivisor::Literal => self.config.window_length as f64,
        };
        let (mean, std) = moments(self.sum, self.sum_sq, count, divisor);
        let slope = slope_between(first, last, last_idx - first_idx);
        LaapPoint {
            index: i,
            value,
            mean,
            std,
            slope,
            label: laap_label(value, mean, std, slope, self.config.alpha),
        }
    }
}

/// Local features behind a LAAP decision, one entry per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFeatures {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub slope: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrace {
    pub values: Vec<f64>,
    pub labels: Vec<bool>,
    /// `None` for detectors that use no local statistics.
    pub local: Option<LocalFeatures>,
    /// Indices whose window was not truncated.
    pub valid_range: Range<usize>,
}

impl DetectionTrace {
    pub fn flagged(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Onsets of flagged runs.
    pub fn events(&self) -> EventList {
        extract_events(&self.labels)
    }
}

pub fn laap_detect(predicted: &[f64], config: &LaapConfig) -> Result<DetectionTrace> {
    if predicted.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut stream = LaapStream::new(*config)?;
    let mut points: Vec<LaapPoint> = predicted.iter().filter_map(|&v| stream.push(v)).collect();
    points.extend(stream.finish());

    let n = predicted.len();
    let half = config.half();
    let valid_range = if n > 2 * half { half..n - half } else { 0..0 };
    Ok(DetectionTrace {
        values: predicted.to_vec(),
        labels: points.iter().map(|p| p.label).collect(),
        local: Some(LocalFeatures {
            mean: points.iter().map(|p| p.mean).collect(),
            std: points.iter().map(|p| p.std).collect(),
            slope: points.iter().map(|p| p.slope).collect(),
        }),
        valid_range,
    })
}

/// Flags every point outside `[lower_threshold, upper_threshold]` (zones 1 and 4).
pub fn absolute_detect(predicted: &[f64], stats: &SeriesStats) -> DetectionTrace {
    DetectionTrace {
        values: predicted.to_vec(),
        labels: predicted
            .iter()
            .map(|&v| v > stats.upper_threshold || v < stats.lower_threshold)
            .collect(),
        local: None,
        valid_range: 0..predicted.len(),
    }
}
