//! Forecast and detection metrics.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::detect::DetectionTrace;
use crate::series::{classify_zone, SeriesStats, Zone};
use crate::{Error, Result};

fn check_aligned(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            what: "aligned series",
            expected: b.len(),
            actual: a.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(())
}

/// Root mean square error, `sqrt(mean((p - y)²))`.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_aligned(predicted, truth)?;
    let sse: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(libm::sqrt(sse / predicted.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyKind {
    /// Of the points truly in the zone, the fraction predicted in it.
    #[default]
    Recall,
    /// Of the points predicted in the zone, the fraction truly in it.
    Precision,
}

/// Zone hit rate; `None` when the denominator is empty.
pub fn zone_accuracy(
    predicted: &[f64],
    truth: &[f64],
    stats: &SeriesStats,
    zone: Zone,
    kind: AccuracyKind,
) -> Result<Option<f64>> {
    check_aligned(predicted, truth)?;
    let mut denom = 0usize;
    let mut hits = 0usize;
    for (&p, &y) in predicted.iter().zip(truth) {
        let pz = classify_zone(p, stats)?;
        let yz = classify_zone(y, stats)?;
        let conditioned = match kind {
            AccuracyKind::Recall => yz == zone,
            AccuracyKind::Precision => pz == zone,
        };
        if conditioned {
            denom += 1;
            if pz == yz {
                hits += 1;
            }
        }
    }
    Ok((denom > 0).then(|| hits as f64 / denom as f64))
}

/// Strictly increasing event onset indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventList(Vec<usize>);

impl EventList {
    pub fn new(mut onsets: Vec<usize>) -> Self {
        onsets.sort_unstable();
        onsets.dedup();
        Self(onsets)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Events inside `range`, re-indexed so `range.start` becomes 0.
    pub fn rebase(&self, range: Range<usize>) -> EventList {
        EventList(
            self.0
                .iter()
                .filter(|e| range.contains(e))
                .map(|e| e - range.start)
                .collect(),
        )
    }
}

impl From<Vec<usize>> for EventList {
    fn from(v: Vec<usize>) -> Self {
        Self::new(v)
    }
}

/// First index of each maximal run of `true`.
pub fn extract_events(flags: &[bool]) -> EventList {
    let mut prev = false;
    let mut out = Vec::new();
    for (i, &f) in flags.iter().enumerate() {
        if f && !prev {
            out.push(i);
        }
        prev = f;
    }
    EventList(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive lower edge; the bin covers `[start, start + bin_width)`.
    pub start: i64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: usize,
    /// Contiguous bins from the lowest to the highest occupied one.
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn from_values(values: &[i64], bin_width: usize) -> Result<Self> {
        if bin_width == 0 {
            return Err(Error::invalid("bin_width", "must be at least 1"));
        }
        let w = bin_width as i64;
        let (Some(min), Some(max)) = (values.iter().min(), values.iter().max()) else {
            return Ok(Self { bin_width, bins: Vec::new() });
        };
        let first = min.div_euclid(w);
        let last = max.div_euclid(w);
        let mut bins: Vec<HistogramBin> = (first..=last)
            .map(|b| HistogramBin { start: b * w, count: 0 })
            .collect();
        for v in values {
            bins[(v.div_euclid(w) - first) as usize].count += 1;
        }
        Ok(Self { bin_width, bins })
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    /// `predicted_onset - nearest_true_onset` per predicted event, in steps.
    pub errors: Vec<i64>,
    pub histogram: Histogram,
    pub zero_error_count: usize,
}

impl ErrorDistribution {
    pub fn range(&self) -> Option<(i64, i64)> {
        Some((*self.errors.iter().min()?, *self.errors.iter().max()?))
    }
}

/// Nearest true event; equidistant ties go to the earlier one.
fn nearest(truth: &[usize], p: usize) -> usize {
    let right = truth.partition_point(|&t| t < p);
    match (right.checked_sub(1).map(|l| truth[l]), truth.get(right)) {
        (Some(l), Some(&r)) => {
            if r - p < p - l {
                r
            } else {
                l
            }
        }
        (Some(l), None) => l,
        (None, Some(&r)) => r,
        (None, None) => unreachable!("truth is non-empty"),
    }
}

pub fn error_distribution(
    predicted: &EventList,
    truth: &EventList,
    bin_width: usize,
) -> Result<ErrorDistribution> {
    if truth.is_empty() {
        return Err(Error::NoTrueEvents);
    }
    let errors: Vec<i64> = predicted
        .as_slice()
        .iter()
        .map(|&p| p as i64 - nearest(truth.as_slice(), p) as i64)
        .collect();
    let histogram = Histogram::from_values(&errors, bin_width)?;
    let zero_error_count = errors.iter().filter(|&&e| e == 0).count();
    Ok(ErrorDistribution {
        errors,
        histogram,
        zero_error_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub name: String,
    pub event_count: usize,
    pub zero_error_count: usize,
    /// `(min, max)` signed error; `None` when the detector found no events.
    pub error_range: Option<(i64, i64)>,
    pub distribution: ErrorDistribution,
}

impl DetectorSummary {
    pub fn is_degenerate(&self) -> bool {
        self.event_count == 0
    }

    fn range_width(&self) -> Option<i64> {
        self.error_range.map(|(lo, hi)| hi - lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    First,
    Second,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorComparison {
    pub first: DetectorSummary,
    pub second: DetectorSummary,
    pub winner: Winner,
}

fn summarize(name: &str, trace: &DetectionTrace, truth: &EventList, bin_width: usize) -> Result<DetectorSummary> {
    let events = trace.events();
    let distribution = error_distribution(&events, truth, bin_width)?;
    Ok(DetectorSummary {
        name: name.into(),
        event_count: events.len(),
        zero_error_count: distribution.zero_error_count,
        error_range: distribution.range(),
        distribution,
    })
}

/// Ranks two detectors: more exact hits wins, then the narrower error range.
/// A detector with no events has no range and loses any range comparison.
///
/// `truth` must use the same index coordinates as the traces.
pub fn compare_detectors(
    first: (&str, &DetectionTrace),
    second: (&str, &DetectionTrace),
    truth: &EventList,
    bin_width: usize,
) -> Result<DetectorComparison> {
    let a = summarize(first.0, first.1, truth, bin_width)?;
    let b = summarize(second.0, second.1, truth, bin_width)?;
    let winner = match a.zero_error_count.cmp(&b.zero_error_count) {
        core::cmp::Ordering::Greater => Winner::First,
        core::cmp::Ordering::Less => Winner::Second,
        core::cmp::Ordering::Equal => match (a.range_width(), b.range_width()) {
            (Some(x), Some(y)) if x < y => Winner::First,
            (Some(x), Some(y)) if x > y => Winner::Second,
            (Some(_), None) => Winner::First,
            (None, Some(_)) => Winner::Second,
            _ => Winner::Tie,
        },
    };
    Ok(DetectorComparison {
        first: a,
        second: b,
        winner,
    })
}

/// Per-horizon forecast quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub horizon: usize,
    pub test_points: usize,
    pub rmse_lstm: f64,
    pub rmse_arima: f64,
    pub zone1_accuracy: Option<f64>,
    pub zone4_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub stats: SeriesStats,
    pub accuracy_kind: AccuracyKind,
    pub horizons: Vec<HorizonReport>,
    pub detection: Option<DetectionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub horizon: usize,
    pub true_events: usize,
    pub comparison: DetectorComparison,
}
