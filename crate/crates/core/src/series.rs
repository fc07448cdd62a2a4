//! Time-series container, global statistics, zones and normalization.

use alloc::vec::Vec;
use core::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Where a series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Ingested,
    Synthetic,
    /// Produced by a model or transform (predictions, normalized copies).
    Derived,
}

/// Ordered scalar samples on a uniform time grid.
///
/// Always non-empty, every value finite, `dt > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    origin: Origin,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64, origin: Origin) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        Ok(Self { values, dt, origin })
    }

    /// Unit time step, [`Origin::Derived`].
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1.0, Origin::Derived)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Copy of `values[range]` keeping `dt` and origin.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Result<Self> {
        let values = self
            .values
            .get(range)
            .ok_or(Error::EmptySeries)?
            .to_vec();
        Self::new(values, self.dt, self.origin)
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|&v| f(v)).collect(),
            self.dt,
            Origin::Derived,
        )
    }
}

impl Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Mean, population standard deviation, and the 90% / 110% zone thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub std: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
}

impl SeriesStats {
    pub const LOWER_RATIO: f64 = 0.9;
    pub const UPPER_RATIO: f64 = 1.1;

    /// Stats with the given mean; thresholds follow from it.
    pub fn from_mean(mean: f64, std: f64) -> Self {
        Self {
            mean,
            std,
            lower_threshold: Self::LOWER_RATIO * mean,
            upper_threshold: Self::UPPER_RATIO * mean,
        }
    }
}

pub fn compute_stats(values: &[f64]) -> Result<SeriesStats> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(SeriesStats::from_mean(mean, libm::sqrt(var)))
}

/// Value band relative to the series mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// Below 90% of the mean.
    Zone1,
    /// `[0.9·mean, mean)`
    Zone2,
    /// `[mean, 1.1·mean)`
    Zone3,
    /// At or above 110% of the mean.
    Zone4,
}

impl Zone {
    pub const ALL: [Zone; 4] = [Zone::Zone1, Zone::Zone2, Zone::Zone3, Zone::Zone4];

    pub fn number(self) -> u8 {
        match self {
            Zone::Zone1 => 1,
            Zone::Zone2 => 2,
            Zone::Zone3 => 3,
            Zone::Zone4 => 4,
        }
    }

    /// Zones 1 and 4 host the anomalies.
    pub fn is_extreme(self) -> bool {
        matches!(self, Zone::Zone1 | Zone::Zone4)
    }
}

pub fn classify_zone(value: f64, stats: &SeriesStats) -> Result<Zone> {
    if !value.is_finite() {
        return Err(Error::NonFinite { index: 0, value });
    }
    // Tested in order so the map stays total even for a negative mean.
    Ok(if value < stats.lower_threshold {
        Zone::Zone1
    } else if value < stats.mean {
        Zone::Zone2
    } else if value < stats.upper_threshold {
        Zone::Zone3
    } else {
        Zone::Zone4
    })
}

/// Affine z-score map `x -> (x - shift) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub shift: f64,
    pub scale: f64,
}

impl Normalizer {
    pub const IDENTITY: Normalizer = Normalizer {
        shift: 0.0,
        scale: 1.0,
    };

    pub fn new(shift: f64, scale: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::invalid("shift", "must be finite"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", "must be positive and finite"));
        }
        Ok(Self { shift, scale })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.shift
    }
}

/// Fits on `values`, which should be the training portion only.
pub fn fit_normalizer(values: &[f64]) -> Result<Normalizer> {
    let stats = compute_stats(values)?;
    if stats.std == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Normalizer::new(stats.mean, stats.std)
}

pub fn normalize(series: &TimeSeries, norm: &Normalizer) -> Result<TimeSeries> {
    series.map_values(|v| norm.apply(v))
}

pub fn denormalize(series: &TimeSeries, norm: &Normalizer) -> Result<TimeSeries> {
    series.map_values(|v| norm.invert(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(TimeSeries::from_values(vec![]), Err(Error::EmptySeries));
        assert!(matches!(
            TimeSeries::from_values(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(TimeSeries::new(vec![1.0], 0.0, Origin::Ingested).is_err());
        assert!(compute_stats(&[]).is_err());
    }

    #[test]
    fn thresholds_for_reported_mean() {
        let s = SeriesStats::from_mean(4.042179, 0.0);
        assert!((s.upper_threshold - 4.446397).abs() < 5e-7);
        assert!((s.lower_threshold - 3.637961).abs() < 5e-7);
    }

    #[test]
    fn stats_constant_and_small() {
        let s = compute_stats(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.lower_threshold, 4.5);
        assert_eq!(s.upper_threshold, 5.5);

        let s = compute_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!(close(s.std, libm::sqrt(2.0 / 3.0), 1e-15));
        assert!(close(s.lower_threshold, 1.8, 1e-15));
        assert!(close(s.upper_threshold, 2.2, 1e-15));
    }

    #[test]
    fn zone_examples() {
        let stats = SeriesStats::from_mean(4.042179, 0.1);
        assert_eq!(classify_zone(4.5, &stats), Ok(Zone::Zone4));
        assert_eq!(classify_zone(4.042179, &stats), Ok(Zone::Zone3));
        assert_eq!(classify_zone(3.637960, &stats), Ok(Zone::Zone1));
        assert_eq!(classify_zone(stats.lower_threshold, &stats), Ok(Zone::Zone2));
        assert_eq!(classify_zone(stats.upper_threshold, &stats), Ok(Zone::Zone4));
        assert!(classify_zone(f64::INFINITY, &stats).is_err());
    }

    #[test]
    fn normalizer_examples() {
        let n = fit_normalizer(&[0.0, 2.0]).unwrap();
        assert_eq!(n, Normalizer { shift: 1.0, scale: 1.0 });
        assert_eq!(n.apply(2.0), 1.0);
        assert_eq!(fit_normalizer(&[4.0, 4.0, 4.0]), Err(Error::ZeroVariance));

        let s = TimeSeries::from_values(vec![1.0, 2.0, 3.0]).unwrap();
        let n = Normalizer::new(2.0, 1.0).unwrap();
        let z = normalize(&s, &n).unwrap();
        assert_eq!(z.values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(denormalize(&z, &n).unwrap().values(), &[1.0, 2.0, 3.0]);
        assert_eq!(normalize(&s, &Normalizer::IDENTITY).unwrap().values(), s.values());
    }

    proptest::proptest! {
        #[test]
        fn zones_partition_the_line(mean in 1e-3f64..100.0, v in -1e3f64..1e3) {
            let stats = SeriesStats::from_mean(mean, 1.0);
            let z = classify_zone(v, &stats).unwrap();
            let bands = [
                (f64::NEG_INFINITY, 0.9 * mean),
                (0.9 * mean, mean),
                (mean, 1.1 * mean),
                (1.1 * mean, f64::INFINITY),
            ];
            let hits: Vec<usize> = (0..4).filter(|&k| bands[k].0 <= v && v < bands[k].1).collect();
            proptest::prop_assert_eq!(hits, vec![(z.number() - 1) as usize]);
        }

        #[test]
        fn thresholds_track_mean(values in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let s = compute_stats(&values).unwrap();
            proptest::prop_assert!(s.std >= 0.0);
            proptest::prop_assert!(close(s.upper_threshold, 1.1 * s.mean, 1e-12) || s.mean == 0.0);
            proptest::prop_assert!(close(s.lower_threshold, 0.9 * s.mean, 1e-12) || s.mean == 0.0);
        }

        #[test]
        fn normalization_round_trip(values in proptest::collection::vec(-1e4f64..1e4, 2..200)) {
            proptest::prop_assume!(values.iter().any(|v| *v != values[0]));
            let n = fit_normalizer(&values).unwrap();
            for &v in &values {
                let back = n.invert(n.apply(v));
                proptest::prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(n.scale));
            }
        }
    }
}
