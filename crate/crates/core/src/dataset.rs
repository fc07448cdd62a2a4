//! Sliding-window samples, chronological splitting and shuffling.
//!
//! A sample pairs an input window of `T` consecutive values with the value
//! `t` steps after the window's last element. Single-step mode is the `t = 1`
//! case of the multi-step construction; both go through [`build_samples`].

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    SingleStep,
    MultiStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub input_length: usize,
    pub horizon: usize,
    pub mode: WindowMode,
}

impl WindowSpec {
    pub const DEFAULT_INPUT_LENGTH: usize = 50;

    pub fn single_step(input_length: usize) -> Result<Self> {
        Self::new(input_length, 1, WindowMode::SingleStep)
    }

    pub fn multi_step(input_length: usize, horizon: usize) -> Result<Self> {
        Self::new(input_length, horizon, WindowMode::MultiStep)
    }

    pub fn new(input_length: usize, horizon: usize, mode: WindowMode) -> Result<Self> {
        let spec = Self {
            input_length,
            horizon,
            mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length == 0 {
            return Err(Error::invalid("input_length", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        if self.mode == WindowMode::SingleStep && self.horizon != 1 {
            return Err(Error::invalid("horizon", "single-step mode requires horizon 1"));
        }
        Ok(())
    }

    /// `T + t`, the span one sample covers.
    pub fn span(&self) -> usize {
        self.input_length + self.horizon
    }

    /// Number of samples a series of length `len` yields, `len - T - t + 1`.
    pub fn sample_count(&self, len: usize) -> usize {
        (len + 1).saturating_sub(self.span())
    }

    /// Source index of the target of sample `k`.
    pub fn target_index(&self, k: usize) -> usize {
        k + self.span() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedSample {
    pub input: Vec<f64>,
    pub target: f64,
    /// Index of `target` in the source series.
    pub origin_index: usize,
}

pub fn build_samples(values: &[f64], spec: &WindowSpec) -> Result<Vec<WindowedSample>> {
    spec.validate()?;
    if values.len() < spec.span() {
        return Err(Error::InsufficientData {
            required: spec.span(),
            actual: values.len(),
        });
    }
    let t = spec.input_length;
    Ok((0..spec.sample_count(values.len()))
        .map(|start| {
            let origin_index = spec.target_index(start);
            WindowedSample {
                input: values[start..start + t].to_vec(),
                target: values[origin_index],
                origin_index,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
    pub split_ratio: f64,
}

/// Number of training samples out of `n` for `ratio`: `floor(ratio * n)`.
///
/// A 1e-9 guard absorbs products like `0.29 * 100 = 28.999999999999996`.
pub fn train_count(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid("split_ratio", "must lie strictly between 0 and 1"));
    }
    Ok((libm::floor(ratio * n as f64 + 1e-9) as usize).min(n))
}

/// Chronological split: the earliest `floor(ratio * n)` samples train.
pub fn split(mut samples: Vec<WindowedSample>, ratio: f64) -> Result<SplitDataset> {
    let n_train = train_count(samples.len(), ratio)?;
    samples.sort_by_key(|s| s.origin_index);
    let test = samples.split_off(n_train);
    Ok(SplitDataset {
        train: samples,
        test,
        split_ratio: ratio,
    })
}

/// Seeded permutation (ChaCha8 stream, Fisher-Yates).
pub fn shuffle<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut out = items.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.shuffle(&mut rng);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn count_and_content() {
        let series: Vec<f64> = (0..55).map(|v| v as f64).collect();
        let spec = WindowSpec::single_step(50).unwrap();
        assert_eq!(build_samples(&series, &spec).unwrap().len(), 5);

        let s = build_samples(&[1.0, 2.0, 3.0, 4.0, 5.0], &WindowSpec::multi_step(2, 2).unwrap()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].input.as_slice(), s[0].target), (&[1.0, 2.0][..], 4.0));
        assert_eq!((s[1].input.as_slice(), s[1].target), (&[2.0, 3.0][..], 5.0));
        assert_eq!(s[0].origin_index, 3);

        let exact = build_samples(&[1.0, 2.0, 3.0], &WindowSpec::multi_step(1, 2).unwrap()).unwrap();
        assert_eq!(exact.len(), 1);
    }

    #[test]
    fn too_short_reports_minimum() {
        let err = build_samples(&[1.0; 10], &WindowSpec::multi_step(8, 4).unwrap()).unwrap_err();
        assert_eq!(err, Error::InsufficientData { required: 12, actual: 10 });
    }

    #[test]
    fn spec_validation() {
        assert!(WindowSpec::new(5, 2, WindowMode::SingleStep).is_err());
        assert!(WindowSpec::multi_step(0, 1).is_err());
        assert!(WindowSpec::multi_step(3, 0).is_err());
    }

    fn dummy(n: usize) -> Vec<WindowedSample> {
        (0..n)
            .map(|i| WindowedSample { input: vec![i as f64], target: i as f64, origin_index: i + 1 })
            .collect()
    }

    #[test]
    fn split_sizes() {
        let s = split(dummy(5000), 0.8).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (4000, 1000));
        let s = split(dummy(10), 0.8).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let s = split(dummy(3), 0.5).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 2));
        assert!(split(dummy(3), 1.0).is_err());
        assert!(split(dummy(3), 0.0).is_err());
    }

    #[test]
    fn split_is_chronological_even_if_input_is_not() {
        let mut samples = dummy(20);
        samples.reverse();
        let s = split(samples, 0.75).unwrap();
        let max_train = s.train.iter().map(|x| x.origin_index).max().unwrap();
        let min_test = s.test.iter().map(|x| x.origin_index).min().unwrap();
        assert!(max_train < min_test);
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let empty: Vec<WindowedSample> = vec![];
        assert!(shuffle(&empty, 1).is_empty());
        let items = dummy(50);
        let a = shuffle(&items, 9);
        assert_eq!(a, shuffle(&items, 9));
        assert_ne!(a, items);
        let mut idx: Vec<usize> = a.iter().map(|s| s.origin_index).collect();
        idx.sort_unstable();
        assert_eq!(idx, (1..=50).collect::<Vec<_>>());
    }
}
