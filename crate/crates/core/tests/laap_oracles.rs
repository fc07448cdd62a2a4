use laap_core::detect::{laap_detect, LaapConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Naive {
    mean: f64,
    std: f64,
    slope: f64,
    label: bool,
}

/// Direct per-index recomputation: plain two-pass moments over the
/// truncated window.
fn naive(values: &[f64], i: usize, w: usize, alpha: f64) -> Naive {
    let half = w / 2;
    let lo = i.saturating_sub(half);
    let hi = (i + half).min(values.len() - 1);
    let window = &values[lo..=hi];
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let std = (window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let slope = if hi == lo { 0.0 } else { (values[hi] - values[lo]) / (hi - lo) as f64 };
    let s = values[i];
    let label = if slope < 0.0 { s < mean - alpha * std } else { s > mean + alpha * std };
    Naive { mean, std, slope, label }
}

fn random_series(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let level = rng.random_range(-10.0..10.0);
    let mut x = 0.0;
    (0..len)
        .map(|_| {
            x = 0.8 * x + rng.random_range(-1.0..1.0);
            level + x
        })
        .collect()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(scale)
}

#[test]
fn streaming_matches_naive_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..100 {
        let series = random_series(&mut rng, 1000);
        let w = 2 * rng.random_range(1..=20);
        let alpha = rng.random_range(0.0..=1.0);
        let trace = laap_detect(&series, &LaapConfig::new(w, alpha).unwrap()).unwrap();
        let local = trace.local.as_ref().unwrap();
        let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..series.len() {
            let r = naive(&series, i, w, alpha);
            assert!(close(local.mean[i], r.mean, scale), "mean at {i}");
            assert!(close(local.std[i], r.std, scale), "std at {i}");
            assert_eq!(local.slope[i], r.slope, "slope at {i}");
            assert_eq!(trace.labels[i], r.label, "label at {i}");
        }
    }
}

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn raising_alpha_never_adds_flags(series in series_strategy(), half in 1usize..15, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (low, high) = if a <= b { (a, b) } else { (b, a) };
        let loose = laap_detect(&series, &LaapConfig::new(2 * half, low).unwrap()).unwrap();
        let strict = laap_detect(&series, &LaapConfig::new(2 * half, high).unwrap()).unwrap();
        for (s, l) in strict.labels.iter().zip(&loose.labels) {
            prop_assert!(!s || *l);
        }
    }

    #[test]
    fn labels_ignore_shift(series in series_strategy(), half in 1usize..15, alpha in 0.0f64..=1.0, shift in -1e3f64..1e3) {
        let cfg = LaapConfig::new(2 * half, alpha).unwrap();
        let moved: Vec<f64> = series.iter().map(|v| v + shift).collect();
        prop_assert_eq!(laap_detect(&series, &cfg).unwrap().labels, laap_detect(&moved, &cfg).unwrap().labels);
    }

    #[test]
    fn labels_ignore_positive_scale(series in series_strategy(), half in 1usize..15, alpha in 0.0f64..=1.0, c in 1e-3f64..1e3) {
        let cfg = LaapConfig::new(2 * half, alpha).unwrap();
        let scaled: Vec<f64> = series.iter().map(|v| v * c).collect();
        prop_assert_eq!(laap_detect(&series, &cfg).unwrap().labels, laap_detect(&scaled, &cfg).unwrap().labels);
    }
}
