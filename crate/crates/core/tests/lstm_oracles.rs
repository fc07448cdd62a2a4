use laap_core::dataset::{split, WindowedSample};
use laap_core::lstm::{loss_and_gradient, train, DropoutMasks, LstmForecaster, TrainConfig};
use laap_core::series::Normalizer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_samples(rng: &mut ChaCha8Rng, count: usize, t: usize) -> Vec<WindowedSample> {
    (0..count)
        .map(|k| WindowedSample {
            input: (0..t).map(|_| rng.random_range(-1.5..1.5)).collect(),
            target: rng.random_range(-1.0..1.0),
            origin_index: k,
        })
        .collect()
}

/// Largest relative error between the analytic gradient and central
/// differences of the full loss, over every parameter.
fn worst_gradient_error(model: &LstmForecaster, samples: &[WindowedSample], masks: Option<&[DropoutMasks]>) -> f64 {
    let (_, analytic) = loss_and_gradient(model, samples, masks).unwrap();
    let analytic: Vec<f64> = analytic.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let eps = 1e-5;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut flat = 0;
    let tensor_count = probe.network.tensors().len();
    for ti in 0..tensor_count {
        let len = probe.network.tensors()[ti].len();
        for k in 0..len {
            let orig = probe.network.tensors()[ti][k];
            probe.network.tensors_mut()[ti][k] = orig + eps;
            let up = loss_and_gradient(&probe, samples, masks).unwrap().0;
            probe.network.tensors_mut()[ti][k] = orig - eps;
            let down = loss_and_gradient(&probe, samples, masks).unwrap().0;
            probe.network.tensors_mut()[ti][k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[flat];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            flat += 1;
        }
    }
    worst
}

#[test]
fn full_loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let config = TrainConfig {
        hidden_sizes: vec![4, 4],
        dropout_rate: 0.25,
        seed: 5,
        ..Default::default()
    };
    let model = LstmForecaster::new(&config, 5, 1, Normalizer::IDENTITY).unwrap();
    let samples = random_samples(&mut rng, 3, 5);

    assert!(worst_gradient_error(&model, &samples, None) < 1e-4);

    let masks: Vec<DropoutMasks> = (0..3).map(|_| model.sample_masks(&mut rng)).collect();
    assert!(masks.iter().any(|m| m.last.contains(&0.0) || m.first.as_ref().unwrap().contains(&0.0)));
    assert!(worst_gradient_error(&model, &samples, Some(&masks)) < 1e-4);
}

#[test]
fn gradient_check_on_other_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for hidden in [vec![3], vec![2, 5, 3]] {
        let config = TrainConfig {
            hidden_sizes: hidden,
            seed: rng.random(),
            ..Default::default()
        };
        let model = LstmForecaster::new(&config, 4, 2, Normalizer::IDENTITY).unwrap();
        let samples = random_samples(&mut rng, 2, 4);
        let masks: Vec<DropoutMasks> = (0..2).map(|_| model.sample_masks(&mut rng)).collect();
        assert!(worst_gradient_error(&model, &samples, Some(&masks)) < 1e-4);
    }
}

#[test]
fn inverted_dropout_preserves_expected_activation() {
    let config = TrainConfig {
        hidden_sizes: vec![4],
        dropout_rate: 0.3,
        seed: 8,
        ..Default::default()
    };
    let model = LstmForecaster::new(&config, 6, 1, Normalizer::IDENTITY).unwrap();
    let window = [0.4, -0.2, 1.1, 0.7, -0.9, 0.3];
    let inference = model.forward(&window).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 10_000;
    let draws: Vec<f64> = (0..n).map(|_| model.forward_training(&window, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    // Single layer: the output is linear in the mask, so the expectation is exact.
    assert!((mean - inference).abs() < 3.0 * se, "mean {mean} vs {inference}, se {se}");
}

#[test]
fn single_sample_overfit() {
    let sample = WindowedSample {
        input: vec![0.2, -0.5, 0.9, 0.1, -0.3],
        target: 0.75,
        origin_index: 5,
    };
    let data = split(vec![sample.clone(), sample.clone()], 0.5).unwrap();
    let config = TrainConfig {
        hidden_sizes: vec![8, 8],
        dropout_rate: 0.0,
        epochs: 600,
        batch_size: 1,
        learning_rate: 1e-2,
        seed: 3,
        ..Default::default()
    };
    let model = LstmForecaster::new(&config, 5, 1, Normalizer::IDENTITY).unwrap();
    let trained = train(model, &data, &config).unwrap();
    let pred = trained.forward(&sample.input).unwrap();
    assert!((pred - sample.target).abs() < 1e-3, "{pred}");
}

#[test]
fn overfit_on_constant_gives_constant_predictions() {
    let series = vec![2.5; 40];
    let config = TrainConfig {
        hidden_sizes: vec![4],
        dropout_rate: 0.0,
        epochs: 5,
        ..Default::default()
    };
    // A constant series has no spread, so the normalizer is the identity shifted to the level.
    let model = LstmForecaster::new(&config, 6, 2, Normalizer::new(2.5, 1.0).unwrap()).unwrap();
    let preds = model.predict_series(&series).unwrap();
    assert!(preds.windows(2).all(|w| w[0] == w[1]));
}
