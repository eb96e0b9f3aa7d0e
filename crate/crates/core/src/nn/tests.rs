use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn tiny(side: usize) -> CnnConfig {
    CnnConfig {
        input_height: side,
        input_width: side,
        conv1_filters: 2,
        conv2_filters: 2,
        fc1_units: 8,
        batch_size: 4,
        ..CnnConfig::default()
    }
}

fn random_input(cfg: &CnnConfig, batch: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..batch * cfg.input_len())
        .map(|_| rng.random::<f64>())
        .collect()
}

fn random_params(cfg: &CnnConfig, rng: &mut ChaCha8Rng) -> CnnParams<f64> {
    let mut p = CnnParams::<f64>::init(cfg, rng);
    for bias in [&mut p.conv1_b, &mut p.conv2_b, &mut p.fc1_b, &mut p.fc2_b] {
        for b in bias.iter_mut() {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    p
}

#[test]
fn zero_weights_give_uniform_probabilities() {
    let cfg = tiny(8);
    let params = CnnParams::<f64>::zeros(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let input = random_input(&cfg, 3, &mut rng);
    let probs = predict_probs(&params, &cfg, &input, 3).unwrap();
    assert_eq!(probs, vec![0.5; 6]);
    let loss = cross_entropy(&probs, &[0, 1, 1], 2);
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn confident_correct_prediction_has_near_zero_loss() {
    let probs = [1.0f64, 0.0, 0.0, 1.0];
    assert_eq!(cross_entropy(&probs, &[0, 1], 2), 0.0);
}

#[test]
fn output_shape_and_normalization() {
    let cfg = tiny(16);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = CnnParams::<f32>::init(&cfg, &mut rng);
    let input: Vec<f32> = (0..2 * cfg.input_len()).map(|_| rng.random()).collect();
    let probs = predict_probs(&params, &cfg, &input, 2).unwrap();
    assert_eq!(probs.len(), 2 * cfg.num_classes);
    for row in probs.chunks(2) {
        assert!((row[0] + row[1] - 1.0).abs() < 1e-6);
    }
}

#[test]
fn shape_errors() {
    let cfg = tiny(8);
    let params = CnnParams::<f64>::zeros(&cfg);
    let input = vec![0.0; cfg.input_len() + 1];
    assert!(matches!(
        predict_probs(&params, &cfg, &input, 1),
        Err(Error::ShapeMismatch(_))
    ));
    let other = CnnParams::<f64>::zeros(&tiny(16));
    let input = vec![0.0; cfg.input_len()];
    assert!(predict_probs(&other, &cfg, &input, 1).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(loss_and_grads(&params, &cfg, &input, &[2], Mode::Train(&mut rng)).is_err());
}

#[test]
fn pooling_halves_spatial_dims_twice() {
    let cfg = CnnConfig::default();
    assert_eq!(cfg.plane1(), 128 * 128);
    assert_eq!(cfg.plane2(), 64 * 64);
    assert_eq!(cfg.plane3(), 32 * 32);
    assert_eq!(param_lens(&cfg)[4], 1024 * 65_536);
}

#[test]
fn inference_ignores_dropout_rng() {
    let cfg = tiny(8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = CnnParams::<f32>::init(&cfg, &mut rng);
    let input: Vec<f32> = (0..cfg.input_len()).map(|_| rng.random()).collect();
    let a = predict_probs(&params, &cfg, &input, 1).unwrap();
    let _ = rng.random::<u64>();
    let b = predict_probs(&params, &cfg, &input, 1).unwrap();
    assert_eq!(a, b);
}

/// Central finite differences of the loss against every parameter,
/// compared with backpropagation. Returns the largest relative error.
pub(crate) fn max_gradient_error(cfg: &CnnConfig, seed: u64, batch: usize) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = random_params(cfg, &mut rng);
    let input = random_input(cfg, batch, &mut rng);
    let labels: Vec<usize> = (0..batch).map(|i| i % 2).collect();
    let dropout_seed = seed ^ 0x5eed;

    let loss_at = |p: &CnnParams<f64>| {
        let mut r = ChaCha8Rng::seed_from_u64(dropout_seed);
        let fwd = forward(p, cfg, &input, batch, Mode::Train(&mut r)).unwrap();
        cross_entropy(&fwd.probs, &labels, cfg.num_classes)
    };
    let mut r = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (_, grads) = loss_and_grads(&params, cfg, &input, &labels, Mode::Train(&mut r)).unwrap();

    let h = 1e-5;
    let mut worst = (0.0, String::new());
    let mut probe = params.clone();
    for (t, name) in PARAM_NAMES.iter().enumerate() {
        for i in 0..param_lens(cfg)[t] {
            let original = params.tensors()[t][i];
            probe.tensors_mut()[t][i] = original + h;
            let up = loss_at(&probe);
            probe.tensors_mut()[t][i] = original - h;
            let down = loss_at(&probe);
            probe.tensors_mut()[t][i] = original;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.tensors()[t][i];
            let scale = analytic.abs().max(numeric.abs());
            let rel = if scale == 0.0 {
                0.0
            } else {
                (analytic - numeric).abs() / scale
            };
            if rel > worst.0 {
                worst = (
                    rel,
                    format!("{name}[{i}]: analytic {analytic:e}, numeric {numeric:e}"),
                );
            }
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences_with_dropout() {
    let cfg = tiny(8);
    let (err, at) = max_gradient_error(&cfg, 17, 3);
    assert!(err < 1e-5, "max relative error {err:e} at {at}");
}

#[test]
fn gradients_match_finite_differences_without_dropout() {
    let cfg = CnnConfig {
        dropout_rate: 0.0,
        ..tiny(8)
    };
    let (err, at) = max_gradient_error(&cfg, 23, 2);
    assert!(err < 1e-5, "max relative error {err:e} at {at}");
}

#[test]
fn f32_and_f64_agree() {
    let cfg = tiny(8);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let p64 = random_params(&cfg, &mut rng);
    let input = random_input(&cfg, 2, &mut rng);
    let p32: CnnParams<f32> = p64.cast();
    let input32: Vec<f32> = input.iter().map(|&v| v as f32).collect();
    let a = predict_probs(&p64, &cfg, &input, 2).unwrap();
    let b = predict_probs(&p32, &cfg, &input32, 2).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - f64::from(*y)).abs() < 1e-5);
    }
}
