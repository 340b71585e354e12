//! Layer outputs against independent reference computations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subharmonic::nn::{
    AdamConfig, AdamState, BatchNorm1d, Conv1d, Dropout, Layer, MaxPool2, Module, Param, Relu,
    Sequential, Tensor,
};

/// Triple-loop valid cross-correlation.
fn naive_conv(x: &Tensor<f64>, w: &[f64], b: &[f64], cout: usize, k: usize) -> Vec<f64> {
    let (batch, cin, len) = (x.batch(), x.channels(), x.len());
    let lout = len - k + 1;
    let mut y = vec![0.0; batch * cout * lout];
    for n in 0..batch {
        for o in 0..cout {
            for t in 0..lout {
                let mut acc = b[o];
                for c in 0..cin {
                    for j in 0..k {
                        acc += w[(o * cin + c) * k + j] * x.get(n, c, t + j);
                    }
                }
                y[(n * cout + o) * lout + t] = acc;
            }
        }
    }
    y
}

#[test]
fn conv1d_matches_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (cin, cout, k) = (rng.random_range(1..6), rng.random_range(1..6), rng.random_range(1..9));
        let shape = [rng.random_range(1..4), cin, k + rng.random_range(0..40)];
        let n = shape.iter().product();
        let x = Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let conv = Conv1d::<f64>::new(cin, cout, k, &mut rng);
        let y = conv.infer(&x).unwrap();
        let r = naive_conv(&x, &conv.weight.value, &conv.bias.value, cout, k);
        assert_eq!(y.numel(), r.len());
        for (a, b) in y.data().iter().zip(&r) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn single_precision_conv_tracks_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let conv = Conv1d::<f64>::new(8, 4, 16, &mut rng);
    let x = Tensor::new([2, 8, 100], (0..1600).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let c32 = Conv1d::<f32>::from_values(
        8,
        4,
        16,
        conv.weight.value.iter().map(|&v| v as f32).collect(),
        conv.bias.value.iter().map(|&v| v as f32).collect(),
    )
    .unwrap();
    let a = conv.infer(&x).unwrap();
    let b = c32.infer(&x.cast::<f32>()).unwrap();
    for (p, q) in a.data().iter().zip(b.data()) {
        assert!((p - *q as f64).abs() < 1e-5);
    }
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut w = Param::new("w", vec![1], vec![0.0f64], true);
    w.grad[0] = 1.0;
    let mut adam = AdamState::new(AdamConfig::default());
    adam.step(&mut [&mut w]).unwrap();
    assert!((w.value[0] + 2e-4).abs() < 1e-6, "{}", w.value[0]);
}

#[test]
fn adam_matches_step_size_form() {
    // Same update written with the folded step size lr·√(1−β2ᵗ)/(1−β1ᵗ)
    // and ε·√(1−β2ᵗ).
    let cfg = AdamConfig::default();
    let grads = [[0.3, -1.2, 4.0], [0.3, -1.2, 4.0], [-2.0, 0.01, 0.0]];
    let mut p = Param::new("w", vec![3], vec![0.5f64, -0.25, 1.0], true);
    let mut adam = AdamState::new(cfg);
    let (mut w, mut m, mut v) = ([0.5f64, -0.25, 1.0], [0.0f64; 3], [0.0f64; 3]);
    for (t, g) in grads.iter().enumerate() {
        p.grad.copy_from_slice(g);
        adam.step(&mut [&mut p]).unwrap();
        let t = (t + 1) as i32;
        let a = cfg.lr * (1.0 - cfg.beta2.powi(t)).sqrt() / (1.0 - cfg.beta1.powi(t));
        let e = cfg.eps * (1.0 - cfg.beta2.powi(t)).sqrt();
        for i in 0..3 {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            w[i] -= a * m[i] / (v[i].sqrt() + e);
        }
        for i in 0..3 {
            assert!((p.value[i] - w[i]).abs() < 1e-12, "step {t}: {} vs {}", p.value[i], w[i]);
        }
    }
}

#[test]
fn training_forward_is_deterministic_for_a_fixed_dropout_seed() {
    let build = || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        Sequential::<f32>::new(vec![
            Layer::Dropout(Dropout::new(0.2, 99).unwrap()),
            Layer::Conv1d(Conv1d::new(1, 4, 5, &mut rng)),
            Layer::BatchNorm(BatchNorm1d::new(4)),
            Layer::Relu(Relu::default()),
            Layer::MaxPool2(MaxPool2::default()),
        ])
    };
    let x = Tensor::new([3, 1, 64], (0..192).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap();
    let (mut a, mut b) = (build(), build());
    assert_eq!(a.forward_train(&x).unwrap(), b.forward_train(&x).unwrap());
    let before: Vec<Vec<f32>> = a.params().iter().map(|p| p.value.clone()).collect();
    let y1 = a.infer(&x).unwrap();
    assert_eq!(y1, a.infer(&x).unwrap());
    let after: Vec<Vec<f32>> = a.params().iter().map(|p| p.value.clone()).collect();
    assert_eq!(before, after);
}

proptest! {
    #[test]
    fn stack_length_bookkeeping(len in 1usize..400, k1 in 1usize..20, k2 in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Sequential::<f32>::new(vec![
            Layer::Conv1d(Conv1d::new(1, 2, k1, &mut rng)),
            Layer::MaxPool2(MaxPool2::default()),
            Layer::Conv1d(Conv1d::new(2, 1, k2, &mut rng)),
            Layer::MaxPool2(MaxPool2::default()),
        ]);
        let expect = len
            .checked_sub(k1 - 1)
            .map(|n| n / 2)
            .and_then(|n| n.checked_sub(k2 - 1))
            .filter(|&n| n > 0)
            .map(|n| n / 2)
            .filter(|&n| n > 0);
        prop_assert_eq!(net.output_len(len), expect);
        if let Some(n) = expect {
            let y = net.infer(&Tensor::zeros(1, 1, len)).unwrap();
            prop_assert_eq!(y.len(), n);
        }
    }
}
