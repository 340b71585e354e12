//! The neural-network toolkit on its own: assembling a small convolutional
//! stack, checking its gradients against finite differences, and fitting
//! it with BCE and Adam.
//!
//!     cargo run --release --example network_layers

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subharmonic::nn::gradcheck::check_module;
use subharmonic::nn::{
    bce_with_logits, AdamConfig, AdamState, BatchNorm1d, Conv1d, Layer, MaxPool2, Module, Relu,
    Sequential, Tensor,
};

fn stack<T: subharmonic::nn::Scalar>(rng: &mut ChaCha8Rng) -> Sequential<T> {
    Sequential::new(vec![
        Layer::Conv1d(Conv1d::new(1, 4, 9, rng)),
        // BatchNorm directly after a biased conv would cancel the bias gradient.
        Layer::Relu(Relu::default()),
        Layer::BatchNorm(BatchNorm1d::new(4)),
        Layer::MaxPool2(MaxPool2::default()),
        Layer::Conv1d(Conv1d::new(4, 2, 5, rng)),
    ])
}

fn main() -> subharmonic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut net64 = stack::<f64>(&mut rng);
    let x = Tensor::new([2, 1, 40], (0..80).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let check = check_module(&mut net64, &x, 1e-6, 9)?;
    println!("gradient check: {} entries, max relative error {:.2e} at {}", check.checked, check.max_rel_error, check.worst);

    // Two classes: a slow sine against a fast one, labelled at every output.
    let mut net = stack::<f32>(&mut rng);
    let mut adam = AdamState::new(AdamConfig { lr: 1e-2, ..AdamConfig::default() });
    let n = 64;
    let batch: Vec<f32> = (0..8)
        .flat_map(|b| {
            let f = if b % 2 == 0 { 0.05 } else { 0.3 };
            let phase = rng.random_range(0.0..6.28);
            (0..n).map(move |i| (f * i as f32 + phase).sin())
        })
        .collect();
    let x = Tensor::new([8, 1, n], batch)?;
    let out_len = net.output_len(n).expect("input longer than the receptive field");
    let mut targets = Tensor::zeros(8, 2, out_len);
    for b in 0..8 {
        targets.item_mut(b)[(b % 2) * out_len..(b % 2 + 1) * out_len].fill(1.0);
    }
    for step in 0..=200 {
        let logits = net.forward_train(&x)?;
        let (loss, grad) = bce_with_logits(&logits, &targets)?;
        net.zero_grad();
        net.backward(&grad, false)?;
        adam.step(&mut net.params_mut())?;
        if step % 50 == 0 {
            println!("step {step:3}: loss {loss:.4}");
        }
    }
    let logits = net.infer(&x)?;
    let correct = (0..8)
        .flat_map(|b| (0..out_len).map(move |k| (b, k)))
        .filter(|&(b, k)| (logits.get(b, 1, k) > logits.get(b, 0, k)) == (b % 2 == 1))
        .count();
    println!("inference accuracy {:.3}", correct as f64 / (8 * out_len) as f64);
    Ok(())
}
