//! Finite-difference gradient checks of every differentiable layer.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subharmonic::nn::gradcheck::{check_bce, check_module};
use subharmonic::nn::{BatchNorm1d, Conv1d, Layer, MaxPool2, Module, Relu, Sequential, Sigmoid, Tensor};

const STEP: f64 = 1e-3;
const TOL: f64 = 1e-4;
const SHAPES: u64 = 20;

fn random_tensor(rng: &mut ChaCha8Rng, shape: [usize; 3]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Values pairwise at least 0.05 apart and at least 0.025 from zero, so no
/// perturbation of size `STEP` crosses a kink.
fn separated_tensor(rng: &mut ChaCha8Rng, shape: [usize; 3]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut v: Vec<f64> = (0..n).map(|i| (i as f64 - (n / 2) as f64) * 0.05 + 0.025).collect();
    v.shuffle(rng);
    Tensor::new(shape, v).unwrap()
}

fn assert_ok(what: &str, shape: [usize; 3], r: subharmonic::nn::gradcheck::GradCheck) {
    assert!(
        r.max_rel_error < TOL,
        "{what} {shape:?}: rel err {:.3e} at {} ({} checked)",
        r.max_rel_error,
        r.worst,
        r.checked
    );
}

#[test]
fn conv1d_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..SHAPES {
        let (cin, cout, k) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..6));
        let shape = [rng.random_range(1..3), cin, k + rng.random_range(0..8)];
        let mut conv = Conv1d::<f64>::new(cin, cout, k, &mut rng);
        let x = random_tensor(&mut rng, shape);
        assert_ok("conv1d", shape, check_module(&mut conv, &x, STEP, rng.random()).unwrap());
    }
}

#[test]
fn batchnorm_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..SHAPES {
        let c = rng.random_range(1..4);
        let shape = [rng.random_range(1..4), c, rng.random_range(3..10)];
        let mut bn = BatchNorm1d::<f64>::new(c);
        for p in bn.params_mut().into_iter().filter(|p| p.trainable) {
            p.value.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
        }
        let x = random_tensor(&mut rng, shape);
        assert_ok("batchnorm", shape, check_module(&mut bn, &x, STEP, rng.random()).unwrap());
    }
}

#[test]
fn maxpool_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..SHAPES {
        let shape = [rng.random_range(1..3), rng.random_range(1..4), rng.random_range(2..12)];
        let x = separated_tensor(&mut rng, shape);
        assert_ok("maxpool", shape, check_module(&mut MaxPool2::default(), &x, STEP, rng.random()).unwrap());
    }
}

#[test]
fn relu_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..SHAPES {
        let shape = [rng.random_range(1..3), rng.random_range(1..4), rng.random_range(1..12)];
        let x = separated_tensor(&mut rng, shape);
        assert_ok("relu", shape, check_module(&mut Relu::default(), &x, STEP, rng.random()).unwrap());
    }
}

#[test]
fn sigmoid_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..SHAPES {
        let shape = [rng.random_range(1..3), rng.random_range(1..5), rng.random_range(1..12)];
        let x = random_tensor(&mut rng, shape);
        assert_ok("sigmoid", shape, check_module(&mut Sigmoid::default(), &x, STEP, rng.random()).unwrap());
    }
}

#[test]
fn bce_head_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..SHAPES {
        let shape = [rng.random_range(1..3), 4, rng.random_range(1..10)];
        let z = random_tensor(&mut rng, shape);
        let bits: Vec<f64> = (0..z.numel()).map(|_| rng.random_range(0..2) as f64).collect();
        let t = Tensor::new(shape, bits).unwrap();
        let r = check_bce(&z, &t, STEP).unwrap();
        assert_ok("bce", shape, r);
    }
}

#[test]
fn stacked_block_gradients() {
    // conv → batchnorm → relu → maxpool → conv, as inside the classifier.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let mut net = Sequential::new(vec![
            Layer::Conv1d(Conv1d::new(1, 3, 4, &mut rng)),
            Layer::BatchNorm(BatchNorm1d::new(3)),
            Layer::Relu(Relu::default()),
            Layer::MaxPool2(MaxPool2::default()),
            Layer::Conv1d(Conv1d::new(3, 2, 2, &mut rng)),
        ]);
        let shape = [2, 1, rng.random_range(9..16)];
        let x = random_tensor(&mut rng, shape);
        let r = check_module(&mut net, &x, STEP, rng.random()).unwrap();
        assert!(r.checked > 0);
        assert_ok("stack", shape, r);
    }
}
