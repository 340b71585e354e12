use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use subharmonic::fcn::{
    build_fcn, one_hot_targets, BatchNormConfig, FcnModel, FcnSpec, FcnVariant, HOP,
};
use subharmonic::nn::{bce_with_logits, Tensor};
use subharmonic::Signal;

fn noise(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn tiny(variant: FcnVariant, seed: u64) -> FcnModel<f32> {
    FcnModel::build(FcnSpec::with_channels(variant, [3, 3, 3]), BatchNormConfig::default(), seed).unwrap()
}

fn input(x: &[f32]) -> Tensor<f32> {
    Tensor::new([1, 1, x.len()], x.to_vec()).unwrap()
}

#[test]
fn snapshot_count_law_holds_for_every_length() {
    for variant in FcnVariant::ALL {
        let model = tiny(variant, 1);
        let w = model.window();
        assert_eq!(w, if variant == FcnVariant::Fcn401 { 401 } else { 785 });
        let x = noise(w + 200, 2);
        for n in w..=w + 200 {
            let out = model.logits(&input(&x[..n])).unwrap();
            assert_eq!(out.len(), (n - w) / HOP + 1, "{variant:?} N={n}");
            assert_eq!(model.spec().snapshots(n), Some(out.len()));
        }
        assert!(model.logits(&input(&x[..w - 1])).is_err());
    }
}

#[test]
fn reference_length_snapshot_counts_at_full_width() {
    for (variant, want) in [(FcnVariant::Fcn401, 478), (FcnVariant::Fcn785, 454)] {
        let model = build_fcn(variant, 0).unwrap();
        let sig = Signal::new(noise(8033, 4).iter().map(|&v| v as f64).collect(), 8000);
        let report = model.infer(&sig).unwrap();
        assert_eq!(report.len(), want);
        let w = model.window() as f64;
        assert!((report.times[0] - w / 2.0 / 8000.0).abs() < 1e-12);
        assert!((report.times[1] - report.times[0] - 0.002).abs() < 1e-12);
        for (k, p) in report.probs.iter().enumerate() {
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((1..=4).contains(&report.m_hat(k)));
        }
    }
}

#[test]
fn shifting_by_one_hop_shifts_the_snapshots() {
    for variant in FcnVariant::ALL {
        let model = tiny(variant, 3);
        let x = noise(3000, 5);
        let a = model.logits(&input(&x)).unwrap();
        let b = model.logits(&input(&x[HOP..])).unwrap();
        assert_eq!(b.len(), a.len() - 1);
        for c in 0..4 {
            assert_eq!(&a.row(0, c)[1..], b.row(0, c), "{variant:?} channel {c}");
        }
    }
}

#[test]
fn batched_inference_matches_single_items() {
    let model = build_fcn(FcnVariant::Fcn401, 7).unwrap();
    let n = 1200;
    let xs: Vec<Vec<f32>> = (0..3).map(|i| noise(n, 10 + i)).collect();
    let batch = Tensor::new([3, 1, n], xs.concat()).unwrap();
    let together = model.probabilities(&batch).unwrap();
    for (b, x) in xs.iter().enumerate() {
        let alone = model.probabilities(&input(x)).unwrap();
        for (u, v) in together.item(b).iter().zip(alone.item(0)) {
            assert!((u - v).abs() <= 1e-5, "{u} vs {v}");
        }
    }
}

#[test]
fn saved_model_infers_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let model = build_fcn(FcnVariant::Fcn785, 9).unwrap();
    model.save(&path, serde_json::json!({ "note": "round trip" })).unwrap();
    let (back, meta) = FcnModel::load(&path).unwrap();
    assert_eq!(meta["note"], "round trip");
    let sig = Signal::new(noise(4000, 1).iter().map(|&v| v as f64).collect(), 8000);
    assert_eq!(model.infer(&sig).unwrap(), back.infer(&sig).unwrap());
    for (a, b) in model.params().iter().zip(back.params()) {
        assert_eq!(a.value, b.value);
    }
}

#[test]
fn untrained_loss_is_near_four_ln2_per_snapshot() {
    for variant in FcnVariant::ALL {
        let model = build_fcn(variant, 11).unwrap();
        let n = 8000;
        let labels = [1u32, 2, 3, 4];
        let x = Tensor::new([4, 1, n], (0..4).flat_map(|i| noise(n, 20 + i)).collect()).unwrap();
        let logits = model.logits(&x).unwrap();
        let targets = one_hot_targets(&labels, logits.len());
        let (mean_cell, _) = bce_with_logits(&logits, &targets).unwrap();
        let per_snapshot = 4.0 * mean_cell;
        let want = 4.0 * std::f64::consts::LN_2;
        assert!((per_snapshot / want - 1.0).abs() <= 0.2, "{variant:?}: {per_snapshot}");
    }
}
