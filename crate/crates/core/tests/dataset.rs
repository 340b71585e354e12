use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subharmonic::dataset::{
    generate_dataset, ranges, sample_params, DatasetManifest, DatasetSpec, Split, SplitSizes,
    KEEP_SAMPLES, MANIFEST_FILE,
};
use subharmonic::{Error, Signal};

const TOY: SplitSizes = SplitSizes {
    train: 2,
    val: 1,
    test: 1,
};

fn spec(seed: u64, workers: usize) -> DatasetSpec {
    DatasetSpec {
        workers,
        ..DatasetSpec::new(TOY, seed)
    }
}

fn file_bytes(m: &DatasetManifest) -> Vec<Vec<u8>> {
    m.records.iter().map(|r| std::fs::read(m.path_of(r)).unwrap()).collect()
}

fn manifest_text(dir: &Path) -> String {
    std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()
}

#[test]
fn toy_dataset_is_balanced_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let report = generate_dataset(&spec(11, 1), dir.path()).unwrap();
    let m = &report.manifest;
    assert_eq!(m.records.len(), 16);
    for (split, n) in [(Split::Train, 2), (Split::Val, 1), (Split::Test, 1)] {
        let recs = m.split(split);
        assert_eq!(recs.len(), 4 * n);
        for class in 1..=4 {
            assert_eq!(recs.iter().filter(|r| r.m == class).count(), n);
        }
    }
    let ids: HashSet<u64> = m.records.iter().map(|r| r.id).collect();
    assert_eq!(ids.len(), 16);
    for r in &m.records {
        assert_eq!(r.shr_db.is_some(), r.m > 1);
        assert_eq!(r.params.m, r.m);
        assert_eq!(r.params.fo, r.fo);
        let s = Signal::read_wav(m.path_of(r)).unwrap();
        assert_eq!((s.len(), s.rate), (KEEP_SAMPLES, 8000));
        assert!(s.mean().abs() < 1e-6);
        assert!((s.variance() - 1.0).abs() < 1e-6);
    }
    let reread = DatasetManifest::read(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(reread.records, m.records);
}

#[test]
fn worker_count_does_not_change_the_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = generate_dataset(&spec(3, 1), a.path()).unwrap().manifest;
    let two = generate_dataset(&spec(3, 2), b.path()).unwrap().manifest;
    assert_eq!(manifest_text(a.path()), manifest_text(b.path()));
    assert_eq!(file_bytes(&one), file_bytes(&two));
}

#[test]
fn interrupted_runs_resume_without_resynthesizing() {
    let dir = tempfile::tempdir().unwrap();
    let first = generate_dataset(&spec(5, 1), dir.path()).unwrap();
    assert_eq!(first.reused, 0);
    let before = file_bytes(&first.manifest);
    let text = manifest_text(dir.path());

    let again = generate_dataset(&spec(5, 1), dir.path()).unwrap();
    assert_eq!(again.reused, 16);

    // Lose one signal: only that one is synthesized again, identically.
    let victim = dir.path().join(&first.manifest.records[6].file);
    std::fs::remove_file(&victim).unwrap();
    let resumed = generate_dataset(&spec(5, 1), dir.path()).unwrap();
    assert_eq!(resumed.reused, 15);
    assert_eq!(file_bytes(&resumed.manifest), before);
    assert_eq!(manifest_text(dir.path()), text);
}

#[test]
fn mismatched_rerun_is_refused_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&spec(8, 1), dir.path()).unwrap();
    let err = generate_dataset(&spec(9, 1), dir.path()).unwrap_err();
    assert!(matches!(err, Error::Dataset(_)), "{err}");
    let forced = DatasetSpec {
        force: true,
        ..spec(9, 1)
    };
    let report = generate_dataset(&forced, dir.path()).unwrap();
    assert_eq!(report.reused, 0);
    assert!(report.manifest.records.iter().all(|r| r.params.rng_seed != 0));
}

fn assert_within(name: &str, xs: &[f64], r: Range<f64>) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo >= r.start && hi < r.end, "{name}: [{lo}, {hi}] outside {r:?}");
}

#[test]
fn parameter_draws_stay_in_range_and_extents_are_log_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws: Vec<_> = (0..100_000)
        .map(|i| sample_params(&mut rng, 1 + i % 4).unwrap())
        .collect();
    let col = |f: fn(&subharmonic::dataset::SynthParams) -> f64| draws.iter().map(f).collect::<Vec<_>>();
    assert_within("fo", &col(|p| p.fo), ranges::FO);
    assert_within("eps_am", &col(|p| p.eps_am), ranges::AM_EXTENT);
    assert_within("eps_fm", &col(|p| p.eps_fm), ranges::FM_EXTENT);
    assert_within("phi_am", &col(|p| p.phi_am), ranges::AM_PHASE);
    assert_within("phi_fm", &col(|p| p.phi_fm), ranges::FM_PHASE);
    assert_within("noise_psd", &col(|p| p.noise_psd), ranges::NOISE_PSD);
    assert_within("noise_delta", &col(|p| p.noise_delta), ranges::NOISE_REDUCTION);
    assert_within("fold_length", &col(|p| p.fold_length), ranges::FOLD_LENGTH);
    assert_within("fold_thickness", &col(|p| p.fold_thickness), ranges::FOLD_THICKNESS);
    assert_within("xi_m", &col(|p| p.xi_m), ranges::MAX_DISPLACEMENT);
    assert_within("q_a", &col(|p| p.q_a), ranges::ABDUCTION);
    assert_within("q_s", &col(|p| p.q_s), ranges::SHAPE);
    assert_within("q_b / q_s", &col(|p| p.q_b / p.q_s), ranges::BULGING_RATIO);
    assert_within("q_p", &col(|p| p.q_p), ranges::PHASE_QUOTIENT);
    assert_within("r_zn", &col(|p| p.r_zn), ranges::NODAL_RATIO);
    assert_within("alpha", &col(|p| p.alpha), ranges::TRACT_GAIN);
    assert_within("supra_length", &col(|p| p.supra_length), ranges::SUPRA_LENGTH);
    assert_within("supra_area", &col(|p| p.supra_area), ranges::SUPRA_AREA);
    assert_within("sub_length", &col(|p| p.sub_length), ranges::SUB_LENGTH);
    assert_within("sub_area", &col(|p| p.sub_area), ranges::SUB_AREA);
    assert_within("lung_pressure", &col(|p| p.lung_pressure), ranges::LUNG_PRESSURE);

    // χ² on 10 equal bins of log(eps_am); 1% critical value for 9 dof.
    const CRIT_9_DOF: f64 = 21.666;
    for (vals, r) in [(col(|p| p.eps_am), ranges::AM_EXTENT), (col(|p| p.eps_fm), ranges::FM_EXTENT)] {
        let (a, b) = (r.start.ln(), r.end.ln());
        let mut bins = [0usize; 10];
        for v in vals {
            bins[(((v.ln() - a) / (b - a)) * 10.0) as usize] += 1;
        }
        let expect = draws.len() as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&n| (n as f64 - expect).powi(2) / expect).sum();
        assert!(chi2 < CRIT_9_DOF, "χ² = {chi2}");
    }
}
