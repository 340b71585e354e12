//! Trains a subharmonic-period classifier on a dataset directory and
//! evaluates it on the test split.
//!
//! Writes the checkpoint, per-epoch metrics and the evaluation tables
//! (confusion matrix, accuracy vs SHR, accuracy vs f_o) next to it.
//!
//!     cargo run --release --example build_dataset -- dataset_small
//!     cargo run --release --example train_classifier -- dataset_small [FCN-401|FCN-785] [epochs]

use subharmonic::dataset::{DatasetManifest, MANIFEST_FILE};
use subharmonic::fcn::{build_fcn, evaluate, train, write_metrics_csv, FcnVariant, TrainConfig};

fn main() -> subharmonic::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "dataset_small".into()));
    let variant: FcnVariant = args.next().map_or(Ok(FcnVariant::Fcn401), |s| s.parse())?;
    let epochs: usize = args.next().map_or(5, |s| s.parse().expect("epochs is an integer"));

    let manifest = DatasetManifest::read(dir.join(MANIFEST_FILE))?;
    let cfg = TrainConfig {
        epochs,
        seed: 1,
        ..TrainConfig::default()
    };
    let outcome = train(build_fcn(variant, cfg.seed)?, &manifest, &cfg)?;
    println!(
        "best epoch {} with validation accuracy {:.4}; initial loss {:.3} per snapshot",
        outcome.best_epoch,
        outcome.best().val_accuracy,
        outcome.initial_snapshot_loss
    );

    let stem = dir.join(variant.name());
    outcome.model.save(stem.with_extension("ckpt"), serde_json::json!({ "epochs": epochs }))?;
    write_metrics_csv(&outcome.metrics, stem.with_extension("metrics.csv"))?;

    let ev = evaluate(&outcome.model, &manifest, cfg.batch_size)?;
    print!("{}", ev.confusion.to_csv());
    for path in ev.write_reports(&dir, &format!("{}_", variant.name()), 2.0)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
