//! Command-line front end: `synth`, `dataset`, `train`, `eval` and `classify`.
//!
//! Outputs are write-once: an existing output file is an error unless
//! `--force` is given. Failures map to exit codes through
//! [`ErrorCategory::exit_code`](crate::ErrorCategory::exit_code).

mod config;
mod plot;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub use config::{DatasetSettings, EvalSettings, ModelSettings, NoiseSettings, RunConfig};
pub use plot::{classification_png, confusion_png, shr_accuracy_png};

use crate::dataset::{
    generate_dataset, ground_truth_shr, postprocess, ranges, sample_params, DatasetManifest,
    DatasetSpec, SplitSizes, SynthParams, MANIFEST_FILE, RAW_DURATION,
};
use crate::error::{Error, Result};
use crate::fcn::{
    classify_recording, evaluate, train, write_metrics_csv, FcnModel, FcnSpec, FcnVariant,
};
use crate::waveguide::simulate_with;

/// Environment variable holding the default worker count of `dataset`.
pub const WORKERS_ENV: &str = "SUBHARMONIC_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "subharmonic", version, about = "Subharmonic voice synthesis and period classification")]
pub struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize one signal: raw 44.1 kHz, processed 8 kHz and a JSON sidecar.
    Synth(SynthArgs),
    /// Generate a labelled, class-balanced dataset with a JSON-lines manifest.
    Dataset(DatasetArgs),
    /// Train a classifier on a dataset's train split.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset's test split.
    Eval(EvalArgs),
    /// Classify a WAV recording snapshot by snapshot.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Subharmonic period (1 = normal phonation).
    #[arg(long = "M", visible_alias = "m", default_value_t = 1)]
    pub m: u32,
    /// Fundamental frequency (Hz); drawn at random when omitted.
    #[arg(long)]
    pub fo: Option<f64>,
    /// Seed of the parameter draw and the noise stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parameter record (JSON) to synthesize instead of a random draw.
    #[arg(long, conflicts_with_all = ["fo"])]
    pub params: Option<PathBuf>,
    /// Processed output; `<stem>.raw.wav` and `<stem>.json` are written beside it.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// 400/100/100 signals per class.
    Desk,
    /// 8000/2000/1000 signals per class.
    Paper,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    /// Training signals per class (overrides the scale).
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub val: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthesis threads; defaults to the environment, then the CPU count.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest, or the directory holding it.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "FCN-401")]
    pub variant: FcnVariant,
    /// Checkpoint to write; metrics go to `<stem>.metrics.csv`.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Input dropout rate.
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory for `confusion.csv`, `shr_accuracy.csv`, `fo_trend.csv`, `signals.csv`.
    #[arg(long, short)]
    pub out_dir: PathBuf,
    /// Width of the accuracy-vs-SHR bins (dB).
    #[arg(long)]
    pub shr_bin_db: Option<f64>,
    /// Also write PNG figures.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// WAV recording at any rate; multi-channel files are averaged.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output prefix: `<prefix>snapshots.csv`, `<prefix>spectrogram.csv`.
    #[arg(long, short)]
    pub out_prefix: PathBuf,
    #[arg(long)]
    pub png: bool,
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = Outputs { force: cli.force };
    match cli.command {
        Command::Synth(a) => synth(a, &cfg, out),
        Command::Dataset(a) => dataset(a, &cfg, out),
        Command::Train(a) => train_cmd(a, &cfg, out),
        Command::Eval(a) => eval_cmd(a, &cfg, out),
        Command::Classify(a) => classify_cmd(a, out),
    }
}

#[derive(Debug, Clone, Copy)]
struct Outputs {
    force: bool,
}

impl Outputs {
    /// Refuses to overwrite `paths` unless forced; creates parent directories.
    fn claim(&self, paths: &[&Path]) -> Result<()> {
        for p in paths {
            if p.exists() && !self.force {
                return Err(Error::InvalidParam {
                    field: "output",
                    reason: format!("{} exists; pass --force to overwrite", p.display()),
                });
            }
        }
        for p in paths {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        Ok(())
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn prefixed(prefix: &Path, name: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(name);
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn synth(a: SynthArgs, cfg: &RunConfig, out: Outputs) -> Result<()> {
    let sim = cfg.noise.sim_config()?;
    let params = match &a.params {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let params: SynthParams = serde_json::from_str(&text)?;
            params.validate()?;
            params
        }
        None => {
            if !(1..=4).contains(&a.m) {
                return Err(Error::InvalidParam {
                    field: "M",
                    reason: format!("{} not in {{1, 2, 3, 4}}", a.m),
                });
            }
            if let Some(fo) = a.fo.filter(|f| !ranges::FO.contains(f)) {
                return Err(Error::InvalidParam {
                    field: "fo",
                    reason: format!("{fo} outside [{}, {})", ranges::FO.start, ranges::FO.end),
                });
            }
            let mut params = sample_params(&mut ChaCha8Rng::seed_from_u64(a.seed), a.m)?;
            if let Some(fo) = a.fo {
                params.fo = fo;
            }
            params
        }
    };
    let raw_path = sibling(&a.out, ".raw.wav");
    let json_path = sibling(&a.out, ".json");
    out.claim(&[&a.out, &raw_path, &json_path])?;

    let raw = simulate_with(&params, RAW_DURATION, &sim)?;
    let processed = postprocess(&raw)?;
    let shr_db = if params.m > 1 {
        Some(ground_truth_shr(&processed, params.fo, params.m)?)
    } else {
        None
    };
    raw.write_wav(&raw_path)?;
    processed.write_wav(&a.out)?;
    let sidecar = json!({ "params": params, "shr_db": shr_db });
    write_file(&json_path, &serde_json::to_string_pretty(&sidecar)?)?;
    println!(
        "M={} fo={:.2} Hz: {} ({} samples), {} ({} samples)",
        params.m,
        params.fo,
        raw_path.display(),
        raw.len(),
        a.out.display(),
        processed.len()
    );
    Ok(())
}

fn dataset(a: DatasetArgs, cfg: &RunConfig, out: Outputs) -> Result<()> {
    let base = match a.scale {
        Scale::Desk => SplitSizes {
            train: 400,
            val: 100,
            test: 100,
        },
        Scale::Paper => SplitSizes::full_scale(),
    };
    let d = &cfg.dataset;
    let sizes = SplitSizes {
        train: a.train.or(d.train).unwrap_or(base.train),
        val: a.val.or(d.val).unwrap_or(base.val),
        test: a.test.or(d.test).unwrap_or(base.test),
    };
    if sizes.train == 0 || sizes.val == 0 {
        return Err(Error::InvalidParam {
            field: "train/val",
            reason: "training and validation splits need at least one signal per class".into(),
        });
    }
    let workers = a
        .workers
        .or(d.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::InvalidParam {
            field: "workers",
            reason: "must be at least 1".into(),
        });
    }
    let mut spec = DatasetSpec::new(sizes, a.seed.or(d.seed).unwrap_or(0));
    spec.workers = workers;
    spec.force = out.force;
    spec.sim = cfg.noise.sim_config()?;
    let report = generate_dataset(&spec, &a.out)?;
    println!(
        "{} records in {} ({} reused, {} draws replaced)",
        report.manifest.records.len(),
        a.out.join(MANIFEST_FILE).display(),
        report.reused,
        report.replaced
    );
    Ok(())
}

fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    if path.is_dir() {
        DatasetManifest::read(path.join(MANIFEST_FILE))
    } else {
        DatasetManifest::read(path)
    }
}

fn train_cmd(a: TrainArgs, cfg: &RunConfig, out: Outputs) -> Result<()> {
    let mut tc = cfg.train;
    if let Some(v) = a.epochs {
        tc.epochs = v;
    }
    if let Some(v) = a.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = a.lr {
        tc.adam.lr = v;
    }
    if let Some(v) = a.dropout {
        tc.input_dropout = v;
    }
    if let Some(v) = a.seed {
        tc.seed = v;
    }
    tc.validate()?;
    let spec = FcnSpec::with_channels(a.variant, cfg.model.channels);
    let model = FcnModel::build(spec, cfg.model.batch_norm, tc.seed)?;
    let metrics_path = sibling(&a.out, ".metrics.csv");
    out.claim(&[&a.out, &metrics_path])?;
    let manifest = read_manifest(&a.manifest)?;

    let outcome = train(model, &manifest, &tc)?;
    write_metrics_csv(&outcome.metrics, &metrics_path)?;
    let best = outcome.best();
    let metadata = json!({
        "train": tc,
        "best_epoch": outcome.best_epoch,
        "val_accuracy": best.val_accuracy,
        "metrics": outcome.metrics,
        "manifest": a.manifest,
    });
    outcome.model.save(&a.out, metadata)?;
    println!(
        "{}: best epoch {} with validation accuracy {:.4}; wrote {} and {}",
        a.variant,
        outcome.best_epoch,
        best.val_accuracy,
        a.out.display(),
        metrics_path.display()
    );
    Ok(())
}

fn eval_cmd(a: EvalArgs, cfg: &RunConfig, out: Outputs) -> Result<()> {
    let bin = a.shr_bin_db.unwrap_or(cfg.eval.shr_bin_db);
    if !(bin > 0.0 && bin.is_finite()) {
        return Err(Error::InvalidParam {
            field: "shr_bin_db",
            reason: format!("must be positive, got {bin}"),
        });
    }
    let names = ["confusion.csv", "shr_accuracy.csv", "fo_trend.csv", "signals.csv"];
    let mut paths: Vec<PathBuf> = names.iter().map(|n| a.out_dir.join(n)).collect();
    if a.png {
        paths.extend(["confusion.png", "shr_accuracy.png"].map(|n| a.out_dir.join(n)));
    }
    out.claim(&paths.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let (model, _) = FcnModel::load(&a.checkpoint)?;
    let manifest = read_manifest(&a.manifest)?;

    let ev = evaluate(&model, &manifest, cfg.eval.batch_size)?;
    ev.write_reports(&a.out_dir, "", bin)?;
    if a.png {
        confusion_png(&ev.confusion, &a.out_dir.join("confusion.png"))?;
        shr_accuracy_png(&ev.shr_table(bin)?, &a.out_dir.join("shr_accuracy.png"))?;
    }
    println!("overall accuracy: {:.4}", ev.accuracy());
    for m in 1..=4 {
        println!("M={m} accuracy: {:.4}", ev.confusion.class_accuracy(m));
    }
    Ok(())
}

fn classify_cmd(a: ClassifyArgs, out: Outputs) -> Result<()> {
    let snap = prefixed(&a.out_prefix, "snapshots.csv");
    let spec = prefixed(&a.out_prefix, "spectrogram.csv");
    let png = prefixed(&a.out_prefix, "classification.png");
    let mut paths = vec![snap.as_path(), spec.as_path()];
    if a.png {
        paths.push(&png);
    }
    out.claim(&paths)?;
    let (model, _) = FcnModel::load(&a.checkpoint)?;

    let c = classify_recording(&model, &a.input)?;
    c.report.write_csv(&snap)?;
    c.spectrogram.write_csv(&spec)?;
    if a.png {
        classification_png(&c, &png)?;
    }
    let modal = c.report.modal().unwrap_or(0);
    println!(
        "{}: {} snapshots, modal M={modal} ({:.1}% of snapshots)",
        a.input.display(),
        c.report.len(),
        100.0 * c.report.fraction(modal)
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn synth_accepts_upper_and_lower_case_period_flag() {
        for flag in ["--M", "--m"] {
            let cli = Cli::try_parse_from(["subharmonic", "synth", flag, "2", "-o", "x.wav"]).unwrap();
            let Command::Synth(a) = cli.command else { panic!() };
            assert_eq!(a.m, 2);
        }
    }

    #[test]
    fn sibling_and_prefix_paths() {
        assert_eq!(sibling(Path::new("a/b.wav"), ".json"), Path::new("a/b.json"));
        assert_eq!(prefixed(Path::new("out/rec_"), "snapshots.csv"), Path::new("out/rec_snapshots.csv"));
    }
}
