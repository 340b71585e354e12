//! Monte Carlo dataset generation.
//!
//! Every record draws its parameters from a generator seeded by
//! `(master seed, record id, attempt)` alone, so the worker count and the
//! completion order cannot change any file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ground_truth_shr, postprocess, sample_params, DatasetManifest, DatasetRecord, Split};
use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::waveguide::{simulate_with, SimConfig};

/// Raw synthesis duration (s).
pub const RAW_DURATION: f64 = 1.1;
/// Draws tried for one record before giving up.
pub const MAX_ATTEMPTS: u32 = 32;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
const PARTIAL_FILE: &str = "manifest.partial.jsonl";
const INFO_FILE: &str = "dataset.json";

/// Signals per class and split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    /// Training/validation/test sizes used for the published models.
    pub fn full_scale() -> Self {
        SplitSizes {
            train: 8000,
            val: 2000,
            test: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub sizes: SplitSizes,
    pub seed: u64,
    pub workers: usize,
    /// Regenerate over a prior run made with a different seed or sizes.
    pub force: bool,
    pub sim: SimConfig,
}

impl DatasetSpec {
    pub fn new(sizes: SplitSizes, seed: u64) -> Self {
        DatasetSpec {
            sizes,
            seed,
            workers: 1,
            force: false,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationReport {
    pub manifest: DatasetManifest,
    /// Draws replaced because synthesis failed.
    pub replaced: u32,
    /// Records taken over from a previous run.
    pub reused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetInfo {
    seed: u64,
    sizes: SplitSizes,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of draw `attempt` for record `id` under `master`.
pub fn record_seed(master: u64, id: u64, attempt: u32) -> u64 {
    mix(mix(master ^ mix(id)) ^ attempt as u64)
}

#[derive(Debug, Clone, Copy)]
struct Planned {
    id: u64,
    split: Split,
    m: u32,
}

fn plan(sizes: &SplitSizes) -> Vec<Planned> {
    let mut out = Vec::new();
    let mut id = 0u64;
    for split in Split::ALL {
        for m in 1..=4 {
            for _ in 0..sizes.get(split) {
                out.push(Planned { id, split, m });
                id += 1;
            }
        }
    }
    out
}

fn relative_file(p: &Planned) -> PathBuf {
    PathBuf::from("signals")
        .join(p.split.as_str())
        .join(format!("{:06}_M{}.wav", p.id, p.m))
}

/// Synthesizes and post-processes one signal from a fixed seed.
pub fn synthesize_signal(seed: u64, m: u32, sim: &SimConfig) -> Result<(super::SynthParams, Signal)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = sample_params(&mut rng, m)?;
    let raw = simulate_with(&params, RAW_DURATION, sim)?;
    let sig = postprocess(&raw)?;
    Ok((params, sig))
}

fn build_record(p: &Planned, master: u64, sim: &SimConfig) -> Result<(DatasetRecord, Signal)> {
    let mut last_err = None;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = record_seed(master, p.id, attempt);
        match synthesize_signal(seed, p.m, sim) {
            Ok((params, sig)) => {
                let shr_db = if p.m > 1 {
                    Some(ground_truth_shr(&sig, params.fo, p.m)?)
                } else {
                    None
                };
                let rec = DatasetRecord {
                    id: p.id,
                    file: relative_file(p),
                    split: p.split,
                    m: p.m,
                    fo: params.fo,
                    shr_db,
                    seed,
                    attempt,
                    params,
                };
                return Ok((rec, sig));
            }
            Err(e @ (Error::Simulation { .. } | Error::DegenerateVariance)) => {
                log::warn!("record {} draw {attempt} rejected: {e}", p.id);
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Dataset("no draws attempted".into())))
}

fn load_previous(dir: &Path) -> Result<BTreeMap<u64, DatasetRecord>> {
    let mut prev = BTreeMap::new();
    for name in [MANIFEST_FILE, PARTIAL_FILE] {
        let path = dir.join(name);
        if path.exists() {
            for rec in DatasetManifest::read(&path)?.records {
                prev.insert(rec.id, rec);
            }
        }
    }
    Ok(prev)
}

/// Generates (or resumes) a labelled dataset under `out_dir`.
pub fn generate_dataset(spec: &DatasetSpec, out_dir: impl AsRef<Path>) -> Result<GenerationReport> {
    let out_dir = out_dir.as_ref();
    let info = DatasetInfo {
        seed: spec.seed,
        sizes: spec.sizes,
    };
    let info_path = out_dir.join(INFO_FILE);
    let mut previous = BTreeMap::new();
    if info_path.exists() {
        let text = std::fs::read_to_string(&info_path).map_err(|e| Error::io(&info_path, e))?;
        let old: DatasetInfo = serde_json::from_str(&text)?;
        if old != info && !spec.force {
            return Err(Error::Dataset(format!(
                "{} holds a dataset with seed {} and sizes {:?}; use force to overwrite",
                out_dir.display(),
                old.seed,
                old.sizes
            )));
        }
        if old.seed == info.seed {
            previous = load_previous(out_dir)?;
        }
    }
    for split in Split::ALL {
        let d = out_dir.join("signals").join(split.as_str());
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    std::fs::write(&info_path, serde_json::to_string_pretty(&info)?)
        .map_err(|e| Error::io(&info_path, e))?;

    let planned = plan(&spec.sizes);
    let total = planned.len();
    let partial_path = out_dir.join(PARTIAL_FILE);
    let partial = Mutex::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&partial_path)
            .map_err(|e| Error::io(&partial_path, e))?,
    );
    let done = AtomicUsize::new(0);

    let reusable = |p: &Planned| -> Option<DatasetRecord> {
        let rec = previous.get(&p.id)?;
        let matches = rec.m == p.m
            && rec.split == p.split
            && rec.seed == record_seed(spec.seed, p.id, rec.attempt)
            && out_dir.join(&rec.file).exists();
        matches.then(|| rec.clone())
    };

    let work = |p: &Planned| -> Result<(DatasetRecord, bool)> {
        if let Some(rec) = reusable(p) {
            return Ok((rec, true));
        }
        let (rec, sig) = build_record(p, spec.seed, &spec.sim)?;
        sig.write_wav(out_dir.join(&rec.file))?;
        let line = serde_json::to_string(&rec)?;
        {
            let mut f = partial.lock().expect("partial manifest lock");
            writeln!(f, "{line}").map_err(|e| Error::io(&partial_path, e))?;
        }
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if n % 100 == 0 || n == total {
            log::info!("synthesized {n}/{total}");
        }
        Ok((rec, false))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::Dataset(format!("thread pool: {e}")))?;
    let results: Vec<Result<(DatasetRecord, bool)>> =
        pool.install(|| planned.par_iter().map(work).collect());

    let mut records = Vec::with_capacity(total);
    let mut reused = 0;
    for r in results {
        let (rec, was_reused) = r?;
        reused += was_reused as usize;
        records.push(rec);
    }
    records.sort_by_key(|r| r.id);
    let replaced = records.iter().map(|r| r.attempt).sum();
    let manifest = DatasetManifest::new(out_dir, records);
    manifest.write(out_dir.join(MANIFEST_FILE))?;
    drop(partial);
    let _ = std::fs::remove_file(&partial_path);
    if replaced > 0 {
        log::info!("{replaced} draws replaced after synthesis faults");
    }
    Ok(GenerationReport {
        manifest,
        replaced,
        reused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_across_records_and_attempts() {
        let mut seen = std::collections::HashSet::new();
        for id in 0..200 {
            for attempt in 0..3 {
                assert!(seen.insert(record_seed(7, id, attempt)));
            }
        }
        assert_ne!(record_seed(0, 1, 0), record_seed(1, 0, 0));
    }

    #[test]
    fn plan_is_class_balanced() {
        let p = plan(&SplitSizes {
            train: 2,
            val: 1,
            test: 1,
        });
        assert_eq!(p.len(), 16);
        for split in Split::ALL {
            for m in 1..=4 {
                let n = p.iter().filter(|x| x.split == split && x.m == m).count();
                assert_eq!(n, if split == Split::Train { 2 } else { 1 });
            }
        }
        assert!(p.iter().enumerate().all(|(i, x)| x.id == i as u64));
    }
}
