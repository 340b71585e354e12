//! Generates a small labelled dataset and summarizes it per class.
//!
//! Generation resumes if interrupted; rerunning with the same seed reuses
//! every finished record.
//!
//!     cargo run --release --example build_dataset -- [out_dir] [train] [val] [test] [seed]

use subharmonic::dataset::{generate_dataset, DatasetSpec, Split, SplitSizes};

fn main() -> subharmonic::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: usize| args.get(i).map_or(default, |s| s.parse().expect("integer"));
    let out = args.first().cloned().unwrap_or_else(|| "dataset_small".into());
    let sizes = SplitSizes {
        train: arg(1, 16),
        val: arg(2, 4),
        test: arg(3, 4),
    };
    let mut spec = DatasetSpec::new(sizes, arg(4, 0) as u64);
    spec.workers = std::thread::available_parallelism().map_or(1, |n| n.get());

    let report = generate_dataset(&spec, &out)?;
    println!("{} records ({} reused, {} draws replaced)", report.manifest.records.len(), report.reused, report.replaced);
    for split in Split::ALL {
        let recs = report.manifest.split(split);
        println!("{}: {} signals", split.as_str(), recs.len());
        for m in 2..=4 {
            let shr: Vec<f64> = recs.iter().filter(|r| r.m == m).filter_map(|r| r.shr_db).collect();
            if !shr.is_empty() {
                let mean = shr.iter().sum::<f64>() / shr.len() as f64;
                println!("  M={m}: mean SHR {mean:.1} dB over {}", shr.len());
            }
        }
    }
    Ok(())
}
