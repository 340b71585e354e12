//! Classifies a WAV recording snapshot by snapshot, the way a trained
//! model is applied to sustained-vowel recordings.
//!
//! Any sample rate works: the recording is resampled to 8 kHz and
//! normalized over its whole duration first. Without a checkpoint an
//! untrained FCN-401 is used, which shows the output format only.
//!
//!     cargo run --release --example classify_wav -- voice_out/raw.wav [model.ckpt]

use subharmonic::fcn::{build_fcn, classify_recording, FcnModel, FcnVariant};

fn main() -> subharmonic::Result<()> {
    let mut args = std::env::args().skip(1);
    let wav = args.next().unwrap_or_else(|| "voice_out/raw.wav".into());
    let model = match args.next() {
        Some(ckpt) => FcnModel::load(ckpt)?.0,
        None => {
            eprintln!("no checkpoint given: using an untrained FCN-401");
            build_fcn(FcnVariant::Fcn401, 0)?
        }
    };
    let c = classify_recording(&model, &wav)?;
    let r = &c.report;
    println!("{}: {:.2} s, {} snapshots every 2 ms", wav, c.signal.duration(), r.len());
    for m in 1..=4 {
        println!("  M={m}: {:5.1}% of snapshots", 100.0 * r.fraction(m));
    }
    // Print runs of equal decisions rather than every snapshot.
    let preds = r.predictions();
    let mut start = 0;
    for k in 1..=preds.len() {
        if k == preds.len() || preds[k] != preds[start] {
            println!("  {:.3}-{:.3} s: M={}", r.times[start], r.times[k - 1], preds[start]);
            start = k;
        }
    }
    r.write_csv("snapshots.csv")?;
    c.spectrogram.write_csv("spectrogram.csv")?;
    println!("wrote snapshots.csv and spectrogram.csv");
    Ok(())
}
