//! Synthesizes one sustained vowel with a chosen subharmonic period and
//! writes the 44.1 kHz raw output and the normalized 8 kHz classifier input.
//!
//!     cargo run --release --example synthesize_voice -- [M] [seed] [out_dir]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subharmonic::dataset::{ground_truth_shr, postprocess, sample_params, RAW_DURATION};
use subharmonic::waveguide::{run, SimConfig};
use subharmonic::Signal;

fn main() -> subharmonic::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: u32 = args.next().map_or(2, |s| s.parse().expect("M is an integer"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed is an integer"));
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "voice_out".into()));
    std::fs::create_dir_all(&out).map_err(|source| subharmonic::Error::Io { path: out.clone(), source })?;

    let params = sample_params(&mut ChaCha8Rng::seed_from_u64(seed), m)?;
    let cfg = SimConfig::default();

    // Drive the loop directly to keep the flow alongside the pressure.
    let (mut pressure, mut flow) = (Vec::new(), Vec::new());
    run(&params, RAW_DURATION, &cfg, |s| {
        pressure.push(s.pressure);
        flow.push(s.flow + s.noise);
    })?;
    let rate = cfg.constants.sample_rate as u32;
    let raw = Signal::new(pressure, rate);
    let processed = postprocess(&raw)?;

    raw.write_wav(out.join("raw.wav"))?;
    Signal::new(flow.clone(), rate).write_wav(out.join("flow.wav"))?;
    processed.write_wav(out.join("processed.wav"))?;

    let peak_flow = flow.iter().copied().fold(f64::MIN, f64::max);
    println!("M = {m}, fo = {:.1} Hz, eps_am = {:.3}, eps_fm = {:.4}", params.fo, params.eps_am, params.eps_fm);
    println!("peak glottal flow {peak_flow:.0} cm^3/s, lung pressure {:.0} dyn/cm^2", params.lung_pressure);
    if m > 1 {
        println!("SHR {:.1} dB", ground_truth_shr(&processed, params.fo, m)?);
    }
    println!("wrote raw.wav, flow.wav and processed.wav to {}", out.display());
    Ok(())
}
