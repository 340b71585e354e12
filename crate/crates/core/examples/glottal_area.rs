//! Glottal area waveforms of the kinematic fold model for M = 1..4.
//!
//! Prints CSV (`t_ms,M1,M2,M3,M4`) over four fundamental periods at
//! 44.1 kHz, with every parameter at the middle of its range and
//! strong amplitude modulation so the subharmonic pattern is visible.
//!
//!     cargo run --release --example glottal_area > area.csv

use subharmonic::dataset::SynthParams;
use subharmonic::kinematics::{FoldGrid, GlottalAreaModel};
use subharmonic::SIM_RATE;

fn main() -> subharmonic::Result<()> {
    let mut models = Vec::new();
    let mut fo = 0.0;
    for m in 1..=4 {
        let mut p = SynthParams::mid_range(m);
        p.eps_am = 0.5;
        p.eps_fm = 0.05;
        fo = p.fo;
        let geom = p.geometry();
        let grid = FoldGrid::standard(&geom)?;
        models.push(GlottalAreaModel::new(&geom, &p.modulation(), &grid));
    }
    let n = (4.0 * SIM_RATE as f64 / fo).round() as usize;
    println!("t_ms,M1,M2,M3,M4");
    for i in 0..n {
        let t = i as f64 / SIM_RATE as f64;
        let areas: Vec<String> = models.iter_mut().map(|m| format!("{:.5}", m.area(t))).collect();
        println!("{:.4},{}", t * 1e3, areas.join(","));
    }
    eprintln!("fo = {fo:.1} Hz, {n} samples; areas in cm^2");
    Ok(())
}
