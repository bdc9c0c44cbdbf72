//! Attenuation of a narrowband tone by coherent averaging.
//!
//! cargo run --release --example interference_suppression

use std::f64::consts::PI;

use uwb_sounder::estimator::rescale_snapshot;
use uwb_sounder::prelude::*;

fn tone_level(cfg: &SounderConfig, nu: f64) -> uwb_sounder::Result<f64> {
    let tone = Interferer {
        normalized_freq: nu,
        amplitude: 0.25,
        phase: 0.0,
    };
    let model = ChannelModel::new(
        vec![Tap::new(0, Complex64::new(0.0, 0.0))],
        0.0,
        vec![tone],
        0,
    )?;
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let avg = rescale_snapshot(&run_campaign(cfg, &model, &schedule)?.snapshots[0]);
    let proj: Complex64 = avg
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * PI * nu * i as f64))
        .sum();
    Ok(proj.norm() / avg.len() as f64)
}

fn main() -> uwb_sounder::Result<()> {
    let averaged = SounderConfig::table_i();
    let single = SounderConfig {
        average_count: 1,
        shift_bits: 0,
        ..averaged.clone()
    };
    let (l, m) = (averaged.l() as f64, averaged.m() as f64);
    println!(" nu*L     measured   sin(pi nu L M)/(M sin(pi nu L))");
    for offset in [0.0, 0.004, 0.008, 0.012, 0.016, 0.05, 0.2, 0.45] {
        let nu = (100.0 + offset) / l;
        let got = tone_level(&averaged, nu)? / tone_level(&single, nu)?;
        let x = PI * nu * l;
        let want = if x.sin().abs() < 1e-12 {
            1.0
        } else {
            ((m * x).sin() / (m * x.sin())).abs()
        };
        println!(
            "{:8.3} {:8.2} dB {:8.2} dB",
            nu * l,
            20.0 * got.log10(),
            20.0 * want.log10()
        );
    }
    Ok(())
}
