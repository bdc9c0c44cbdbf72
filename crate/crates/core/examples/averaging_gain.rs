//! Noise floor of the estimated CIR as the number of averaged signals grows.
//!
//! cargo run --release --example averaging_gain

use uwb_sounder::prelude::*;

fn cir(cfg: &SounderConfig, model: &ChannelModel) -> uwb_sounder::Result<Cir> {
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let capture = run_campaign(cfg, model, &schedule)?;
    let wf = SoundingWaveform::from_config(cfg)?;
    Ok(to_cir(&estimate_response(&capture.snapshots[0], &wf, cfg)?))
}

fn main() -> uwb_sounder::Result<()> {
    let noisy = ChannelModel::identity().with_noise(0.05, 9)?;
    let mut first = None;
    for k in 0..=6u32 {
        let cfg = SounderConfig {
            average_count: 1 << k,
            shift_bits: k,
            ..SounderConfig::table_i()
        };
        let clean = cir(&cfg, &ChannelModel::identity())?;
        let est = cir(&cfg, &noisy)?;
        let mut err: Vec<f64> = est
            .taps
            .iter()
            .zip(&clean.taps)
            .map(|(a, b)| 10.0 * (a - b).norm_sqr().log10())
            .collect();
        err.sort_by(f64::total_cmp);
        let floor = err[err.len() / 2];
        let base = *first.get_or_insert(floor);
        println!(
            "M = {:>2}: noise floor {floor:7.2} dB, {:5.2} dB below M = 1 (ideal {:5.2})",
            cfg.m(),
            base - floor,
            10.0 * (cfg.m() as f64).log10()
        );
    }
    Ok(())
}
