//! Sound a three-path channel and read delays and gains from the CIR.
//!
//! cargo run --example multipath_cir

use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    let cfg = SounderConfig::table_i();
    let truth = [
        (0, Complex64::new(1.0, 0.0)),
        (50, Complex64::new(0.0, 0.5)),
        (120, Complex64::new(-0.25, 0.0)),
    ];
    let model = ChannelModel::new(
        truth.iter().map(|&(d, g)| Tap::new(d, g)).collect(),
        0.0,
        vec![],
        0,
    )?;
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let capture = run_campaign(&cfg, &model, &schedule)?;
    let wf = SoundingWaveform::from_config(&cfg)?;
    let resp = estimate_response(&capture.snapshots[0], &wf, &cfg)?;
    let cir = to_cir(&resp);
    let pdp = power_delay_profile(&cir, cfg.sample_period_s).peak_relative();

    let mut delays = cir.strongest(3);
    delays.sort_unstable();
    let gains = fit_tap_gains(&cir, &wf.occupied_mask, &delays)?;
    println!("delay    PDP      fitted gain        true gain");
    for ((d, g), (_, t)) in delays.iter().zip(&gains).zip(&truth) {
        println!(
            "{:>5.0} ns {:>6.2} dB  {:>7.4}{:+.4}j  {:>7.4}{:+.4}j",
            pdp.delay_s(*d) * 1e9,
            pdp.power_db[*d],
            g.re,
            g.im,
            t.re,
            t.im
        );
    }
    Ok(())
}
