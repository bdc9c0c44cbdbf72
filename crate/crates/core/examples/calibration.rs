//! Remove the RF chains with a back-to-back calibration, then export the
//! calibrated response as CSV.
//!
//! cargo run --example calibration

use std::f64::consts::PI;

use uwb_sounder::estimator::{response_records, write_records, ExportFormat};
use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    let cfg = SounderConfig {
        snapshots: 4,
        ..SounderConfig::table_i()
    };
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let wf = SoundingWaveform::from_config(&cfg)?;
    let responses = |m: &ChannelModel| -> uwb_sounder::Result<Vec<FrequencyResponse>> {
        run_campaign(&cfg, m, &schedule)?
            .snapshots
            .iter()
            .map(|s| estimate_response(s, &wf, &cfg))
            .collect()
    };

    // Transmit and receive chains with some ripple, measured over a cable.
    let rf = ChannelModel::new(
        vec![
            Tap::new(0, Complex64::new(0.7, 0.1)),
            Tap::new(1, Complex64::new(0.15, -0.05)),
            Tap::new(3, Complex64::new(-0.05, 0.0)),
        ],
        0.002,
        vec![],
        5,
    )?;
    let cal = CalibrationProfile::from_responses(&responses(&rf)?, 1e-3)?;
    println!("calibration: {} weak bins", cal.weak_bins().len());

    let air = ChannelModel::new(
        vec![
            Tap::new(0, Complex64::new(0.8, 0.0)),
            Tap::new(33, Complex64::new(0.0, 0.3)),
        ],
        0.0,
        vec![],
        0,
    )?;
    let measured = &responses(&rf.cascade(&air)?.with_noise(0.002, 6)?)?[0];
    // Worst magnitude error against the air channel alone.
    let l = cfg.l() as f64;
    let error_db = |r: &FrequencyResponse| {
        r.occupied()
            .map(|(k, h)| {
                let air: Complex64 = air
                    .taps()
                    .iter()
                    .map(|t| {
                        t.gain * Complex64::from_polar(1.0, -2.0 * PI * (k * t.delay) as f64 / l)
                    })
                    .sum();
                (20.0 * (h.norm() / air.norm()).log10()).abs()
            })
            .fold(0.0, f64::max)
    };
    let calibrated = apply_calibration(measured, &cal)?.response;
    println!(
        "worst error against the air channel: raw {:.2} dB, calibrated {:.3} dB",
        error_db(measured),
        error_db(&calibrated)
    );
    let cir = to_cir(&calibrated);
    let gains = fit_tap_gains(&cir, &wf.occupied_mask, &[0, 33])?;
    println!("air taps: {:.3} and {:.3}", gains[0], gains[1]);

    let mut out = std::io::stdout().lock();
    let rows: Vec<_> = response_records(0, &calibrated, cfg.sample_rate_hz())
        .take(5)
        .collect();
    write_records(&mut out, ExportFormat::Csv, rows)?;
    Ok(())
}
