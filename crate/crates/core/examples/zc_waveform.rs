//! Build the Zadoff-Chu sounding symbol and one transmit frame.
//!
//! cargo run --example zc_waveform

use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    let cfg = SounderConfig::table_i();
    let zc = generate_zc(cfg.zc())?;
    let wf = SoundingWaveform::from_config(&cfg)?;

    // Circular autocorrelation of the raw sequence.
    let n = zc.len();
    let side_lobe = (1..n)
        .map(|lag| {
            (0..n)
                .map(|i| zc[(i + lag) % n] * zc[i].conj())
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max);
    println!(
        "ZC N={} u={}: worst off-peak autocorrelation {side_lobe:.2e}",
        n, cfg.zc_root
    );

    println!(
        "{} of {} sub-carriers occupied, {:.2} MHz at {:.0} Msps",
        wf.occupied_count(),
        wf.fft_size,
        wf.occupied_bandwidth_hz(cfg.sample_rate_hz()) / 1e6,
        cfg.sample_rate_hz() / 1e6
    );
    let peak = wf
        .time_signal
        .iter()
        .map(|s| s.re.abs().max(s.im.abs()))
        .fold(0.0, f64::max);
    println!(
        "peak |I|,|Q| = {peak} of full scale (backoff {})",
        wf.backoff
    );

    let frame = build_tx_frame(&wf, &cfg)?;
    let active = cfg.tx_repetitions() * cfg.l();
    println!(
        "frame: {} repetitions = {active} samples, then {} zeros, {} samples per {} ms",
        cfg.tx_repetitions(),
        frame.len() - active,
        frame.len(),
        cfg.repetition_period_s * 1e3
    );
    println!("first samples: {:?}", &frame[..4]);
    Ok(())
}
