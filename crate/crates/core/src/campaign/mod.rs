//! End-to-end measurement campaign: waveform, channel, averager, capture.

pub mod capture;
pub mod cli;
pub mod config;

use rayon::prelude::*;

pub use capture::{CaptureFile, CaptureHeader};
pub use config::SounderConfig;

use crate::averager::{select_and_average, Snapshot};
use crate::channel::{
    quantize_all, render, validate_config, ChannelModel, Segment, PRNG_ALGORITHM,
};
use crate::error::{Error, Result};
use crate::fixedpoint::{ComplexSample, SAMPLE_BYTES};
use crate::sync::{check_flank_independence, receiver_offset, PpsSchedule};
use crate::waveform::{build_tx_frame, SoundingWaveform};

/// Simulate `cfg.snapshots` snapshots with a zero creation timestamp.
///
/// See [`run_campaign_at`].
pub fn run_campaign(
    cfg: &SounderConfig,
    model: &ChannelModel,
    schedule: &PpsSchedule,
) -> Result<CaptureFile> {
    run_campaign_at(cfg, model, schedule, 0)
}

/// Simulate a campaign and collect its snapshots.
///
/// The transmitter repeats its frame every `T_rep`. The receiver's snapshot
/// `k` covers receiver samples `[k*F, k*F + P + M*L)` with `F = T_rep/T_s`;
/// the transmit frame lags that grid by [`receiver_offset`]. Only the samples
/// the averager consumes are synthesized, since the skipped tail of each
/// period cannot affect any snapshot. Snapshot `k` draws its noise from
/// stream `k` of the channel seed, which makes snapshots independent of each
/// other and of evaluation order.
///
/// `created_unix_s` is stored verbatim in the header so that captures are a
/// pure function of their inputs.
pub fn run_campaign_at(
    cfg: &SounderConfig,
    model: &ChannelModel,
    schedule: &PpsSchedule,
    created_unix_s: u64,
) -> Result<CaptureFile> {
    cfg.validate()?;
    let report = validate_config(cfg, model);
    if !report.passed() {
        return Err(Error::Validation(report));
    }
    let frame_len = cfg.frame_len()?;
    if schedule.frame_len()? != frame_len {
        return Err(Error::Scheduling(format!(
            "schedule period {} s at {} s/sample does not match the configured {frame_len}-sample frame",
            schedule.t_rep, schedule.t_s
        )));
    }
    if !check_flank_independence(schedule.t_rep, schedule.t_s).independent {
        return Err(Error::Scheduling(format!(
            "1 s is not a multiple of t_rep = {} s",
            schedule.t_rep
        )));
    }
    let offset = receiver_offset(schedule)?;

    let wf = SoundingWaveform::from_config(cfg)?;
    let frame = build_tx_frame(&wf, cfg)?;
    let avg = cfg.averager();
    let window = avg.window_len();
    let max_delay = model.max_delay();

    // Transmit samples feeding receiver samples [0, window): frame indices
    // -offset - max_delay .. window - offset, wrapped periodically.
    let tx_len = window + max_delay;
    let base = -(offset as i64) - max_delay as i64;
    let tx: Vec<ComplexSample> = (0..tx_len as i64)
        .map(|t| frame[(base + t).rem_euclid(frame_len as i64) as usize])
        .collect();

    let results: Vec<(Snapshot, usize)> = (0..cfg.snapshots)
        .into_par_iter()
        .map(|k| {
            let segment = Segment {
                start: (k * frame_len) as u64,
                noise_stream: k as u64,
            };
            let rx = quantize_all(&render(&tx, max_delay as isize, model, window, segment));
            let mut snap = select_and_average(&rx.samples, &avg)?;
            snap.snapshot_index = k;
            Ok((snap, rx.saturated))
        })
        .collect::<Result<_>>()?;

    let saturated = results.iter().map(|(_, s)| *s as u64).sum();
    let snapshots: Vec<Snapshot> = results.into_iter().map(|(s, _)| s).collect();
    Ok(CaptureFile {
        header: CaptureHeader {
            config: cfg.clone(),
            channel_digest: model.digest(),
            prng_algorithm: PRNG_ALGORITHM.to_string(),
            seed: model.seed,
            created_unix_s,
            snapshot_count: snapshots.len(),
            receiver_offset_samples: offset,
            subcarrier_layout: capture::SUBCARRIER_LAYOUT.to_string(),
            dc_occupied: wf.occupied_mask[0],
            saturated_samples: saturated,
        },
        snapshots,
    })
}

/// Raw-to-averaged sample ratio per snapshot, `(T_rep/T_s) / L`.
pub fn report_reduction(cfg: &SounderConfig) -> Result<f64> {
    Ok(cfg.frame_len()? as f64 / cfg.signal_length_samples as f64)
}

/// Average rate of snapshot payload delivered to the host.
pub fn host_data_rate_bytes_per_s(cfg: &SounderConfig) -> f64 {
    (cfg.signal_length_samples * SAMPLE_BYTES) as f64 / cfg.repetition_period_s
}

/// Rate of the unreduced receive stream.
pub fn raw_data_rate_bytes_per_s(cfg: &SounderConfig) -> f64 {
    match config::integral_ratio(1.0, cfg.sample_period_s) {
        Some(rate) => (rate * SAMPLE_BYTES) as f64,
        None => SAMPLE_BYTES as f64 / cfg.sample_period_s,
    }
}
