//! Write a capture to disk, read it back and summarize the data reduction.
//!
//! cargo run --example capture_files

use uwb_sounder::campaign::{host_data_rate_bytes_per_s, raw_data_rate_bytes_per_s};
use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    let cfg = SounderConfig {
        snapshots: 8,
        ..SounderConfig::table_i()
    };
    let model = ChannelModel::delayed(25, Complex64::new(0.9, 0.0)).with_noise(0.01, 2024)?;
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let capture = run_campaign_at(&cfg, &model, &schedule, 1_700_000_000)?;

    let path = std::env::temp_dir().join("uwb_sounder_example.csnd");
    capture.save(&path)?;
    let back = CaptureFile::load(&path)?;
    assert_eq!(back, capture);
    println!(
        "{}: {} bytes, {} snapshots",
        path.display(),
        std::fs::metadata(&path)?.len(),
        back.snapshots.len()
    );
    println!(
        "header: channel {}..., prng {}, offset {} samples",
        &back.header.channel_digest[..12],
        back.header.prng_algorithm,
        back.header.receiver_offset_samples
    );
    println!(
        "reduction {:.1}x: {:.1} MB/s at the ADC, {:.1} kB/s to the host",
        report_reduction(&cfg)?,
        raw_data_rate_bytes_per_s(&cfg) / 1e6,
        host_data_rate_bytes_per_s(&cfg) / 1e3
    );
    std::fs::remove_file(&path)?;
    Ok(())
}
