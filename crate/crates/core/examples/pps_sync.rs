//! PPS start flanks, timing errors and what they do to the CIR.
//!
//! cargo run --example pps_sync

use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    for t_rep in [5e-3, 3e-3, 1e-6] {
        let check = check_flank_independence(t_rep, 2e-9);
        println!(
            "T_rep = {:>6} ms: flank independent {}, {:?} snapshots/s",
            t_rep * 1e3,
            check.independent,
            check.snapshots_per_second
        );
    }

    let base = PpsSchedule::aligned(5e-3, 2e-9);
    for (tx, rx, e) in [(0, 0, 0), (0, 3, 0), (2, 9, 0), (0, 0, 40), (0, 0, -2)] {
        let s = base.with_flanks(tx, rx).with_timing_error(e);
        println!(
            "tx flank {tx}, rx flank {rx}, error {e:>3}: offset {}",
            receiver_offset(&s)?
        );
    }

    // A timing error inside the discard budget only rotates the CIR.
    let cfg = SounderConfig::table_i();
    let model = ChannelModel::delayed(10, Complex64::new(1.0, 0.0));
    let wf = SoundingWaveform::from_config(&cfg)?;
    let peak = |e: i64| -> uwb_sounder::Result<usize> {
        let cap = run_campaign(&cfg, &model, &base.with_timing_error(e))?;
        Ok(to_cir(&estimate_response(&cap.snapshots[0], &wf, &cfg)?).strongest(1)[0])
    };
    for e in [0, 100, 1024] {
        println!("timing error {e:>4} samples: CIR peak at bin {}", peak(e)?);
    }
    Ok(())
}
