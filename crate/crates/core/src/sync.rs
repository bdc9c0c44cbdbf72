//! PPS start alignment.
//!
//! Transmitter and receiver each start on a positive PPS flank. When one
//! second is an integer multiple of `T_rep`, every flank coincides with the
//! start of a transmit frame, so the two sides need not agree on which flank
//! they start on.

use serde::{Deserialize, Serialize};

use crate::campaign::config::integral_ratio;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlankCheck {
    pub independent: bool,
    /// `1 s / T_rep`, when integral.
    pub snapshots_per_second: Option<u64>,
}

/// Whether one second holds a whole number of repetition periods, judged on
/// the sample grid `t_s`.
pub fn check_flank_independence(t_rep: f64, t_s: f64) -> FlankCheck {
    let per_second = integral_ratio(1.0, t_s);
    let frame = integral_ratio(t_rep, t_s);
    match (per_second, frame) {
        (Some(sps), Some(frame)) if sps % frame == 0 => FlankCheck {
            independent: true,
            snapshots_per_second: Some((sps / frame) as u64),
        },
        _ => FlankCheck {
            independent: false,
            snapshots_per_second: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpsSchedule {
    pub t_rep: f64,
    pub t_s: f64,
    pub tx_start_flank: i64,
    pub rx_start_flank: i64,
    /// Residual misalignment in samples. Positive values mean the transmit
    /// frame reaches the receiver late, like extra propagation delay.
    pub timing_error: i64,
}

impl PpsSchedule {
    /// Both sides on the same flank with no timing error.
    pub fn aligned(t_rep: f64, t_s: f64) -> Self {
        PpsSchedule {
            t_rep,
            t_s,
            tx_start_flank: 0,
            rx_start_flank: 0,
            timing_error: 0,
        }
    }

    pub fn with_flanks(mut self, tx: i64, rx: i64) -> Self {
        self.tx_start_flank = tx;
        self.rx_start_flank = rx;
        self
    }

    pub fn with_timing_error(mut self, samples: i64) -> Self {
        self.timing_error = samples;
        self
    }

    pub fn frame_len(&self) -> Result<usize> {
        integral_ratio(self.t_rep, self.t_s).ok_or_else(|| {
            Error::Scheduling(format!(
                "t_rep/t_s = {}/{} is not a positive integer",
                self.t_rep, self.t_s
            ))
        })
    }
}

/// Lag, in samples modulo the frame length, of the transmit frame boundary
/// behind the receiver's snapshot boundary.
///
/// `((rx_flank - tx_flank) * (1 s / t_s) + timing_error) mod (t_rep / t_s)`.
pub fn receiver_offset(schedule: &PpsSchedule) -> Result<usize> {
    let frame = schedule.frame_len()? as i128;
    let check = check_flank_independence(schedule.t_rep, schedule.t_s);
    if !check.independent {
        return Err(Error::Scheduling(format!(
            "1 s is not a multiple of t_rep = {} s; start flanks would change the frame phase",
            schedule.t_rep
        )));
    }
    let sps = integral_ratio(1.0, schedule.t_s).expect("checked above") as i128;
    let flanks = schedule.rx_start_flank as i128 - schedule.tx_start_flank as i128;
    let lag = flanks * sps + schedule.timing_error as i128;
    Ok(lag.rem_euclid(frame) as usize)
}
