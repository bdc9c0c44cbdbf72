//! Bit-exact software model of an ultrawideband select-and-average channel
//! sounder.
//!
//! The transmitter repeats a Zadoff-Chu OFDM sounding symbol of `L` samples;
//! the receiver's FPGA block discards `P` samples, shifts each sample right by
//! `K` bits and accumulates `M` repetitions into 16-bit sums, then skips to
//! the next repetition period. Only those `L` sums per snapshot reach the
//! host, which turns them into calibrated channel impulse responses.
//!
//! | module | role |
//! |---|---|
//! | [`fixedpoint`] | 16-bit I/Q samples, quantizer, arithmetic shift |
//! | [`waveform`] | ZC sequence, sounding symbol, transmit frame |
//! | [`averager`] | batch and word-level state-machine models of the block |
//! | [`channel`] | tapped delay line, noise, tones; delay-budget validator |
//! | [`sync`] | PPS flank scheduling |
//! | [`estimator`] | frequency response, calibration, CIR, PDP |
//! | [`campaign`] | configuration, orchestration, capture files, CLI |
//!
//! ```
//! use uwb_sounder::prelude::*;
//!
//! let cfg = SounderConfig::table_i();
//! assert_eq!(cfg.skip_len().unwrap(), 2_432_416);
//! ```

pub mod averager;
pub mod campaign;
pub mod channel;
mod dsp;
pub mod error;
pub mod estimator;
pub mod fixedpoint;
pub mod sync;
pub mod waveform;

pub use error::{Error, ErrorCategory, Result};

pub mod prelude {
    pub use crate::averager::{
        run_receiver, select_and_average, stream_snapshot, AveragerConfig, AveragerState, Snapshot,
    };
    pub use crate::campaign::{
        report_reduction, run_campaign, run_campaign_at, CaptureFile, CaptureHeader, SounderConfig,
    };
    pub use crate::channel::{
        apply_channel, validate_config, ChannelModel, Interferer, Tap, ValidationReport,
    };
    pub use crate::estimator::{
        apply_calibration, band_kernel, estimate_response, fit_tap_gains, power_delay_profile,
        to_cir, CalibrationProfile, Cir, FrequencyResponse, PowerDelayProfile,
    };
    pub use crate::fixedpoint::{AccumSample, ComplexSample};
    pub use crate::sync::{check_flank_independence, receiver_offset, PpsSchedule};
    pub use crate::waveform::{
        build_sounding_symbol, build_tx_frame, generate_zc, SoundingWaveform, ZcParams,
    };
    pub use crate::{Error, Result};
    pub use num_complex::Complex64;
}
