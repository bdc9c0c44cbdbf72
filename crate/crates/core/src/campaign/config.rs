//! Sounder parameter set and its on-disk representation.
//!
//! The skip length `R` is never stored. It is always derived as
//! `T_rep/T_s - (M*L + P)`, so the snapshot budget identity holds by
//! construction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::averager::AveragerConfig;
use crate::error::{Error, Result};
use crate::waveform::ZcParams;

/// Tolerance, in samples, when checking that a ratio of times is integral.
const INTEGRAL_TOL: f64 = 1e-6;

/// Complete parameter set of the sounder.
///
/// Field names carry their units so the TOML form is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SounderConfig {
    /// Sounding signal length `L`.
    pub signal_length_samples: usize,
    /// Samples discarded at the start of each snapshot, `P`.
    pub discard_samples: usize,
    /// Number of sounding signals averaged, `M`.
    pub average_count: usize,
    /// Right shift applied to each sample before accumulation, `K`.
    pub shift_bits: u32,
    /// Snapshot repetition period `T_rep`.
    pub repetition_period_s: f64,
    /// Sample period `T_s`.
    pub sample_period_s: f64,
    /// RF metadata only.
    pub center_frequency_hz: f64,
    /// RF metadata only.
    pub tx_power_dbm: f64,
    /// Zadoff-Chu sequence length (occupied sub-carriers).
    pub zc_length: usize,
    pub zc_root: usize,
    /// Peak digital amplitude of the sounding signal, as a fraction of full
    /// scale.
    pub backoff: f64,
    pub snapshots: usize,
}

impl Default for SounderConfig {
    fn default() -> Self {
        Self::table_i()
    }
}

impl SounderConfig {
    /// The measurement configuration used in the lab campaign:
    /// L=1024, P=2048, M=64, K=6, T_rep=5 ms, T_s=2 ns, 5.725 GHz, 14 dBm,
    /// ZC over 813 of 1024 sub-carriers.
    pub fn table_i() -> Self {
        SounderConfig {
            signal_length_samples: 1024,
            discard_samples: 2048,
            average_count: 64,
            shift_bits: 6,
            repetition_period_s: 5e-3,
            sample_period_s: 2e-9,
            center_frequency_hz: 5.725e9,
            tx_power_dbm: 14.0,
            zc_length: 813,
            zc_root: 7,
            backoff: 0.5,
            snapshots: 1,
        }
    }

    pub fn l(&self) -> usize {
        self.signal_length_samples
    }

    pub fn p(&self) -> usize {
        self.discard_samples
    }

    pub fn m(&self) -> usize {
        self.average_count
    }

    pub fn k(&self) -> u32 {
        self.shift_bits
    }

    pub fn sample_rate_hz(&self) -> f64 {
        1.0 / self.sample_period_s
    }

    pub fn zc(&self) -> ZcParams {
        ZcParams {
            length: self.zc_length,
            root: self.zc_root,
        }
    }

    pub fn averager(&self) -> AveragerConfig {
        AveragerConfig {
            l: self.signal_length_samples,
            p: self.discard_samples,
            m: self.average_count,
            k: self.shift_bits,
        }
    }

    /// Samples per repetition period, `T_rep/T_s`.
    pub fn frame_len(&self) -> Result<usize> {
        integral_ratio(self.repetition_period_s, self.sample_period_s).ok_or_else(|| {
            Error::config(format!(
                "T_rep/T_s = {}/{} is not a positive integer",
                self.repetition_period_s, self.sample_period_s
            ))
        })
    }

    /// Samples consumed by discard and averaging, `P + M*L`.
    pub fn active_len(&self) -> usize {
        self.discard_samples + self.average_count * self.signal_length_samples
    }

    /// Skipped samples until the next snapshot, `R = T_rep/T_s - (M*L + P)`.
    pub fn skip_len(&self) -> Result<usize> {
        let frame = self.frame_len()?;
        frame.checked_sub(self.active_len()).ok_or_else(|| {
            Error::config(format!(
                "P + M*L = {} exceeds the {frame}-sample repetition period",
                self.active_len()
            ))
        })
    }

    /// Sounding-signal repetitions in the transmit frame, `ceil((M*L + P)/L)`.
    pub fn tx_repetitions(&self) -> usize {
        self.active_len()
            .div_ceil(self.signal_length_samples.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        self.averager().validate()?;
        self.zc().validate()?;
        if self.zc_length > self.signal_length_samples {
            return Err(Error::config(format!(
                "ZC length {} exceeds signal length {}",
                self.zc_length, self.signal_length_samples
            )));
        }
        if !(self.backoff > 0.0 && self.backoff <= 1.0) {
            return Err(Error::config(format!(
                "backoff {} outside (0, 1]",
                self.backoff
            )));
        }
        if !(self.sample_period_s > 0.0 && self.sample_period_s.is_finite()) {
            return Err(Error::config("sample period must be positive"));
        }
        let frame = self.frame_len()?;
        self.skip_len()?;
        let tx = self.tx_repetitions() * self.signal_length_samples;
        if tx > frame {
            return Err(Error::config(format!(
                "{} sounding repetitions ({tx} samples) do not fit in the {frame}-sample frame",
                self.tx_repetitions()
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SounderConfig =
            toml::from_str(s).map_err(|e| Error::format(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// `num/den` as an integer, if it is one to within [`INTEGRAL_TOL`].
pub(crate) fn integral_ratio(num: f64, den: f64) -> Option<usize> {
    if !(num > 0.0 && den > 0.0) {
        return None;
    }
    let r = num / den;
    let n = r.round();
    if n >= 1.0 && n.is_finite() && (r - n).abs() <= INTEGRAL_TOL {
        Some(n as usize)
    } else {
        None
    }
}
