//! Channel estimation from averaged snapshots.
//!
//! Snapshots hold raw shifted sums; they are rescaled by `2^K / M` to the
//! average received signal, transformed to the frequency domain, and divided
//! by the transmitted sounding spectrum on the occupied bins. Because the
//! averaging window sees a circular convolution of the channel with the
//! sounding symbol, the quotient is the channel frequency response restricted
//! to the occupied band.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averager::Snapshot;
use crate::campaign::SounderConfig;
use crate::dsp;
use crate::error::{Error, Result};
use crate::waveform::SoundingWaveform;

/// Power assigned to zero-magnitude taps.
pub const PDP_FLOOR_DB: f64 = -200.0;

/// Default minimum calibration magnitude, as a fraction of full scale.
pub const DEFAULT_CALIBRATION_THRESHOLD: f64 = 1e-3;

/// Occupied bins weaker than this cannot be divided out.
const DEGENERATE_BIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    /// Length `L`, zero on unoccupied bins.
    pub bins: Vec<Complex64>,
    pub occupied_mask: Vec<bool>,
}

impl FrequencyResponse {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.bins
            .iter()
            .zip(&self.occupied_mask)
            .enumerate()
            .filter(|(_, (_, &m))| m)
            .map(|(k, (b, _))| (k, *b))
    }

    /// Mean of several responses sharing one mask.
    pub fn mean(responses: &[FrequencyResponse]) -> Result<FrequencyResponse> {
        let first = responses
            .first()
            .ok_or_else(|| Error::config("no responses to average"))?;
        let mut bins = vec![Complex64::new(0.0, 0.0); first.len()];
        for r in responses {
            if r.occupied_mask != first.occupied_mask {
                return Err(Error::config("occupied masks differ"));
            }
            bins.iter_mut().zip(&r.bins).for_each(|(a, b)| *a += b);
        }
        let n = responses.len() as f64;
        bins.iter_mut().for_each(|b| *b /= n);
        Ok(FrequencyResponse {
            bins,
            occupied_mask: first.occupied_mask.clone(),
        })
    }
}

/// Channel impulse response, one tap per sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct Cir {
    pub taps: Vec<Complex64>,
}

impl Cir {
    /// Delay bins of the `n` strongest taps, strongest first.
    pub fn strongest(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.taps.len()).collect();
        idx.sort_by(|&a, &b| self.taps[b].norm().total_cmp(&self.taps[a].norm()));
        idx.truncate(n);
        idx
    }

    /// Circular shift towards larger delays by `shift` bins.
    pub fn rotated(&self, shift: usize) -> Cir {
        let mut taps = self.taps.clone();
        if !taps.is_empty() {
            let len = taps.len();
            taps.rotate_right(shift % len);
        }
        Cir { taps }
    }
}

/// Back-to-back reference response used to remove the RF chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibrationFile", into = "CalibrationFile")]
pub struct CalibrationProfile {
    pub reference: FrequencyResponse,
    pub min_magnitude: f64,
}

#[derive(Serialize, Deserialize)]
struct CalibrationFile {
    min_magnitude: f64,
    occupied_mask: Vec<bool>,
    /// `[re, im]` per bin.
    bins: Vec<[f64; 2]>,
}

impl From<CalibrationProfile> for CalibrationFile {
    fn from(c: CalibrationProfile) -> Self {
        CalibrationFile {
            min_magnitude: c.min_magnitude,
            occupied_mask: c.reference.occupied_mask,
            bins: c.reference.bins.iter().map(|b| [b.re, b.im]).collect(),
        }
    }
}

impl TryFrom<CalibrationFile> for CalibrationProfile {
    type Error = String;

    fn try_from(f: CalibrationFile) -> std::result::Result<Self, String> {
        if f.bins.len() != f.occupied_mask.len() {
            return Err(format!(
                "{} bins but {} mask entries",
                f.bins.len(),
                f.occupied_mask.len()
            ));
        }
        Ok(CalibrationProfile {
            reference: FrequencyResponse {
                bins: f.bins.iter().map(|b| Complex64::new(b[0], b[1])).collect(),
                occupied_mask: f.occupied_mask,
            },
            min_magnitude: f.min_magnitude,
        })
    }
}

impl CalibrationProfile {
    pub fn new(reference: FrequencyResponse, min_magnitude: f64) -> Self {
        CalibrationProfile {
            reference,
            min_magnitude,
        }
    }

    /// Average back-to-back responses into one reference.
    pub fn from_responses(responses: &[FrequencyResponse], min_magnitude: f64) -> Result<Self> {
        Ok(Self::new(
            FrequencyResponse::mean(responses)?,
            min_magnitude,
        ))
    }

    /// Occupied bins whose reference magnitude is below the threshold.
    pub fn weak_bins(&self) -> Vec<usize> {
        self.reference
            .occupied()
            .filter(|(_, b)| b.norm() < self.min_magnitude)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("calibration is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::format(format!("calibration: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Calibrated response plus the occupied bins that had to be zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated {
    pub response: FrequencyResponse,
    pub zeroed_bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    /// `20*log10|tap|`, floored at [`PDP_FLOOR_DB`].
    pub power_db: Vec<f64>,
    /// Delay of bin `i` is `i * sample_period_s`.
    pub sample_period_s: f64,
}

/// Average received signal: the raw sums times `2^K / M`, in full-scale
/// units.
pub fn rescale_snapshot(snap: &Snapshot) -> Vec<Complex64> {
    let gain = (1u64 << snap.config.k) as f64 / snap.config.m as f64;
    snap.data.iter().map(|a| a.to_float() * gain).collect()
}

pub fn estimate_response(
    snap: &Snapshot,
    wf: &SoundingWaveform,
    cfg: &SounderConfig,
) -> Result<FrequencyResponse> {
    if snap.config != cfg.averager() {
        return Err(Error::config(format!(
            "snapshot was averaged with {:?}, configuration says {:?}",
            snap.config,
            cfg.averager()
        )));
    }
    if wf.fft_size != snap.data.len() {
        return Err(Error::config(format!(
            "waveform length {} does not match snapshot length {}",
            wf.fft_size,
            snap.data.len()
        )));
    }
    let spectrum = dsp::fft(&rescale_snapshot(snap));
    let reference = wf.tx_bins();
    let mut bins = vec![Complex64::new(0.0, 0.0); wf.fft_size];
    for (k, &occupied) in wf.occupied_mask.iter().enumerate() {
        if !occupied {
            continue;
        }
        let r = reference[k];
        if r.norm() < DEGENERATE_BIN_TOL {
            return Err(Error::DegenerateWaveform {
                bin: k,
                magnitude: r.norm(),
            });
        }
        bins[k] = spectrum[k] / r;
    }
    Ok(FrequencyResponse {
        bins,
        occupied_mask: wf.occupied_mask.clone(),
    })
}

/// Divide out the back-to-back reference on each occupied bin.
pub fn apply_calibration(resp: &FrequencyResponse, cal: &CalibrationProfile) -> Result<Calibrated> {
    if resp.occupied_mask != cal.reference.occupied_mask {
        return Err(Error::config(
            "calibration occupied mask does not match the response",
        ));
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); resp.len()];
    let mut zeroed_bins = Vec::new();
    for (k, r) in resp.occupied() {
        let c = cal.reference.bins[k];
        if c.norm() < cal.min_magnitude {
            zeroed_bins.push(k);
        } else {
            bins[k] = r / c;
        }
    }
    Ok(Calibrated {
        response: FrequencyResponse {
            bins,
            occupied_mask: resp.occupied_mask.clone(),
        },
        zeroed_bins,
    })
}

pub fn to_cir(resp: &FrequencyResponse) -> Cir {
    Cir {
        taps: dsp::ifft(&resp.bins),
    }
}

pub fn power_delay_profile(cir: &Cir, sample_period_s: f64) -> PowerDelayProfile {
    PowerDelayProfile {
        power_db: cir
            .taps
            .iter()
            .map(|t| {
                let mag = t.norm();
                if mag > 0.0 {
                    (20.0 * mag.log10()).max(PDP_FLOOR_DB)
                } else {
                    PDP_FLOOR_DB
                }
            })
            .collect(),
        sample_period_s,
    }
}

impl PowerDelayProfile {
    pub fn delay_s(&self, i: usize) -> f64 {
        i as f64 * self.sample_period_s
    }

    pub fn peak_db(&self) -> f64 {
        self.power_db
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shift so the strongest tap sits at 0 dB; floored taps stay at the floor.
    pub fn peak_relative(&self) -> PowerDelayProfile {
        let peak = self.peak_db();
        PowerDelayProfile {
            power_db: self
                .power_db
                .iter()
                .map(|&p| {
                    if p <= PDP_FLOOR_DB || !peak.is_finite() {
                        PDP_FLOOR_DB
                    } else {
                        (p - peak).max(PDP_FLOOR_DB)
                    }
                })
                .collect(),
            sample_period_s: self.sample_period_s,
        }
    }
}

/// Band-limiting kernel of an occupied mask: the CIR of a response that is
/// 1 on every occupied bin.
pub fn band_kernel(occupied_mask: &[bool]) -> Cir {
    let flat: Vec<Complex64> = occupied_mask
        .iter()
        .map(|&m| Complex64::new(if m { 1.0 } else { 0.0 }, 0.0))
        .collect();
    Cir {
        taps: dsp::ifft(&flat),
    }
}

/// Complex gains of taps at known integer delays, read from a CIR.
///
/// Each tap appears in the CIR as a copy of the band kernel `D` centered on
/// its delay, so `cir[d_a] = sum_t g_t * D(d_a - d_t)`. Solving that system
/// removes the sidelobe leakage between neighbouring taps; it is the
/// least-squares fit of the taps to the occupied bins.
pub fn fit_tap_gains(
    cir: &Cir,
    occupied_mask: &[bool],
    delays: &[usize],
) -> Result<Vec<Complex64>> {
    let l = cir.taps.len();
    if occupied_mask.len() != l {
        return Err(Error::config("mask length does not match the CIR"));
    }
    if delays.iter().any(|&d| d >= l) {
        return Err(Error::config("tap delay beyond the CIR length"));
    }
    let kernel = band_kernel(occupied_mask);
    let gram = delays
        .iter()
        .map(|&a| {
            delays
                .iter()
                .map(|&b| kernel.taps[(a + l - b) % l])
                .collect()
        })
        .collect();
    let rhs = delays.iter().map(|&d| cir.taps[d]).collect();
    solve(gram, rhs).ok_or_else(|| Error::config("tap delays are not resolvable in this band"))
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[pivot][col].norm() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (top, rest) = a.split_at_mut(row);
            for (dst, src) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *dst -= f * src;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let s: Complex64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// One exported PDP row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdpRecord {
    pub snapshot: usize,
    pub delay_s: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Csv,
    JsonLines,
}

pub fn pdp_records(
    snapshot: usize,
    pdp: &PowerDelayProfile,
) -> impl Iterator<Item = PdpRecord> + '_ {
    pdp.power_db
        .iter()
        .enumerate()
        .map(move |(i, &p)| PdpRecord {
            snapshot,
            delay_s: pdp.delay_s(i),
            power_db: p,
        })
}

pub fn write_records<W: Write, T: Serialize + CsvRow>(
    mut w: W,
    format: ExportFormat,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    if format == ExportFormat::Csv {
        writeln!(w, "{}", T::HEADER)?;
    }
    for r in records {
        match format {
            ExportFormat::Csv => writeln!(w, "{}", r.csv_row())?,
            ExportFormat::JsonLines => {
                serde_json::to_writer(&mut w, &r).map_err(std::io::Error::from)?;
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Flat record that can be written as one delimited line.
pub trait CsvRow {
    const HEADER: &'static str;
    fn csv_row(&self) -> String;
}

impl CsvRow for PdpRecord {
    const HEADER: &'static str = "snapshot,delay_s,power_db";
    fn csv_row(&self) -> String {
        format!("{},{:e},{}", self.snapshot, self.delay_s, self.power_db)
    }
}

/// One exported frequency-response bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub snapshot: usize,
    pub bin: usize,
    /// Signed baseband frequency of the bin.
    pub freq_hz: f64,
    pub re: f64,
    pub im: f64,
    pub magnitude_db: f64,
}

impl CsvRow for ResponseRecord {
    const HEADER: &'static str = "snapshot,bin,freq_hz,re,im,magnitude_db";
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.snapshot, self.bin, self.freq_hz, self.re, self.im, self.magnitude_db
        )
    }
}

/// Occupied bins of `resp` as export rows.
pub fn response_records(
    snapshot: usize,
    resp: &FrequencyResponse,
    sample_rate_hz: f64,
) -> impl Iterator<Item = ResponseRecord> + '_ {
    let l = resp.len();
    resp.occupied().map(move |(k, h)| {
        let signed = if k > l / 2 {
            k as f64 - l as f64
        } else {
            k as f64
        };
        let mag = h.norm();
        ResponseRecord {
            snapshot,
            bin: k,
            freq_hz: signed * sample_rate_hz / l as f64,
            re: h.re,
            im: h.im,
            magnitude_db: if mag > 0.0 {
                (20.0 * mag.log10()).max(PDP_FLOOR_DB)
            } else {
                PDP_FLOOR_DB
            },
        }
    })
}
