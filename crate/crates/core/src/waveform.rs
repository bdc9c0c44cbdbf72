//! Zadoff-Chu sounding waveform and the transmit frame.
//!
//! The ZC sequence is placed directly on the occupied sub-carriers (one
//! sequence value per bin) and converted to a length-`L` time-domain symbol.
//! Occupied bins are the signed frequencies `-floor(N/2) ..= N - 1 - floor(N/2)`
//! around DC, DC included; for odd `N` this is the symmetric range
//! `-floor(N/2) ..= floor(N/2)`. Sequence index `n` maps to signed bin
//! `n - floor(N/2)`, stored at DFT index `(n - floor(N/2)) mod L`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::campaign::SounderConfig;
use crate::dsp;
use crate::error::{Error, Result};
use crate::fixedpoint::ComplexSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZcParams {
    /// Number of occupied sub-carriers, `N`.
    pub length: usize,
    /// Root index `u`, coprime with `N`.
    pub root: usize,
}

impl ZcParams {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::config("ZC length must be positive"));
        }
        // N = 1 admits only the trivial sequence [1]; allow root 1 there.
        if self.length == 1 {
            return if self.root == 1 {
                Ok(())
            } else {
                Err(Error::config("ZC length 1 requires root 1"))
            };
        }
        if self.root == 0 || self.root >= self.length {
            return Err(Error::config(format!(
                "ZC root {} outside [1, {})",
                self.root, self.length
            )));
        }
        if gcd(self.root, self.length) != 1 {
            return Err(Error::config(format!(
                "ZC root {} is not coprime with length {}",
                self.root, self.length
            )));
        }
        Ok(())
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zadoff-Chu sequence of length `N` with root `u`.
///
/// Odd `N`: `exp(-j*pi*u*n*(n+1)/N)`; even `N`: `exp(-j*pi*u*n^2/N)`.
pub fn generate_zc(params: ZcParams) -> Result<Vec<Complex64>> {
    params.validate()?;
    let n_len = params.length as u128;
    let u = params.root as u128;
    let odd = n_len % 2 == 1;
    Ok((0..n_len)
        .map(|n| {
            let quad = if odd { n * (n + 1) } else { n * n };
            // Reduce the phase exactly: exp(-j*pi*u*q/N) has period 2N in u*q.
            let num = (u * quad) % (2 * n_len);
            Complex64::from_polar(1.0, -PI * num as f64 / n_len as f64)
        })
        .collect())
}

/// DFT indices of the occupied bins, in sequence order.
pub fn occupied_bins(n: usize, fft_size: usize) -> Vec<usize> {
    let half = (n / 2) as isize;
    (0..n as isize)
        .map(|idx| (idx - half).rem_euclid(fft_size as isize) as usize)
        .collect()
}

/// One OFDM sounding symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundingWaveform {
    /// `L`.
    pub fft_size: usize,
    pub occupied_mask: Vec<bool>,
    /// Sequence values on occupied bins, zero elsewhere.
    pub freq_bins: Vec<Complex64>,
    /// `scale * IDFT(freq_bins)`, peak component equal to `backoff`.
    pub time_signal: Vec<Complex64>,
    pub backoff: f64,
    /// Gain applied to the `1/L`-normalized inverse DFT. The DFT of
    /// `time_signal` is `scale * freq_bins`.
    pub scale: f64,
}

/// Place `zc` on the centered occupied bins and build the scaled time signal.
pub fn build_sounding_symbol(
    zc: &[Complex64],
    fft_size: usize,
    backoff: f64,
) -> Result<SoundingWaveform> {
    if zc.is_empty() || fft_size == 0 {
        return Err(Error::config("empty sequence or zero FFT size"));
    }
    if zc.len() > fft_size {
        return Err(Error::config(format!(
            "sequence length {} exceeds FFT size {fft_size}",
            zc.len()
        )));
    }
    if !(backoff > 0.0 && backoff <= 1.0) {
        return Err(Error::config(format!("backoff {backoff} outside (0, 1]")));
    }
    let mut freq_bins = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut occupied_mask = vec![false; fft_size];
    for (v, bin) in zc.iter().zip(occupied_bins(zc.len(), fft_size)) {
        freq_bins[bin] = *v;
        occupied_mask[bin] = true;
    }
    let raw = dsp::ifft(&freq_bins);
    let peak = raw
        .iter()
        .map(|x| x.re.abs().max(x.im.abs()))
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::config("sounding symbol is identically zero"));
    }
    let scale = backoff / peak;
    let time_signal = raw.iter().map(|x| x * scale).collect();
    Ok(SoundingWaveform {
        fft_size,
        occupied_mask,
        freq_bins,
        time_signal,
        backoff,
        scale,
    })
}

impl SoundingWaveform {
    pub fn from_config(cfg: &SounderConfig) -> Result<Self> {
        let zc = generate_zc(cfg.zc())?;
        build_sounding_symbol(&zc, cfg.signal_length_samples, cfg.backoff)
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied_mask.iter().filter(|&&b| b).count()
    }

    pub fn occupied_bandwidth_hz(&self, sample_rate_hz: f64) -> f64 {
        self.occupied_count() as f64 / self.fft_size as f64 * sample_rate_hz
    }

    /// DFT of `time_signal`: what a back-to-back receiver would see per bin.
    pub fn tx_bins(&self) -> Vec<Complex64> {
        self.freq_bins.iter().map(|x| x * self.scale).collect()
    }

    pub fn quantized(&self) -> Vec<ComplexSample> {
        self.time_signal
            .iter()
            .map(|&x| ComplexSample::quantize(x))
            .collect()
    }
}

/// One repetition period: `ceil((M*L + P)/L)` back-to-back sounding symbols,
/// then zeros up to `T_rep/T_s` samples.
pub fn build_tx_frame(wf: &SoundingWaveform, cfg: &SounderConfig) -> Result<Vec<ComplexSample>> {
    if wf.fft_size != cfg.signal_length_samples {
        return Err(Error::config(format!(
            "waveform length {} does not match L = {}",
            wf.fft_size, cfg.signal_length_samples
        )));
    }
    let frame_len = cfg.frame_len()?;
    let reps = cfg.tx_repetitions();
    let active = reps * wf.fft_size;
    if active > frame_len {
        return Err(Error::config(format!(
            "{reps} repetitions ({active} samples) exceed the {frame_len}-sample frame"
        )));
    }
    let symbol = wf.quantized();
    let mut frame = Vec::with_capacity(frame_len);
    for _ in 0..reps {
        frame.extend_from_slice(&symbol);
    }
    frame.resize(frame_len, ComplexSample::ZERO);
    Ok(frame)
}
