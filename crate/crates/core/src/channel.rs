//! Propagation channel simulator and the delay-budget validator.
//!
//! The channel is a tapped delay line with integer-sample delays, plus
//! continuous-phase complex tone interferers and complex white Gaussian
//! noise. Everything is evaluated in floating point and quantized back to
//! 16-bit samples at the receiver input.
//!
//! Noise comes from ChaCha20 seeded with the model seed. Independent noise
//! streams (one per snapshot in a campaign) are selected with the ChaCha
//! stream id, so any segment can be regenerated on its own.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::campaign::SounderConfig;
use crate::error::{Error, Result};
use crate::fixedpoint::ComplexSample;

/// Identifier of the noise generator, recorded in capture headers.
pub const PRNG_ALGORITHM: &str = "chacha20(seed_from_u64, stream=snapshot)+normal";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Delay in samples.
    pub delay: usize,
    pub gain: Complex64,
}

impl Tap {
    pub fn new(delay: usize, gain: Complex64) -> Self {
        Tap { delay, gain }
    }
}

/// A complex tone `amplitude * exp(j(2*pi*normalized_freq*n + phase))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Cycles per sample, in (-0.5, 0.5].
    pub normalized_freq: f64,
    /// Full-scale units.
    pub amplitude: f64,
    /// Radians.
    pub phase: f64,
}

impl Interferer {
    #[inline]
    fn at(&self, n: u64) -> Complex64 {
        // Reduce the cycle count before converting to an angle so long streams
        // keep full phase precision.
        let cycles = (self.normalized_freq * n as f64).rem_euclid(1.0);
        Complex64::from_polar(
            self.amplitude,
            2.0 * std::f64::consts::PI * cycles + self.phase,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    taps: Vec<Tap>,
    /// Per-component standard deviation, full-scale units.
    pub noise_std: f64,
    pub interferers: Vec<Interferer>,
    pub seed: u64,
}

impl ChannelModel {
    pub fn new(
        mut taps: Vec<Tap>,
        noise_std: f64,
        interferers: Vec<Interferer>,
        seed: u64,
    ) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::config("channel needs at least one tap"));
        }
        taps.sort_by_key(|t| t.delay);
        if taps.windows(2).any(|w| w[0].delay == w[1].delay) {
            return Err(Error::config("tap delays must be unique"));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::config(format!("noise_std {noise_std} must be >= 0")));
        }
        for it in &interferers {
            if !(it.normalized_freq > -0.5 && it.normalized_freq <= 0.5) {
                return Err(Error::config(format!(
                    "interferer frequency {} outside (-0.5, 0.5]",
                    it.normalized_freq
                )));
            }
            if it.amplitude.is_nan() || it.amplitude < 0.0 {
                return Err(Error::config("interferer amplitude must be >= 0"));
            }
        }
        Ok(ChannelModel {
            taps,
            noise_std,
            interferers,
            seed,
        })
    }

    /// Single unit tap at delay 0, no impairments.
    pub fn identity() -> Self {
        Self::delayed(0, Complex64::new(1.0, 0.0))
    }

    pub fn delayed(delay: usize, gain: Complex64) -> Self {
        ChannelModel {
            taps: vec![Tap::new(delay, gain)],
            noise_std: 0.0,
            interferers: vec![],
            seed: 0,
        }
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn with_noise(mut self, noise_std: f64, seed: u64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::config(format!("noise_std {noise_std} must be >= 0")));
        }
        self.noise_std = noise_std;
        self.seed = seed;
        Ok(self)
    }

    pub fn with_interferer(mut self, it: Interferer) -> Result<Self> {
        let mut all = self.interferers.clone();
        all.push(it);
        let checked = ChannelModel::new(self.taps.clone(), self.noise_std, all, self.seed)?;
        self.interferers = checked.interferers;
        Ok(self)
    }

    /// First-arrival delay, in samples.
    pub fn first_delay(&self) -> usize {
        self.taps[0].delay
    }

    pub fn max_delay(&self) -> usize {
        self.taps[self.taps.len() - 1].delay
    }

    /// Spread between first and last tap, in samples.
    pub fn delay_spread(&self) -> usize {
        self.max_delay() - self.first_delay()
    }

    /// Series connection of two tapped delay lines (e.g. an RF chain followed
    /// by the propagation channel). Impairments are taken from `self`.
    pub fn cascade(&self, next: &ChannelModel) -> Result<ChannelModel> {
        let mut combined: Vec<Tap> = Vec::new();
        for a in &self.taps {
            for b in &next.taps {
                let delay = a.delay + b.delay;
                let gain = a.gain * b.gain;
                match combined.iter_mut().find(|t| t.delay == delay) {
                    Some(t) => t.gain += gain,
                    None => combined.push(Tap::new(delay, gain)),
                }
            }
        }
        ChannelModel::new(
            combined,
            self.noise_std,
            self.interferers.clone(),
            self.seed,
        )
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            seed: self.seed,
            noise_std_fs: self.noise_std,
            tap: self
                .taps
                .iter()
                .map(|t| TapEntry {
                    delay_samples: t.delay,
                    gain_re: t.gain.re,
                    gain_im: t.gain.im,
                })
                .collect(),
            interferer: self
                .interferers
                .iter()
                .map(|i| InterfererEntry {
                    normalized_freq_cycles_per_sample: i.normalized_freq,
                    amplitude_fs: i.amplitude,
                    phase_rad: i.phase,
                })
                .collect(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("channel is always serializable")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: ChannelFile =
            toml::from_str(s).map_err(|e| Error::format(format!("channel: {e}")))?;
        file.into_model()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 over the canonical text form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}

/// On-disk channel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_std_fs: f64,
    pub tap: Vec<TapEntry>,
    #[serde(default)]
    pub interferer: Vec<InterfererEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapEntry {
    pub delay_samples: usize,
    pub gain_re: f64,
    #[serde(default)]
    pub gain_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererEntry {
    pub normalized_freq_cycles_per_sample: f64,
    pub amplitude_fs: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl ChannelFile {
    pub fn into_model(self) -> Result<ChannelModel> {
        ChannelModel::new(
            self.tap
                .into_iter()
                .map(|t| Tap::new(t.delay_samples, Complex64::new(t.gain_re, t.gain_im)))
                .collect(),
            self.noise_std_fs,
            self.interferer
                .into_iter()
                .map(|i| Interferer {
                    normalized_freq: i.normalized_freq_cycles_per_sample,
                    amplitude: i.amplitude_fs,
                    phase: i.phase_rad,
                })
                .collect(),
            self.seed,
        )
    }
}

/// Quantized receiver input plus the number of samples that clipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Received {
    pub samples: Vec<ComplexSample>,
    pub saturated: usize,
}

/// Where a rendered segment sits in receiver time and which noise stream it
/// draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Segment {
    /// Receiver sample index of the first output sample (interferer phase).
    pub start: u64,
    /// ChaCha stream id for the noise.
    pub noise_stream: u64,
}

/// Float-domain channel output before quantization.
///
/// Output sample `j` is `sum_taps gain * tx[j + tx_origin - delay]` (zero
/// outside `tx`), plus interferers evaluated at receiver index
/// `segment.start + j`, plus noise.
pub fn render(
    tx: &[ComplexSample],
    tx_origin: isize,
    model: &ChannelModel,
    out_len: usize,
    segment: Segment,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    let txf: Vec<Complex64> = tx.iter().map(|s| s.to_float()).collect();
    for tap in &model.taps {
        if tap.gain == Complex64::new(0.0, 0.0) {
            continue;
        }
        // Output j reads tx[j + shift].
        let shift = tx_origin - tap.delay as isize;
        let j_lo = (-shift).max(0) as usize;
        let j_hi = ((txf.len() as isize - shift).max(0) as usize).min(out_len);
        for j in j_lo..j_hi {
            out[j] += tap.gain * txf[(j as isize + shift) as usize];
        }
    }
    for it in &model.interferers {
        for (j, y) in out.iter_mut().enumerate() {
            *y += it.at(segment.start + j as u64);
        }
    }
    if model.noise_std > 0.0 {
        let mut rng = ChaCha20Rng::seed_from_u64(model.seed);
        rng.set_stream(segment.noise_stream);
        let normal = Normal::new(0.0, model.noise_std).expect("validated noise_std");
        for y in out.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *y += Complex64::new(re, im);
        }
    }
    out
}

pub(crate) fn quantize_all(x: &[Complex64]) -> Received {
    let mut saturated = 0;
    let samples = x
        .iter()
        .map(|&v| {
            let (s, clipped) = ComplexSample::quantize_checked(v);
            saturated += clipped as usize;
            s
        })
        .collect();
    Received { samples, saturated }
}

/// Pass `tx` through the channel; the output is `max_delay` samples longer
/// than the input.
pub fn apply_channel(tx: &[ComplexSample], model: &ChannelModel) -> Received {
    let out_len = tx.len() + model.max_delay();
    quantize_all(&render(tx, 0, model, out_len, Segment::default()))
}

/// Float-domain form of [`apply_channel`].
pub fn apply_channel_float(tx: &[ComplexSample], model: &ChannelModel) -> Vec<Complex64> {
    render(
        tx,
        0,
        model,
        tx.len() + model.max_delay(),
        Segment::default(),
    )
}

/// One delay-budget constraint and how well it is met.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub requirement: String,
    /// Slack in samples; negative when violated.
    pub margin_samples: i64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    /// Largest first-arrival delay `P` admits, `(P - L) * T_s`.
    pub max_first_arrival_s: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "  [{}] {}: {} (margin {} samples)",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.requirement,
                c.margin_samples
            )?;
        }
        write!(
            f,
            "  first arrival admitted up to {:.6e} s",
            self.max_first_arrival_s
        )
    }
}

pub const ALIASING_CHECK: &str = "aliasing";
pub const DISCARD_CHECK: &str = "discard";

/// Check the sounder parameters against the channel's delay profile.
///
/// * aliasing: `L > delay_spread`, i.e. `L > dtau_max / T_s`
/// * discard: `P >= first_delay + L`, i.e. `P >= tau_0 / T_s + L`
pub fn validate_config(cfg: &SounderConfig, model: &ChannelModel) -> ValidationReport {
    let l = cfg.signal_length_samples as i64;
    let p = cfg.discard_samples as i64;
    let spread = model.delay_spread() as i64;
    let first = model.first_delay() as i64;
    let aliasing_margin = l - spread;
    let discard_margin = p - (first + l);
    ValidationReport {
        checks: vec![
            ConstraintCheck {
                name: ALIASING_CHECK.into(),
                requirement: format!("L = {l} > delay spread {spread} samples"),
                margin_samples: aliasing_margin,
                passed: aliasing_margin > 0,
            },
            ConstraintCheck {
                name: DISCARD_CHECK.into(),
                requirement: format!("P = {p} >= first arrival {first} + L = {}", first + l),
                margin_samples: discard_margin,
                passed: discard_margin >= 0,
            },
        ],
        max_first_arrival_s: (p - l).max(0) as f64 * cfg.sample_period_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::quantize;

    fn ramp(n: usize) -> Vec<ComplexSample> {
        (0..n)
            .map(|i| ComplexSample::new((i as i16) * 100 - 3000, 2000 - (i as i16) * 37))
            .collect()
    }

    #[test]
    fn identity_tap_delays_bit_exactly() {
        let tx = ramp(50);
        let model = ChannelModel::delayed(7, Complex64::new(1.0, 0.0));
        let rx = apply_channel(&tx, &model);
        assert_eq!(rx.samples.len(), 57);
        assert_eq!(rx.saturated, 0);
        assert!(rx.samples[..7].iter().all(|s| *s == ComplexSample::ZERO));
        assert_eq!(&rx.samples[7..], &tx[..]);
    }

    #[test]
    fn lone_interferer() {
        let tx = vec![ComplexSample::ZERO; 64];
        let it = Interferer {
            normalized_freq: 0.13,
            amplitude: 0.3,
            phase: 0.0,
        };
        let model = ChannelModel::delayed(0, Complex64::new(0.0, 0.0))
            .with_interferer(it)
            .unwrap();
        let rx = apply_channel(&tx, &model);
        for (n, s) in rx.samples.iter().enumerate() {
            let expect = quantize(Complex64::from_polar(
                0.3,
                2.0 * std::f64::consts::PI * 0.13 * n as f64,
            ));
            assert_eq!(*s, expect, "n={n}");
        }
    }

    #[test]
    fn saturation_is_counted() {
        let tx = vec![ComplexSample::new(30000, 0); 4];
        let model = ChannelModel::delayed(0, Complex64::new(2.0, 0.0));
        let rx = apply_channel(&tx, &model);
        assert_eq!(rx.saturated, 4);
        assert!(rx.samples.iter().all(|s| s.i == i16::MAX));
    }

    #[test]
    fn deterministic_given_seed() {
        let tx = ramp(200);
        let model = ChannelModel::new(
            vec![
                Tap::new(0, Complex64::new(0.8, 0.1)),
                Tap::new(3, Complex64::new(0.0, 0.2)),
            ],
            0.01,
            vec![],
            42,
        )
        .unwrap();
        assert_eq!(apply_channel(&tx, &model), apply_channel(&tx, &model));
        let other = model.clone().with_noise(0.01, 43).unwrap();
        assert_ne!(apply_channel(&tx, &model), apply_channel(&tx, &other));
    }

    #[test]
    fn linear_in_tap_gains() {
        let tx = ramp(100);
        let taps = |s: f64| {
            ChannelModel::new(
                vec![
                    Tap::new(0, Complex64::new(0.5, 0.0) * s),
                    Tap::new(5, Complex64::new(0.0, -0.3) * s),
                    Tap::new(11, Complex64::new(0.1, 0.1) * s),
                ],
                0.0,
                vec![],
                0,
            )
            .unwrap()
        };
        let base = apply_channel_float(&tx, &taps(1.0));
        for s in [0.5, -2.0] {
            let scaled = apply_channel_float(&tx, &taps(s));
            for (a, b) in scaled.iter().zip(&base) {
                assert!((a - b * s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_variance_matches_within_three_sigma() {
        let n = 1_000_000;
        let sigma = 0.05;
        let model = ChannelModel::delayed(0, Complex64::new(0.0, 0.0))
            .with_noise(sigma, 9)
            .unwrap();
        let x = render(&[], 0, &model, n, Segment::default());
        let comps: Vec<f64> = x.iter().flat_map(|c| [c.re, c.im]).collect();
        let count = comps.len() as f64;
        let mean = comps.iter().sum::<f64>() / count;
        let var = comps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        // Std. dev. of the sample variance of a Gaussian: sigma^2 * sqrt(2/(n-1)).
        let tol = 3.0 * sigma * sigma * (2.0 / (count - 1.0)).sqrt();
        assert!((var - sigma * sigma).abs() < tol, "var={var}");
    }

    #[test]
    fn noise_streams_are_independent_and_reproducible() {
        let model = ChannelModel::identity().with_noise(0.1, 5).unwrap();
        let a = render(
            &[],
            0,
            &model,
            16,
            Segment {
                start: 0,
                noise_stream: 1,
            },
        );
        let b = render(
            &[],
            0,
            &model,
            16,
            Segment {
                start: 0,
                noise_stream: 1,
            },
        );
        let c = render(
            &[],
            0,
            &model,
            16,
            Segment {
                start: 0,
                noise_stream: 2,
            },
        );
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn model_invariants() {
        assert!(ChannelModel::new(vec![], 0.0, vec![], 0).is_err());
        let dup = vec![
            Tap::new(3, Complex64::new(1.0, 0.0)),
            Tap::new(3, Complex64::new(1.0, 0.0)),
        ];
        assert!(ChannelModel::new(dup, 0.0, vec![], 0).is_err());
        assert!(ChannelModel::identity().with_noise(-1.0, 0).is_err());
        let bad = Interferer {
            normalized_freq: -0.5,
            amplitude: 1.0,
            phase: 0.0,
        };
        assert!(ChannelModel::identity().with_interferer(bad).is_err());
        let ok = Interferer {
            normalized_freq: 0.5,
            amplitude: 1.0,
            phase: 0.0,
        };
        assert!(ChannelModel::identity().with_interferer(ok).is_ok());

        let m = ChannelModel::new(
            vec![
                Tap::new(120, Complex64::new(1.0, 0.0)),
                Tap::new(20, Complex64::new(1.0, 0.0)),
            ],
            0.0,
            vec![],
            0,
        )
        .unwrap();
        assert_eq!(m.first_delay(), 20);
        assert_eq!(m.delay_spread(), 100);
    }

    #[test]
    fn cascade_convolves_taps() {
        let a = ChannelModel::new(
            vec![
                Tap::new(0, Complex64::new(1.0, 0.0)),
                Tap::new(2, Complex64::new(0.5, 0.0)),
            ],
            0.0,
            vec![],
            0,
        )
        .unwrap();
        let b = ChannelModel::new(
            vec![
                Tap::new(0, Complex64::new(1.0, 0.0)),
                Tap::new(2, Complex64::new(0.0, 1.0)),
            ],
            0.0,
            vec![],
            0,
        )
        .unwrap();
        let c = a.cascade(&b).unwrap();
        let taps: Vec<_> = c.taps().iter().map(|t| (t.delay, t.gain)).collect();
        assert_eq!(
            taps,
            vec![
                (0, Complex64::new(1.0, 0.0)),
                (2, Complex64::new(0.5, 1.0)),
                (4, Complex64::new(0.0, 0.5)),
            ]
        );
    }

    #[test]
    fn channel_file_roundtrip() {
        let text = r#"
            seed = 11
            noise_std_fs = 0.002

            [[tap]]
            delay_samples = 50
            gain_re = 0.0
            gain_im = 0.5

            [[tap]]
            delay_samples = 0
            gain_re = 1.0

            [[interferer]]
            normalized_freq_cycles_per_sample = 0.2
            amplitude_fs = 0.01
        "#;
        let m = ChannelModel::from_toml_str(text).unwrap();
        assert_eq!(m.taps()[0].delay, 0);
        assert_eq!(m.taps()[1].gain, Complex64::new(0.0, 0.5));
        assert_eq!(m.seed, 11);
        let back = ChannelModel::from_toml_str(&m.to_toml_string()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.digest(), m.digest());
        assert_eq!(m.digest().len(), 64);
        assert!(matches!(
            ChannelModel::from_toml_str("tap = 3"),
            Err(Error::Format(_))
        ));
    }

    fn two_tap(first: usize, last: usize) -> ChannelModel {
        let mut taps = vec![Tap::new(first, Complex64::new(1.0, 0.0))];
        if last != first {
            taps.push(Tap::new(last, Complex64::new(0.1, 0.0)));
        }
        ChannelModel::new(taps, 0.0, vec![], 0).unwrap()
    }

    #[test]
    fn validator_examples() {
        let cfg = SounderConfig::table_i();
        // 2.0 us spread at 2 ns = 1000 samples.
        let r = validate_config(&cfg, &two_tap(0, 1000));
        assert!(r.passed());
        assert_eq!(r.check(ALIASING_CHECK).unwrap().margin_samples, 24);

        // 2.05 us = 1025 samples.
        let r = validate_config(&cfg, &two_tap(0, 1025));
        assert!(!r.passed());
        assert!(!r.check(ALIASING_CHECK).unwrap().passed);

        assert!((r.max_first_arrival_s - 2.048e-6).abs() < 1e-15);
        let r = validate_config(&cfg, &two_tap(1024, 1024));
        assert_eq!(r.check(DISCARD_CHECK).unwrap().margin_samples, 0);
        assert!(r.passed());
        let r = validate_config(&cfg, &two_tap(1025, 1025));
        assert!(!r.check(DISCARD_CHECK).unwrap().passed);

        let tight = SounderConfig {
            discard_samples: 1024,
            ..cfg
        };
        let r = validate_config(&tight, &two_tap(0, 0));
        let c = r.check(DISCARD_CHECK).unwrap();
        assert!(c.passed);
        assert_eq!(c.margin_samples, 0);
        assert!(r.to_string().contains("pass"));
    }
}
