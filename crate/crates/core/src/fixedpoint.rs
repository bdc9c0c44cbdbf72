//! The "complex short" sample domain.
//!
//! Samples are 16-bit signed I/Q pairs where full scale (1.0) corresponds to
//! 32768 quantization steps. The averager shifts each incoming sample right by
//! `K` bits before accumulating, so the accumulator never needs more than 16
//! bits as long as at most `2^K` samples are summed.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Quantization steps per unit of full scale.
pub const FULL_SCALE: f64 = 32768.0;

/// Bytes per sample on disk: 16-bit LE I followed by 16-bit LE Q.
pub const SAMPLE_BYTES: usize = 4;

/// One I/Q sample as delivered by the converters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComplexSample {
    pub i: i16,
    pub q: i16,
}

/// Accumulated sum of shifted samples, as emitted by the averager.
///
/// Same bit width as [`ComplexSample`]; the distinct type marks values that
/// are sums of `M` samples each divided by `2^K` rather than raw samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccumSample {
    pub i: i16,
    pub q: i16,
}

impl ComplexSample {
    pub const ZERO: ComplexSample = ComplexSample { i: 0, q: 0 };

    pub const fn new(i: i16, q: i16) -> Self {
        ComplexSample { i, q }
    }

    /// Round to nearest and saturate each component.
    pub fn quantize(value: Complex64) -> Self {
        ComplexSample {
            i: quantize_component(value.re),
            q: quantize_component(value.im),
        }
    }

    /// Like [`quantize`](Self::quantize), but also reports whether either
    /// component had to be clipped.
    pub fn quantize_checked(value: Complex64) -> (Self, bool) {
        let (i, si) = quantize_component_checked(value.re);
        let (q, sq) = quantize_component_checked(value.im);
        (ComplexSample { i, q }, si || sq)
    }

    /// Arithmetic right shift of both components (floor semantics).
    #[inline]
    pub fn shift_right(self, k: u32) -> Self {
        debug_assert!(k < 16);
        ComplexSample {
            i: self.i >> k,
            q: self.q >> k,
        }
    }

    #[inline]
    pub fn to_float(self) -> Complex64 {
        Complex64::new(self.i as f64 / FULL_SCALE, self.q as f64 / FULL_SCALE)
    }

    pub fn to_le_bytes(self) -> [u8; SAMPLE_BYTES] {
        let i = self.i.to_le_bytes();
        let q = self.q.to_le_bytes();
        [i[0], i[1], q[0], q[1]]
    }

    pub fn from_le_bytes(b: [u8; SAMPLE_BYTES]) -> Self {
        ComplexSample {
            i: i16::from_le_bytes([b[0], b[1]]),
            q: i16::from_le_bytes([b[2], b[3]]),
        }
    }
}

impl AccumSample {
    pub const ZERO: AccumSample = AccumSample { i: 0, q: 0 };

    pub const fn new(i: i16, q: i16) -> Self {
        AccumSample { i, q }
    }

    /// Hardware adder: 16-bit two's-complement addition of a shifted sample.
    ///
    /// Wraps on overflow like the RTL would; callers guarantee `M <= 2^K`,
    /// under which no wrap can occur.
    #[inline]
    pub fn add_shifted(self, s: ComplexSample) -> Self {
        AccumSample {
            i: self.i.wrapping_add(s.i),
            q: self.q.wrapping_add(s.q),
        }
    }

    #[inline]
    pub fn from_shifted(s: ComplexSample) -> Self {
        AccumSample { i: s.i, q: s.q }
    }

    #[inline]
    pub fn to_float(self) -> Complex64 {
        Complex64::new(self.i as f64 / FULL_SCALE, self.q as f64 / FULL_SCALE)
    }

    pub fn to_le_bytes(self) -> [u8; SAMPLE_BYTES] {
        ComplexSample::new(self.i, self.q).to_le_bytes()
    }

    pub fn from_le_bytes(b: [u8; SAMPLE_BYTES]) -> Self {
        let s = ComplexSample::from_le_bytes(b);
        AccumSample { i: s.i, q: s.q }
    }
}

/// Free-function form of [`ComplexSample::quantize`].
pub fn quantize(value: Complex64) -> ComplexSample {
    ComplexSample::quantize(value)
}

/// Free-function form of [`ComplexSample::shift_right`].
pub fn shift_right(s: ComplexSample, k: u32) -> ComplexSample {
    s.shift_right(k)
}

pub fn to_float(s: ComplexSample) -> Complex64 {
    s.to_float()
}

fn quantize_component(v: f64) -> i16 {
    quantize_component_checked(v).0
}

fn quantize_component_checked(v: f64) -> (i16, bool) {
    let scaled = (v * FULL_SCALE).round();
    if scaled.is_nan() {
        return (0, true);
    }
    if scaled > i16::MAX as f64 {
        (i16::MAX, true)
    } else if scaled < i16::MIN as f64 {
        (i16::MIN, true)
    } else {
        (scaled as i16, false)
    }
}

/// Write samples as consecutive little-endian `(I, Q)` pairs.
pub fn write_samples<W: Write>(mut w: W, samples: &[ComplexSample]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(samples.len() * SAMPLE_BYTES);
    for s in samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Read exactly `n` little-endian `(I, Q)` pairs.
pub fn read_samples<R: Read>(mut r: R, n: usize) -> io::Result<Vec<ComplexSample>> {
    let mut buf = vec![0u8; n * SAMPLE_BYTES];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(SAMPLE_BYTES)
        .map(|c| ComplexSample::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}
