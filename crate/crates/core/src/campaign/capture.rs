//! Capture file: averaged snapshots plus everything needed to reproduce them.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "CSND"            4 bytes magic
//! version           u16
//! header length     u32, bytes of header text
//! header            UTF-8 JSON (CaptureHeader)
//! snapshot records  snapshot_count * L * (i16 I, i16 Q)
//! ```
//!
//! Records carry the raw averager sums, not rescaled averages.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::averager::Snapshot;
use crate::campaign::SounderConfig;
use crate::error::{Error, Result};
use crate::fixedpoint::{AccumSample, SAMPLE_BYTES};

pub const MAGIC: [u8; 4] = *b"CSND";
pub const FORMAT_VERSION: u16 = 1;

/// Sub-carrier placement written into every header so readers do not have to
/// assume it.
pub const SUBCARRIER_LAYOUT: &str = "zc[n] on signed bin n - floor(N/2), DC included";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureHeader {
    pub config: SounderConfig,
    /// SHA-256 of the canonical channel description.
    pub channel_digest: String,
    pub prng_algorithm: String,
    pub seed: u64,
    pub created_unix_s: u64,
    pub snapshot_count: usize,
    /// Lag of the transmit frame behind the receiver's snapshot grid.
    pub receiver_offset_samples: usize,
    pub subcarrier_layout: String,
    pub dc_occupied: bool,
    /// Receiver-input samples clipped by the 16-bit quantizer.
    pub saturated_samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureFile {
    pub header: CaptureHeader,
    pub snapshots: Vec<Snapshot>,
}

impl CaptureFile {
    /// Bytes of snapshot payload.
    pub fn payload_len(&self) -> usize {
        self.snapshots.len() * self.header.config.signal_length_samples * SAMPLE_BYTES
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let l = self.header.config.signal_length_samples;
        if self.header.snapshot_count != self.snapshots.len() {
            return Err(Error::format(format!(
                "header announces {} snapshots, {} present",
                self.header.snapshot_count,
                self.snapshots.len()
            )));
        }
        let header = serde_json::to_vec(&self.header).expect("header is always serializable");
        let header_len =
            u32::try_from(header.len()).map_err(|_| Error::format("header exceeds 4 GiB"))?;
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&header_len.to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(l * SAMPLE_BYTES);
        for snap in &self.snapshots {
            if snap.data.len() != l {
                return Err(Error::format(format!(
                    "snapshot {} has {} samples, expected {l}",
                    snap.snapshot_index,
                    snap.data.len()
                )));
            }
            buf.clear();
            for s in &snap.data {
                buf.extend_from_slice(&s.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(64 + self.payload_len());
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if magic != MAGIC {
            return Err(Error::format(format!("bad magic {magic:02x?}")));
        }
        let mut v = [0u8; 2];
        read_exact(&mut r, &mut v, "version")?;
        let version = u16::from_le_bytes(v);
        if version != FORMAT_VERSION {
            return Err(Error::format(format!("unsupported version {version}")));
        }
        let mut n = [0u8; 4];
        read_exact(&mut r, &mut n, "header length")?;
        let mut header = vec![0u8; u32::from_le_bytes(n) as usize];
        read_exact(&mut r, &mut header, "header")?;
        let header: CaptureHeader =
            serde_json::from_slice(&header).map_err(|e| Error::format(format!("header: {e}")))?;
        header
            .config
            .validate()
            .map_err(|e| Error::format(format!("header config: {e}")))?;

        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let l = header.config.signal_length_samples;
        let record = l * SAMPLE_BYTES;
        if payload.len() != header.snapshot_count * record {
            return Err(Error::format(format!(
                "payload is {} bytes, header announces {} snapshots of {record} bytes",
                payload.len(),
                header.snapshot_count
            )));
        }
        let config = header.config.averager();
        let snapshots = payload
            .chunks_exact(record)
            .enumerate()
            .map(|(idx, rec)| Snapshot {
                data: rec
                    .chunks_exact(SAMPLE_BYTES)
                    .map(|c| AccumSample::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
                snapshot_index: idx,
                config,
            })
            .collect();
        Ok(CaptureFile { header, snapshots })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format(format!("file ends inside {what}")),
        _ => Error::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(cfg: SounderConfig, count: usize) -> CaptureHeader {
        CaptureHeader {
            config: cfg,
            channel_digest: "00".repeat(32),
            prng_algorithm: "test".into(),
            seed: 99,
            created_unix_s: 1_700_000_000,
            snapshot_count: count,
            receiver_offset_samples: 17,
            subcarrier_layout: SUBCARRIER_LAYOUT.into(),
            dc_occupied: true,
            saturated_samples: 3,
        }
    }

    fn small_cfg() -> SounderConfig {
        SounderConfig {
            signal_length_samples: 8,
            discard_samples: 16,
            average_count: 2,
            shift_bits: 1,
            repetition_period_s: 64.0 * 2e-9,
            zc_length: 7,
            zc_root: 3,
            ..SounderConfig::table_i()
        }
    }

    #[test]
    fn layout_starts_with_magic_and_version() {
        let file = CaptureFile {
            header: header(small_cfg(), 0),
            snapshots: vec![],
        };
        let bytes = file.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"CSND");
        assert_eq!(&bytes[4..6], &[1, 0]);
        let hlen = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 10 + hlen);
        assert_eq!(CaptureFile::read_from(&bytes[..]).unwrap(), file);
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let cfg = small_cfg();
        let file = CaptureFile {
            header: header(cfg.clone(), 1),
            snapshots: vec![Snapshot {
                data: vec![AccumSample::new(1, -1); 8],
                snapshot_index: 0,
                config: cfg.averager(),
            }],
        };
        let bytes = file.to_bytes().unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            CaptureFile::read_from(&bad[..]),
            Err(Error::Format(_))
        ));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            CaptureFile::read_from(&bad[..]),
            Err(Error::Format(_))
        ));

        let short = &bytes[..bytes.len() - 1];
        assert!(matches!(
            CaptureFile::read_from(short),
            Err(Error::Format(_))
        ));

        assert!(matches!(
            CaptureFile::read_from(&bytes[..3]),
            Err(Error::Format(_))
        ));

        let mut long = bytes.clone();
        long.extend_from_slice(&[0; 4]);
        assert!(matches!(
            CaptureFile::read_from(&long[..]),
            Err(Error::Format(_))
        ));

        let mismatch = CaptureFile {
            header: header(cfg, 2),
            snapshots: file.snapshots.clone(),
        };
        assert!(mismatch.to_bytes().is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            count in 0usize..4,
            seed in any::<u64>(),
            created in any::<u64>(),
            samples in proptest::collection::vec((any::<i16>(), any::<i16>()), 32),
        ) {
            let cfg = small_cfg();
            let snapshots: Vec<_> = (0..count)
                .map(|k| Snapshot {
                    data: samples[k * 8..(k + 1) * 8]
                        .iter()
                        .map(|&(i, q)| AccumSample::new(i, q))
                        .collect(),
                    snapshot_index: k,
                    config: cfg.averager(),
                })
                .collect();
            let mut h = header(cfg, count);
            h.seed = seed;
            h.created_unix_s = created;
            let file = CaptureFile { header: h, snapshots };
            let bytes = file.to_bytes().unwrap();
            prop_assert_eq!(CaptureFile::read_from(&bytes[..]).unwrap(), file);
        }
    }
}
