//! Functional model of the select-and-average receive block.
//!
//! Per snapshot the block discards `P` samples, then accumulates `M`
//! consecutive length-`L` sounding signals sample by sample. Every incoming
//! sample is shifted right by `K` bits before it is added, and the raw sum
//! (not divided by `M`) is emitted. Whatever follows in the repetition period
//! is skipped.
//!
//! Two views of the same datapath are provided:
//!
//! * [`select_and_average`] works on a whole snapshot at once.
//! * [`AveragerState`] steps the three-state machine (`IN`, `ADD_IN`,
//!   `ADD_OUT`) one 64-bit word (two samples) at a time against an `L/2`-word
//!   block memory, as the hardware does.
//!
//! Both are bit-exact with each other. Clock timing is not modeled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::SounderConfig;
use crate::error::{Error, Result};
use crate::fixedpoint::{AccumSample, ComplexSample};

/// Two samples, the unit processed per clock.
pub type Word = [ComplexSample; 2];
/// Two accumulated samples; one block-memory word.
pub type AccumWord = [AccumSample; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AveragerConfig {
    pub l: usize,
    pub p: usize,
    pub m: usize,
    pub k: u32,
}

impl AveragerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || !self.l.is_multiple_of(2) {
            return Err(Error::config(format!(
                "L = {} must be positive and even",
                self.l
            )));
        }
        // The sample counter advances two samples per clock.
        if !self.p.is_multiple_of(2) {
            return Err(Error::config(format!("P = {} must be even", self.p)));
        }
        if self.m == 0 {
            return Err(Error::config("M must be at least 1"));
        }
        if self.k > 15 {
            return Err(Error::config(format!("K = {} outside [0, 15]", self.k)));
        }
        if self.m > 1usize << self.k {
            return Err(Error::config(format!(
                "M = {} exceeds 2^K = {}; the 16-bit accumulator could overflow",
                self.m,
                1usize << self.k
            )));
        }
        Ok(())
    }

    /// Samples a snapshot consumes before skipping: `P + M*L`.
    pub fn window_len(&self) -> usize {
        self.p + self.m * self.l
    }
}

/// One averaged sounding signal as emitted by the block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// Raw sums `sum_m (x_m[i] >> K)`, length `L`.
    pub data: Vec<AccumSample>,
    pub snapshot_index: usize,
    pub config: AveragerConfig,
}

/// Batch form: average the `M` signals that follow the first `P` samples.
pub fn select_and_average(stream: &[ComplexSample], cfg: &AveragerConfig) -> Result<Snapshot> {
    cfg.validate()?;
    let needed = cfg.window_len();
    if stream.len() < needed {
        return Err(Error::TruncatedStream {
            needed,
            available: stream.len(),
            snapshot: None,
        });
    }
    let mut data = vec![AccumSample::ZERO; cfg.l];
    for signal in stream[cfg.p..needed].chunks_exact(cfg.l) {
        for (acc, s) in data.iter_mut().zip(signal) {
            *acc = acc.add_shifted(s.shift_right(cfg.k));
        }
    }
    Ok(Snapshot {
        data,
        snapshot_index: 0,
        config: *cfg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Discard,
    /// First signal: shifted samples are written to memory.
    In,
    /// Middle signals: memory word plus shifted input is written back.
    AddIn,
    /// Last signal: memory word plus shifted input goes to the output.
    AddOut,
    Skip,
}

/// Single-owner state of the streaming averager.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AveragerState {
    cfg: AveragerConfig,
    phase: Phase,
    discarded: usize,
    signal_index: usize,
    sample_index: usize,
    memory: Vec<AccumWord>,
}

impl AveragerState {
    pub fn new(cfg: AveragerConfig) -> Result<Self> {
        cfg.validate()?;
        let phase = if cfg.p > 0 {
            Phase::Discard
        } else {
            Self::phase_for_signal(&cfg, 0)
        };
        Ok(AveragerState {
            cfg,
            phase,
            discarded: 0,
            signal_index: 0,
            sample_index: 0,
            memory: vec![[AccumSample::ZERO; 2]; cfg.l / 2],
        })
    }

    fn phase_for_signal(cfg: &AveragerConfig, signal: usize) -> Phase {
        if signal >= cfg.m {
            Phase::Skip
        } else if signal + 1 == cfg.m {
            Phase::AddOut
        } else if signal == 0 {
            Phase::In
        } else {
            Phase::AddIn
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn signal_index(&self) -> usize {
        self.signal_index
    }

    pub fn sample_index(&self) -> usize {
        self.sample_index
    }

    pub fn memory(&self) -> &[AccumWord] {
        &self.memory
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Skip
    }

    /// Clock one input word through the datapath.
    ///
    /// Returns an output word only in `ADD_OUT`.
    pub fn step(&mut self, word: Word) -> Option<AccumWord> {
        let k = self.cfg.k;
        let shifted = [word[0].shift_right(k), word[1].shift_right(k)];
        let addr = self.sample_index / 2;
        let out = match self.phase {
            Phase::Discard => {
                self.discarded += 2;
                if self.discarded >= self.cfg.p {
                    self.phase = Self::phase_for_signal(&self.cfg, 0);
                }
                return None;
            }
            Phase::Skip => return None,
            Phase::In => {
                self.memory[addr] = shifted.map(AccumSample::from_shifted);
                None
            }
            Phase::AddIn => {
                let mem = self.memory[addr];
                self.memory[addr] = [
                    mem[0].add_shifted(shifted[0]),
                    mem[1].add_shifted(shifted[1]),
                ];
                None
            }
            Phase::AddOut => {
                // With M = 1 nothing was stored; the memory read is bypassed.
                let mem = if self.cfg.m == 1 {
                    [AccumSample::ZERO; 2]
                } else {
                    self.memory[addr]
                };
                Some([
                    mem[0].add_shifted(shifted[0]),
                    mem[1].add_shifted(shifted[1]),
                ])
            }
        };
        self.sample_index += 2;
        if self.sample_index == self.cfg.l {
            self.sample_index = 0;
            self.signal_index += 1;
            self.phase = Self::phase_for_signal(&self.cfg, self.signal_index);
        }
        out
    }
}

/// Functional form of [`AveragerState::step`].
pub fn step_state_machine(
    mut state: AveragerState,
    word: Word,
) -> (AveragerState, Option<AccumWord>) {
    let out = state.step(word);
    (state, out)
}

/// Streaming form of [`select_and_average`]: feeds the stream word by word
/// through [`AveragerState`] until the averaging window is complete.
pub fn stream_snapshot(stream: &[ComplexSample], cfg: &AveragerConfig) -> Result<Snapshot> {
    let mut state = AveragerState::new(*cfg)?;
    let needed = cfg.window_len();
    if stream.len() < needed {
        return Err(Error::TruncatedStream {
            needed,
            available: stream.len(),
            snapshot: None,
        });
    }
    let mut data = Vec::with_capacity(cfg.l);
    for pair in stream[..needed].chunks_exact(2) {
        if let Some(out) = state.step([pair[0], pair[1]]) {
            data.extend_from_slice(&out);
        }
    }
    debug_assert!(state.is_done());
    Ok(Snapshot {
        data,
        snapshot_index: 0,
        config: *cfg,
    })
}

/// Run the block over a continuous receive stream, one snapshot per
/// repetition period `T_rep/T_s`.
pub fn run_receiver(
    stream: &[ComplexSample],
    cfg: &SounderConfig,
    n_snapshots: usize,
) -> Result<Vec<Snapshot>> {
    let avg = cfg.averager();
    avg.validate()?;
    let frame = cfg.frame_len()?;
    if frame < avg.window_len() {
        return Err(Error::config(format!(
            "P + M*L = {} exceeds the {frame}-sample frame",
            avg.window_len()
        )));
    }
    if let Some(k) = (0..n_snapshots).find(|k| stream.len() < (k + 1) * frame) {
        return Err(Error::TruncatedStream {
            needed: (k + 1) * frame,
            available: stream.len(),
            snapshot: Some(k),
        });
    }
    (0..n_snapshots)
        .into_par_iter()
        .map(|k| {
            let mut snap = select_and_average(&stream[k * frame..(k + 1) * frame], &avg)?;
            snap.snapshot_index = k;
            Ok(snap)
        })
        .collect()
}
