//! Word-level model of the select-and-average block, checked against the
//! batch form and a wide-integer sum.
//!
//! cargo run --example averager_bit_exact

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwb_sounder::averager::Phase;
use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    // A toy configuration small enough to trace.
    let toy = AveragerConfig {
        l: 4,
        p: 2,
        m: 2,
        k: 1,
    };
    let mut state = AveragerState::new(toy)?;
    let stream: Vec<ComplexSample> = (0..toy.window_len() as i16)
        .map(|v| ComplexSample::new(10 * v, -10 * v))
        .collect();
    for pair in stream.chunks_exact(2) {
        let before = state.phase();
        let out = state.step([pair[0], pair[1]]);
        println!("{before:?} <- ({}, {}) -> {out:?}", pair[0].i, pair[1].i);
    }
    assert_eq!(state.phase(), Phase::Skip);

    // Full-size configuration on random full-scale input.
    let cfg = SounderConfig::table_i();
    let avg = cfg.averager();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let stream: Vec<ComplexSample> = (0..avg.window_len())
        .map(|_| ComplexSample::new(rng.random(), rng.random()))
        .collect();
    let batch = select_and_average(&stream, &avg)?;
    let streamed = stream_snapshot(&stream, &avg)?;
    assert_eq!(batch, streamed);

    let exact: i64 = (0..avg.m).map(|m| stream[avg.p + m * avg.l].i as i64).sum();
    println!(
        "sample 0: wide sum {exact}, /2^K = {:.3}, block output {}",
        exact as f64 / (1u64 << avg.k) as f64,
        batch.data[0].i
    );
    println!(
        "{} random samples: state machine and batch agree on all {} outputs",
        stream.len(),
        batch.data.len()
    );
    Ok(())
}
