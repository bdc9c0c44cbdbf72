//! End-to-end acceptance suite.
//!
//! Runs every criterion, prints one PASS/FAIL line each and exits non-zero if
//! any failed. Run with
//! `cargo test -p uwb-sounder --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwb_sounder::campaign::host_data_rate_bytes_per_s;
use uwb_sounder::channel::{ALIASING_CHECK, DISCARD_CHECK};
use uwb_sounder::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

// 1. R = F - (P + M*L) with the default configuration.
fn budget_identity() -> Outcome {
    let cfg = SounderConfig::table_i();
    let r = cfg.skip_len().map_err(|e| e.to_string())?;
    let f = cfg.frame_len().map_err(|e| e.to_string())?;
    let total = cfg.p() + cfg.m() * cfg.l() + r;
    ensure(
        r == 2_432_416 && total == 2_500_000 && f == total,
        format!("R = {r}, P + M*L + R = {total}, T_rep/T_s = {f}"),
    )
}

// 2. Repetitions then zero fill.
fn frame_structure() -> Outcome {
    let cfg = SounderConfig::table_i();
    let wf = SoundingWaveform::from_config(&cfg).map_err(|e| e.to_string())?;
    let frame = build_tx_frame(&wf, &cfg).map_err(|e| e.to_string())?;
    let symbol = wf.quantized();
    let l = cfg.l();
    let reps = frame
        .chunks(l)
        .take_while(|c| *c == symbol.as_slice())
        .count();
    let zeros = frame[reps * l..]
        .iter()
        .filter(|s| **s == ComplexSample::ZERO)
        .count();
    let tail = frame.len() - reps * l;
    ensure(
        reps == 66 && zeros == 2_432_416 && tail == zeros && frame.len() == 2_500_000,
        format!(
            "{reps} repetitions ({} samples), {zeros} zeros, {} total",
            reps * l,
            frame.len()
        ),
    )
}

// 3. Host data rate L * 4 B per T_rep.
fn data_rate() -> Outcome {
    let rate = host_data_rate_bytes_per_s(&SounderConfig::table_i());
    ensure(
        rate == 819_200.0 && (0.5e6..=1.25e6).contains(&rate),
        format!("{rate} B/s, accepted band 0.5..1.25 MB/s"),
    )
}

// 4. Random full-range streams against a wide-integer oracle.
fn fixed_point_oracle() -> Outcome {
    let cfg = SounderConfig::table_i().averager();
    let window = cfg.window_len();
    let streams = 1_000_000usize.div_ceil(window).max(16);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0usize;
    for s in 0..streams {
        let stream: Vec<ComplexSample> = (0..window)
            .map(|_| ComplexSample::new(rng.random(), rng.random()))
            .collect();
        let batch = select_and_average(&stream, &cfg).map_err(|e| e.to_string())?;
        let streamed = stream_snapshot(&stream, &cfg).map_err(|e| e.to_string())?;
        if batch.data != streamed.data {
            return Err(format!("stream {s}: state machine differs from batch"));
        }
        for i in 0..cfg.l {
            let (mut ei, mut eq) = (0i64, 0i64);
            for m in 0..cfg.m {
                let x = stream[cfg.p + m * cfg.l + i];
                ei += x.i as i64;
                eq += x.q as i64;
            }
            let out = batch.data[i];
            for (exact, got) in [(ei, out.i as i64), (eq, out.q as i64)] {
                // exact/2^K - M < got <= exact/2^K, scaled by 2^K.
                let scaled = got << cfg.k;
                if !(scaled <= exact && scaled > exact - ((cfg.m as i64) << cfg.k)) {
                    return Err(format!("stream {s} sample {i}: sum {exact} gave {got}"));
                }
            }
        }
        checked += window;
    }
    ensure(
        true,
        format!("{checked} samples in {streams} windows, bound and bit-exact match hold"),
    )
}

fn config_mk(m: usize, k: u32) -> SounderConfig {
    SounderConfig {
        average_count: m,
        shift_bits: k,
        ..SounderConfig::table_i()
    }
}

fn cir_of(cfg: &SounderConfig, model: &ChannelModel, snapshot: usize) -> Result<Vec<Cir>, String> {
    let cfg = SounderConfig {
        snapshots: snapshot,
        ..cfg.clone()
    };
    let wf = SoundingWaveform::from_config(&cfg).map_err(|e| e.to_string())?;
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let cap = run_campaign(&cfg, model, &schedule).map_err(|e| e.to_string())?;
    cap.snapshots
        .iter()
        .map(|s| {
            estimate_response(s, &wf, &cfg)
                .map(|r| to_cir(&r))
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// 5. Noise floor of the PDP with and without averaging. The floor is the
// median over delay bins of the estimation error power, the noisy CIR minus
// the noiseless CIR of the same configuration.
fn averaging_gain() -> Outcome {
    const RUNS: u64 = 100;
    const SIGMA: f64 = 0.05;
    let floor = |cfg: &SounderConfig| -> Result<f64, String> {
        let clean = cir_of(cfg, &ChannelModel::identity(), 1)?.remove(0);
        let mut floors = Vec::new();
        for run in 0..RUNS {
            let noisy = ChannelModel::identity()
                .with_noise(SIGMA, run)
                .map_err(|e| e.to_string())?;
            let cir = cir_of(cfg, &noisy, 1)?.remove(0);
            let err: Vec<f64> = cir
                .taps
                .iter()
                .zip(&clean.taps)
                .map(|(a, b)| db((a - b).norm_sqr()))
                .collect();
            floors.push(median(err));
        }
        Ok(floors.iter().sum::<f64>() / floors.len() as f64)
    };
    let f1 = floor(&config_mk(1, 0))?;
    let f64_ = floor(&config_mk(64, 6))?;
    let gain = f1 - f64_;
    ensure(
        (gain - 18.06).abs() <= 1.0,
        format!(
            "{RUNS} runs, floor M=1 {f1:.2} dB, M=64 {f64_:.2} dB, gain {gain:.2} dB (18.06 +- 1)"
        ),
    )
}

fn tone_amplitude(cfg: &SounderConfig, nu: f64, amplitude: f64) -> Result<f64, String> {
    let model = ChannelModel::new(
        vec![Tap::new(0, c64(0.0, 0.0))],
        0.0,
        vec![Interferer {
            normalized_freq: nu,
            amplitude,
            phase: 0.3,
        }],
        0,
    )
    .map_err(|e| e.to_string())?;
    let schedule = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let cap = run_campaign(cfg, &model, &schedule).map_err(|e| e.to_string())?;
    let avg = uwb_sounder::estimator::rescale_snapshot(&cap.snapshots[0]);
    let l = avg.len() as f64;
    let proj: Complex64 = avg
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, -2.0 * PI * nu * i as f64))
        .sum();
    Ok(proj.norm() / l)
}

// 6. Averaged tone amplitude relative to the unaveraged one.
fn interference_suppression() -> Outcome {
    let averaged = config_mk(64, 6);
    let single = config_mk(1, 0);
    let (l, m) = (averaged.l() as f64, averaged.m() as f64);
    // nu*L = n + delta; deltas chosen between the nulls of the factor.
    let grid: [(i32, f64); 12] = [
        (37, 0.0),
        (-5, 0.002),
        (120, 0.005),
        (-311, 0.0078),
        (3, 0.01),
        (64, 0.0125),
        (-200, 0.02),
        (401, 0.023),
        (-77, 0.03),
        (9, 0.1),
        (250, 0.3),
        (-480, 0.37),
    ];
    let amplitude = 0.25;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (n, delta) in grid {
        let nu = (n as f64 + delta) / l;
        let x = PI * nu * l;
        let expected = if x.sin().abs() < 1e-12 {
            1.0
        } else {
            ((x * m).sin() / (m * x.sin())).abs()
        };
        let got =
            tone_amplitude(&averaged, nu, amplitude)? / tone_amplitude(&single, nu, amplitude)?;
        let dev = (db(got * got) - db(expected * expected)).abs();
        worst = worst.max(dev);
        lines.push(format!("{:.1}", db(expected * expected)));
    }
    ensure(
        worst <= 1.0,
        format!(
            "{} tones, expected [{}] dB, worst deviation {worst:.3} dB (<= 1)",
            grid.len(),
            lines.join(", ")
        ),
    )
}

// 7. Three-tap channel through estimate -> to_cir.
fn cir_recovery() -> Outcome {
    let cfg = SounderConfig::table_i();
    let truth = [
        (0usize, c64(1.0, 0.0)),
        (50, c64(0.0, 0.5)),
        (120, c64(-0.25, 0.0)),
    ];
    let model = ChannelModel::new(
        truth.iter().map(|&(d, g)| Tap::new(d, g)).collect(),
        0.0,
        vec![],
        0,
    )
    .map_err(|e| e.to_string())?;
    let cir = cir_of(&cfg, &model, 1)?.remove(0);
    let mut peaks = cir.strongest(3);
    peaks.sort_unstable();
    let delays: Vec<usize> = truth.iter().map(|t| t.0).collect();
    if peaks != delays {
        return Err(format!("peaks at {peaks:?}"));
    }
    let wf = SoundingWaveform::from_config(&cfg).map_err(|e| e.to_string())?;
    let gains = fit_tap_gains(&cir, &wf.occupied_mask, &delays).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = gains
        .iter()
        .zip(&truth)
        .map(|(g, t)| (g - t.1).norm() / t.1.norm())
        .collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    ensure(
        worst <= 0.01,
        format!(
            "peaks {peaks:?}, relative gain errors [{}] (<= 1%)",
            errs.iter()
                .map(|e| format!("{:.4}%", e * 100.0))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn reduced_config() -> SounderConfig {
    SounderConfig {
        signal_length_samples: 64,
        discard_samples: 128,
        average_count: 4,
        shift_bits: 2,
        repetition_period_s: 1e-6,
        sample_period_s: 2e-9,
        zc_length: 51,
        zc_root: 5,
        snapshots: 1,
        ..SounderConfig::table_i()
    }
}

// 8. Every timing error the discard budget admits only rotates the CIR.
fn timing_error_tolerance() -> Outcome {
    let cfg = reduced_config();
    let model = ChannelModel::new(
        vec![
            Tap::new(0, c64(1.0, 0.0)),
            Tap::new(5, c64(0.0, 0.4)),
            Tap::new(17, c64(-0.2, 0.0)),
        ],
        0.0,
        vec![],
        0,
    )
    .map_err(|e| e.to_string())?;
    let wf = SoundingWaveform::from_config(&cfg).map_err(|e| e.to_string())?;
    let base = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let run = |e: i64| -> Result<(Vec<AccumSample>, Cir), String> {
        let cap =
            run_campaign(&cfg, &model, &base.with_timing_error(e)).map_err(|e| e.to_string())?;
        let snap = &cap.snapshots[0];
        let resp = estimate_response(snap, &wf, &cfg).map_err(|e| e.to_string())?;
        Ok((snap.data.clone(), to_cir(&resp)))
    };
    let (data0, cir0) = run(0)?;
    let peak = cir0.taps.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let budget = cfg.p() - cfg.l();
    let mut worst: f64 = 0.0;
    for e in 0..=budget {
        let (data, cir) = run(e as i64)?;
        let mut rotated = data0.clone();
        rotated.rotate_right(e % cfg.l());
        if data != rotated {
            return Err(format!("e = {e}: snapshot is not a cyclic shift"));
        }
        let dev = cir
            .taps
            .iter()
            .zip(&cir0.rotated(e).taps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / peak;
        worst = worst.max(dev);
    }
    ensure(
        worst <= 1e-9,
        format!(
            "L={}, P={}: e in 0..={budget} all cyclic shifts, worst CIR deviation {worst:.1e} of peak",
            cfg.l(),
            cfg.p()
        ),
    )
}

// 9. Receiver starting on later PPS flanks sees the same captures.
fn flank_invariance() -> Outcome {
    let cfg = SounderConfig {
        snapshots: 2,
        ..SounderConfig::table_i()
    };
    let model = ChannelModel::new(
        vec![Tap::new(3, c64(0.8, 0.1)), Tap::new(40, c64(-0.2, 0.3))],
        0.01,
        vec![Interferer {
            normalized_freq: 0.0123,
            amplitude: 0.05,
            phase: 1.0,
        }],
        42,
    )
    .map_err(|e| e.to_string())?;
    let base = PpsSchedule::aligned(cfg.repetition_period_s, cfg.sample_period_s);
    let capture = |s: PpsSchedule| -> Result<Vec<u8>, String> {
        run_campaign(&cfg, &model, &s)
            .and_then(|c| c.to_bytes())
            .map_err(|e| e.to_string())
    };
    let reference = capture(base)?;
    for f in [0i64, 1, 3, 7] {
        for s in [
            base.with_flanks(0, f),
            base.with_flanks(f, 0),
            base.with_flanks(f, f),
        ] {
            if capture(s)? != reference {
                return Err(format!(
                    "flanks tx={} rx={} differ",
                    s.tx_start_flank, s.rx_start_flank
                ));
            }
        }
    }
    ensure(
        true,
        format!(
            "flank offsets {{0, 1, 3, 7}}: {} byte captures identical",
            reference.len()
        ),
    )
}

// 10. Delay budget validator.
fn validator() -> Outcome {
    let cfg = SounderConfig::table_i();
    let spread = |us: f64| -> Result<ValidationReport, String> {
        let d = (us * 1e-6 / cfg.sample_period_s).round() as usize;
        let m = ChannelModel::new(
            vec![Tap::new(0, c64(1.0, 0.0)), Tap::new(d, c64(0.1, 0.0))],
            0.0,
            vec![],
            0,
        )
        .map_err(|e| e.to_string())?;
        Ok(validate_config(&cfg, &m))
    };
    let ok = spread(2.0)?;
    let bad = spread(2.05)?;
    let margin = ok
        .check(ALIASING_CHECK)
        .map_or(i64::MIN, |c| c.margin_samples);
    let tight = SounderConfig {
        discard_samples: 1024,
        ..cfg.clone()
    };
    let edge = validate_config(&tight, &ChannelModel::identity());
    let edge_margin = edge
        .check(DISCARD_CHECK)
        .map_or(i64::MIN, |c| c.margin_samples);
    ensure(
        ok.passed() && margin == 24 && !bad.passed() && edge.passed() && edge_margin == 0,
        format!(
            "2.0 us passes (margin {margin}), 2.05 us {}, P=1024 tau0=0 margin {edge_margin}",
            if bad.passed() { "passes" } else { "fails" }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("budget identity", budget_identity),
        ("frame structure", frame_structure),
        ("host data rate", data_rate),
        ("fixed-point oracle", fixed_point_oracle),
        ("averaging gain", averaging_gain),
        ("tone suppression", interference_suppression),
        ("CIR recovery", cir_recovery),
        ("timing-error tolerance", timing_error_tolerance),
        ("PPS flank invariance", flank_invariance),
        ("delay budget validator", validator),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {:>2} {name}: {detail} [{:.1} s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
