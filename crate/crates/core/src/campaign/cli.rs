//! Command-line front end. The `sounder` binary only forwards to [`main`].

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::campaign::{
    host_data_rate_bytes_per_s, raw_data_rate_bytes_per_s, report_reduction, run_campaign_at,
    CaptureFile, SounderConfig,
};
use crate::channel::{validate_config, ChannelModel};
use crate::error::{Error, Result};
use crate::estimator::{
    apply_calibration, estimate_response, pdp_records, power_delay_profile, response_records,
    to_cir, write_records, CalibrationProfile, ExportFormat, FrequencyResponse,
    DEFAULT_CALIBRATION_THRESHOLD,
};
use crate::fixedpoint::write_samples;
use crate::sync::PpsSchedule;
use crate::waveform::{build_tx_frame, SoundingWaveform};

#[derive(Debug, Parser)]
#[command(
    name = "sounder",
    version,
    about = "Select-and-average channel sounder simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the sounding waveform and one transmit frame.
    Generate(GenerateArgs),
    /// Run a campaign through a simulated channel and write a capture file.
    Simulate(SimulateArgs),
    /// Turn a capture into frequency responses and power delay profiles.
    Estimate(EstimateArgs),
    /// Build a calibration profile from a back-to-back capture.
    Calibrate(CalibrateArgs),
    /// Check sounder parameters against a channel's delay profile.
    Validate(ValidateArgs),
    /// Summarize a capture: data reduction, saturation, metadata.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    JsonLines,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::JsonLines => ExportFormat::JsonLines,
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Sounder configuration (TOML). Defaults to the lab campaign parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<SounderConfig> {
        let cfg = match &self.config {
            Some(p) => SounderConfig::load(p)?,
            None => SounderConfig::table_i(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Transmit frame as little-endian 16-bit I/Q pairs.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-bin export of the sounding spectrum.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Channel description (TOML).
    #[arg(long)]
    pub channel: PathBuf,
    /// Overrides the channel file's noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured snapshot count.
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub tx_flank: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub rx_flank: i64,
    /// Static timing error in samples (positive = transmit frame arrives late).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub timing_error: i64,
    /// Creation time recorded in the header.
    #[arg(long, default_value_t = 0)]
    pub created_unix_s: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub capture: PathBuf,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Power delay profiles (peak-relative dB per snapshot).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional frequency-response export (occupied bins).
    #[arg(long)]
    pub response: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Back-to-back capture.
    #[arg(long)]
    pub capture: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub channel: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub capture: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args`, run the command, and return the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{}]: {e}", cat.as_str());
            cat.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Validate(a) => validate(a),
        Command::Report(a) => report(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let wf = SoundingWaveform::from_config(&cfg)?;
    let frame = build_tx_frame(&wf, &cfg)?;
    let mut w = create(&a.out)?;
    write_samples(&mut w, &frame)?;
    w.flush()?;
    if let Some(path) = &a.waveform {
        let resp = FrequencyResponse {
            bins: wf.tx_bins(),
            occupied_mask: wf.occupied_mask.clone(),
        };
        let mut w = create(path)?;
        write_records(
            &mut w,
            a.format.into(),
            response_records(0, &resp, cfg.sample_rate_hz()),
        )?;
        w.flush()?;
    }
    let reps = cfg.tx_repetitions();
    println!(
        "frame: {} samples ({reps} sounding signals, {} zeros), occupied bandwidth {:.2} MHz",
        frame.len(),
        frame.len() - reps * cfg.signal_length_samples,
        wf.occupied_bandwidth_hz(cfg.sample_rate_hz()) / 1e6
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    if let Some(n) = a.snapshots {
        cfg.snapshots = n;
    }
    let mut model = ChannelModel::load(&a.channel)?;
    if let Some(seed) = a.seed {
        model.seed = seed;
    }
    let schedule = PpsSchedule {
        t_rep: cfg.repetition_period_s,
        t_s: cfg.sample_period_s,
        tx_start_flank: a.tx_flank,
        rx_start_flank: a.rx_flank,
        timing_error: a.timing_error,
    };
    let capture = run_campaign_at(&cfg, &model, &schedule, a.created_unix_s)?;
    capture.save(&a.out)?;
    println!(
        "wrote {} snapshots ({} payload bytes), {} saturated input samples",
        capture.snapshots.len(),
        capture.payload_len(),
        capture.header.saturated_samples
    );
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let capture = CaptureFile::load(&a.capture)?;
    let cfg = &capture.header.config;
    let wf = SoundingWaveform::from_config(cfg)?;
    let cal = a
        .calibration
        .as_deref()
        .map(CalibrationProfile::load)
        .transpose()?;
    let mut pdp_rows = Vec::new();
    let mut resp_rows = Vec::new();
    let mut zeroed = 0;
    for snap in &capture.snapshots {
        let mut resp = estimate_response(snap, &wf, cfg)?;
        if let Some(cal) = &cal {
            let c = apply_calibration(&resp, cal)?;
            zeroed = zeroed.max(c.zeroed_bins.len());
            resp = c.response;
        }
        let pdp = power_delay_profile(&to_cir(&resp), cfg.sample_period_s).peak_relative();
        pdp_rows.extend(pdp_records(snap.snapshot_index, &pdp));
        if a.response.is_some() {
            resp_rows.extend(response_records(
                snap.snapshot_index,
                &resp,
                cfg.sample_rate_hz(),
            ));
        }
    }
    let mut w = create(&a.out)?;
    write_records(&mut w, a.format.into(), pdp_rows)?;
    w.flush()?;
    if let Some(path) = &a.response {
        let mut w = create(path)?;
        write_records(&mut w, a.format.into(), resp_rows)?;
        w.flush()?;
    }
    if zeroed > 0 {
        eprintln!("warning: {zeroed} occupied bins below the calibration threshold were zeroed");
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let capture = CaptureFile::load(&a.capture)?;
    let cfg = &capture.header.config;
    let wf = SoundingWaveform::from_config(cfg)?;
    let responses = capture
        .snapshots
        .iter()
        .map(|s| estimate_response(s, &wf, cfg))
        .collect::<Result<Vec<_>>>()?;
    if responses.is_empty() {
        return Err(Error::config("back-to-back capture holds no snapshots"));
    }
    let cal = CalibrationProfile::from_responses(&responses, a.threshold)?;
    let weak = cal.weak_bins();
    cal.save(&a.out)?;
    println!(
        "calibration from {} snapshots, {} weak bins",
        responses.len(),
        weak.len()
    );
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let cfg = a.config.load()?;
    let model = ChannelModel::load(&a.channel)?;
    let report = validate_config(&cfg, &model);
    if report.passed() {
        println!("pass\n{report}");
        Ok(())
    } else {
        Err(Error::Validation(report))
    }
}

#[derive(Serialize)]
struct Report<'a> {
    reduction_factor: f64,
    host_data_rate_bytes_per_s: f64,
    raw_data_rate_bytes_per_s: f64,
    skip_samples: usize,
    payload_bytes: usize,
    saturated_samples: u64,
    header: &'a crate::campaign::CaptureHeader,
}

fn report(a: ReportArgs) -> Result<()> {
    let capture = CaptureFile::load(&a.capture)?;
    let cfg = &capture.header.config;
    let r = Report {
        reduction_factor: report_reduction(cfg)?,
        host_data_rate_bytes_per_s: host_data_rate_bytes_per_s(cfg),
        raw_data_rate_bytes_per_s: raw_data_rate_bytes_per_s(cfg),
        skip_samples: cfg.skip_len()?,
        payload_bytes: capture.payload_len(),
        saturated_samples: capture.header.saturated_samples,
        header: &capture.header,
    };
    let text = serde_json::to_string_pretty(&r).expect("report is always serializable");
    match &a.out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}
