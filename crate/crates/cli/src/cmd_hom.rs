//! `fockchip hom`: two-photon dip scans. Synthesizes the expected scan
//! for a bare coupler or for the through-chip injection path, optionally
//! adds Poisson counting noise, fits the dip, and reports the fit. Scans
//! interchange as `delay_m,rate_cps` CSV.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use fockchip::hom::{
    delay_from_path, dip_curve, fit_dip, visibility, DipFit, DipShape, WavepacketModel,
    SPEED_OF_LIGHT,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::RunConfig;
use crate::util::{emit, parse_reflectivities, read_file, write_file, CliError, CliResult};

#[derive(Args)]
pub struct HomArgs {
    /// Reflectivity of the bare coupler under test.
    #[arg(long, conflicts_with_all = ["chip_path", "input"])]
    eta: Option<f64>,

    /// Scan the nominally balanced coupler through the chip, photons
    /// injected at C1 and V_B; the baseline picks up the transmission of
    /// the two 1/3-class couplers on the way in.
    #[arg(long, conflicts_with = "input")]
    chip_path: bool,

    /// Reflectivity set used with --chip-path.
    #[arg(long, value_name = "SET")]
    eta_set: Option<String>,

    /// Fit an existing scan CSV instead of synthesizing one.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Source wavepacket overlap at zero delay (folds source
    /// imperfections into the dip depth).
    #[arg(long, default_value_t = 1.0)]
    source_overlap: f64,

    /// Bare-coupler asymptotic coincidence rate, counts/s.
    #[arg(long, default_value_t = 1000.0)]
    baseline: f64,

    /// Samples across the scan.
    #[arg(long, default_value_t = 81)]
    points: usize,

    /// Half-span of the scan in mm of path delay; defaults to five dip
    /// widths.
    #[arg(long, value_name = "MM")]
    span_mm: Option<f64>,

    /// Dip profile: gaussian, rect or gaussian-rect.
    #[arg(long, default_value = "gaussian")]
    shape: String,

    /// Add Poisson counting noise to the synthesized scan.
    #[arg(long)]
    mc: bool,

    /// Counting time per scan point for --mc, seconds.
    #[arg(long, default_value_t = 10.0)]
    bin_seconds: f64,

    #[arg(long)]
    seed: Option<u64>,

    /// Write the scan CSV here.
    #[arg(long, value_name = "FILE")]
    scan_output: Option<PathBuf>,

    /// Fit-report file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Report format: text or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Serialize)]
struct HomReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    chip_path: bool,
    baseline_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    source_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_visibility: Option<f64>,
    shape: DipShape,
    samples: usize,
    fit: DipFit,
}

pub fn run(args: HomArgs, config: &RunConfig) -> CliResult<()> {
    let shape = parse_shape(&args.shape)?;
    let format = config.format(args.format.as_ref(), "text");

    let (samples, meta) = match &args.input {
        Some(path) => (parse_scan(&read_file(path)?)?, None),
        None => synthesize(&args, config, shape)?,
    };

    if let Some(path) = &args.scan_output {
        write_file(path, &render_scan(&samples))?;
    }

    let fit = fit_dip(&samples, shape)?;
    let report = HomReport {
        eta: meta.as_ref().map(|m| m.eta),
        chip_path: args.chip_path,
        baseline_scale: meta.as_ref().map_or(1.0, |m| m.baseline_scale),
        source_overlap: meta.as_ref().map(|m| m.source_overlap),
        expected_visibility: meta.as_ref().map(|m| m.expected_visibility),
        shape,
        samples: samples.len(),
        fit,
    };

    let text = match format.as_str() {
        "json" => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Compute(format!("serialize: {e}")))?;
            s.push('\n');
            s
        }
        "text" => render_text(&report),
        other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
    };
    emit(args.output.as_ref(), &text)
}

struct ScanMeta {
    eta: f64,
    baseline_scale: f64,
    source_overlap: f64,
    expected_visibility: f64,
}

type Samples = Vec<(f64, f64)>;

fn synthesize(
    args: &HomArgs,
    config: &RunConfig,
    shape: DipShape,
) -> CliResult<(Samples, Option<ScanMeta>)> {
    let (eta, baseline_scale) = if args.chip_path {
        let set = parse_reflectivities(&config.eta(args.eta_set.as_ref()))?;
        (set.eta3(), (1.0 - set.eta1()) * (1.0 - set.eta4()))
    } else {
        match args.eta {
            Some(eta) => (eta, 1.0),
            None => return Err(CliError::Usage("need --eta, --chip-path or --input".into())),
        }
    };
    if args.points < 6 {
        return Err(CliError::Usage("need at least 6 scan points".into()));
    }

    let model = WavepacketModel {
        shape,
        ..WavepacketModel::default()
    };
    let half_span = match args.span_mm {
        Some(mm) => delay_from_path(mm * 1e-3),
        None => 5.0 * model.profile_width(),
    };
    let n = args.points;
    let delays: Vec<f64> = (0..n)
        .map(|i| -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64)
        .collect();
    let rates = dip_curve(
        eta,
        &model,
        args.source_overlap,
        args.baseline * baseline_scale,
        &delays,
    )?;

    let mut samples: Samples = delays.into_iter().zip(rates).collect();
    if args.mc {
        if args.bin_seconds <= 0.0 {
            return Err(CliError::Usage("--bin-seconds must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed(args.seed));
        for (_, rate) in &mut samples {
            let mean = *rate * args.bin_seconds;
            *rate = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| CliError::Compute(format!("poisson: {e}")))?
                    .sample(&mut rng)
                    / args.bin_seconds
            } else {
                0.0
            };
        }
    }

    let expected_visibility = args.source_overlap * visibility(eta)?;
    Ok((
        samples,
        Some(ScanMeta {
            eta,
            baseline_scale,
            source_overlap: args.source_overlap,
            expected_visibility,
        }),
    ))
}

fn parse_shape(s: &str) -> CliResult<DipShape> {
    match s {
        "gaussian" => Ok(DipShape::Gaussian),
        "rect" => Ok(DipShape::Rect),
        "gaussian-rect" => Ok(DipShape::GaussianTimesRect),
        other => Err(CliError::Usage(format!("unknown dip shape {other:?}"))),
    }
}

fn render_scan(samples: &Samples) -> String {
    let mut out = String::from("delay_m,rate_cps\n");
    for &(tau, rate) in samples {
        let _ = writeln!(out, "{},{}", tau * SPEED_OF_LIGHT, rate);
    }
    out
}

fn parse_scan(csv: &str) -> CliResult<Samples> {
    let mut lines = csv.lines();
    match lines.next() {
        Some("delay_m,rate_cps") => {}
        other => return Err(CliError::Io(format!("bad scan header: {other:?}"))),
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (d, r) = line
            .split_once(',')
            .ok_or_else(|| CliError::Io(format!("scan line {} is not delay,rate", i + 2)))?;
        let delay_m: f64 = d
            .parse()
            .map_err(|_| CliError::Io(format!("bad delay {d:?}")))?;
        let rate: f64 = r
            .parse()
            .map_err(|_| CliError::Io(format!("bad rate {r:?}")))?;
        samples.push((delay_from_path(delay_m), rate));
    }
    Ok(samples)
}

fn render_text(r: &HomReport) -> String {
    let mut out = String::new();
    if let Some(eta) = r.eta {
        let _ = writeln!(out, "coupler reflectivity: {eta}");
    }
    let _ = writeln!(out, "chip path: {}", r.chip_path);
    let _ = writeln!(out, "baseline scale: {}", r.baseline_scale);
    if let Some(v0) = r.source_overlap {
        let _ = writeln!(out, "source overlap: {v0}");
    }
    if let Some(v) = r.expected_visibility {
        let _ = writeln!(out, "expected visibility: {v:.6}");
    }
    let _ = writeln!(out, "scan points: {}", r.samples);
    let _ = writeln!(out, "fitted visibility: {:.6}", r.fit.visibility);
    let _ = writeln!(out, "fitted width: {:.6e} s", r.fit.width);
    let _ = writeln!(out, "fitted center: {:.6e} s", r.fit.center);
    let _ = writeln!(out, "fitted baseline: {:.3} counts/s", r.fit.baseline_rate);
    let _ = writeln!(out, "residual norm: {:.6e}", r.fit.residual);
    let _ = writeln!(out, "width uncertain: {}", r.fit.width_uncertain);
    out
}
