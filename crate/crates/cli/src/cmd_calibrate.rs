//! `fockchip calibrate`: fit the quadratic phase-voltage relation from a
//! `volts,signal` fringe scan and write the calibration JSON that
//! `gate --volts` consumes.

use std::path::PathBuf;

use clap::Args;

use fockchip::fit_calibration;

use crate::config::RunConfig;
use crate::util::{emit, read_file, CliError, CliResult};

#[derive(Args)]
pub struct CalibrateArgs {
    /// Fringe samples as CSV `volts,signal` (header optional).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,

    /// Calibration JSON output; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn run(args: CalibrateArgs, _config: &RunConfig) -> CliResult<()> {
    let text = read_file(&args.input)?;
    let samples = parse_samples(&text)?;
    let fit = fit_calibration(&samples)?;
    let mut json = serde_json::to_string_pretty(&fit)
        .map_err(|e| CliError::Compute(format!("serialize: {e}")))?;
    json.push('\n');
    emit(args.output.as_ref(), &json)
}

fn parse_samples(text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "volts,signal") {
            continue;
        }
        let (v, s) = line
            .split_once(',')
            .ok_or_else(|| CliError::Io(format!("line {} is not volts,signal", i + 1)))?;
        let volts: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Io(format!("bad voltage {v:?} on line {}", i + 1)))?;
        let signal: f64 = s
            .trim()
            .parse()
            .map_err(|_| CliError::Io(format!("bad signal {s:?} on line {}", i + 1)))?;
        samples.push((volts, signal));
    }
    Ok(samples)
}
