//! Shared CLI plumbing: error-to-exit-code mapping, angle parsing,
//! reflectivity selection and output routing.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use fockchip::chip::modes;
use fockchip::{ChipReflectivities, Error as CoreError};

/// CLI failure classes; usage and I/O problems exit with 2, computation
/// failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Write to the given path, or to stdout when no path is set.
pub fn emit(output: Option<&PathBuf>, contents: &str) -> CliResult<()> {
    match output {
        Some(path) => write_file(path, contents),
        None => {
            std::io::stdout()
                .write_all(contents.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}

/// Parse an angle with an optional `deg`/`rad` suffix; bare numbers are
/// degrees. The result is wrapped to one turn, in radians. Degrees wrap
/// before conversion so that 361deg and 1deg are bit-identical.
pub fn parse_angle(s: &str) -> CliResult<f64> {
    parse_angle_with_display(s).map(|(_, rad)| rad)
}

/// Like [`parse_angle`] but also returns the wrapped value in degrees
/// for display, computed without a radians round trip so that degree
/// inputs print exactly.
pub fn parse_angle_with_display(s: &str) -> CliResult<(f64, f64)> {
    let s = s.trim();
    let (number, radians) = if let Some(v) = s.strip_suffix("rad") {
        (v, true)
    } else if let Some(v) = s.strip_suffix("deg") {
        (v, false)
    } else {
        (s, false)
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse angle {s:?}")))?;
    if !value.is_finite() {
        return Err(CliError::Usage(format!("angle {s:?} is not finite")));
    }
    Ok(if radians {
        let r = value.rem_euclid(std::f64::consts::TAU);
        (r.to_degrees(), r)
    } else {
        let d = value.rem_euclid(360.0);
        (d, d.to_radians())
    })
}

/// Probability formatting for CSV cells: 12 decimal places with the
/// trailing zeros trimmed, so exact values stay short and numerical
/// dust prints as 0. Idempotent under parse and re-emit.
pub fn fmt_prob(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Resolve `--eta`: a named set or a JSON file with the five values.
pub fn parse_reflectivities(spec: &str) -> CliResult<ChipReflectivities> {
    match spec {
        "design" => Ok(ChipReflectivities::design()),
        "measured" => Ok(ChipReflectivities::measured()),
        path => {
            let text = read_file(Path::new(path))?;
            let raw: ChipReflectivities = serde_json::from_str(&text)
                .map_err(|e| CliError::Io(format!("bad reflectivity JSON in {path}: {e}")))?;
            let [e1, e2, e3, e4, e5] = raw.as_array();
            ChipReflectivities::new(e1, e2, e3, e4, e5).map_err(CliError::from)
        }
    }
}

/// Parse a waveguide name (V_A, C0, C1, T0, T1, V_B) or a mode index.
pub fn parse_port(s: &str) -> CliResult<usize> {
    let normalized = s.trim().to_ascii_uppercase().replace('_', "");
    Ok(match normalized.as_str() {
        "VA" => modes::V_A,
        "C0" => modes::C0,
        "C1" => modes::C1,
        "T0" => modes::T0,
        "T1" => modes::T1,
        "VB" => modes::V_B,
        other => other
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown port {s:?}")))?,
    })
}

/// Logical basis labels in table order.
pub const INPUT_LABELS: [&str; 4] = ["00", "01", "10", "11"];
