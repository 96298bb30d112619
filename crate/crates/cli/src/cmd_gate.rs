//! `fockchip gate`: extract the logical gate of the chip at one phase.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use fockchip::chip::PhaseCalibration;
use fockchip::gate::{
    equal_up_to_global_phase, extract_logical_gate, ideal_gate, ideal_prob_table, prob_table,
    similarity, success_probability, GateMatrix, LogicalEncoding,
};
use fockchip::{compose, phase_from_voltage, standard_chip};

use crate::config::RunConfig;
use crate::util::{
    emit, parse_angle_with_display, parse_reflectivities, read_file, CliError, CliResult,
};

#[derive(Args)]
pub struct GateArgs {
    /// Phase setting; plain numbers are degrees, `rad` suffix for radians.
    #[arg(long, value_name = "ANGLE", conflicts_with = "volts")]
    phi: Option<String>,

    /// Drive voltage; requires --calibration.
    #[arg(long, requires = "calibration")]
    volts: Option<f64>,

    /// Phase-voltage calibration JSON, as written by `calibrate`.
    #[arg(long, value_name = "FILE")]
    calibration: Option<PathBuf>,

    /// Reflectivity set: design, measured, or a JSON file.
    #[arg(long)]
    eta: Option<String>,

    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Report format: text or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Serialize)]
struct GateReport {
    phi_radians: f64,
    phi_degrees: f64,
    reflectivities: [f64; 5],
    gate: GateMatrix,
    ideal: GateMatrix,
    prefactor: f64,
    closest_unitary_distance: f64,
    matches_ideal: bool,
    success_probabilities: [f64; 4],
    table_similarity_vs_ideal: f64,
}

pub fn run(args: GateArgs, config: &RunConfig) -> CliResult<()> {
    let (phi_deg, phi) =
        resolve_phase(args.phi.as_deref(), args.volts, args.calibration.as_deref())?;
    let reflectivities = parse_reflectivities(&config.eta(args.eta.as_ref()))?;
    let format = config.format(args.format.as_ref(), "text");

    let u = compose(&standard_chip(&reflectivities, phi))?;
    let enc = LogicalEncoding::standard();
    let gate = extract_logical_gate(&u, &enc)?;
    let ideal = ideal_gate(phi);
    let mut scaled = ideal.clone();
    scaled.entries /= fockchip::Complex64::new(3.0, 0.0);
    let matches_ideal = equal_up_to_global_phase(&gate, &scaled, 1e-9);
    let (_, closest_unitary_distance) = gate.closest_unitary();
    let mut success_probabilities = [0.0; 4];
    for (input, p) in success_probabilities.iter_mut().enumerate() {
        *p = success_probability(&u, &enc, input)?;
    }
    let table_similarity_vs_ideal = similarity(&prob_table(&u, &enc)?, &ideal_prob_table(phi));

    let report = GateReport {
        phi_radians: phi,
        phi_degrees: phi_deg,
        reflectivities: reflectivities.as_array(),
        prefactor: gate.prefactor,
        gate,
        ideal,
        closest_unitary_distance,
        matches_ideal,
        success_probabilities,
        table_similarity_vs_ideal,
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

fn resolve_phase(
    phi: Option<&str>,
    volts: Option<f64>,
    calibration: Option<&std::path::Path>,
) -> CliResult<(f64, f64)> {
    match (phi, volts) {
        (Some(angle), None) => parse_angle_with_display(angle),
        (None, Some(v)) => {
            let path = calibration.expect("clap enforces --calibration with --volts");
            let text = read_file(path)?;
            let cal: PhaseCalibration = serde_json::from_str(&text)
                .or_else(|_| {
                    serde_json::from_str::<fockchip::CalibrationFit>(&text).map(|f| f.calibration)
                })
                .map_err(|e| CliError::Io(format!("bad calibration {}: {e}", path.display())))?;
            let rad = phase_from_voltage(&cal, v)?.rem_euclid(std::f64::consts::TAU);
            Ok((rad.to_degrees(), rad))
        }
        (None, None) => Err(CliError::Usage("need --phi or --volts".into())),
        (Some(_), Some(_)) => unreachable!("clap marks the flags as conflicting"),
    }
}

fn render_text(r: &GateReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "phase: {} deg ({} rad)", r.phi_degrees, r.phi_radians);
    let _ = writeln!(out, "reflectivities: {:?}", r.reflectivities);
    let _ = writeln!(out, "extracted gate (rows = outputs, columns = inputs):");
    let _ = write!(out, "{}", r.gate);
    let _ = writeln!(out, "prefactor (largest singular value): {}", r.prefactor);
    let _ = writeln!(
        out,
        "closest-unitary distance: {:.3e}",
        r.closest_unitary_distance
    );
    let _ = writeln!(out, "ideal gate at this phase:");
    let _ = write!(out, "{}", r.ideal);
    let _ = writeln!(
        out,
        "matches ideal/3 up to global phase (tol 1e-9): {}",
        r.matches_ideal
    );
    let _ = writeln!(
        out,
        "success probabilities per input: {:?}",
        r.success_probabilities
    );
    let _ = writeln!(
        out,
        "post-selected table similarity vs ideal: {}",
        r.table_similarity_vs_ideal
    );
    out
}
