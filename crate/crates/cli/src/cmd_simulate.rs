//! `fockchip simulate`: generate a raw detector stream for one chip
//! setting and count its coincidences. Prints the coincidence report as
//! JSON; `--output` additionally saves the stream CSV with its JSON
//! sidecar.

use std::path::PathBuf;

use clap::Args;

use fockchip::experiment::{
    count_coincidences, generate_stream, SourceModel, StreamSidecar,
};
use fockchip::gate::LogicalEncoding;
use fockchip::{compose, standard_chip};

use crate::config::RunConfig;
use crate::util::{emit, parse_angle, parse_port, parse_reflectivities, write_file, CliError, CliResult};

#[derive(Args)]
pub struct SimulateArgs {
    /// Phase setting; plain numbers are degrees, `rad` suffix for radians.
    #[arg(long, default_value = "0")]
    phi: String,

    /// Reflectivity set: design, measured, or a JSON file.
    #[arg(long)]
    eta: Option<String>,

    /// Logical input state (00, 01, 10 or 11).
    #[arg(long, value_name = "STATE", conflicts_with = "ports")]
    input: Option<String>,

    /// Injection ports as two waveguide names or indices, e.g. C1,VB.
    #[arg(long, value_name = "A,B")]
    ports: Option<String>,

    /// Live counting time, seconds.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,

    #[arg(long)]
    seed: Option<u64>,

    /// Stream CSV path; a .json sidecar is written next to it.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Coincidence report file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

pub fn run(args: SimulateArgs, config: &RunConfig) -> CliResult<()> {
    let phi = parse_angle(&args.phi)?;
    let reflectivities = parse_reflectivities(&config.eta(args.eta.as_ref()))?;
    let seed = config.seed(args.seed);

    let ports = match (&args.input, &args.ports) {
        (Some(state), None) => {
            let index = match state.as_str() {
                "00" => 0,
                "01" => 1,
                "10" => 2,
                "11" => 3,
                other => {
                    return Err(CliError::Usage(format!(
                        "logical input must be 00/01/10/11, got {other:?}"
                    )))
                }
            };
            LogicalEncoding::standard().input_modes(index)
        }
        (None, Some(list)) => {
            let (a, b) = list
                .split_once(',')
                .ok_or_else(|| CliError::Usage("ports must be two names, e.g. C1,VB".into()))?;
            (parse_port(a)?, parse_port(b)?)
        }
        (None, None) => LogicalEncoding::standard().input_modes(0),
        (Some(_), Some(_)) => unreachable!("clap marks the flags as conflicting"),
    };

    let source = SourceModel::default();
    let u = compose(&standard_chip(&reflectivities, phi))?;
    let stream = generate_stream(&source, &u, ports, seed, args.duration)?;
    let report = count_coincidences(&stream, source.coincidence_window)?;

    if let Some(path) = &args.output {
        write_file(path, &stream.to_csv())?;
        let sidecar = StreamSidecar {
            duration: stream.duration(),
            source,
        };
        let sidecar_path = path.with_extension("json");
        let json = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| CliError::Compute(format!("serialize: {e}")))?;
        write_file(&sidecar_path, &json)?;
    }

    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Compute(format!("serialize: {e}")))?;
    json.push('\n');
    emit(args.report.as_ref(), &json)
}
