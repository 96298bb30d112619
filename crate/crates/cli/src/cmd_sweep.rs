//! `fockchip sweep`: per-phase probability tables over a grid, as
//! plot-ready CSV (`phi_deg,input,p00,p01,p10,p11,source`) or JSON.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use fockchip::experiment::{run_phase_sweep_experiment, SourceModel};
use fockchip::gate::{ideal_prob_table, prob_table, similarity, LogicalEncoding, ProbTable};
use fockchip::{compose, standard_chip};

use crate::config::RunConfig;
use crate::util::{
    emit, fmt_prob, parse_angle_with_display, parse_reflectivities, CliError, CliResult,
    INPUT_LABELS,
};

#[derive(Args)]
pub struct SweepArgs {
    /// Number of evenly spaced phases over a full turn.
    #[arg(long, conflicts_with = "phis")]
    points: Option<usize>,

    /// Explicit comma-separated phase list (degrees by default).
    #[arg(long, value_name = "LIST")]
    phis: Option<String>,

    /// Reflectivity set: design, measured, or a JSON file.
    #[arg(long)]
    eta: Option<String>,

    /// Also run the seeded Monte-Carlo experiment per phase.
    #[arg(long)]
    mc: bool,

    /// Expected pairs per Monte-Carlo point.
    #[arg(long)]
    pairs: Option<u64>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Serialize)]
struct SweepPointReport {
    phi_deg: f64,
    theory: ProbTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<ProbTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo_counts: Option<[[u64; 4]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    similarity_mc_vs_theory: Option<f64>,
}

#[derive(Serialize)]
struct SweepReport {
    reflectivities: [f64; 5],
    pairs_per_point: Option<u64>,
    seed: Option<u64>,
    points: Vec<SweepPointReport>,
}

pub fn run(args: SweepArgs, config: &RunConfig) -> CliResult<()> {
    let grid = phase_list(&args, config)?;
    if grid.is_empty() {
        return Err(CliError::Usage("empty phase grid".into()));
    }
    let reflectivities = parse_reflectivities(&config.eta(args.eta.as_ref()))?;
    let format = config.format(args.format.as_ref(), "csv");
    let seed = config.seed(args.seed);
    let pairs = config.pairs(args.pairs);
    let enc = LogicalEncoding::standard();

    let mut points = Vec::with_capacity(grid.len());
    let mc_points = if args.mc {
        let src = SourceModel::default();
        let radians: Vec<f64> = grid.iter().map(|&(_, rad)| rad).collect();
        Some(run_phase_sweep_experiment(
            &src,
            &reflectivities,
            &radians,
            pairs,
            seed,
            false,
        )?)
    } else {
        None
    };

    for (k, &(deg, rad)) in grid.iter().enumerate() {
        let theory = prob_table(&compose(&standard_chip(&reflectivities, rad))?, &enc)?;
        let (monte_carlo, monte_carlo_counts, sim) = match &mc_points {
            Some(mc) => {
                let p = &mc[k];
                (
                    Some(p.table),
                    Some(p.counts),
                    Some(similarity(&p.table, &theory)),
                )
            }
            None => (None, None, None),
        };
        points.push(SweepPointReport {
            phi_deg: deg,
            theory,
            monte_carlo,
            monte_carlo_counts,
            similarity_mc_vs_theory: sim,
        });
    }

    let text = match format.as_str() {
        "csv" => render_csv(&points),
        "json" => {
            let report = SweepReport {
                reflectivities: reflectivities.as_array(),
                pairs_per_point: args.mc.then_some(pairs),
                seed: args.mc.then_some(seed),
                points,
            };
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Compute(format!("serialize: {e}")))?;
            s.push('\n');
            s
        }
        other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
    };
    emit(args.output.as_ref(), &text)?;

    // per-phase agreement summary, kept off the data stream
    if let Some(mc) = &mc_points {
        let mean = mc
            .iter()
            .map(|p| similarity(&p.table, &ideal_prob_table(p.phi)))
            .sum::<f64>()
            / mc.len() as f64;
        eprintln!("mean Monte-Carlo similarity vs ideal: {mean:.6}");
    }
    Ok(())
}

/// The (display degrees, radians) pairs of the sweep grid. Degrees come
/// first so default grids print exact values like 22.5.
fn phase_list(args: &SweepArgs, config: &RunConfig) -> CliResult<Vec<(f64, f64)>> {
    if let Some(list) = &args.phis {
        let mut out = Vec::new();
        for part in list.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            out.push(parse_angle_with_display(part)?);
        }
        return Ok(out);
    }
    let n = config.points(args.points);
    if n == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    Ok((0..n)
        .map(|k| {
            let deg = 360.0 * k as f64 / n as f64;
            (deg, deg.to_radians())
        })
        .collect())
}

fn render_csv(points: &[SweepPointReport]) -> String {
    let mut out = String::from("phi_deg,input,p00,p01,p10,p11,source\n");
    for p in points {
        for (input, label) in INPUT_LABELS.iter().enumerate() {
            let row = p.theory.row(input);
            let _ = writeln!(
                out,
                "{},{label},{},{},{},{},theory",
                p.phi_deg,
                fmt_prob(row[0]),
                fmt_prob(row[1]),
                fmt_prob(row[2]),
                fmt_prob(row[3])
            );
        }
        if let Some(mc) = &p.monte_carlo {
            for (input, label) in INPUT_LABELS.iter().enumerate() {
                let row = mc.row(input);
                let _ = writeln!(
                    out,
                    "{},{label},{},{},{},{},mc",
                    p.phi_deg,
                    fmt_prob(row[0]),
                    fmt_prob(row[1]),
                    fmt_prob(row[2]),
                    fmt_prob(row[3])
                );
            }
        }
    }
    out
}
