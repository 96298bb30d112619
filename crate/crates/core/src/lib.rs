//! End-to-end simulation of a six-waveguide reconfigurable two-qubit
//! photonic chip.
//!
//! The chip encodes two dual-rail qubits across four of its waveguides
//! and implements a phase-tunable controlled operation, post-selected on
//! detecting one photon per qubit. This crate covers the whole stack:
//!
//! - [`fock`]: occupation-number states and two-photon transition
//!   amplitudes via matrix permanents;
//! - [`chip`]: couplers, phase shifters, circuit composition and the
//!   thermal phase-voltage calibration;
//! - [`gate`]: logical-subspace extraction, the ideal tunable gate,
//!   probability tables, similarity and entanglement measures;
//! - [`hom`]: two-photon dip visibility, partial distinguishability,
//!   dip synthesis and fitting;
//! - [`experiment`]: seeded Monte-Carlo counting runs with lossy
//!   detection, time tagging and software coincidence counting.
//!
//! Everything is a pure function of its inputs; simulation runs are
//! reproducible from their seed and safe to evaluate concurrently.

pub mod chip;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod gate;
pub mod hom;

mod fit;

pub use chip::{
    compose, coupler_unitary, embed, fit_calibration, phase_from_voltage, standard_chip,
    CalibrationFit, ChipReflectivities, CircuitSpec, Element, PhaseCalibration, CHIP_MODES,
};
pub use error::{Error, Result};
pub use experiment::{
    count_coincidences, estimate_rates, generate_stream, run_phase_sweep_experiment,
    CoincidenceReport, DutyCycle, RatesReport, SourceModel, StreamSidecar, SweepPoint,
    TimeTagEvent, TimeTagStream,
};
pub use fock::{
    enumerate_fock_states, output_distribution, permanent, transition_amplitude, Amplitude,
    FockState, ModeUnitary, OutputDistribution,
};
pub use gate::{
    equal_up_to_global_phase, extract_logical_gate, ideal_gate, ideal_prob_table, output_concurrence,
    phase_grid, prob_table, prob_table_raw, similarity, success_probability, GateMatrix,
    LogicalEncoding, ProbTable,
};
pub use hom::{
    coincidence_probability, dip_curve, fit_dip, overlap, visibility, DipFit, DipShape,
    WavepacketModel,
};

pub use num_complex::Complex64;
