//! Error type shared by all simulation modules.

use thiserror::Error;

/// Errors produced by circuit construction, amplitude evaluation, fitting
/// and the experiment simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("photon number mismatch: input carries {input}, output carries {output}")]
    PhotonNumberMismatch { input: u32, output: u32 },

    #[error("matrix is not unitary (max deviation from U\u{2020}U = I is {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("{name} = {value} outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("invalid logical encoding: {0}")]
    InvalidEncoding(String),

    #[error("post-selected probability vanishes for logical input {input}")]
    DegenerateNormalization { input: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("time-tag stream not sorted at event {index}")]
    UnsortedStream { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
