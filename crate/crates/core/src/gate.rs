//! Post-selected two-qubit gate extraction and analysis.
//!
//! The logical basis is `|00>, |01>, |10>, |11>` with the first digit the
//! control qubit and the second the target. Gate matrices are indexed
//! `entries[(out, in)]`, matching the amplitude convention of
//! [`transition_amplitude`](crate::fock::transition_amplitude).

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chip::modes;
use crate::error::{Error, Result};
use crate::fock::{transition_amplitude, FockState, ModeUnitary};

/// Dual-rail mode assignment of the two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalEncoding {
    /// Modes carrying control `|0>` and `|1>`.
    pub control_modes: (usize, usize),
    /// Modes carrying target `|0>` and `|1>`.
    pub target_modes: (usize, usize),
    /// Exchange the target-rail labels on the output side. This absorbs
    /// the target-rail permutation of the physical device into the
    /// encoding instead of adding a crossing element.
    pub target_swapped: bool,
}

impl LogicalEncoding {
    pub fn new(
        control_modes: (usize, usize),
        target_modes: (usize, usize),
        target_swapped: bool,
    ) -> Result<Self> {
        let all = [
            control_modes.0,
            control_modes.1,
            target_modes.0,
            target_modes.1,
        ];
        for (i, a) in all.iter().enumerate() {
            for b in all.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::InvalidEncoding(format!(
                        "mode {a} assigned to two rails"
                    )));
                }
            }
        }
        Ok(Self {
            control_modes,
            target_modes,
            target_swapped,
        })
    }

    /// Encoding of the standard chip: control on (C0, C1), target on
    /// (T0, T1), with the output-side rail swap enabled.
    pub fn standard() -> Self {
        Self {
            control_modes: (modes::C0, modes::C1),
            target_modes: (modes::T0, modes::T1),
            target_swapped: true,
        }
    }

    pub fn validate_for(&self, dim: usize) -> Result<()> {
        let all = [
            self.control_modes.0,
            self.control_modes.1,
            self.target_modes.0,
            self.target_modes.1,
        ];
        for &m in &all {
            if m >= dim {
                return Err(Error::InvalidEncoding(format!(
                    "mode {m} out of range for a {dim}-mode unitary"
                )));
            }
        }
        Ok(())
    }

    fn control_mode(&self, bit: usize) -> usize {
        if bit == 0 {
            self.control_modes.0
        } else {
            self.control_modes.1
        }
    }

    fn target_mode(&self, bit: usize, swap: bool) -> usize {
        let bit = if swap { 1 - bit } else { bit };
        if bit == 0 {
            self.target_modes.0
        } else {
            self.target_modes.1
        }
    }

    /// Modes occupied by logical basis state `index` on the input side.
    pub fn input_modes(&self, index: usize) -> (usize, usize) {
        assert!(index < 4);
        (
            self.control_mode(index >> 1),
            self.target_mode(index & 1, false),
        )
    }

    /// Modes read out as logical basis state `index` on the output side.
    pub fn output_modes(&self, index: usize) -> (usize, usize) {
        assert!(index < 4);
        (
            self.control_mode(index >> 1),
            self.target_mode(index & 1, self.target_swapped),
        )
    }

    pub fn input_state(&self, index: usize, dim: usize) -> FockState {
        let (c, t) = self.input_modes(index);
        FockState::with_photons_at(dim, &[c, t])
    }

    pub fn output_state(&self, index: usize, dim: usize) -> FockState {
        let (c, t) = self.output_modes(index);
        FockState::with_photons_at(dim, &[c, t])
    }
}

/// A 4x4 logical-subspace operator with its amplitude scale.
///
/// `entries` holds the raw post-selected amplitudes; `prefactor` is the
/// largest singular value, which for the ideal chip is the 1/3 success
/// amplitude. The entries are reported unscaled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "GateMatrixJson", try_from = "GateMatrixJson")]
pub struct GateMatrix {
    pub entries: Matrix4<Complex64>,
    pub prefactor: f64,
}

/// JSON shape: row-major entries, each complex number as `[re, im]`.
#[derive(Serialize, Deserialize)]
struct GateMatrixJson {
    entries: [[[f64; 2]; 4]; 4],
    prefactor: f64,
}

impl From<GateMatrix> for GateMatrixJson {
    fn from(g: GateMatrix) -> Self {
        let mut entries = [[[0.0; 2]; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                let z = g.entries[(r, c)];
                entries[r][c] = [z.re, z.im];
            }
        }
        GateMatrixJson {
            entries,
            prefactor: g.prefactor,
        }
    }
}

impl TryFrom<GateMatrixJson> for GateMatrix {
    type Error = Error;

    fn try_from(j: GateMatrixJson) -> Result<Self> {
        let entries = Matrix4::from_fn(|r, c| Complex64::new(j.entries[r][c][0], j.entries[r][c][1]));
        if !j.prefactor.is_finite() || j.prefactor < 0.0 {
            return Err(Error::InvalidInput(format!(
                "bad gate prefactor {}",
                j.prefactor
            )));
        }
        Ok(GateMatrix {
            entries,
            prefactor: j.prefactor,
        })
    }
}

impl std::fmt::Display for GateMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..4 {
            write!(f, "  [")?;
            for c in 0..4 {
                if c > 0 {
                    write!(f, ", ")?;
                }
                let z = self.entries[(r, c)];
                write!(f, "{:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl GateMatrix {
    /// Entries divided by the prefactor.
    pub fn normalized(&self) -> Matrix4<Complex64> {
        self.entries / Complex64::new(self.prefactor, 0.0)
    }

    /// Polar-decompose the block: the nearest unitary `W` to the
    /// prefactor-normalized entries, plus the max-entry distance
    /// `|entries/prefactor - W|`. Zero when the block is exactly
    /// proportional to a unitary.
    pub fn closest_unitary(&self) -> (Matrix4<Complex64>, f64) {
        let m = DMatrix::from_fn(4, 4, |r, c| self.entries[(r, c)]);
        let svd = m.svd(true, true);
        let w = svd.u.expect("svd requested u") * svd.v_t.expect("svd requested v_t");
        let w4 = Matrix4::from_fn(|r, c| w[(r, c)]);
        let scaled = self.normalized();
        let dist = (scaled - w4).iter().map(|z| z.norm()).fold(0.0, f64::max);
        (w4, dist)
    }
}

/// The tunable controlled operation the chip is designed to implement,
/// with unit prefactor. At `phi = 0` this is the familiar post-selected
/// CNOT-class gate; at `phi = pi` the control polarity inverts.
pub fn ideal_gate(phi: f64) -> GateMatrix {
    let c = (phi / 2.0).cos();
    let s = (phi / 2.0).sin();
    let i = Complex64::new(0.0, 1.0);
    let z = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let entries = Matrix4::from_rows(&[
        [i * re(c), i * re(s), z, z].into(),
        [-i * re(s), i * re(c), z, z].into(),
        [z, z, re(-s), re(c)].into(),
        [z, z, re(-c), re(-s)].into(),
    ]);
    GateMatrix {
        entries,
        prefactor: 1.0,
    }
}

/// Post-select the logical subspace of a mode unitary: entry `(out, in)`
/// is the two-photon amplitude between the encoded basis states. The
/// prefactor is the largest singular value of the block.
pub fn extract_logical_gate(u: &ModeUnitary, enc: &LogicalEncoding) -> Result<GateMatrix> {
    enc.validate_for(u.dim())?;
    let mut entries = Matrix4::zeros();
    for lin in 0..4 {
        let fin = enc.input_state(lin, u.dim());
        for lout in 0..4 {
            let fout = enc.output_state(lout, u.dim());
            entries[(lout, lin)] = transition_amplitude(u, &fin, &fout)?;
        }
    }
    let m = DMatrix::from_fn(4, 4, |r, c| entries[(r, c)]);
    let prefactor = m
        .singular_values()
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    Ok(GateMatrix { entries, prefactor })
}

/// Probability that a logical input stays in the post-selected subspace:
/// the sum of the four allowed output probabilities.
pub fn success_probability(u: &ModeUnitary, enc: &LogicalEncoding, input: usize) -> Result<f64> {
    assert!(input < 4, "logical input index out of range");
    enc.validate_for(u.dim())?;
    let fin = enc.input_state(input, u.dim());
    let mut total = 0.0;
    for out in 0..4 {
        let fout = enc.output_state(out, u.dim());
        total += transition_amplitude(u, &fin, &fout)?.norm_sqr();
    }
    Ok(total)
}

/// Post-selected conditional probabilities `p[input][output]`, each row
/// normalized to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    rows: [[f64; 4]; 4],
}

impl ProbTable {
    /// Validate entries in [0, 1] and row sums within 1e-9 of 1.
    pub fn new(rows: [[f64; 4]; 4]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            let mut sum = 0.0;
            for &p in row {
                if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                    return Err(Error::Domain {
                        name: "probability",
                        value: p,
                        domain: "[0, 1]",
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        let mut clamped = rows;
        for row in &mut clamped {
            for p in row {
                *p = p.clamp(0.0, 1.0);
            }
        }
        Ok(Self { rows: clamped })
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.rows
    }

    pub fn row(&self, input: usize) -> &[f64; 4] {
        &self.rows[input]
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.rows[input][output]
    }
}

/// Post-selected probability table of a mode unitary: squared logical
/// amplitudes renormalized per input, mirroring coincidence counting
/// restricted to the allowed subspace.
pub fn prob_table(u: &ModeUnitary, enc: &LogicalEncoding) -> Result<ProbTable> {
    let raw = prob_table_raw(u, enc)?;
    let mut rows = [[0.0; 4]; 4];
    for (i, row) in raw.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if sum < 1e-30 {
            return Err(Error::DegenerateNormalization { input: i });
        }
        for (j, &p) in row.iter().enumerate() {
            rows[i][j] = p / sum;
        }
    }
    ProbTable::new(rows)
}

/// Unnormalized post-selected probabilities `|amplitude|^2`; row sums are
/// the per-input success probabilities.
pub fn prob_table_raw(u: &ModeUnitary, enc: &LogicalEncoding) -> Result<[[f64; 4]; 4]> {
    enc.validate_for(u.dim())?;
    let mut rows = [[0.0; 4]; 4];
    for (lin, row) in rows.iter_mut().enumerate() {
        let fin = enc.input_state(lin, u.dim());
        for (lout, p) in row.iter_mut().enumerate() {
            let fout = enc.output_state(lout, u.dim());
            *p = transition_amplitude(u, &fin, &fout)?.norm_sqr();
        }
    }
    Ok(rows)
}

/// Probability table of [`ideal_gate`] at phase `phi`.
pub fn ideal_prob_table(phi: f64) -> ProbTable {
    let g = ideal_gate(phi);
    let mut rows = [[0.0; 4]; 4];
    for (lin, row) in rows.iter_mut().enumerate() {
        for (lout, p) in row.iter_mut().enumerate() {
            *p = g.entries[(lout, lin)].norm_sqr();
        }
    }
    ProbTable::new(rows).expect("ideal gate columns are normalized")
}

/// Classical overlap between two conditional probability tables:
/// `(sum of sqrt(I*M))^2 / 16`. 1 for identical tables, 0 for tables
/// with disjoint support.
pub fn similarity(a: &ProbTable, b: &ProbTable) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += (a.get(i, j) * b.get(i, j)).sqrt();
        }
    }
    acc * acc / 16.0
}

/// Whether `a` equals `exp(i*theta) * b` entrywise within `tol`, with
/// `theta` read off the entry pair of largest product magnitude.
pub fn equal_up_to_global_phase(a: &GateMatrix, b: &GateMatrix, tol: f64) -> bool {
    let mut best = 0.0;
    let mut idx = None;
    for r in 0..4 {
        for c in 0..4 {
            let w = a.entries[(r, c)].norm() * b.entries[(r, c)].norm();
            if w > best {
                best = w;
                idx = Some((r, c));
            }
        }
    }
    let Some(idx) = idx else {
        // one of the matrices is all zeros
        let max_a = a.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let max_b = b.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return max_a <= tol && max_b <= tol;
    };
    let ratio = a.entries[idx] / b.entries[idx];
    let theta = ratio / ratio.norm();
    let mut dev: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            dev = dev.max((a.entries[(r, c)] - theta * b.entries[(r, c)]).norm());
        }
    }
    dev <= tol
}

/// Concurrence of the two-qubit state a gate produces from a normalized
/// input state: 0 for product states, 1 for Bell states. The output is
/// renormalized before evaluating `2 |v00*v11 - v01*v10|`.
pub fn output_concurrence(gate: &GateMatrix, input: &[Complex64; 4]) -> Result<f64> {
    let norm: f64 = input.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Domain {
            name: "input norm",
            value: norm.sqrt(),
            domain: "unit sphere",
        });
    }
    let v = gate.entries * Vector4::from_column_slice(input);
    let n = v.norm();
    if n < 1e-12 {
        return Err(Error::InvalidInput(
            "gate output vanishes for this input".into(),
        ));
    }
    let v = v / Complex64::new(n, 0.0);
    Ok(2.0 * (v[0] * v[3] - v[1] * v[2]).norm())
}

/// `points` evenly spaced phases covering a full turn, starting at zero.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| std::f64::consts::TAU * k as f64 / points as f64)
        .collect()
}
