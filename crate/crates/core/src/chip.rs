//! The six-waveguide chip: optical elements, circuit composition and the
//! thermal phase-shifter voltage calibration.
//!
//! A directional coupler of reflectivity `eta` acts on its two modes as
//!
//! ```text
//! | sqrt(eta)        i*sqrt(1-eta) |
//! | i*sqrt(1-eta)    sqrt(eta)     |
//! ```
//!
//! and a phase shifter multiplies its mode by `exp(i*phi)`. A circuit is
//! an ordered element list; the composed unitary applies the first-listed
//! element to the state first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_least_squares, LmOptions};
use crate::fock::ModeUnitary;

/// Waveguide order of the standard chip, top to bottom:
/// auxiliary A, control rails, target rails, auxiliary B.
pub mod modes {
    pub const V_A: usize = 0;
    pub const C0: usize = 1;
    pub const C1: usize = 2;
    pub const T0: usize = 3;
    pub const T1: usize = 4;
    pub const V_B: usize = 5;
}

/// Number of waveguides on the standard chip.
pub const CHIP_MODES: usize = 6;

/// One optical element along the propagation direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Element {
    Coupler { a: usize, b: usize, eta: f64 },
    Phase { mode: usize, phi: f64 },
}

impl Element {
    pub fn coupler(a: usize, b: usize, eta: f64) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidInput(format!(
                "coupler needs two distinct modes, got {a} twice"
            )));
        }
        check_reflectivity(eta)?;
        Ok(Element::Coupler { a, b, eta })
    }

    /// Phase in radians, stored unwrapped.
    pub fn phase(mode: usize, phi: f64) -> Self {
        Element::Phase { mode, phi }
    }

    fn max_mode(&self) -> usize {
        match *self {
            Element::Coupler { a, b, .. } => a.max(b),
            Element::Phase { mode, .. } => mode,
        }
    }
}

fn check_reflectivity(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            domain: "[0, 1]",
        });
    }
    Ok(())
}

/// An ordered list of elements over a fixed number of modes. This is the
/// JSON interchange format the command-line tool reads and writes:
/// `{"modes": n, "elements": [{"type": "coupler", "a": 0, "b": 1,
/// "eta": 0.5}, {"type": "phase", "mode": 2, "phi": 1.5708}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    #[serde(rename = "modes")]
    mode_count: usize,
    elements: Vec<Element>,
}

impl CircuitSpec {
    pub fn new(mode_count: usize, elements: Vec<Element>) -> Result<Self> {
        for e in &elements {
            if e.max_mode() >= mode_count {
                return Err(Error::ModeOutOfRange {
                    index: e.max_mode(),
                    modes: mode_count,
                });
            }
        }
        Ok(Self {
            mode_count,
            elements,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: CircuitSpec = serde_json::from_str(s)
            .map_err(|e| Error::InvalidInput(format!("bad circuit JSON: {e}")))?;
        Self::new(raw.mode_count, raw.elements)
    }
}

/// The 2x2 directional-coupler unitary for reflectivity `eta`.
pub fn coupler_unitary(eta: f64) -> Result<ModeUnitary> {
    check_reflectivity(eta)?;
    let r = Complex64::new(eta.sqrt(), 0.0);
    let t = Complex64::new(0.0, (1.0 - eta).sqrt());
    ModeUnitary::new(DMatrix::from_row_slice(2, 2, &[r, t, t, r]))
}

/// Embed one element into an identity of size `mode_count`.
pub fn embed(element: &Element, mode_count: usize) -> Result<ModeUnitary> {
    if element.max_mode() >= mode_count {
        return Err(Error::ModeOutOfRange {
            index: element.max_mode(),
            modes: mode_count,
        });
    }
    let mut m = DMatrix::<Complex64>::identity(mode_count, mode_count);
    match *element {
        Element::Coupler { a, b, eta } => {
            check_reflectivity(eta)?;
            let r = Complex64::new(eta.sqrt(), 0.0);
            let t = Complex64::new(0.0, (1.0 - eta).sqrt());
            m[(a, a)] = r;
            m[(a, b)] = t;
            m[(b, a)] = t;
            m[(b, b)] = r;
        }
        Element::Phase { mode, phi } => {
            m[(mode, mode)] = Complex64::from_polar(1.0, phi);
        }
    }
    ModeUnitary::new(m)
}

/// Compose a circuit into its mode unitary, first-listed element applied
/// to the state first.
pub fn compose(spec: &CircuitSpec) -> Result<ModeUnitary> {
    let mut m = DMatrix::<Complex64>::identity(spec.mode_count, spec.mode_count);
    for e in &spec.elements {
        let u = embed(e, spec.mode_count)?;
        m = u.matrix() * m;
    }
    ModeUnitary::new(m)
}

/// The five coupler reflectivities of the chip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChipReflectivities {
    eta1: f64,
    eta2: f64,
    eta3: f64,
    eta4: f64,
    eta5: f64,
}

impl ChipReflectivities {
    pub fn new(eta1: f64, eta2: f64, eta3: f64, eta4: f64, eta5: f64) -> Result<Self> {
        for eta in [eta1, eta2, eta3, eta4, eta5] {
            check_reflectivity(eta)?;
        }
        Ok(Self {
            eta1,
            eta2,
            eta3,
            eta4,
            eta5,
        })
    }

    /// Design values: 1/3 for the three entangling couplers, 1/2 for the
    /// two target-rail couplers.
    pub fn design() -> Self {
        Self {
            eta1: 1.0 / 3.0,
            eta2: 0.5,
            eta3: 0.5,
            eta4: 1.0 / 3.0,
            eta5: 1.0 / 3.0,
        }
    }

    /// Values measured on the fabricated device.
    pub fn measured() -> Self {
        Self {
            eta1: 0.324,
            eta2: 0.435,
            eta3: 0.469,
            eta4: 0.317,
            eta5: 0.298,
        }
    }

    /// One-sigma uncertainties of [`ChipReflectivities::measured`], for
    /// reporting only.
    pub const MEASURED_UNCERTAINTIES: [f64; 5] = [0.008, 0.015, 0.009, 0.007, 0.012];

    pub fn eta1(&self) -> f64 {
        self.eta1
    }
    pub fn eta2(&self) -> f64 {
        self.eta2
    }
    pub fn eta3(&self) -> f64 {
        self.eta3
    }
    pub fn eta4(&self) -> f64 {
        self.eta4
    }
    pub fn eta5(&self) -> f64 {
        self.eta5
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.eta1, self.eta2, self.eta3, self.eta4, self.eta5]
    }
}

/// The standard chip circuit at phase-shifter setting `phi` (radians).
///
/// Element order along propagation: the first target-rail coupler
/// (eta2), the phase shifter, the three 1/3-class couplers (central
/// C1-T0, bottom C0-V_A, top T1-V_B), then the second target-rail
/// coupler (eta3).
///
/// The phase shifter sits on rail T1 with positive sign. Together with
/// the output-side target-rail swap of
/// [`LogicalEncoding::standard`](crate::gate::LogicalEncoding::standard)
/// this pairing makes the post-selected logical block equal the tunable
/// controlled gate [`ideal_gate`](crate::gate::ideal_gate) scaled by 1/3
/// (up to a global phase); the choice is pinned by the gate tests.
pub fn standard_chip(r: &ChipReflectivities, phi: f64) -> CircuitSpec {
    use modes::*;
    CircuitSpec::new(
        CHIP_MODES,
        vec![
            Element::Coupler {
                a: T0,
                b: T1,
                eta: r.eta2,
            },
            Element::Phase { mode: T1, phi },
            Element::Coupler {
                a: C1,
                b: T0,
                eta: r.eta1,
            },
            Element::Coupler {
                a: C0,
                b: V_A,
                eta: r.eta5,
            },
            Element::Coupler {
                a: T1,
                b: V_B,
                eta: r.eta4,
            },
            Element::Coupler {
                a: T0,
                b: T1,
                eta: r.eta3,
            },
        ],
    )
    .expect("standard chip indices are in range")
}

/// Quadratic phase-voltage relation of the thermal shifter:
/// `phi(v) = phi0 + alpha * v^2` (heater power goes as v squared).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    /// Phase offset at zero volts, radians.
    pub phi0: f64,
    /// Radians per squared volt.
    pub alpha: f64,
    /// Largest voltage the calibration is valid for.
    pub v_max: f64,
}

/// Evaluate the calibration at a drive voltage.
pub fn phase_from_voltage(c: &PhaseCalibration, v: f64) -> Result<f64> {
    if !(0.0..=c.v_max).contains(&v) {
        return Err(Error::Domain {
            name: "volts",
            value: v,
            domain: "[0, v_max]",
        });
    }
    Ok(c.phi0 + c.alpha * v * v)
}

/// Result of [`fit_calibration`]: the phase-voltage relation plus the
/// fringe parameters and the residual norm of the fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub calibration: PhaseCalibration,
    /// Fringe offset A in `signal = A + B cos(phi0 + alpha v^2)`.
    pub offset: f64,
    /// Fringe amplitude B.
    pub amplitude: f64,
    /// Root of the summed squared residuals.
    pub residual: f64,
}

/// Fit `signal = A + B cos(phi0 + alpha v^2)` to fringe samples of
/// (volts, signal), as recorded when pulsing the phase shifter.
///
/// Needs at least 4 samples spanning a visible fringe. The returned
/// parameters are canonicalized to `B >= 0`, `alpha >= 0` and
/// `phi0` in (-pi, pi].
pub fn fit_calibration(samples: &[(f64, f64)]) -> Result<CalibrationFit> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 calibration samples, got {}",
            samples.len()
        )));
    }
    let v_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if v_max <= 0.0 {
        return Err(Error::Fit("samples span no voltage range".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.1), hi.max(s.1))
        });
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Err(Error::Fit("signal is constant: no fringe to fit".into()));
    }

    // Scan alpha and solve the then-linear model A + C cos(a v^2) +
    // D sin(a v^2) for the best starting point.
    let mut best: Option<(f64, [f64; 3], f64)> = None;
    let tau = std::f64::consts::TAU;
    for k in 1..=96 {
        let alpha = k as f64 / 96.0 * 2.0 * tau / (v_max * v_max);
        if let Some((coeffs, cost)) = linear_fringe_fit(samples, alpha) {
            if best.as_ref().is_none_or(|b| cost < b.2) {
                best = Some((alpha, coeffs, cost));
            }
        }
    }
    let (alpha0, [a0, c0, d0], _) =
        best.ok_or_else(|| Error::Fit("degenerate fringe data".into()))?;
    let b0 = (c0 * c0 + d0 * d0).sqrt();
    let phi0 = (-d0).atan2(c0);

    let fit = fit_least_squares(
        samples.len(),
        |p, out| {
            for (i, &(v, y)) in samples.iter().enumerate() {
                out[i] = p[0] + p[1] * (p[2] + p[3] * v * v).cos() - y;
            }
        },
        &[a0, b0, phi0, alpha0],
        &LmOptions::default(),
    );
    if !fit.converged {
        return Err(Error::Fit(format!(
            "calibration fit did not converge in {} iterations (cost {:.3e})",
            fit.iterations, fit.cost
        )));
    }
    let [a, mut b, mut phi0, mut alpha] = fit.params[..] else {
        unreachable!()
    };
    if b < 0.0 {
        b = -b;
        phi0 += std::f64::consts::PI;
    }
    if alpha < 0.0 {
        alpha = -alpha;
        phi0 = -phi0;
    }
    phi0 = wrap_centered(phi0);
    Ok(CalibrationFit {
        calibration: PhaseCalibration {
            phi0,
            alpha,
            v_max,
        },
        offset: a,
        amplitude: b,
        residual: fit.cost.sqrt(),
    })
}

/// Least squares of y = A + C cos(alpha v^2) + D sin(alpha v^2) at fixed
/// alpha; returns the coefficients and the cost.
fn linear_fringe_fit(samples: &[(f64, f64)], alpha: f64) -> Option<([f64; 3], f64)> {
    let n = samples.len();
    let mut design = DMatrix::<f64>::zeros(n, 3);
    let mut y = nalgebra::DVector::<f64>::zeros(n);
    for (i, &(v, s)) in samples.iter().enumerate() {
        let x = alpha * v * v;
        design[(i, 0)] = 1.0;
        design[(i, 1)] = x.cos();
        design[(i, 2)] = x.sin();
        y[i] = s;
    }
    let normal = design.transpose() * &design;
    let rhs = design.transpose() * &y;
    let sol = normal.lu().solve(&rhs)?;
    let resid = design * &sol - y;
    Some(([sol[0], sol[1], sol[2]], resid.norm_squared()))
}

/// Wrap an angle to (-pi, pi].
fn wrap_centered(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut x = phi % tau;
    if x <= -std::f64::consts::PI {
        x += tau;
    } else if x > std::f64::consts::PI {
        x -= tau;
    }
    x
}
