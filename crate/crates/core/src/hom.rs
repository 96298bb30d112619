//! Hong-Ou-Mandel interference: the dip visibility law, the
//! partial-distinguishability coincidence model, dip-curve synthesis from
//! the bandpass-filter wavepacket model, and dip fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_least_squares, LmOptions};

/// Speed of light in vacuum, m/s; converts path delay to time delay.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Time delay for a relative path-length change in meters.
pub fn delay_from_path(meters: f64) -> f64 {
    meters / SPEED_OF_LIGHT
}

/// Spectral shape assumed for the filtered photon wavepackets, i.e. for
/// the dip profile as a function of delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipShape {
    Gaussian,
    Rect,
    /// Gaussian multiplied by the squared sinc of the rectangular
    /// filter; the profile used to fit measured dips.
    GaussianTimesRect,
}

/// Photon wavepacket model set by the interference filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavepacketModel {
    /// Center wavelength, meters.
    pub center_wavelength: f64,
    /// Filter intensity FWHM, meters of wavelength.
    pub filter_fwhm: f64,
    pub shape: DipShape,
}

impl Default for WavepacketModel {
    /// The 810 nm downconversion photons behind 2 nm bandpass filters.
    fn default() -> Self {
        Self {
            center_wavelength: 810e-9,
            filter_fwhm: 2e-9,
            shape: DipShape::Gaussian,
        }
    }
}

impl WavepacketModel {
    pub fn new(center_wavelength: f64, filter_fwhm: f64, shape: DipShape) -> Result<Self> {
        if filter_fwhm <= 0.0 {
            return Err(Error::Domain {
                name: "filter_fwhm",
                value: filter_fwhm,
                domain: "(0, inf)",
            });
        }
        if center_wavelength <= 0.0 {
            return Err(Error::Domain {
                name: "center_wavelength",
                value: center_wavelength,
                domain: "(0, inf)",
            });
        }
        Ok(Self {
            center_wavelength,
            filter_fwhm,
            shape,
        })
    }

    /// Filter bandwidth in frequency: `c * dlambda / lambda^2`.
    pub fn bandwidth_hz(&self) -> f64 {
        SPEED_OF_LIGHT * self.filter_fwhm / (self.center_wavelength * self.center_wavelength)
    }

    /// Coherence time `1 / bandwidth = lambda^2 / (c * dlambda)`.
    pub fn coherence_time(&self) -> f64 {
        1.0 / self.bandwidth_hz()
    }

    /// Coherence length in path delay, `lambda^2 / dlambda`; sets the
    /// dip width.
    pub fn coherence_length(&self) -> f64 {
        self.center_wavelength * self.center_wavelength / self.filter_fwhm
    }

    /// Characteristic time of the unit-width dip profile: the Gaussian
    /// sigma for the Gaussian shapes (the Fourier transform of a
    /// frequency Gaussian of FWHM `bandwidth_hz`), or `1/(pi*bandwidth)`
    /// for the rectangular filter.
    pub fn profile_width(&self) -> f64 {
        match self.shape {
            DipShape::Gaussian | DipShape::GaussianTimesRect => {
                (2f64.ln()).sqrt() / (std::f64::consts::PI * self.bandwidth_hz())
            }
            DipShape::Rect => 1.0 / (std::f64::consts::PI * self.bandwidth_hz()),
        }
    }
}

/// Unit-width dip profile as a function of the scaled delay.
fn profile(shape: DipShape, u: f64) -> f64 {
    match shape {
        DipShape::Gaussian => (-0.5 * u * u).exp(),
        DipShape::Rect => sinc(u).powi(2),
        // the sinc rate relative to the Gaussian sigma is fixed by the
        // common filter bandwidth: pi * bandwidth * sigma = sqrt(ln 2)
        DipShape::GaussianTimesRect => {
            (-0.5 * u * u).exp() * sinc((2f64.ln()).sqrt() * u).powi(2)
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Squared overlap of the two photon wavepackets at relative delay
/// `tau` seconds: 1 at zero delay, falling to 0 far outside the
/// coherence time.
pub fn overlap(model: &WavepacketModel, tau: f64) -> f64 {
    profile(model.shape, tau / model.profile_width())
}

/// Dip visibility of a coupler of reflectivity `eta`:
/// `1 - (2 eta - 1)^2 / (eta^2 + (eta - 1)^2)`.
///
/// Exactly 1 at `eta = 1/2`; degenerate at 0 and 1 where the coupler
/// does not split.
pub fn visibility(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            domain: "[0, 1]",
        });
    }
    if eta == 0.0 || eta == 1.0 {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            domain: "(0, 1): a non-splitting coupler has no dip",
        });
    }
    let d = 2.0 * eta - 1.0;
    Ok(1.0 - d * d / (eta * eta + (eta - 1.0) * (eta - 1.0)))
}

/// Coincidence probability after a coupler of reflectivity `eta` for
/// photons of mode overlap `x`:
/// `(1 - x^2)(eta^2 + (1-eta)^2) + x^2 (2 eta - 1)^2`.
///
/// `x = 1` gives the indistinguishable rate, `x = 0` the distinguishable
/// baseline; `1 - P(1)/P(0)` recovers [`visibility`].
pub fn coincidence_probability(eta: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            domain: "[0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            name: "overlap",
            value: x,
            domain: "[0, 1]",
        });
    }
    let x2 = x * x;
    let d = 2.0 * eta - 1.0;
    Ok((1.0 - x2) * (eta * eta + (1.0 - eta) * (1.0 - eta)) + x2 * d * d)
}

/// Expected coincidence rates over a delay scan:
/// `rate(tau) = R0 * P(eta, sqrt(V0 * overlap(tau))) / P(eta, 0)`.
///
/// Far from the dip the rate is the baseline `R0`; at zero delay it is
/// `R0 * (1 - V0 * visibility(eta))`. `V0` folds source imperfections
/// (spectral or polarization mismatch) into one scale.
pub fn dip_curve(
    eta: f64,
    model: &WavepacketModel,
    visibility_scale: f64,
    baseline_rate: f64,
    delays: &[f64],
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&visibility_scale) {
        return Err(Error::Domain {
            name: "visibility_scale",
            value: visibility_scale,
            domain: "[0, 1]",
        });
    }
    if baseline_rate <= 0.0 {
        return Err(Error::Domain {
            name: "baseline_rate",
            value: baseline_rate,
            domain: "(0, inf)",
        });
    }
    let p0 = coincidence_probability(eta, 0.0)?;
    delays
        .iter()
        .map(|&tau| {
            let x = (visibility_scale * overlap(model, tau)).sqrt();
            Ok(baseline_rate * coincidence_probability(eta, x)? / p0)
        })
        .collect()
}

/// Parameters recovered by [`fit_dip`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DipFit {
    /// Fractional dip depth relative to the baseline, in [0, 1].
    pub visibility: f64,
    /// Profile width parameter, seconds.
    pub width: f64,
    /// Delay of the dip minimum, seconds.
    pub center: f64,
    /// Asymptotic coincidence rate, counts/s.
    pub baseline_rate: f64,
    /// Root of the summed squared residuals.
    pub residual: f64,
    /// Set when the data does not constrain the width (flat scans).
    pub width_uncertain: bool,
}

/// Least-squares fit of `rate(tau) = R0 (1 - V * S((tau - c)/w))` to a
/// measured scan of (delay seconds, rate counts/s), where `S` is the
/// chosen unit-width dip profile.
pub fn fit_dip(samples: &[(f64, f64)], shape: DipShape) -> Result<DipFit> {
    if samples.len() < 6 {
        return Err(Error::Fit(format!(
            "need at least 6 dip samples, got {}",
            samples.len()
        )));
    }

    let (r0_init, v_init, center_init, width_init) = dip_initial_guess(samples);
    // delays live at picosecond scale while rates are O(1000); fit in
    // units of the initial width so all parameters are O(1)
    let scaled: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(tau, r)| ((tau - center_init) / width_init, r))
        .collect();
    let fit = fit_least_squares(
        scaled.len(),
        |p, out| {
            let [r0, v, w, c] = p[..] else { unreachable!() };
            for (i, &(x, y)) in scaled.iter().enumerate() {
                out[i] = r0 * (1.0 - v * profile(shape, (x - c) / w)) - y;
            }
        },
        &[r0_init, v_init, 1.0, 0.0],
        &LmOptions::default(),
    );
    if !fit.converged {
        return Err(Error::Fit(format!(
            "dip fit did not converge in {} iterations (cost {:.3e})",
            fit.iterations, fit.cost
        )));
    }

    let [r0, v, w, c] = fit.params[..] else {
        unreachable!()
    };
    // the profile is even in its argument, so the width sign is free
    let width = w.abs() * width_init;
    let center = center_init + c * width_init;
    let width_uncertain = match &fit.covariance {
        Some(cov) => cov[2 * 4 + 2].sqrt() > 0.5 * w.abs(),
        None => true,
    };
    Ok(DipFit {
        visibility: v.clamp(0.0, 1.0),
        width,
        center,
        baseline_rate: r0,
        residual: fit.cost.sqrt(),
        width_uncertain,
    })
}

fn dip_initial_guess(samples: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let mut rates: Vec<f64> = samples.iter().map(|s| s.1).collect();
    rates.sort_by(|a, b| a.total_cmp(b));
    let top_half = &rates[rates.len() / 2..];
    let r0 = top_half.iter().sum::<f64>() / top_half.len() as f64;

    let (center, min_rate) = samples
        .iter()
        .fold((0.0, f64::INFINITY), |(c, m), &(tau, r)| {
            if r < m {
                (tau, r)
            } else {
                (c, m)
            }
        });
    let depth = (r0 - min_rate).max(0.0);
    let v = if r0 > 0.0 {
        (depth / r0).clamp(0.0, 1.0)
    } else {
        0.0
    };

    // second moment of the rate deficit approximates the squared width
    let mut wsum = 0.0;
    let mut msum = 0.0;
    for &(tau, r) in samples {
        let def = (r0 - r).max(0.0);
        wsum += def;
        msum += def * (tau - center) * (tau - center);
    }
    let span = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max)
        - samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let width = if wsum > 0.0 && msum > 0.0 {
        (msum / wsum).sqrt()
    } else {
        (span / 4.0).max(1e-15)
    };
    (r0, v, center, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn visibility_reference_points() {
        assert_eq!(visibility(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(visibility(0.298).unwrap(), 0.719, epsilon = 5e-4);
        assert_abs_diff_eq!(visibility(0.469).unwrap(), 0.992, epsilon = 5e-4);
    }

    #[test]
    fn visibility_domain() {
        assert!(visibility(0.0).is_err());
        assert!(visibility(1.0).is_err());
        assert!(visibility(-0.2).is_err());
        assert!(visibility(1.2).is_err());
    }

    #[test]
    fn coincidence_probability_limits() {
        assert_abs_diff_eq!(coincidence_probability(0.5, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(coincidence_probability(0.5, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(coincidence_probability(0.5, 1.5).is_err());
        assert!(coincidence_probability(-0.5, 0.5).is_err());
    }

    #[test]
    fn coincidence_model_reproduces_visibility() {
        for k in 1..100 {
            let eta = k as f64 / 100.0;
            let p1 = coincidence_probability(eta, 1.0).unwrap();
            let p0 = coincidence_probability(eta, 0.0).unwrap();
            assert_abs_diff_eq!(1.0 - p1 / p0, visibility(eta).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn coincidence_monotone_near_balanced() {
        let mut prev = f64::INFINITY;
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            let p = coincidence_probability(0.45, x).unwrap();
            assert!(p <= prev + 1e-15);
            prev = p;
        }
    }

    #[test]
    fn visibility_is_symmetric_about_half() {
        for k in 1..50 {
            let eta = k as f64 / 100.0;
            assert_abs_diff_eq!(
                visibility(eta).unwrap(),
                visibility(1.0 - eta).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn overlap_normalization_and_tails() {
        for shape in [DipShape::Gaussian, DipShape::Rect, DipShape::GaussianTimesRect] {
            let model = WavepacketModel {
                shape,
                ..WavepacketModel::default()
            };
            assert_eq!(overlap(&model, 0.0), 1.0);
            let tc = model.coherence_time();
            assert!(overlap(&model, 30.0 * tc) < 1e-2);
            assert_abs_diff_eq!(overlap(&model, 1.3 * tc), overlap(&model, -1.3 * tc), epsilon = 1e-15);
        }
        let gauss = WavepacketModel::default();
        assert!(overlap(&gauss, 4.0 * gauss.coherence_time()) < 1e-3);
    }

    #[test]
    fn coherence_length_of_the_filtered_source() {
        let model = WavepacketModel::default();
        // 810 nm photons behind a 2 nm filter: about a third of a millimeter
        assert_abs_diff_eq!(model.coherence_length(), 3.28e-4, epsilon = 1e-6);
        assert_abs_diff_eq!(
            model.coherence_time(),
            delay_from_path(model.coherence_length()),
            epsilon = 1e-18
        );
    }

    fn scan_delays(model: &WavepacketModel, n: usize, spans: f64) -> Vec<f64> {
        let w = model.profile_width() * spans;
        (0..n)
            .map(|i| -w + 2.0 * w * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn dip_curve_limits() {
        let model = WavepacketModel::default();
        let rates = dip_curve(0.5, &model, 1.0, 1000.0, &[0.0, 1e-9]).unwrap();
        assert_abs_diff_eq!(rates[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rates[1], 1000.0, epsilon = 1e-6);

        // nominal-1/2 coupler as fabricated: a few counts left at the dip
        let rates = dip_curve(0.469, &model, 1.0, 1000.0, &[0.0]).unwrap();
        assert_abs_diff_eq!(rates[0], 1000.0 * (1.0 - visibility(0.469).unwrap()), epsilon = 1e-9);
        assert!((rates[0] - 8.0).abs() < 0.5);
    }

    #[test]
    fn dip_depth_composes_source_and_coupler_visibility() {
        let model = WavepacketModel::default();
        let rates = dip_curve(0.469, &model, 0.966, 1000.0, &[0.0]).unwrap();
        let v_total = 1.0 - rates[0] / 1000.0;
        assert_abs_diff_eq!(v_total, 0.966 * visibility(0.469).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(v_total, 0.958, epsilon = 1e-3);
    }

    #[test]
    fn dip_curve_domain_checks() {
        let model = WavepacketModel::default();
        assert!(dip_curve(0.5, &model, 1.5, 1000.0, &[0.0]).is_err());
        assert!(dip_curve(0.5, &model, 1.0, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn fit_recovers_noiseless_parameters() {
        for shape in [DipShape::Gaussian, DipShape::GaussianTimesRect] {
            let model = WavepacketModel {
                shape,
                ..WavepacketModel::default()
            };
            let delays = scan_delays(&model, 61, 5.0);
            let rates = dip_curve(0.469, &model, 0.966, 1000.0, &delays).unwrap();
            let samples: Vec<_> = delays.iter().copied().zip(rates).collect();
            let fit = fit_dip(&samples, shape).unwrap();
            let v_true = 0.966 * visibility(0.469).unwrap();
            assert_abs_diff_eq!(fit.visibility, v_true, epsilon = 1e-6);
            assert_abs_diff_eq!(fit.width, model.profile_width(), epsilon = 1e-6 * model.profile_width());
            assert_abs_diff_eq!(fit.baseline_rate, 1000.0, epsilon = 1e-4);
            assert_abs_diff_eq!(fit.center, 0.0, epsilon = 1e-19);
            assert!(!fit.width_uncertain);
            assert!(fit.residual < 1e-5);
        }
    }

    #[test]
    fn fit_with_poisson_noise_recovers_visibility() {
        let model = WavepacketModel::default();
        let delays = scan_delays(&model, 41, 5.0);
        let rates = dip_curve(0.469, &model, 0.966, 1000.0, &delays).unwrap();
        let v_true = 0.966 * visibility(0.469).unwrap();
        let bin_seconds = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let samples: Vec<(f64, f64)> = delays
                .iter()
                .zip(&rates)
                .map(|(&tau, &r)| {
                    let counts = if r * bin_seconds > 0.0 {
                        Poisson::new(r * bin_seconds).unwrap().sample(&mut rng)
                    } else {
                        0.0
                    };
                    (tau, counts / bin_seconds)
                })
                .collect();
            let fit = fit_dip(&samples, DipShape::Gaussian).unwrap();
            assert!(
                (fit.visibility - v_true).abs() < 0.02,
                "fitted {} vs true {v_true}",
                fit.visibility
            );
        }
    }

    #[test]
    fn flat_scan_reports_no_dip() {
        let samples: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 1e-13, 1000.0)).collect();
        let fit = fit_dip(&samples, DipShape::Gaussian).unwrap();
        assert!(fit.visibility < 1e-6);
        assert!(fit.width_uncertain);
    }

    #[test]
    fn fit_rejects_tiny_scans() {
        let samples = vec![(0.0, 1.0); 5];
        assert!(fit_dip(&samples, DipShape::Gaussian).is_err());
    }
}
