//! Fock-state bookkeeping and multi-photon transition amplitudes.
//!
//! Photon configurations are occupation-number vectors over the waveguide
//! modes. Transition amplitudes between Fock states of a mode unitary `U`
//! are matrix permanents of the row/column-expanded submatrix of `U`,
//! which is how indistinguishable-boson interference enters.
//!
//! Amplitude convention, used consistently everywhere: columns of `U`
//! index input modes and rows index output modes, i.e. a single photon
//! entering mode `j` leaves mode `i` with amplitude `U[(i, j)]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A probability amplitude.
pub type Amplitude = Complex64;

/// Photon occupation numbers, one entry per waveguide mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FockState {
    occ: Vec<u8>,
}

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        Self { occ: occupations }
    }

    /// The vacuum over `modes` modes with one photon added per listed
    /// mode; listing a mode twice places two photons in it.
    pub fn with_photons_at(modes: usize, photons: &[usize]) -> Self {
        let mut occ = vec![0u8; modes];
        for &m in photons {
            occ[m] += 1;
        }
        Self { occ }
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn modes(&self) -> usize {
        self.occ.len()
    }

    pub fn total_photons(&self) -> u32 {
        self.occ.iter().map(|&n| u32::from(n)).sum()
    }
}

impl std::fmt::Display for FockState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.occ.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// A validated n-by-n unitary acting on the optical modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    m: DMatrix<Complex64>,
}

/// Maximum allowed max-entry deviation of `U†U` from the identity.
pub const UNITARITY_TOL: f64 = 1e-10;

impl ModeUnitary {
    /// Wrap a matrix, verifying squareness and unitarity.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NonSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let dev = unitarity_deviation(&m);
        if dev > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, out_mode: usize, in_mode: usize) -> Complex64 {
        self.m[(out_mode, in_mode)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    /// Largest entrywise distance to another unitary of the same size.
    pub fn max_entry_distance(&self, other: &Self) -> f64 {
        (&self.m - &other.m)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Max-entry deviation of `m†m` from the identity.
pub fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    let gram = m.adjoint() * m;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            dev = dev.max((gram[(i, j)] - expected).norm());
        }
    }
    dev
}

/// Permanent of a square complex matrix.
///
/// Uses the direct expansion up to 3x3 and a Gray-coded
/// inclusion-exclusion sum (O(2^n * n)) above that. The empty matrix has
/// permanent 1 by convention.
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    Ok(match n {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] + m[(1, 2)] * m[(2, 1)])
                + m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] + m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] + m[(1, 1)] * m[(2, 0)])
        }
        _ => ryser_permanent(m),
    })
}

/// Inclusion-exclusion permanent with Gray-code column updates:
/// Per(A) = sum over non-empty column subsets S of
/// (-1)^(n-|S|) * prod_i sum_{j in S} a_ij.
fn ryser_permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert!(n <= 63, "permanent dimension too large");
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut prev_gray: u64 = 0;
    for k in 1u64..(1 << n) {
        let gray = k ^ (k >> 1);
        let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
        if gray & (1 << flipped) != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += m[(i, flipped)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= m[(i, flipped)];
            }
        }
        prev_gray = gray;
        let prod: Complex64 = row_sums
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &s| acc * s);
        if (n as u32 - gray.count_ones()) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// All occupation vectors of `photons` photons over `modes` modes, in
/// lexicographically descending order, e.g. (2,0), (1,1), (0,2).
///
/// The order is stable; probability tables index into it.
pub fn enumerate_fock_states(modes: usize, photons: u32) -> Vec<FockState> {
    assert!(modes >= 1, "need at least one mode");
    let mut out = Vec::new();
    let mut occ = vec![0u8; modes];
    fill_states(&mut occ, 0, photons, &mut out);
    out
}

fn fill_states(occ: &mut Vec<u8>, mode: usize, remaining: u32, out: &mut Vec<FockState>) {
    if mode == occ.len() - 1 {
        occ[mode] = remaining as u8;
        out.push(FockState::new(occ.clone()));
        occ[mode] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        occ[mode] = n as u8;
        fill_states(occ, mode + 1, remaining - n, out);
    }
    occ[mode] = 0;
}

fn factorial(n: u8) -> u64 {
    (1..=u64::from(n)).product()
}

/// Transition amplitude `<output| U |input>` between Fock states.
///
/// The submatrix of `U` is built by repeating column `j` `input[j]` times
/// and row `i` `output[i]` times; the amplitude is its permanent divided
/// by the square root of the product of all occupation factorials.
pub fn transition_amplitude(
    u: &ModeUnitary,
    input: &FockState,
    output: &FockState,
) -> Result<Amplitude> {
    if input.modes() != u.dim() || output.modes() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "unitary has {} modes, states have {} and {}",
            u.dim(),
            input.modes(),
            output.modes()
        )));
    }
    let n_in = input.total_photons();
    let n_out = output.total_photons();
    if n_in != n_out {
        return Err(Error::PhotonNumberMismatch {
            input: n_in,
            output: n_out,
        });
    }

    let cols = expand_modes(input);
    let rows = expand_modes(output);
    let n = cols.len();
    let sub = DMatrix::from_fn(n, n, |r, c| u.entry(rows[r], cols[c]));
    let per = permanent(&sub)?;

    let mut norm: u64 = 1;
    for &k in input.occupations() {
        norm *= factorial(k);
    }
    for &k in output.occupations() {
        norm *= factorial(k);
    }
    Ok(per / (norm as f64).sqrt())
}

fn expand_modes(s: &FockState) -> Vec<usize> {
    let mut v = Vec::with_capacity(s.total_photons() as usize);
    for (mode, &n) in s.occupations().iter().enumerate() {
        for _ in 0..n {
            v.push(mode);
        }
    }
    v
}

/// Output probabilities of a Fock state sent through a unitary, keyed by
/// the stable enumeration order of [`enumerate_fock_states`].
#[derive(Clone, Debug)]
pub struct OutputDistribution {
    states: Vec<FockState>,
    probs: Vec<f64>,
}

impl OutputDistribution {
    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockState, f64)> {
        self.states.iter().zip(self.probs.iter().copied())
    }

    /// Probability of one output state; zero when it is not in the basis.
    pub fn probability(&self, state: &FockState) -> f64 {
        self.states
            .iter()
            .position(|s| s == state)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Maximum photon number accepted by [`output_distribution`].
pub const MAX_DISTRIBUTION_PHOTONS: u32 = 4;

/// Full output distribution `|<out| U |in>|^2` over all Fock states with
/// the input's photon number. Probabilities sum to 1 (unitarity).
pub fn output_distribution(u: &ModeUnitary, input: &FockState) -> Result<OutputDistribution> {
    let photons = input.total_photons();
    if photons > MAX_DISTRIBUTION_PHOTONS {
        return Err(Error::InvalidInput(format!(
            "output_distribution supports at most {MAX_DISTRIBUTION_PHOTONS} photons, got {photons}"
        )));
    }
    let states = enumerate_fock_states(u.dim(), photons);
    let mut probs = Vec::with_capacity(states.len());
    for out in &states {
        let a = transition_amplitude(u, input, out)?;
        probs.push(a.norm_sqr());
    }
    Ok(OutputDistribution { states, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: sum over all permutations.
    fn naive_permanent(m: &DMatrix<Complex64>) -> Complex64 {
        let n = m.nrows();
        (0..n)
            .permutations(n)
            .map(|sigma| {
                sigma
                    .iter()
                    .enumerate()
                    .fold(Complex64::new(1.0, 0.0), |acc, (i, &j)| acc * m[(i, j)])
            })
            .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t)
    }

    fn random_complex_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn coupler2(eta: f64) -> ModeUnitary {
        let r = eta.sqrt();
        let t = Complex64::new(0.0, (1.0 - eta).sqrt());
        ModeUnitary::new(DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(r, 0.0), t, t, Complex64::new(r, 0.0)],
        ))
        .unwrap()
    }

    #[test]
    fn permanent_small_cases() {
        let m1 = DMatrix::from_row_slice(1, 1, &[Complex64::new(0.3, -0.7)]);
        assert_eq!(permanent(&m1).unwrap(), Complex64::new(0.3, -0.7));

        let a = Complex64::new(1.0, 2.0);
        let b = Complex64::new(-0.5, 0.0);
        let c = Complex64::new(0.0, 1.0);
        let d = Complex64::new(2.0, -1.0);
        let m2 = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        assert_eq!(permanent(&m2).unwrap(), a * d + b * c);

        let ones = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(permanent(&ones).unwrap().re, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(permanent(&ones).unwrap().im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn permanent_empty_matrix_is_one() {
        let m = DMatrix::<Complex64>::zeros(0, 0);
        assert_eq!(permanent(&m).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn permanent_rejects_non_square() {
        let m = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(
            permanent(&m),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn permanent_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            for _ in 0..40 {
                let m = random_complex_matrix(&mut rng, n);
                let fast = permanent(&m).unwrap();
                let slow = naive_permanent(&m);
                assert!(
                    (fast - slow).norm() < 1e-10,
                    "n={n}: {fast} vs oracle {slow}"
                );
            }
        }
    }

    #[test]
    fn ryser_matches_naive_on_larger_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 6..=8 {
            let m = random_complex_matrix(&mut rng, n);
            let fast = permanent(&m).unwrap();
            let slow = naive_permanent(&m);
            assert!((fast - slow).norm() < 1e-9 * slow.norm().max(1.0));
        }
    }

    #[test]
    fn enumeration_orders_and_counts() {
        let states: Vec<_> = enumerate_fock_states(2, 1)
            .iter()
            .map(|s| s.occupations().to_vec())
            .collect();
        assert_eq!(states, vec![vec![1, 0], vec![0, 1]]);

        let states: Vec<_> = enumerate_fock_states(2, 2)
            .iter()
            .map(|s| s.occupations().to_vec())
            .collect();
        assert_eq!(states, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);

        let states = enumerate_fock_states(6, 2);
        assert_eq!(states.len(), 21);
        // strictly descending lexicographic order, hence no duplicates
        for w in states.windows(2) {
            assert!(w[0].occupations() > w[1].occupations());
        }
    }

    #[test]
    fn identity_preserves_states() {
        let u = ModeUnitary::identity(6);
        let s = FockState::new(vec![1, 1, 0, 0, 0, 0]);
        let a = transition_amplitude(&u, &s, &s).unwrap();
        assert_abs_diff_eq!(a.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn balanced_coupler_suppresses_coincidence() {
        let u = coupler2(0.5);
        let s = FockState::new(vec![1, 1]);
        let a = transition_amplitude(&u, &s, &s).unwrap();
        assert!(a.norm() < 1e-12, "HOM null violated: {a}");
    }

    #[test]
    fn third_coupler_coincidence_amplitude() {
        // eta - (1 - eta) at eta = 1/3
        let u = coupler2(1.0 / 3.0);
        let s = FockState::new(vec![1, 1]);
        let a = transition_amplitude(&u, &s, &s).unwrap();
        assert_abs_diff_eq!(a.re, -1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn photon_number_mismatch_rejected() {
        let u = ModeUnitary::identity(2);
        let a = FockState::new(vec![1, 1]);
        let b = FockState::new(vec![1, 0]);
        assert!(matches!(
            transition_amplitude(&u, &a, &b),
            Err(Error::PhotonNumberMismatch { input: 2, output: 1 })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let u = ModeUnitary::identity(3);
        let a = FockState::new(vec![1, 1]);
        assert!(transition_amplitude(&u, &a, &a).is_err());
    }

    #[test]
    fn bunching_at_balanced_coupler() {
        let u = coupler2(0.5);
        let dist = output_distribution(&u, &FockState::new(vec![1, 1])).unwrap();
        assert_abs_diff_eq!(
            dist.probability(&FockState::new(vec![2, 0])),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            dist.probability(&FockState::new(vec![0, 2])),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            dist.probability(&FockState::new(vec![1, 1])),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn identity_distribution_is_a_point_mass() {
        let u = ModeUnitary::identity(6);
        let s = FockState::new(vec![0, 1, 0, 0, 1, 0]);
        let dist = output_distribution(&u, &s).unwrap();
        assert_abs_diff_eq!(dist.probability(&s), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn distribution_rejects_many_photons() {
        let u = ModeUnitary::identity(2);
        let s = FockState::new(vec![3, 2]);
        assert!(output_distribution(&u, &s).is_err());
    }

    #[test]
    fn unitarity_check_rejects_scaled_matrix() {
        let m = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.1, 0.0));
        assert!(matches!(ModeUnitary::new(m), Err(Error::NotUnitary { .. })));
    }

    /// Amplitudes of a product unitary factor through a coherent sum over
    /// intermediate Fock states.
    #[test]
    fn product_unitary_chains_through_intermediate_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let u1 = random_unitary(&mut rng, 4);
            let u2 = random_unitary(&mut rng, 4);
            let combined = ModeUnitary::new(u2.matrix() * u1.matrix()).unwrap();
            let input = FockState::new(vec![1, 0, 1, 0]);
            let mids = enumerate_fock_states(4, 2);
            for out in &mids {
                let direct = transition_amplitude(&combined, &input, out).unwrap();
                let chained = mids
                    .iter()
                    .map(|mid| {
                        transition_amplitude(&u1, &input, mid).unwrap()
                            * transition_amplitude(&u2, mid, out).unwrap()
                    })
                    .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t);
                assert!(
                    (direct - chained).norm() < 1e-9,
                    "direct {direct} vs chained {chained}"
                );
            }
        }
    }

    fn random_unitary(rng: &mut impl Rng, dim: usize) -> ModeUnitary {
        // product of random couplers and phases on random mode pairs
        let mut m = DMatrix::<Complex64>::identity(dim, dim);
        for _ in 0..12 {
            let a = rng.gen_range(0..dim);
            let mut b = rng.gen_range(0..dim);
            while b == a {
                b = rng.gen_range(0..dim);
            }
            let eta: f64 = rng.gen_range(0.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut e = DMatrix::<Complex64>::identity(dim, dim);
            let r = Complex64::new(eta.sqrt(), 0.0);
            let t = Complex64::new(0.0, (1.0 - eta).sqrt());
            e[(a, a)] = r;
            e[(a, b)] = t;
            e[(b, a)] = t;
            e[(b, b)] = r;
            e[(a, a)] *= Complex64::from_polar(1.0, phi);
            e[(b, a)] *= Complex64::from_polar(1.0, phi);
            m = e * m;
        }
        ModeUnitary::new(m).unwrap()
    }

    proptest::proptest! {
        #[test]
        fn probabilities_conserved_under_random_circuits(seed in 0u64..512) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(&mut rng, 4);
            let input = FockState::new(vec![1, 1, 0, 0]);
            let dist = output_distribution(&u, &input).unwrap();
            proptest::prop_assert!((dist.total() - 1.0).abs() < 1e-9);
        }
    }
}
