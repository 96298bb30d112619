//! Monte-Carlo emulation of the counting experiment: photon-pair source,
//! chip propagation, lossy detection, time-tag streams, software
//! coincidence counting over up to 16 channels, and analytic rate
//! predictions.
//!
//! Output mode `m` of the chip maps to time-tagger channel `m`. All
//! generators are bit-reproducible for a fixed seed: the primary pair
//! process, the multipair overlay and the dark counts draw from
//! independent, separately-seeded streams, so switching one of them off
//! never perturbs the others.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::chip::{compose, standard_chip, ChipReflectivities};
use crate::error::{Error, Result};
use crate::fock::{output_distribution, FockState, ModeUnitary};
use crate::gate::{prob_table, prob_table_raw, success_probability, LogicalEncoding, ProbTable};

/// Number of time-tagger channels.
pub const CHANNELS: usize = 16;

/// Timestamp jitter grid, ten ticks per nanosecond.
const TICKS_PER_NS: i64 = 10;

/// Pulsed acquisition: the source counts during `pulse_on` seconds, then
/// idles for `pulse_off` seconds while the phase shifter cools.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DutyCycle {
    pub pulse_on: f64,
    pub pulse_off: f64,
}

/// Photon-pair source and detection parameters.
///
/// The default is calibrated to the bare-source coincidence rate of
/// 11000/s measured with the fibers bypassing the chip; detection loss
/// is already folded into that figure, so `detector_efficiency` defaults
/// to 1 and only the per-port chip coupling is applied on top. Set
/// `detector_efficiency` (e.g. to [`APD_EFFICIENCY`]) together with a
/// raw emission rate when modelling the detectors explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Detected pairs per second at the source reference plane.
    pub pair_rate: f64,
    /// Probability that a pair event carries a second, independent pair
    /// inside the coincidence window.
    pub multipair_prob: f64,
    /// Per-port transmission through the chip, fiber coupling included.
    pub coupling_efficiency: f64,
    /// Per-photon detection efficiency applied after coupling.
    pub detector_efficiency: f64,
    /// Coincidence window, seconds.
    pub coincidence_window: f64,
    pub duty_cycle: DutyCycle,
    /// Uncorrelated clicks per second and channel; zero by default.
    pub dark_count_rate: f64,
}

/// Typical avalanche-photodiode efficiency, for unfolded source models.
pub const APD_EFFICIENCY: f64 = 0.5;

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            pair_rate: 11_000.0,
            multipair_prob: 0.005,
            coupling_efficiency: 0.65,
            detector_efficiency: 1.0,
            coincidence_window: 4e-9,
            duty_cycle: DutyCycle {
                pulse_on: 1.0,
                pulse_off: 5.0,
            },
            dark_count_rate: 0.0,
        }
    }
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("pair_rate", self.pair_rate, self.pair_rate >= 0.0),
            (
                "multipair_prob",
                self.multipair_prob,
                (0.0..=1.0).contains(&self.multipair_prob),
            ),
            (
                "coupling_efficiency",
                self.coupling_efficiency,
                (0.0..=1.0).contains(&self.coupling_efficiency),
            ),
            (
                "detector_efficiency",
                self.detector_efficiency,
                (0.0..=1.0).contains(&self.detector_efficiency),
            ),
            (
                "coincidence_window",
                self.coincidence_window,
                self.coincidence_window > 0.0,
            ),
            (
                "pulse_on",
                self.duty_cycle.pulse_on,
                self.duty_cycle.pulse_on > 0.0,
            ),
            (
                "pulse_off",
                self.duty_cycle.pulse_off,
                self.duty_cycle.pulse_off >= 0.0,
            ),
            (
                "dark_count_rate",
                self.dark_count_rate,
                self.dark_count_rate >= 0.0,
            ),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(Error::Domain {
                    name,
                    value,
                    domain: "source model range",
                });
            }
        }
        Ok(())
    }

    /// Survival probability of one photon from chip input to click.
    pub fn photon_survival(&self) -> f64 {
        self.coupling_efficiency * self.detector_efficiency
    }
}

/// One detector click.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeTagEvent {
    pub channel: u8,
    pub timestamp_ns: i64,
}

/// A sorted stream of detector clicks plus the live counting time that
/// produced it. Timestamps are wall-clock nanoseconds; with a pulsed
/// duty cycle the wall clock runs ahead of the live time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeTagStream {
    events: Vec<TimeTagEvent>,
    duration: f64,
}

impl TimeTagStream {
    /// Validate channel range and timestamp order.
    pub fn new(events: Vec<TimeTagEvent>, duration: f64) -> Result<Self> {
        if duration <= 0.0 {
            return Err(Error::Domain {
                name: "duration",
                value: duration,
                domain: "(0, inf)",
            });
        }
        for (i, w) in events.windows(2).enumerate() {
            if w[1].timestamp_ns < w[0].timestamp_ns {
                return Err(Error::UnsortedStream { index: i + 1 });
            }
        }
        if let Some(bad) = events.iter().position(|e| usize::from(e.channel) >= CHANNELS) {
            return Err(Error::InvalidInput(format!(
                "event {bad} uses channel {} (only {CHANNELS} channels)",
                events[bad].channel
            )));
        }
        Ok(Self { events, duration })
    }

    pub fn events(&self) -> &[TimeTagEvent] {
        &self.events
    }

    /// Live counting time in seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// The `channel,timestamp_ns` interchange format, sorted by time.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 + self.events.len() * 12);
        out.push_str("channel,timestamp_ns\n");
        for e in &self.events {
            out.push_str(&format!("{},{}\n", e.channel, e.timestamp_ns));
        }
        out
    }

    pub fn from_csv(csv: &str, duration: f64) -> Result<Self> {
        let mut lines = csv.lines();
        match lines.next() {
            Some("channel,timestamp_ns") => {}
            other => {
                return Err(Error::InvalidInput(format!(
                    "bad stream header: {other:?}"
                )))
            }
        }
        let mut events = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (ch, ts) = line.split_once(',').ok_or_else(|| {
                Error::InvalidInput(format!("stream line {} is not channel,timestamp", i + 2))
            })?;
            let channel: u8 = ch
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad channel {ch:?}")))?;
            let timestamp_ns: i64 = ts
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad timestamp {ts:?}")))?;
            events.push(TimeTagEvent {
                channel,
                timestamp_ns,
            });
        }
        Self::new(events, duration)
    }
}

/// JSON sidecar stored next to a stream CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSidecar {
    pub duration: f64,
    pub source: SourceModel,
}

/// Coincidence and singles counts of one stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CoincidenceReportJson", try_from = "CoincidenceReportJson")]
pub struct CoincidenceReport {
    counts: BTreeMap<(u8, u8), u64>,
    singles: BTreeMap<u8, u64>,
    window: f64,
    live_time: f64,
}

#[derive(Serialize, Deserialize)]
struct PairCount {
    a: u8,
    b: u8,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct CoincidenceReportJson {
    window: f64,
    live_time: f64,
    singles: BTreeMap<u8, u64>,
    counts: Vec<PairCount>,
}

impl From<CoincidenceReport> for CoincidenceReportJson {
    fn from(r: CoincidenceReport) -> Self {
        CoincidenceReportJson {
            window: r.window,
            live_time: r.live_time,
            singles: r.singles,
            counts: r
                .counts
                .into_iter()
                .map(|((a, b), count)| PairCount { a, b, count })
                .collect(),
        }
    }
}

impl TryFrom<CoincidenceReportJson> for CoincidenceReport {
    type Error = Error;

    fn try_from(j: CoincidenceReportJson) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for pc in j.counts {
            if pc.a >= pc.b {
                return Err(Error::InvalidInput(format!(
                    "coincidence pair ({}, {}) not ordered",
                    pc.a, pc.b
                )));
            }
            counts.insert((pc.a, pc.b), pc.count);
        }
        Ok(CoincidenceReport {
            counts,
            singles: j.singles,
            window: j.window,
            live_time: j.live_time,
        })
    }
}

impl CoincidenceReport {
    /// Coincidences on an unordered channel pair.
    pub fn count(&self, a: u8, b: u8) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn singles(&self, channel: u8) -> u64 {
        self.singles.get(&channel).copied().unwrap_or(0)
    }

    /// Nonzero pair counts in ascending channel order.
    pub fn pair_counts(&self) -> impl Iterator<Item = ((u8, u8), u64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn live_time(&self) -> f64 {
        self.live_time
    }
}

/// Map a live (counting) time to the wall clock under the duty cycle.
fn wall_from_live(t_live: f64, duty: &DutyCycle) -> f64 {
    if duty.pulse_off <= 0.0 {
        return t_live;
    }
    let cycles = (t_live / duty.pulse_on).floor();
    cycles * (duty.pulse_on + duty.pulse_off) + (t_live - cycles * duty.pulse_on)
}

/// Occupied modes of a two-photon outcome, flattened for fast emission.
fn photon_modes(state: &FockState) -> Vec<u8> {
    let mut v = Vec::with_capacity(2);
    for (mode, &n) in state.occupations().iter().enumerate() {
        for _ in 0..n {
            v.push(mode as u8);
        }
    }
    v
}

/// Simulate the detector stream for photon pairs fed into two chip
/// ports over `duration` seconds of live counting time.
///
/// Pairs arrive as a Poisson process at `pair_rate` during pulse-on
/// windows; each pair is routed by sampling the two-photon output
/// distribution of `u`, each photon independently survives
/// coupling and detection, and surviving photons are tagged on the
/// channel of their output mode with sub-nanosecond jitter. With
/// probability `multipair_prob` an extra independent pair overlays the
/// same arrival. Bit-reproducible for a fixed seed.
pub fn generate_stream(
    src: &SourceModel,
    u: &ModeUnitary,
    input_ports: (usize, usize),
    seed: u64,
    duration: f64,
) -> Result<TimeTagStream> {
    src.validate()?;
    if duration <= 0.0 {
        return Err(Error::Domain {
            name: "duration",
            value: duration,
            domain: "(0, inf)",
        });
    }
    if u.dim() > CHANNELS {
        return Err(Error::InvalidInput(format!(
            "{}-mode unitary exceeds the {CHANNELS} tagger channels",
            u.dim()
        )));
    }
    for port in [input_ports.0, input_ports.1] {
        if port >= u.dim() {
            return Err(Error::ModeOutOfRange {
                index: port,
                modes: u.dim(),
            });
        }
    }

    let input = FockState::with_photons_at(u.dim(), &[input_ports.0, input_ports.1]);
    let dist = output_distribution(u, &input)?;
    let outcomes: Vec<Vec<u8>> = dist.states().iter().map(photon_modes).collect();
    let mut cumulative = Vec::with_capacity(outcomes.len());
    let mut acc = 0.0;
    for &p in dist.probabilities() {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;

    let survival = src.photon_survival();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut overlay_rng = ChaCha8Rng::seed_from_u64(seed);
    overlay_rng.set_stream(1);

    let expected = (src.pair_rate * duration * 2.0 * survival.max(0.05)) as usize;
    let mut events: Vec<TimeTagEvent> = Vec::with_capacity(expected + 16);

    let emit_pair = |rng: &mut ChaCha8Rng, events: &mut Vec<TimeTagEvent>, t_ticks: i64| {
        let x = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c < x).min(outcomes.len() - 1);
        for &channel in &outcomes[idx] {
            let survives = rng.gen::<f64>() < survival;
            if survives {
                let jitter = rng.gen_range(0..TICKS_PER_NS);
                events.push(TimeTagEvent {
                    channel,
                    timestamp_ns: (t_ticks + jitter) / TICKS_PER_NS,
                });
            }
        }
    };

    if src.pair_rate > 0.0 {
        let gap = Exp::new(src.pair_rate).expect("positive rate");
        let mut t_live = 0.0f64;
        loop {
            t_live += gap.sample(&mut rng);
            if t_live >= duration {
                break;
            }
            let wall = wall_from_live(t_live, &src.duty_cycle);
            let t_ticks = (wall * 1e9 * TICKS_PER_NS as f64).round() as i64;
            emit_pair(&mut rng, &mut events, t_ticks);
            // decision draw always consumed so the primary sequence is
            // independent of whether overlays fire
            let double = rng.gen::<f64>() < src.multipair_prob;
            if double {
                emit_pair(&mut overlay_rng, &mut events, t_ticks);
            }
        }
    }

    if src.dark_count_rate > 0.0 {
        let mut dark_rng = ChaCha8Rng::seed_from_u64(seed);
        dark_rng.set_stream(2);
        let mean = src.dark_count_rate * duration;
        let poisson = Poisson::new(mean).expect("positive mean");
        for channel in 0..u.dim() as u8 {
            let n = poisson.sample(&mut dark_rng) as u64;
            for _ in 0..n {
                let t_live = dark_rng.gen::<f64>() * duration;
                let wall = wall_from_live(t_live, &src.duty_cycle);
                events.push(TimeTagEvent {
                    channel,
                    timestamp_ns: (wall * 1e9).round() as i64,
                });
            }
        }
    }

    events.sort_unstable_by_key(|e| (e.timestamp_ns, e.channel));
    TimeTagStream::new(events, duration)
}

/// Count singles and pairwise coincidences over a stream.
///
/// Two clicks on distinct channels coincide when their timestamps differ
/// by at most `window`. Matching is greedy earliest-first per channel
/// pair, so each click enters at most one coincidence per pair, like a
/// hardware correlator. Runs in linear time over the sorted stream.
pub fn count_coincidences(stream: &TimeTagStream, window: f64) -> Result<CoincidenceReport> {
    if window <= 0.0 {
        return Err(Error::Domain {
            name: "window",
            value: window,
            domain: "(0, inf)",
        });
    }
    let w_ns = (window * 1e9).round() as i64;

    let mut per_channel: Vec<Vec<i64>> = vec![Vec::new(); CHANNELS];
    for e in stream.events() {
        per_channel[usize::from(e.channel)].push(e.timestamp_ns);
    }

    let mut singles = BTreeMap::new();
    for (ch, times) in per_channel.iter().enumerate() {
        if !times.is_empty() {
            singles.insert(ch as u8, times.len() as u64);
        }
    }

    let mut counts = BTreeMap::new();
    for a in 0..CHANNELS {
        if per_channel[a].is_empty() {
            continue;
        }
        for b in (a + 1)..CHANNELS {
            if per_channel[b].is_empty() {
                continue;
            }
            let n = greedy_matches(&per_channel[a], &per_channel[b], w_ns);
            if n > 0 {
                counts.insert((a as u8, b as u8), n);
            }
        }
    }

    Ok(CoincidenceReport {
        counts,
        singles,
        window,
        live_time: stream.duration(),
    })
}

fn greedy_matches(ta: &[i64], tb: &[i64], w_ns: i64) -> u64 {
    let (mut i, mut j, mut n) = (0usize, 0usize, 0u64);
    while i < ta.len() && j < tb.len() {
        let dt = ta[i] - tb[j];
        if dt.abs() <= w_ns {
            n += 1;
            i += 1;
            j += 1;
        } else if dt < 0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

/// Analytic rate predictions for one input configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatesReport {
    /// Expected click rate per channel, counts/s.
    pub singles: Vec<f64>,
    /// Expected coincidence rate per channel pair for indistinguishable
    /// photons; nonzero pairs only, ascending.
    pub coincidences: Vec<((u8, u8), f64)>,
    /// The same with fully distinguishable photons: the classical
    /// baseline of a dip measurement.
    pub distinguishable: Vec<((u8, u8), f64)>,
    /// Post-selected rate per logical input when an encoding is given;
    /// each input uses its own pair of injection ports.
    pub logical: Option<[f64; 4]>,
}

/// Predict singles, coincidence and post-selected rates:
/// `coincidences = pair_rate * survival^2 * outcome probability` with
/// `survival = coupling * detector` per photon.
pub fn estimate_rates(
    src: &SourceModel,
    u: &ModeUnitary,
    input_ports: (usize, usize),
    encoding: Option<&LogicalEncoding>,
) -> Result<RatesReport> {
    src.validate()?;
    for port in [input_ports.0, input_ports.1] {
        if port >= u.dim() {
            return Err(Error::ModeOutOfRange {
                index: port,
                modes: u.dim(),
            });
        }
    }
    let survival = src.photon_survival();
    let pair_det = src.pair_rate * survival * survival;

    let input = FockState::with_photons_at(u.dim(), &[input_ports.0, input_ports.1]);
    let dist = output_distribution(u, &input)?;

    let mut singles = vec![0.0; u.dim()];
    let mut coincidences = Vec::new();
    for (state, p) in dist.iter() {
        for (mode, &n) in state.occupations().iter().enumerate() {
            singles[mode] += p * f64::from(n);
        }
    }
    for s in &mut singles {
        *s *= src.pair_rate * survival;
    }
    for a in 0..u.dim() {
        for b in (a + 1)..u.dim() {
            let mut p_ab = 0.0;
            for (state, p) in dist.iter() {
                let occ = state.occupations();
                if occ[a] == 1 && occ[b] == 1 {
                    p_ab += p;
                }
            }
            if p_ab > 0.0 {
                coincidences.push(((a as u8, b as u8), pair_det * p_ab));
            }
        }
    }

    let (p, q) = input_ports;
    let mut distinguishable = Vec::new();
    for a in 0..u.dim() {
        for b in (a + 1)..u.dim() {
            let p_ab = if p == q {
                2.0 * u.entry(a, p).norm_sqr() * u.entry(b, p).norm_sqr()
            } else {
                u.entry(a, p).norm_sqr() * u.entry(b, q).norm_sqr()
                    + u.entry(a, q).norm_sqr() * u.entry(b, p).norm_sqr()
            };
            if p_ab > 0.0 {
                distinguishable.push(((a as u8, b as u8), pair_det * p_ab));
            }
        }
    }

    let logical = match encoding {
        Some(enc) => {
            let mut rates = [0.0; 4];
            for (input, rate) in rates.iter_mut().enumerate() {
                *rate = pair_det * success_probability(u, enc, input)?;
            }
            Some(rates)
        }
        None => None,
    };

    Ok(RatesReport {
        singles,
        coincidences,
        distinguishable,
        logical,
    })
}

/// One phase setting of a sweep: the empirical post-selected table, the
/// raw logical-pair counts (rows by input, columns by output), and the
/// per-input coincidence reports (empty in analytic mode).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub phi: f64,
    pub table: ProbTable,
    pub counts: [[u64; 4]; 4],
    pub reports: Vec<CoincidenceReport>,
}

/// Run the full phase sweep: for each phase and each of the four logical
/// inputs, simulate a counting run of `pairs_per_point` expected pairs
/// and build the post-selected table from the logical coincidences.
///
/// With `analytic` set, the sampling is bypassed and each point carries
/// the exact post-selected table with expected counts, which is the
/// infinite-statistics limit. Reproducible by seed; the points are
/// independent and may be evaluated in any order.
pub fn run_phase_sweep_experiment(
    src: &SourceModel,
    reflectivities: &ChipReflectivities,
    phis: &[f64],
    pairs_per_point: u64,
    seed: u64,
    analytic: bool,
) -> Result<Vec<SweepPoint>> {
    if pairs_per_point == 0 {
        return Err(Error::InvalidInput("pairs_per_point must be positive".into()));
    }
    src.validate()?;
    let enc = LogicalEncoding::standard();
    let mut points = Vec::with_capacity(phis.len());

    for (k, &phi) in phis.iter().enumerate() {
        let u = compose(&standard_chip(reflectivities, phi))?;
        if analytic {
            let survival2 = src.photon_survival().powi(2);
            let raw = prob_table_raw(&u, &enc)?;
            let mut counts = [[0u64; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    counts[i][j] = (pairs_per_point as f64 * survival2 * raw[i][j]).round() as u64;
                }
            }
            points.push(SweepPoint {
                phi,
                table: prob_table(&u, &enc)?,
                counts,
                reports: Vec::new(),
            });
            continue;
        }

        let duration = pairs_per_point as f64 / src.pair_rate;
        let mut counts = [[0u64; 4]; 4];
        let mut reports = Vec::with_capacity(4);
        for input in 0..4 {
            let ports = enc.input_modes(input);
            let run_seed = mix_seed(seed, (k * 4 + input) as u64);
            let stream = generate_stream(src, &u, ports, run_seed, duration)?;
            let report = count_coincidences(&stream, src.coincidence_window)?;
            for out in 0..4 {
                let (a, b) = enc.output_modes(out);
                counts[input][out] = report.count(a as u8, b as u8);
            }
            reports.push(report);
        }

        let mut rows = [[0.0; 4]; 4];
        for (input, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(Error::DegenerateNormalization { input });
            }
            for (out, &c) in row.iter().enumerate() {
                rows[input][out] = c as f64 / total as f64;
            }
        }
        points.push(SweepPoint {
            phi,
            table: ProbTable::new(rows)?,
            counts,
            reports,
        });
    }
    Ok(points)
}

/// Derive a per-run seed from the sweep seed and the point index.
fn mix_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
