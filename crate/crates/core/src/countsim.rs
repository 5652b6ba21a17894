//! Monte Carlo detection: turn ideal coincidence probabilities into
//! Poissonian counts or raw timestamp streams, and run the inverse pipeline
//! (binning, accidental correction, calibration, normalization).
//!
//! Detector ids 0-7 follow the order HA0, VA0, HA1, VA1, HB0, VB0, HB1, VB1:
//! ids 0-3 are Alice's, 4-7 Bob's. All randomness is drawn from ChaCha12
//! streams derived from `(rng_seed, component)`, so identical configurations
//! reproduce identical outputs and independent components stay independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Poisson};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::optics::{channel_index, CoincidenceTable, OpticsError, TableKind};

/// Tolerance on the mean of calibration factors being 1.
pub const CALIBRATION_MEAN_TOL: f64 = 1e-9;
/// Default timing-bin width.
pub const DEFAULT_BIN_WIDTH_NS: u64 = 5;

#[derive(Debug, Error)]
pub enum CountError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("expected a probability table, got counts")]
    WrongKind,
    #[error("counts are already accidental-corrected")]
    AlreadyCorrected,
    #[error("operation requires accidental-corrected counts")]
    NotCorrected,
    #[error("counts are already normalized")]
    AlreadyNormalized,
    #[error("timestamp stream is not sorted at event {index}")]
    UnsortedStream { index: usize },
    #[error("event {index} names detector {detector}, valid ids are 0-7")]
    InvalidDetector { index: usize, detector: u8 },
    #[error("calibration input has an empty coincidence channel {channel}")]
    EmptyChannel { channel: usize },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error(transparent)]
    Table(#[from] OpticsError),
}

/// Source, detector, and timing parameters for one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Generated photon pairs per second.
    pub pair_rate: f64,
    /// Run length in seconds.
    pub duration: f64,
    /// Per-detector detection efficiency, in (0, 1].
    pub efficiency: [f64; 8],
    /// Per-detector dark-count rate in counts per second.
    pub dark_rate: [f64; 8],
    /// Timing-bin width in nanoseconds.
    pub bin_width_ns: u64,
    pub rng_seed: u64,
}

impl ExperimentConfig {
    /// Unit efficiencies, no dark counts, 5 ns bins.
    pub fn ideal(pair_rate: f64, duration: f64, rng_seed: u64) -> Self {
        Self {
            pair_rate,
            duration,
            efficiency: [1.0; 8],
            dark_rate: [0.0; 8],
            bin_width_ns: DEFAULT_BIN_WIDTH_NS,
            rng_seed,
        }
    }

    pub fn with_efficiency(mut self, efficiency: [f64; 8]) -> Self {
        self.efficiency = efficiency;
        self
    }

    pub fn with_uniform_efficiency(mut self, eta: f64) -> Self {
        self.efficiency = [eta; 8];
        self
    }

    pub fn with_dark_rate(mut self, dark_rate: [f64; 8]) -> Self {
        self.dark_rate = dark_rate;
        self
    }

    pub fn with_uniform_dark_rate(mut self, rate: f64) -> Self {
        self.dark_rate = [rate; 8];
        self
    }

    pub fn with_bin_width_ns(mut self, bin_width_ns: u64) -> Self {
        self.bin_width_ns = bin_width_ns;
        self
    }

    pub fn validate(&self) -> Result<(), CountError> {
        if !(self.pair_rate.is_finite() && self.pair_rate >= 0.0) {
            return Err(CountError::Config(format!(
                "pair_rate {} must be >= 0",
                self.pair_rate
            )));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(CountError::Config(format!(
                "duration {} must be > 0",
                self.duration
            )));
        }
        for (i, &eta) in self.efficiency.iter().enumerate() {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(CountError::Config(format!(
                    "efficiency[{i}] = {eta} outside (0, 1]"
                )));
            }
        }
        for (i, &dark) in self.dark_rate.iter().enumerate() {
            if !(dark.is_finite() && dark >= 0.0) {
                return Err(CountError::Config(format!(
                    "dark_rate[{i}] = {dark} must be >= 0"
                )));
            }
        }
        if self.bin_width_ns == 0 {
            return Err(CountError::Config("bin_width_ns must be >= 1".into()));
        }
        Ok(())
    }
}

/// Coincidence and singles counts from one run, with pipeline flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsRecord {
    /// Count-kind table carrying the per-detector singles.
    pub coincidences: CoincidenceTable,
    pub duration: f64,
    pub accidental_corrected: bool,
    pub normalized: bool,
}

impl CountsRecord {
    pub fn singles(&self) -> &[f64; 8] {
        self.coincidences
            .singles()
            .expect("count tables carry singles")
    }

    pub fn values(&self) -> &[f64; 16] {
        self.coincidences.values()
    }
}

/// Per-channel relative detection efficiency, mean normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    relative_efficiency: [f64; 16],
    source_tag: String,
}

impl CalibrationRecord {
    pub fn new(
        relative_efficiency: [f64; 16],
        source_tag: impl Into<String>,
    ) -> Result<Self, CountError> {
        for (i, &r) in relative_efficiency.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(CountError::InvalidCalibration(format!(
                    "factor {i} is {r}, must be positive"
                )));
            }
        }
        let mean = relative_efficiency.iter().sum::<f64>() / 16.0;
        if (mean - 1.0).abs() > CALIBRATION_MEAN_TOL {
            return Err(CountError::InvalidCalibration(format!(
                "factor mean {mean} is not 1"
            )));
        }
        Ok(Self {
            relative_efficiency,
            source_tag: source_tag.into(),
        })
    }

    pub fn relative_efficiency(&self) -> &[f64; 16] {
        &self.relative_efficiency
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }
}

/// A single detection: detector id 0-7 and its timestamp in integer
/// nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimestampEvent {
    pub detector: u8,
    pub timestamp_ns: u64,
}

/// Detection events sorted by timestamp.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimestampStream {
    pub events: Vec<TimestampEvent>,
}

impl TimestampStream {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// The generator's own channel bookkeeping, kept so binning can be checked
/// against an independently computed answer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub coincidences: [u64; 16],
    pub singles: [u64; 8],
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// RNG stream ids per component; darks and accidentals get one stream per
// detector/channel so shards stay independent.
const STREAM_PAIRS: u64 = 0;
const STREAM_DARK_BASE: u64 = 1;
const STREAM_LOST: u64 = 9;
const STREAM_ACCIDENTAL_BASE: u64 = 10;

fn poisson_draw(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let sample: f64 = Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng);
    sample as u64
}

/// Draw Poissonian coincidence and singles counts for one run.
///
/// Per channel, detected-pair counts are Poisson with mean
/// pair_rate·duration·P·η_A·η_B; singles collect detected-pair photons,
/// photons whose partner was lost, and dark counts; accidentals are added per
/// channel with the singles-product mean S_i·S_j·τ/T.
pub fn simulate_counts(
    probabilities: &CoincidenceTable,
    config: &ExperimentConfig,
) -> Result<CountsRecord, CountError> {
    config.validate()?;
    if probabilities.kind() != TableKind::Probability {
        return Err(CountError::WrongKind);
    }
    let expected_pairs = config.pair_rate * config.duration;
    let tau = config.bin_width_ns as f64 * 1e-9;

    let mut pair_rng = stream_rng(config.rng_seed, STREAM_PAIRS);
    let mut pairs = [0u64; 16];
    for (c, pair_count) in pairs.iter_mut().enumerate() {
        let (a, b) = (c / 4, c % 4);
        let mean = expected_pairs
            * probabilities.values()[c]
            * config.efficiency[a]
            * config.efficiency[4 + b];
        *pair_count = poisson_draw(&mut pair_rng, mean);
    }

    let mut lost_rng = stream_rng(config.rng_seed, STREAM_LOST);
    let mut singles = [0u64; 8];
    for a in 0..4 {
        let detected: u64 = (0..4).map(|b| pairs[channel_index(a, b)]).sum();
        let lost_mean: f64 = (0..4)
            .map(|b| {
                expected_pairs
                    * probabilities.value(a, b)
                    * config.efficiency[a]
                    * (1.0 - config.efficiency[4 + b])
            })
            .sum();
        singles[a] = detected + poisson_draw(&mut lost_rng, lost_mean);
    }
    for b in 0..4 {
        let detected: u64 = (0..4).map(|a| pairs[channel_index(a, b)]).sum();
        let lost_mean: f64 = (0..4)
            .map(|a| {
                expected_pairs
                    * probabilities.value(a, b)
                    * config.efficiency[4 + b]
                    * (1.0 - config.efficiency[a])
            })
            .sum();
        singles[4 + b] = detected + poisson_draw(&mut lost_rng, lost_mean);
    }
    for (d, &dark) in config.dark_rate.iter().enumerate() {
        let mut dark_rng = stream_rng(config.rng_seed, STREAM_DARK_BASE + d as u64);
        singles[d] += poisson_draw(&mut dark_rng, dark * config.duration);
    }

    let mut values = [0.0; 16];
    for (c, value) in values.iter_mut().enumerate() {
        let (a, b) = (c / 4, c % 4);
        let mut acc_rng = stream_rng(config.rng_seed, STREAM_ACCIDENTAL_BASE + c as u64);
        let acc_mean = singles[a] as f64 * singles[4 + b] as f64 * tau / config.duration;
        let total = pairs[c] + poisson_draw(&mut acc_rng, acc_mean);
        // A channel can never register more coincidences than either of its
        // detectors saw singles.
        *value = total.min(singles[a]).min(singles[4 + b]) as f64;
    }

    let singles_f: [f64; 8] = singles.map(|s| s as f64);
    Ok(CountsRecord {
        coincidences: CoincidenceTable::from_counts(values, singles_f)?,
        duration: config.duration,
        accidental_corrected: false,
        normalized: false,
    })
}

/// Generate the raw detection stream and the generator's channel bookkeeping.
///
/// Pair arrivals are exponential at `pair_rate`; each pair lands in a channel
/// drawn from the probability table, each photon survives its detector
/// efficiency independently, and dark counts run as independent Poisson
/// processes per detector. Events are sorted by (timestamp, detector).
pub fn generate_timestamps_labeled(
    probabilities: &CoincidenceTable,
    config: &ExperimentConfig,
) -> Result<(TimestampStream, GroundTruth), CountError> {
    config.validate()?;
    if probabilities.kind() != TableKind::Probability {
        return Err(CountError::WrongKind);
    }
    let mut events: Vec<TimestampEvent> = Vec::new();
    // Bin map filled at generation time; the counting pass over it is the
    // independent answer bin_and_count gets checked against.
    let mut bins: BTreeMap<u64, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    let mut truth = GroundTruth::default();

    let mut record = |detector: u8, t_ns: u64, bins: &mut BTreeMap<u64, (Vec<u8>, Vec<u8>)>| {
        let entry = bins.entry(t_ns / config.bin_width_ns).or_default();
        if detector < 4 {
            entry.0.push(detector);
        } else {
            entry.1.push(detector - 4);
        }
        truth.singles[detector as usize] += 1;
        events.push(TimestampEvent {
            detector,
            timestamp_ns: t_ns,
        });
    };

    if config.pair_rate > 0.0 {
        let mut rng = stream_rng(config.rng_seed, STREAM_PAIRS);
        let arrival = Exp::new(config.pair_rate).expect("positive rate");
        let mut t = arrival.sample(&mut rng);
        while t < config.duration {
            let t_ns = (t * 1e9) as u64;
            let mut u: f64 = rng.random();
            let mut channel = 15;
            for (c, &p) in probabilities.values().iter().enumerate() {
                if u < p {
                    channel = c;
                    break;
                }
                u -= p;
            }
            let (a, b) = (channel / 4, channel % 4);
            if rng.random::<f64>() < config.efficiency[a] {
                record(a as u8, t_ns, &mut bins);
            }
            if rng.random::<f64>() < config.efficiency[4 + b] {
                record(4 + b as u8, t_ns, &mut bins);
            }
            t += arrival.sample(&mut rng);
        }
    }

    for (d, &dark) in config.dark_rate.iter().enumerate() {
        if dark <= 0.0 {
            continue;
        }
        let mut rng = stream_rng(config.rng_seed, STREAM_DARK_BASE + d as u64);
        let arrival = Exp::new(dark).expect("positive rate");
        let mut t = arrival.sample(&mut rng);
        while t < config.duration {
            record(d as u8, (t * 1e9) as u64, &mut bins);
            t += arrival.sample(&mut rng);
        }
    }

    for (alice, bob) in bins.values() {
        for &a in alice {
            for &b in bob {
                truth.coincidences[channel_index(a as usize, b as usize)] += 1;
            }
        }
    }

    events.sort_by_key(|e| (e.timestamp_ns, e.detector));
    Ok((TimestampStream { events }, truth))
}

/// Generate the raw detection stream for one run.
pub fn generate_timestamps(
    probabilities: &CoincidenceTable,
    config: &ExperimentConfig,
) -> Result<TimestampStream, CountError> {
    Ok(generate_timestamps_labeled(probabilities, config)?.0)
}

/// Bin a sorted stream and count cross-party coincidences.
///
/// Two detections coincide when floor(t / bin_width) matches and the
/// detectors belong to opposite parties; a bin holding several events counts
/// every Alice×Bob pairing. Singles count every event unconditionally.
pub fn bin_and_count(
    stream: &TimestampStream,
    bin_width_ns: u64,
    duration: f64,
) -> Result<CountsRecord, CountError> {
    if bin_width_ns == 0 {
        return Err(CountError::Config("bin_width_ns must be >= 1".into()));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(CountError::Config(format!(
            "duration {duration} must be > 0"
        )));
    }
    let mut values = [0.0; 16];
    let mut singles = [0.0; 8];
    let mut current_bin = None;
    let mut alice: Vec<u8> = Vec::new();
    let mut bob: Vec<u8> = Vec::new();
    let mut last_t = 0u64;

    let flush = |alice: &mut Vec<u8>, bob: &mut Vec<u8>, values: &mut [f64; 16]| {
        for &a in alice.iter() {
            for &b in bob.iter() {
                values[channel_index(a as usize, b as usize)] += 1.0;
            }
        }
        alice.clear();
        bob.clear();
    };

    for (index, event) in stream.events.iter().enumerate() {
        if event.detector > 7 {
            return Err(CountError::InvalidDetector {
                index,
                detector: event.detector,
            });
        }
        if event.timestamp_ns < last_t {
            return Err(CountError::UnsortedStream { index });
        }
        last_t = event.timestamp_ns;
        singles[event.detector as usize] += 1.0;
        let bin = event.timestamp_ns / bin_width_ns;
        if current_bin != Some(bin) {
            flush(&mut alice, &mut bob, &mut values);
            current_bin = Some(bin);
        }
        if event.detector < 4 {
            alice.push(event.detector);
        } else {
            bob.push(event.detector - 4);
        }
    }
    flush(&mut alice, &mut bob, &mut values);

    Ok(CountsRecord {
        coincidences: CoincidenceTable::from_counts(values, singles)?,
        duration,
        accidental_corrected: false,
        normalized: false,
    })
}

/// Subtract the singles-product accidental estimate S_i·S_j·τ/T per channel,
/// clamping at zero.
pub fn accidental_correction(
    record: &CountsRecord,
    bin_width_ns: u64,
) -> Result<CountsRecord, CountError> {
    if record.accidental_corrected {
        return Err(CountError::AlreadyCorrected);
    }
    let tau = bin_width_ns as f64 * 1e-9;
    let singles = *record.singles();
    let mut values = *record.values();
    for (c, value) in values.iter_mut().enumerate() {
        let (a, b) = (c / 4, c % 4);
        let estimate = singles[a] * singles[4 + b] * tau / record.duration;
        *value = (*value - estimate).max(0.0);
    }
    Ok(CountsRecord {
        coincidences: CoincidenceTable::from_counts(values, singles)?,
        duration: record.duration,
        accidental_corrected: true,
        normalized: false,
    })
}

/// Fit per-channel relative efficiencies from a run on an unentangled source
/// with equal flux in every path (where every channel expects equal counts).
pub fn calibrate(
    record: &CountsRecord,
    source_tag: impl Into<String>,
) -> Result<CalibrationRecord, CountError> {
    if !record.accidental_corrected {
        return Err(CountError::NotCorrected);
    }
    let values = record.values();
    for (channel, &v) in values.iter().enumerate() {
        if v <= 0.0 {
            return Err(CountError::EmptyChannel { channel });
        }
    }
    let total: f64 = values.iter().sum();
    let mut factors = [0.0; 16];
    for (f, &v) in factors.iter_mut().zip(values) {
        *f = v * 16.0 / total;
    }
    CalibrationRecord::new(factors, source_tag)
}

/// Divide each channel by its relative efficiency. Requires corrected,
/// not-yet-normalized counts.
pub fn normalize(
    record: &CountsRecord,
    calibration: &CalibrationRecord,
) -> Result<CountsRecord, CountError> {
    if !record.accidental_corrected {
        return Err(CountError::NotCorrected);
    }
    if record.normalized {
        return Err(CountError::AlreadyNormalized);
    }
    let mut values = *record.values();
    for (v, &r) in values.iter_mut().zip(calibration.relative_efficiency()) {
        if !(r.is_finite() && r > 0.0) {
            return Err(CountError::InvalidCalibration(format!(
                "factor {r} is not positive"
            )));
        }
        *v /= r;
    }
    Ok(CountsRecord {
        coincidences: CoincidenceTable::from_counts(values, *record.singles())?,
        duration: record.duration,
        accidental_corrected: true,
        normalized: true,
    })
}
