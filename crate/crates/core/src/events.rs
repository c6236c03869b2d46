//! Time-domain detection chain: bunched photon streams, TAC start–stop
//! pairing, MCA histogramming and the windowed g² ratio.
//!
//! The field amplitude is a complex Ornstein–Uhlenbeck process with
//! correlation time τ₀, sampled exactly at arbitrary times, so
//! `⟨a(t+τ)a*(t)⟩ = exp(−|τ|/τ₀)` and `I = |a|²` has unit mean. Photon
//! arrivals are an inhomogeneous Poisson process with rate `r·I(t)`,
//! generated by thinning a homogeneous candidate stream.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analytic::{aperture_averaged_coherence, beta_windowed};
use crate::apparatus::{check, ApparatusConfig, ConfigError, Lineshape};
use crate::rng::{complex_normal, exponential, uniform01, Domain, StreamId};

/// Intensity ceiling for lazily sampled traces. `P(I > 16) = e⁻¹⁶` per
/// coherence cell for unit-mean exponential intensity.
pub const INTENSITY_CEILING: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorId {
    D1,
    D2,
}

/// Time-tagged detections of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonEventStream {
    pub detector_id: DetectorId,
    pub timestamps: Vec<f64>,
    pub duration: f64,
}

impl PhotonEventStream {
    /// Checks that timestamps are strictly increasing and inside `[0, duration]`.
    pub fn new(detector_id: DetectorId, timestamps: Vec<f64>, duration: f64) -> Result<Self, EventsError> {
        let ordered = timestamps.windows(2).all(|w| w[0] < w[1]);
        let bounded = timestamps.iter().all(|&t| (0.0..=duration).contains(&t));
        if !(duration > 0.0 && ordered && bounded) {
            return Err(EventsError::InvalidStream);
        }
        Ok(Self {
            detector_id,
            timestamps,
            duration,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// MCA histogram of start–stop intervals `t_stop − t_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    pub range: (f64, f64),
    pub counts: Vec<u64>,
}

impl CoincidenceHistogram {
    /// Empty histogram; the range must be a whole number of bins.
    pub fn new(bin_width: f64, range: (f64, f64)) -> Result<Self, EventsError> {
        let span = range.1 - range.0;
        let bins = span / bin_width;
        let whole = libm::round(bins);
        if !(bin_width > 0.0 && span > 0.0 && whole >= 1.0) || (bins - whole).abs() > 1e-9 * whole {
            return Err(EventsError::RangeNotDivisible);
        }
        Ok(Self {
            bin_width,
            range,
            counts: vec![0; whole as usize],
        })
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.range.0 + (k as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn record(&mut self, tau: f64) {
        let k = libm::floor((tau - self.range.0) / self.bin_width);
        if k >= 0.0 && (k as usize) < self.counts.len() {
            self.counts[k as usize] += 1;
        }
    }

    /// Adds another histogram with the same layout.
    pub fn merge(&mut self, other: &CoincidenceHistogram) -> Result<(), EventsError> {
        if self.counts.len() != other.counts.len() || self.range != other.range || self.bin_width != other.bin_width {
            return Err(EventsError::RangeNotDivisible);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventsError {
    Config(ConfigError),
    TraceStepTooCoarse { step: f64, limit: f64 },
    /// Trace generation implements the Lorentzian (exponential γ) line only.
    UnsupportedLineshape,
    RangeNotDivisible,
    DurationMismatch,
    InvalidStream,
    EmptyNearWindow,
    /// The far window needs at least ten bins.
    FarWindowTooSmall { bins: usize },
    EmptyFarWindow,
}

impl fmt::Display for EventsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventsError::Config(e) => write!(f, "invalid config: {e}"),
            EventsError::TraceStepTooCoarse { step, limit } => {
                write!(f, "trace step {step:e} s exceeds coherence_time/10 = {limit:e} s")
            }
            EventsError::UnsupportedLineshape => f.write_str("intensity traces require the lorentzian lineshape"),
            EventsError::RangeNotDivisible => f.write_str("histogram range is not a whole number of bins"),
            EventsError::DurationMismatch => f.write_str("start and stop streams cover different durations"),
            EventsError::InvalidStream => f.write_str("timestamps must be strictly increasing within [0, duration]"),
            EventsError::EmptyNearWindow => f.write_str("near window contains no bins"),
            EventsError::FarWindowTooSmall { bins } => {
                write!(f, "far window has {bins} bins, needs at least 10")
            }
            EventsError::EmptyFarWindow => f.write_str("far window is empty"),
        }
    }
}

impl core::error::Error for EventsError {}

impl From<ConfigError> for EventsError {
    fn from(e: ConfigError) -> Self {
        EventsError::Config(e)
    }
}

/// Complex OU process with exact transitions between arbitrary times.
#[derive(Debug, Clone)]
pub struct OuProcess {
    tau0: f64,
    time: f64,
    value: Complex64,
}

impl OuProcess {
    /// Starts in the stationary distribution at `t = 0`.
    pub fn new(tau0: f64, rng: &mut ChaCha8Rng) -> Self {
        Self {
            tau0,
            time: 0.0,
            value: complex_normal(rng),
        }
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    /// Moves to time `t ≥ now`: `a ← ρa + √(1−ρ²)·w`, `ρ = exp(−Δt/τ₀)`.
    /// Beyond 40τ₀ the old state carries weight below e⁻⁴⁰ and is dropped.
    pub fn advance_to(&mut self, t: f64, rng: &mut ChaCha8Rng) -> Complex64 {
        let dt = t - self.time;
        if dt > 40.0 * self.tau0 {
            self.value = complex_normal(rng);
            self.time = t;
        } else if dt > 0.0 {
            let rho = libm::exp(-dt / self.tau0);
            let kick = libm::sqrt(-libm::expm1(-2.0 * dt / self.tau0));
            self.value = self.value * rho + complex_normal(rng) * kick;
            self.time = t;
        }
        self.value
    }
}

/// Regular samples of the OU amplitude: `n` points spaced `step` apart.
pub fn ou_samples(tau0: f64, step: f64, n: usize, stream: StreamId) -> Vec<Complex64> {
    let mut rng = stream.rng();
    let mut ou = OuProcess::new(tau0, &mut rng);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        out.push(ou.advance_to(k as f64 * step, &mut rng));
    }
    out
}

/// Source of the intensity each detector sees.
///
/// Successive calls to [`IntensityTrace::intensity`] must use
/// non-decreasing times; lazily sampled traces rely on it.
pub trait IntensityTrace {
    fn duration(&self) -> f64;
    /// Upper bound used for thinning; larger intensities are clipped to it.
    fn ceiling(&self) -> f64;
    fn intensity(&mut self, t: f64, detector: DetectorId) -> f64;
}

/// Piecewise-constant intensity on a regular grid, shared by both detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTrace {
    pub step: f64,
    pub samples: Vec<f64>,
}

impl GridTrace {
    pub fn value_at(&self, t: f64) -> f64 {
        let k = libm::floor(t / self.step).max(0.0) as usize;
        self.samples[k.min(self.samples.len() - 1)]
    }
}

impl IntensityTrace for GridTrace {
    fn duration(&self) -> f64 {
        self.step * self.samples.len() as f64
    }

    fn ceiling(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }

    fn intensity(&mut self, t: f64, _detector: DetectorId) -> f64 {
        self.value_at(t)
    }
}

/// `I(t) = |a(t)|²` sampled every `config.trace_step` over `duration`.
pub fn generate_intensity_trace(
    config: &ApparatusConfig,
    duration: f64,
    stream: StreamId,
) -> Result<GridTrace, EventsError> {
    check(config)?;
    if config.lineshape != Lineshape::Lorentzian {
        return Err(EventsError::UnsupportedLineshape);
    }
    let limit = config.coherence_time / 10.0;
    if config.trace_step > limit * (1.0 + 1e-12) {
        return Err(EventsError::TraceStepTooCoarse {
            step: config.trace_step,
            limit,
        });
    }
    let n = (libm::ceil(duration / config.trace_step) as usize).max(1);
    let samples = ou_samples(config.coherence_time, config.trace_step, n, stream)
        .into_iter()
        .map(|a| a.norm_sqr())
        .collect();
    Ok(GridTrace {
        step: config.trace_step,
        samples,
    })
}

/// Two partially correlated thermal intensities, sampled lazily.
///
/// `a₁` is an OU process and `a₂ = c·a₁ + √(1−c²)·b` with `b` an independent
/// OU process of the same τ₀, so `⟨I₁I₂⟩ = 1 + c²|γ(τ)|²`. `c²` is the
/// spatial excess for the detector positions.
#[derive(Debug, Clone)]
pub struct CorrelatedTrace {
    duration: f64,
    coupling: f64,
    residual: f64,
    shared: OuProcess,
    own: OuProcess,
    rng: ChaCha8Rng,
}

impl CorrelatedTrace {
    pub fn new(tau0: f64, duration: f64, coupling_sq: f64, stream: StreamId) -> Self {
        let c2 = coupling_sq.clamp(0.0, 1.0);
        let mut rng = stream.rng();
        let shared = OuProcess::new(tau0, &mut rng);
        let own = OuProcess::new(tau0, &mut rng);
        Self {
            duration,
            coupling: libm::sqrt(c2),
            residual: libm::sqrt(1.0 - c2),
            shared,
            own,
            rng,
        }
    }
}

impl IntensityTrace for CorrelatedTrace {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn ceiling(&self) -> f64 {
        INTENSITY_CEILING
    }

    fn intensity(&mut self, t: f64, detector: DetectorId) -> f64 {
        let a = self.shared.advance_to(t, &mut self.rng);
        match detector {
            DetectorId::D1 => a.norm_sqr(),
            DetectorId::D2 => {
                if self.residual == 0.0 {
                    return a.norm_sqr();
                }
                let b = self.own.advance_to(t, &mut self.rng);
                (a * self.coupling + b * self.residual).norm_sqr()
            }
        }
    }
}

/// Poisson detections at rate `mean_rate·I(t)` with Gaussian timing jitter
/// of standard deviation `jitter`.
pub fn thin_to_events<T: IntensityTrace + ?Sized>(
    trace: &mut T,
    mean_rate: f64,
    detector_id: DetectorId,
    jitter: f64,
    stream: StreamId,
) -> PhotonEventStream {
    let mut out = thin(trace, &[(detector_id, mean_rate)], jitter, stream);
    out.pop().unwrap()
}

/// Both detectors behind the 50/50 splitter, driven by one trace.
pub fn thin_pair<T: IntensityTrace + ?Sized>(
    trace: &mut T,
    rates: [f64; 2],
    jitter: f64,
    stream: StreamId,
) -> (PhotonEventStream, PhotonEventStream) {
    let mut out = thin(
        trace,
        &[(DetectorId::D1, rates[0]), (DetectorId::D2, rates[1])],
        jitter,
        stream,
    );
    let d2 = out.pop().unwrap();
    let d1 = out.pop().unwrap();
    (d1, d2)
}

/// Lewis–Shedler thinning of merged candidate streams, visited in time order
/// so a lazily sampled trace is queried monotonically. Jitter comes from its
/// own stream so the same seed yields the same underlying detections at any
/// jitter.
fn thin<T: IntensityTrace + ?Sized>(
    trace: &mut T,
    channels: &[(DetectorId, f64)],
    jitter: f64,
    stream: StreamId,
) -> Vec<PhotonEventStream> {
    let duration = trace.duration();
    let ceiling = trace.ceiling();
    let mut rng = stream.rng();
    let mut jitter_rng = StreamId::new(stream.seed, Domain::Jitter, stream.index).rng();
    let rates: Vec<f64> = channels.iter().map(|&(_, r)| r * ceiling).collect();
    let mut next: Vec<f64> = rates
        .iter()
        .map(|&r| if r > 0.0 { exponential(&mut rng, r) } else { f64::INFINITY })
        .collect();
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];
    loop {
        let (ch, t) = next
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if t >= duration {
            break;
        }
        let intensity = trace.intensity(t, channels[ch].0).min(ceiling);
        if uniform01(&mut rng) * ceiling < intensity {
            times[ch].push(t);
        }
        next[ch] = t + exponential(&mut rng, rates[ch]);
    }
    channels
        .iter()
        .zip(times)
        .map(|(&(id, _), ts)| {
            let mut s = PhotonEventStream {
                detector_id: id,
                timestamps: ts,
                duration,
            };
            apply_jitter(&mut s, jitter, &mut jitter_rng);
            s
        })
        .collect()
}

/// Adds Gaussian timing noise, re-sorts and drops events pushed outside
/// `[0, duration]`.
pub fn apply_jitter(stream: &mut PhotonEventStream, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma <= 0.0 {
        return;
    }
    let duration = stream.duration;
    let ts = &mut stream.timestamps;
    for t in ts.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *t += sigma * z;
    }
    ts.retain(|t| (0.0..=duration).contains(t));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
}

/// Single-armed, non-retriggerable TAC feeding an MCA.
///
/// A start event arms the converter unless it falls within `dead_time` of
/// the previous conversion. The first stop, delayed by `−range.0` when that
/// is negative, completes the conversion if it arrives within the full
/// scale; otherwise the converter times out. Starts arriving while armed are
/// ignored. The histogram holds `t_stop − t_start`.
pub fn tac_mca(
    start: &PhotonEventStream,
    stop: &PhotonEventStream,
    bin_width: f64,
    range: (f64, f64),
    dead_time: f64,
) -> Result<CoincidenceHistogram, EventsError> {
    let mut hist = CoincidenceHistogram::new(bin_width, range)?;
    if (start.duration - stop.duration).abs() > 1e-12 * start.duration.max(stop.duration) {
        return Err(EventsError::DurationMismatch);
    }
    let delay = (-range.0).max(0.0);
    let full_scale = range.1 + delay;
    let stops = &stop.timestamps;
    let mut j = 0;
    let mut ready_at = f64::NEG_INFINITY;
    for &t1 in &start.timestamps {
        if t1 < ready_at {
            continue;
        }
        while j < stops.len() && stops[j] + delay < t1 {
            j += 1;
        }
        match stops.get(j) {
            Some(&t2) if t2 + delay - t1 < full_scale => {
                hist.record(t2 - t1);
                ready_at = t2 + delay + dead_time;
                j += 1;
            }
            _ => ready_at = t1 + full_scale,
        }
    }
    Ok(hist)
}

/// Bin index sets of the near (`|τ| ≤ near`) and far (`|τ| ≥ far`) windows,
/// judged by bin centres.
fn windows(hist: &CoincidenceHistogram, config: &ApparatusConfig) -> (Vec<usize>, Vec<usize>) {
    let eps = 1e-6 * hist.bin_width;
    let mut near = Vec::new();
    let mut far = Vec::new();
    for k in 0..hist.counts.len() {
        let c = hist.bin_center(k).abs();
        if c <= config.coincidence_window_near + eps {
            near.push(k);
        } else if c >= config.coincidence_window_far - eps {
            far.push(k);
        }
    }
    (near, far)
}

/// Mean counts per bin in the near window over mean counts per bin in the far window.
pub fn g2_windowed(hist: &CoincidenceHistogram, config: &ApparatusConfig) -> Result<f64, EventsError> {
    Ok(windowed_counts(hist, config)?.ratio())
}

/// Poisson standard error of [`g2_windowed`].
pub fn g2_windowed_stderr(hist: &CoincidenceHistogram, config: &ApparatusConfig) -> Result<f64, EventsError> {
    let w = windowed_counts(hist, config)?;
    let near = w.near_total as f64;
    let far = w.far_total as f64;
    if near == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(w.ratio() * libm::sqrt(1.0 / near + 1.0 / far))
}

struct WindowCounts {
    near_total: u64,
    near_bins: usize,
    far_total: u64,
    far_bins: usize,
}

impl WindowCounts {
    fn ratio(&self) -> f64 {
        (self.near_total as f64 / self.near_bins as f64) / (self.far_total as f64 / self.far_bins as f64)
    }
}

fn windowed_counts(hist: &CoincidenceHistogram, config: &ApparatusConfig) -> Result<WindowCounts, EventsError> {
    let (near, far) = windows(hist, config);
    if near.is_empty() {
        return Err(EventsError::EmptyNearWindow);
    }
    if far.is_empty() {
        return Err(EventsError::EmptyFarWindow);
    }
    if far.len() < 10 {
        return Err(EventsError::FarWindowTooSmall { bins: far.len() });
    }
    let near_total: u64 = near.iter().map(|&k| hist.counts[k]).sum();
    let far_total: u64 = far.iter().map(|&k| hist.counts[k]).sum();
    if far_total == 0 {
        return Err(EventsError::EmptyFarWindow);
    }
    Ok(WindowCounts {
        near_total,
        near_bins: near.len(),
        far_total,
        far_bins: far.len(),
    })
}

/// Expected [`g2_windowed`] for the event pipeline: the spatial coupling
/// times the jitter-smeared `|γ|²`, averaged over the bins of each window.
/// Ignores the small first-stop slope of the TAC.
pub fn predicted_g2_windowed(config: &ApparatusConfig, hist: &CoincidenceHistogram) -> Result<f64, EventsError> {
    let (near, far) = windows(hist, config);
    if near.is_empty() || far.is_empty() {
        return Err(EventsError::EmptyNearWindow);
    }
    let c2 = spatial_coupling(config);
    let sigma = core::f64::consts::SQRT_2 * config.jitter_sigma();
    let mean_excess = |bins: &[usize]| {
        bins.iter()
            .map(|&k| {
                let lo = hist.range.0 + k as f64 * hist.bin_width;
                beta_windowed(config, lo, lo + hist.bin_width, sigma)
            })
            .sum::<f64>()
            / bins.len() as f64
    };
    Ok((1.0 + c2 * mean_excess(&near)) / (1.0 + c2 * mean_excess(&far)))
}

/// Spatial excess `c²` for the event pipeline's detector positions.
pub fn spatial_coupling(config: &ApparatusConfig) -> f64 {
    aperture_averaged_coherence(config, config.event_x2 - config.event_x1)
}

/// The acquisition as a fixed number of independent segments, each an
/// independent run of the full chain. Segments may be run in any order.
#[derive(Debug, Clone)]
pub struct AcquisitionPlan {
    config: ApparatusConfig,
    seed: u64,
    coupling_sq: f64,
}

impl AcquisitionPlan {
    pub fn new(config: &ApparatusConfig, seed: u64) -> Result<Self, EventsError> {
        check(config)?;
        if config.lineshape != Lineshape::Lorentzian {
            return Err(EventsError::UnsupportedLineshape);
        }
        CoincidenceHistogram::new(config.bin_width, (config.tau_min, config.tau_max))?;
        Ok(Self {
            config: config.clone(),
            seed,
            coupling_sq: spatial_coupling(config),
        })
    }

    pub fn segment_count(&self) -> usize {
        self.config.acquisition_segments
    }

    pub fn coupling_sq(&self) -> f64 {
        self.coupling_sq
    }

    /// Simulates the detector streams of one segment.
    pub fn segment_streams(&self, segment: usize) -> (PhotonEventStream, PhotonEventStream) {
        let c = &self.config;
        let duration = c.acquisition_time / c.acquisition_segments as f64;
        let index = segment as u64;
        let mut trace = CorrelatedTrace::new(
            c.coherence_time,
            duration,
            self.coupling_sq,
            StreamId::new(self.seed, Domain::Trace, index),
        );
        thin_pair(
            &mut trace,
            [c.mean_rate_d1, c.mean_rate_d2],
            c.jitter_sigma(),
            StreamId::new(self.seed, Domain::Events, index),
        )
    }

    pub fn run_segment(&self, segment: usize) -> Result<CoincidenceHistogram, EventsError> {
        let (d1, d2) = self.segment_streams(segment);
        let c = &self.config;
        tac_mca(&d1, &d2, c.bin_width, (c.tau_min, c.tau_max), c.tac_dead_time)
    }

    /// Sums segment histograms in the order given.
    pub fn merge(&self, segments: &[CoincidenceHistogram]) -> Result<CoincidenceHistogram, EventsError> {
        let c = &self.config;
        let mut total = CoincidenceHistogram::new(c.bin_width, (c.tau_min, c.tau_max))?;
        for h in segments {
            total.merge(h)?;
        }
        Ok(total)
    }
}

/// Full acquisition, segments evaluated sequentially.
pub fn simulate_acquisition(config: &ApparatusConfig, seed: u64) -> Result<CoincidenceHistogram, EventsError> {
    let plan = AcquisitionPlan::new(config, seed)?;
    let segments = (0..plan.segment_count())
        .map(|s| plan.run_segment(s))
        .collect::<Result<Vec<_>, _>>()?;
    plan.merge(&segments)
}
