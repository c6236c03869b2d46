//! Physical parameters of the experiment and the geometry derived from them.
//!
//! Everything downstream consumes an [`ApparatusConfig`] read-only, after it
//! has passed [`validate`]. Lengths are metres, times seconds, rates counts
//! per second.

use alloc::vec::Vec;
use core::fmt;

/// Intensity profile of the incoherent spot imaged onto the grating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Illumination {
    /// Uniform intensity across the illuminated diameter.
    TopHat,
}

/// Spectral lineshape of the source, fixing the temporal degree of coherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lineshape {
    /// `γ(τ) = exp(−|τ|/τ₀)`.
    Lorentzian,
    /// `γ(τ) = exp(−π τ² / (2 τ₀²))`, same `∫|γ|² dτ = τ₀` as the Lorentzian.
    Gaussian,
}

/// Full description of source, grating, propagation, detectors and
/// coincidence electronics, plus the numerical controls of the simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ApparatusConfig {
    pub wavelength: f64,
    pub groove_width: f64,
    pub groove_spacing: f64,
    pub num_slits: usize,
    /// Diameter of the incoherent image on the grating.
    pub illum_diameter: f64,
    /// Grating to detector plane distance `z`.
    pub propagation_distance: f64,
    /// Effective collimator diameter in front of each detector.
    pub detector_aperture: f64,
    pub coherence_time: f64,
    /// FWHM of the detection-chain timing jitter.
    pub timing_resolution: f64,
    /// Half-width of the "simultaneous" window.
    pub coincidence_window_near: f64,
    /// Start of the "uncorrelated" window.
    pub coincidence_window_far: f64,
    pub incidence_angle: f64,
    pub mean_rate_d1: f64,
    pub mean_rate_d2: f64,

    pub illumination: Illumination,
    pub lineshape: Lineshape,
    /// Emitters per full slit in the spatial Monte-Carlo.
    pub emitter_density: usize,
    /// Midpoint-rule sub-points across each detector aperture.
    pub aperture_points: usize,
    /// Keep the quadratic source phase `exp(iπξ²/(λz))` in the propagator.
    pub fresnel_phase: bool,
    /// Number of batches for batch-means error bars.
    pub batches: usize,
    /// Sampling step of gridded intensity traces.
    pub trace_step: f64,
    pub bin_width: f64,
    /// Lower edge of the reported interval range; `-tau_min` is the stop delay.
    pub tau_min: f64,
    pub tau_max: f64,
    pub tac_dead_time: f64,
    pub acquisition_time: f64,
    /// Independent acquisitions the event pipeline sums into one histogram.
    pub acquisition_segments: usize,
    /// Detector positions used by the event pipeline.
    pub event_x1: f64,
    pub event_x2: f64,
}

impl Default for ApparatusConfig {
    fn default() -> Self {
        Self {
            wavelength: 780e-9,
            groove_width: 0.08e-3,
            groove_spacing: 0.2e-3,
            num_slits: 5,
            illum_diameter: 1.0e-3,
            propagation_distance: 1.62,
            detector_aperture: 2.0e-3,
            coherence_time: 0.2e-9,
            timing_resolution: 1.0e-9,
            coincidence_window_near: 0.25e-9,
            coincidence_window_far: 1.3e-9,
            incidence_angle: 0.0,
            mean_rate_d1: 1.0e5,
            mean_rate_d2: 1.0e5,
            illumination: Illumination::TopHat,
            lineshape: Lineshape::Lorentzian,
            emitter_density: 32,
            aperture_points: 8,
            fresnel_phase: false,
            batches: 20,
            trace_step: 0.01e-9,
            bin_width: 0.1e-9,
            tau_min: -5.0e-9,
            tau_max: 5.0e-9,
            tac_dead_time: 0.0,
            acquisition_time: 60.0,
            acquisition_segments: 16,
            event_x1: 0.0,
            event_x2: 0.0,
        }
    }
}

impl ApparatusConfig {
    /// `λz`, the scale that converts source-plane frequencies to detector-plane lengths.
    pub fn lambda_z(&self) -> f64 {
        self.wavelength * self.propagation_distance
    }

    /// Single-detector fringe period `λz/d`.
    pub fn fringe_period(&self) -> f64 {
        self.lambda_z() / self.groove_spacing
    }

    /// First zero of the single-slit envelope, `λz/b`.
    pub fn envelope_scale(&self) -> f64 {
        self.lambda_z() / self.groove_width
    }

    /// Gaussian jitter standard deviation per detector, reading the timing
    /// resolution as a FWHM.
    pub fn jitter_sigma(&self) -> f64 {
        self.timing_resolution / FWHM_PER_SIGMA
    }

    /// Stop-channel delay that maps negative intervals into the TAC range.
    pub fn stop_delay(&self) -> f64 {
        if self.tau_min < 0.0 {
            -self.tau_min
        } else {
            0.0
        }
    }

    /// Stable 64-bit fingerprint of every parameter (FNV-1a over the bit patterns).
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        for v in [
            self.wavelength,
            self.groove_width,
            self.groove_spacing,
            self.illum_diameter,
            self.propagation_distance,
            self.detector_aperture,
            self.coherence_time,
            self.timing_resolution,
            self.coincidence_window_near,
            self.coincidence_window_far,
            self.incidence_angle,
            self.mean_rate_d1,
            self.mean_rate_d2,
            self.trace_step,
            self.bin_width,
            self.tau_min,
            self.tau_max,
            self.tac_dead_time,
            self.acquisition_time,
            self.event_x1,
            self.event_x2,
        ] {
            h.write(v.to_bits());
        }
        for n in [
            self.num_slits,
            self.emitter_density,
            self.aperture_points,
            self.batches,
            self.acquisition_segments,
        ] {
            h.write(n as u64);
        }
        h.write(self.illumination as u64);
        h.write(self.lineshape as u64);
        h.write(self.fresnel_phase as u64);
        h.finish()
    }
}

/// Ratio of FWHM to standard deviation for a Gaussian, `2√(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, word: u64) {
        for byte in word.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// A violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    NotFinite(&'static str),
    NonPositiveLength(&'static str),
    NonPositiveTime(&'static str),
    NonPositiveRate(&'static str),
    ZeroCount(&'static str),
    NegativeDeadTime,
    IncidenceAngle,
    GrooveWidth,
    WindowOrder,
    TauRange,
}

impl ConfigError {
    /// Short name of the invariant that failed.
    pub fn invariant(&self) -> &'static str {
        match self {
            ConfigError::NotFinite(_) => "finite values",
            ConfigError::NonPositiveLength(_) => "positive lengths",
            ConfigError::NonPositiveTime(_) => "positive times",
            ConfigError::NonPositiveRate(_) => "positive rates",
            ConfigError::ZeroCount(_) => "positive counts",
            ConfigError::NegativeDeadTime => "tac_dead_time >= 0",
            ConfigError::IncidenceAngle => "|incidence_angle| < pi/2",
            ConfigError::GrooveWidth => "groove_width < groove_spacing",
            ConfigError::WindowOrder => "coincidence_window_near < coincidence_window_far",
            ConfigError::TauRange => "tau_min < tau_max",
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NotFinite(field)
            | ConfigError::NonPositiveLength(field)
            | ConfigError::NonPositiveTime(field)
            | ConfigError::NonPositiveRate(field)
            | ConfigError::ZeroCount(field) => {
                write!(f, "{}: `{}` violates it", self.invariant(), field)
            }
            _ => f.write_str(self.invariant()),
        }
    }
}

impl core::error::Error for ConfigError {}

/// Returns the config unchanged if every invariant holds, else the first one violated.
pub fn validate(config: ApparatusConfig) -> Result<ApparatusConfig, ConfigError> {
    check(&config)?;
    Ok(config)
}

/// Borrowing form of [`validate`].
pub fn check(c: &ApparatusConfig) -> Result<(), ConfigError> {
    let lengths = [
        ("wavelength", c.wavelength),
        ("groove_width", c.groove_width),
        ("groove_spacing", c.groove_spacing),
        ("illum_diameter", c.illum_diameter),
        ("propagation_distance", c.propagation_distance),
        ("detector_aperture", c.detector_aperture),
    ];
    let times = [
        ("coherence_time", c.coherence_time),
        ("timing_resolution", c.timing_resolution),
        ("coincidence_window_near", c.coincidence_window_near),
        ("coincidence_window_far", c.coincidence_window_far),
        ("trace_step", c.trace_step),
        ("bin_width", c.bin_width),
        ("acquisition_time", c.acquisition_time),
    ];
    let rates = [
        ("mean_rate_d1", c.mean_rate_d1),
        ("mean_rate_d2", c.mean_rate_d2),
    ];
    let others = [
        ("incidence_angle", c.incidence_angle),
        ("tau_min", c.tau_min),
        ("tau_max", c.tau_max),
        ("tac_dead_time", c.tac_dead_time),
        ("event_x1", c.event_x1),
        ("event_x2", c.event_x2),
    ];
    for (name, v) in lengths.iter().chain(&times).chain(&rates).chain(&others) {
        if !v.is_finite() {
            return Err(ConfigError::NotFinite(name));
        }
    }
    if let Some((name, _)) = lengths.iter().find(|(_, v)| *v <= 0.0) {
        return Err(ConfigError::NonPositiveLength(name));
    }
    if let Some((name, _)) = times.iter().find(|(_, v)| *v <= 0.0) {
        return Err(ConfigError::NonPositiveTime(name));
    }
    if let Some((name, _)) = rates.iter().find(|(_, v)| *v <= 0.0) {
        return Err(ConfigError::NonPositiveRate(name));
    }
    let counts = [
        ("num_slits", c.num_slits),
        ("emitter_density", c.emitter_density),
        ("aperture_points", c.aperture_points),
        ("batches", c.batches),
        ("acquisition_segments", c.acquisition_segments),
    ];
    if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
        return Err(ConfigError::ZeroCount(name));
    }
    if c.tac_dead_time < 0.0 {
        return Err(ConfigError::NegativeDeadTime);
    }
    if c.incidence_angle.abs() >= core::f64::consts::FRAC_PI_2 {
        return Err(ConfigError::IncidenceAngle);
    }
    if c.groove_width >= c.groove_spacing {
        return Err(ConfigError::GrooveWidth);
    }
    if c.coincidence_window_near >= c.coincidence_window_far {
        return Err(ConfigError::WindowOrder);
    }
    if c.tau_min >= c.tau_max {
        return Err(ConfigError::TauRange);
    }
    Ok(())
}

/// A transmitting stretch `[left, right]` of the grating plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.left + self.right)
    }
}

/// Illuminated, transmitting parts of the grating, sorted left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitMask {
    pub intervals: Vec<Interval>,
}

impl SlitMask {
    pub fn total_width(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.left <= x && x <= iv.right)
    }
}

/// Slits centred on the grating origin, each clipped to the illuminated spot.
///
/// Slit `m` of `N` sits at `(m − (N−1)/2)·d`, so for odd `N` the middle slit
/// is at zero. Slits wholly outside the spot are dropped.
pub fn slit_mask(config: &ApparatusConfig) -> SlitMask {
    let n = config.num_slits;
    let half_spot = 0.5 * config.illum_diameter;
    let half_groove = 0.5 * config.groove_width;
    let offset = 0.5 * (n as f64 - 1.0);
    let intervals = (0..n)
        .filter_map(|m| {
            let c = (m as f64 - offset) * config.groove_spacing;
            let left = (c - half_groove).max(-half_spot);
            let right = (c + half_groove).min(half_spot);
            (right > left).then_some(Interval { left, right })
        })
        .collect();
    SlitMask { intervals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_config_is_valid() {
        assert!(validate(ApparatusConfig::default()).is_ok());
    }

    #[test]
    fn groove_width_boundary_rejected() {
        let mut c = ApparatusConfig::default();
        c.groove_width = c.groove_spacing;
        let err = validate(c).unwrap_err();
        assert_eq!(err, ConfigError::GrooveWidth);
        assert_eq!(err.invariant(), "groove_width < groove_spacing");
    }

    #[test]
    fn zero_coherence_time_rejected() {
        let c = ApparatusConfig {
            coherence_time: 0.0,
            ..Default::default()
        };
        let err = validate(c).unwrap_err();
        assert_eq!(err, ConfigError::NonPositiveTime("coherence_time"));
        assert_eq!(err.invariant(), "positive times");
    }

    #[test]
    fn window_order_and_nan_rejected() {
        let c = ApparatusConfig {
            coincidence_window_near: 2.0e-9,
            ..Default::default()
        };
        assert_eq!(check(&c), Err(ConfigError::WindowOrder));
        let c = ApparatusConfig {
            wavelength: f64::NAN,
            ..Default::default()
        };
        assert_eq!(check(&c), Err(ConfigError::NotFinite("wavelength")));
        let c = ApparatusConfig {
            num_slits: 0,
            ..Default::default()
        };
        assert_eq!(check(&c), Err(ConfigError::ZeroCount("num_slits")));
    }

    #[test]
    fn default_mask_has_five_slits() {
        let mask = slit_mask(&ApparatusConfig::default());
        assert_eq!(mask.intervals.len(), 5);
        let expected = [-0.4e-3, -0.2e-3, 0.0, 0.2e-3, 0.4e-3];
        for (iv, c) in mask.intervals.iter().zip(expected) {
            assert!((iv.center() - c).abs() < 1e-15);
            assert!((iv.width() - 0.08e-3).abs() < 1e-15);
        }
    }

    #[test]
    fn single_slit_is_centred() {
        let c = ApparatusConfig {
            num_slits: 1,
            ..Default::default()
        };
        let mask = slit_mask(&c);
        assert_eq!(mask.intervals.len(), 1);
        assert!(mask.intervals[0].center().abs() < 1e-18);
    }

    #[test]
    fn narrow_spot_clips_neighbours() {
        // Spot [-0.125, 0.125] mm: the ±0.2 mm slits span [0.16, 0.24] mm and
        // vanish; the centre slit [-0.04, 0.04] mm survives intact.
        let c = ApparatusConfig {
            illum_diameter: 0.25e-3,
            ..Default::default()
        };
        let mask = slit_mask(&c);
        assert_eq!(mask.intervals.len(), 1);
        assert!((mask.intervals[0].width() - 0.08e-3).abs() < 1e-15);

        // Spot [-0.225, 0.225] mm: neighbours clipped to [0.16, 0.225] mm.
        let c = ApparatusConfig {
            illum_diameter: 0.45e-3,
            ..Default::default()
        };
        let mask = slit_mask(&c);
        assert_eq!(mask.intervals.len(), 3);
        let right = mask.intervals[2];
        assert!((right.left - 0.16e-3).abs() < 1e-15);
        assert!((right.right - 0.225e-3).abs() < 1e-15);
        assert!((right.width() - 0.065e-3).abs() < 1e-15);
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let a = ApparatusConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.aperture_points = 9;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    proptest! {
        #[test]
        fn mask_reflection_symmetric_for_odd_n(
            half in 0usize..6,
            spot in 0.05e-3f64..3e-3,
            width_frac in 0.05f64..0.95,
        ) {
            let mut c = ApparatusConfig::default();
            c.num_slits = 2 * half + 1;
            c.illum_diameter = spot;
            c.groove_width = width_frac * c.groove_spacing;
            let mask = slit_mask(&c);
            let n = mask.intervals.len();
            for (a, b) in mask.intervals.iter().zip(mask.intervals.iter().rev()) {
                prop_assert!((a.left + b.right).abs() < 1e-15);
                prop_assert!((a.right + b.left).abs() < 1e-15);
            }
            prop_assert!(n <= c.num_slits);
        }

        #[test]
        fn mask_sorted_disjoint_and_bounded(
            n in 1usize..12,
            spot in 0.05e-3f64..3e-3,
            width_frac in 0.05f64..0.95,
        ) {
            let mut c = ApparatusConfig::default();
            c.num_slits = n;
            c.illum_diameter = spot;
            c.groove_width = width_frac * c.groove_spacing;
            let mask = slit_mask(&c);
            for w in mask.intervals.windows(2) {
                prop_assert!(w[0].right < w[1].left);
            }
            for iv in &mask.intervals {
                prop_assert!(iv.width() <= c.groove_width * (1.0 + 1e-12));
                prop_assert!(iv.left >= -0.5 * spot && iv.right <= 0.5 * spot);
            }
            prop_assert!(mask.total_width() <= n as f64 * c.groove_width * (1.0 + 1e-12));
        }
    }
}
