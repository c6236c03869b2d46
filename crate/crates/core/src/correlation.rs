//! Monte-Carlo estimation of the equal-time `g²(x₁, x₂)` along the three
//! scan geometries, with batch-means error bars.
//!
//! Every realization draws from its own random stream, and realizations are
//! grouped into a fixed number of contiguous batches. A batch is the unit of
//! work: callers may evaluate batches in any order or in parallel and hand
//! them to [`ScanPlan::finish`], which reduces them in index order.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::analytic::{beta_spatial, g2_analytic, g2_finite_aperture_pairs};
use crate::apparatus::{check, slit_mask, ApparatusConfig, ConfigError};
use crate::field::{aperture_offsets, detect, emitter_grid, FieldError, Propagator, SampledPlane};
use crate::quad::pairwise_sum;
use crate::rng::{complex_normal, Domain, StreamId};

/// Which detector moves, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// D1 parked at `fixed_position`, D2 at each scan position.
    FixedD1,
    /// D1 at `−x`, D2 at `+x`.
    CounterScan,
    /// Both detectors at `x`.
    CoScan,
}

impl ScanMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScanMode::FixedD1 => "fixed",
            ScanMode::CounterScan => "counter",
            ScanMode::CoScan => "coscan",
        }
    }
}

/// A requested g² scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub mode: ScanMode,
    pub positions: Vec<f64>,
    pub ensemble_size: usize,
    pub fixed_position: f64,
}

/// Symmetric grid `{i·step : |i·step| ≤ half_range}`.
pub fn scan_grid(half_range: f64, step: f64) -> Vec<f64> {
    let n = libm::floor(half_range / step + 1e-9) as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

impl ScanSpec {
    /// D2 through ±10 mm in 0.5 mm steps with D1 at the origin.
    pub fn default_fixed(ensemble_size: usize) -> Self {
        Self {
            mode: ScanMode::FixedD1,
            positions: scan_grid(10e-3, 0.5e-3),
            ensemble_size,
            fixed_position: 0.0,
        }
    }

    /// Opposite-direction scan through ±10 mm in 0.25 mm steps.
    pub fn default_counter(ensemble_size: usize) -> Self {
        Self {
            mode: ScanMode::CounterScan,
            positions: scan_grid(10e-3, 0.25e-3),
            ensemble_size,
            fixed_position: 0.0,
        }
    }

    /// Same-direction scan through ±10 mm in 0.5 mm steps.
    pub fn default_coscan(ensemble_size: usize) -> Self {
        Self {
            mode: ScanMode::CoScan,
            positions: scan_grid(10e-3, 0.5e-3),
            ensemble_size,
            fixed_position: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), CorrelationError> {
        if self.ensemble_size < 2 {
            return Err(CorrelationError::InvalidSpec("ensemble_size >= 2"));
        }
        if self.positions.is_empty() {
            return Err(CorrelationError::InvalidSpec("positions non-empty"));
        }
        if self.positions.iter().any(|x| !x.is_finite()) || !self.fixed_position.is_finite() {
            return Err(CorrelationError::InvalidSpec("finite positions"));
        }
        if self.positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CorrelationError::InvalidSpec("positions strictly increasing"));
        }
        Ok(())
    }

    /// `(x₁, x₂)` detector centres for every scan position.
    pub fn detector_pairs(&self) -> Vec<(f64, f64)> {
        self.positions
            .iter()
            .map(|&x| match self.mode {
                ScanMode::FixedD1 => (self.fixed_position, x),
                ScanMode::CounterScan => (-x, x),
                ScanMode::CoScan => (x, x),
            })
            .collect()
    }
}

/// Provenance of a result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultMeta {
    pub spec: ScanSpec,
    pub config_hash: u64,
    pub seed: u64,
}

/// Estimated g² curve with uncertainties and first-order profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub positions: Vec<f64>,
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
    pub singles_d1: Vec<f64>,
    pub singles_d2: Vec<f64>,
    /// D2 singles profile at the grating's first-order spatial frequency.
    pub singles_line: SpectralLine,
    pub meta: ResultMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationError {
    Config(ConfigError),
    InvalidSpec(&'static str),
    /// Fewer realizations than batches.
    EnsembleTooSmall { ensemble: usize, batches: usize },
    Field(FieldError),
    /// Result arrays, or paired scans, do not line up.
    MismatchedGrids,
}

impl fmt::Display for CorrelationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationError::Config(e) => write!(f, "invalid config: {e}"),
            CorrelationError::InvalidSpec(what) => write!(f, "invalid scan spec: {what}"),
            CorrelationError::EnsembleTooSmall { ensemble, batches } => {
                write!(f, "ensemble size {ensemble} is smaller than the batch count {batches}")
            }
            CorrelationError::Field(e) => write!(f, "{e}"),
            CorrelationError::MismatchedGrids => f.write_str("mismatched grids"),
        }
    }
}

impl core::error::Error for CorrelationError {}

impl From<ConfigError> for CorrelationError {
    fn from(e: ConfigError) -> Self {
        CorrelationError::Config(e)
    }
}

impl From<FieldError> for CorrelationError {
    fn from(e: FieldError) -> Self {
        CorrelationError::Field(e)
    }
}

/// Per-pair sums over one batch of realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSums {
    pub realizations: usize,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s12: Vec<f64>,
}

/// Reduced statistics for a list of detector pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStatistics {
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
    pub singles_d1: Vec<f64>,
    pub singles_d2: Vec<f64>,
    pub singles_line: SpectralLine,
}

/// Everything needed to evaluate realizations for a fixed set of detector pairs.
#[derive(Debug, Clone)]
pub struct ScanPlan {
    config: ApparatusConfig,
    seed: u64,
    ensemble: usize,
    pairs: Vec<(f64, f64)>,
    propagator: Propagator,
    emitters: usize,
    /// Distinct detector centres, sorted.
    centres: Vec<f64>,
    /// Index into `centres` of each pair's two detectors.
    pair_index: Vec<(usize, usize)>,
}

impl ScanPlan {
    pub fn new(config: &ApparatusConfig, spec: &ScanSpec, seed: u64) -> Result<Self, CorrelationError> {
        spec.validate()?;
        Self::for_pairs(config, spec.detector_pairs(), spec.ensemble_size, seed)
    }

    /// Plan for arbitrary `(x₁, x₂)` pairs.
    pub fn for_pairs(
        config: &ApparatusConfig,
        pairs: Vec<(f64, f64)>,
        ensemble: usize,
        seed: u64,
    ) -> Result<Self, CorrelationError> {
        check(config)?;
        if ensemble < 2 {
            return Err(CorrelationError::InvalidSpec("ensemble_size >= 2"));
        }
        if ensemble < config.batches {
            return Err(CorrelationError::EnsembleTooSmall {
                ensemble,
                batches: config.batches,
            });
        }
        let mut centres: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        sort_dedup(&mut centres);
        let find = |x: f64| centres.partition_point(|&c| c < x);
        let pair_index = pairs.iter().map(|&(a, b)| (find(a), find(b))).collect();

        let offsets = aperture_offsets(config);
        let mut points: Vec<f64> = centres
            .iter()
            .flat_map(|&c| offsets.iter().map(move |o| c + o))
            .collect();
        sort_dedup(&mut points);

        let mask = slit_mask(config);
        let emitters = emitter_grid(config, &mask);
        let propagator = Propagator::new(config, &emitters, &points);
        Ok(Self {
            config: config.clone(),
            seed,
            ensemble,
            pairs,
            propagator,
            emitters: emitters.len(),
            centres,
            pair_index,
        })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn batch_count(&self) -> usize {
        self.config.batches
    }

    /// Realization indices `[start, end)` belonging to `batch`.
    pub fn batch_range(&self, batch: usize) -> (usize, usize) {
        let b = self.config.batches;
        (batch * self.ensemble / b, (batch + 1) * self.ensemble / b)
    }

    /// Accumulates `I₁`, `I₂` and `I₁I₂` for every pair over one batch.
    pub fn run_batch(&self, batch: usize) -> Result<BatchSums, CorrelationError> {
        let (start, end) = self.batch_range(batch);
        let n_pairs = self.pairs.len();
        let mut sums = BatchSums {
            realizations: end - start,
            s1: vec![0.0; n_pairs],
            s2: vec![0.0; n_pairs],
            s12: vec![0.0; n_pairs],
        };
        let mut amplitudes = Vec::with_capacity(self.emitters);
        let mut plane = SampledPlane::new(
            self.propagator.points().to_vec(),
            vec![Complex64::new(0.0, 0.0); self.propagator.points().len()],
        )?;
        let mut intensity = vec![0.0; self.centres.len()];
        for r in start..end {
            let mut rng = StreamId::new(self.seed, Domain::Field, r as u64).rng();
            amplitudes.clear();
            amplitudes.extend((0..self.emitters).map(|_| complex_normal(&mut rng)));
            self.propagator.apply_into(&amplitudes, &mut plane.amplitudes);
            for (slot, &c) in intensity.iter_mut().zip(&self.centres) {
                *slot = detect(&plane, &self.config, c)?.intensity;
            }
            for (p, &(i1, i2)) in self.pair_index.iter().enumerate() {
                let (a, b) = (intensity[i1], intensity[i2]);
                sums.s1[p] += a;
                sums.s2[p] += b;
                sums.s12[p] += a * b;
            }
        }
        Ok(sums)
    }

    /// Ratio-of-means g² with batch-means standard errors.
    pub fn finish(&self, batches: &[BatchSums]) -> Result<PairStatistics, CorrelationError> {
        let n_pairs = self.pairs.len();
        if batches.len() != self.config.batches || batches.iter().any(|b| b.s1.len() != n_pairs) {
            return Err(CorrelationError::MismatchedGrids);
        }
        let total: usize = batches.iter().map(|b| b.realizations).sum();
        let n = total as f64;
        let nb = batches.len() as f64;
        let mut out = PairStatistics {
            g2: Vec::with_capacity(n_pairs),
            stderr: Vec::with_capacity(n_pairs),
            singles_d1: Vec::with_capacity(n_pairs),
            singles_d2: Vec::with_capacity(n_pairs),
            singles_line: SpectralLine::default(),
        };
        let mut column = Vec::with_capacity(batches.len());
        for p in 0..n_pairs {
            let mut reduce = |f: &dyn Fn(&BatchSums) -> f64| {
                column.clear();
                column.extend(batches.iter().map(f));
                pairwise_sum(&column)
            };
            let m1 = reduce(&|b| b.s1[p]) / n;
            let m2 = reduce(&|b| b.s2[p]) / n;
            let m12 = reduce(&|b| b.s12[p]) / n;
            let per_batch: Vec<f64> = batches
                .iter()
                .map(|b| {
                    let k = b.realizations as f64;
                    (b.s12[p] / k) / ((b.s1[p] / k) * (b.s2[p] / k))
                })
                .collect();
            let mean = pairwise_sum(&per_batch) / nb;
            let dev: Vec<f64> = per_batch.iter().map(|g| (g - mean) * (g - mean)).collect();
            let var_of_mean = if batches.len() > 1 {
                pairwise_sum(&dev) / (nb * (nb - 1.0))
            } else {
                0.0
            };
            out.g2.push(m12 / (m1 * m2));
            out.stderr.push(libm::sqrt(var_of_mean));
            out.singles_d1.push(m1);
            out.singles_d2.push(m2);
        }
        let x2: Vec<f64> = self.pairs.iter().map(|p| p.1).collect();
        let profiles: Vec<Vec<f64>> = batches
            .iter()
            .map(|b| b.s2.iter().map(|s| s / b.realizations as f64).collect())
            .collect();
        out.singles_line = spectral_line(&x2, &out.singles_d2, &profiles, 1.0 / self.config.fringe_period());
        Ok(out)
    }

    /// Runs every batch in order on the current thread.
    pub fn run_all(&self) -> Result<PairStatistics, CorrelationError> {
        let batches = (0..self.batch_count())
            .map(|b| self.run_batch(b))
            .collect::<Result<Vec<_>, _>>()?;
        self.finish(&batches)
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

/// Attaches positions and provenance to pair statistics.
pub fn assemble_result(config: &ApparatusConfig, spec: &ScanSpec, seed: u64, stats: PairStatistics) -> CorrelationResult {
    CorrelationResult {
        positions: spec.positions.clone(),
        g2: stats.g2,
        stderr: stats.stderr,
        singles_d1: stats.singles_d1,
        singles_d2: stats.singles_d2,
        singles_line: stats.singles_line,
        meta: ResultMeta {
            spec: spec.clone(),
            config_hash: config.fingerprint(),
            seed,
        },
    }
}

/// Estimates g² along `spec`, evaluating batches sequentially.
pub fn estimate_g2(config: &ApparatusConfig, spec: &ScanSpec, seed: u64) -> Result<CorrelationResult, CorrelationError> {
    let plan = ScanPlan::new(config, spec, seed)?;
    let stats = plan.run_all()?;
    Ok(assemble_result(config, spec, seed, stats))
}

/// A local maximum of the smoothed g² curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
}

/// Three-point moving average; end points average their two available samples.
pub fn smooth3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Local maxima of the 3-point smoothed curve whose topographic prominence
/// exceeds twice the median standard error, refined by a parabola through
/// the maximum and its neighbours. Sorted by position.
pub fn extract_peaks(result: &CorrelationResult) -> Vec<Peak> {
    find_peaks(&result.positions, &result.g2, 2.0 * median(&result.stderr))
}

/// [`extract_peaks`] on bare arrays with an explicit prominence threshold.
pub fn find_peaks(positions: &[f64], values: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = values.len();
    if n < 3 || positions.len() != n {
        return Vec::new();
    }
    let y = smooth3(values);
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let base_left = y[..i].iter().rev().take_while(|&&v| v <= y[i]).fold(y[i], |m, &v| m.min(v));
        let base_right = y[i + 1..].iter().take_while(|&&v| v <= y[i]).fold(y[i], |m, &v| m.min(v));
        let prominence = y[i] - base_left.max(base_right);
        if prominence <= min_prominence {
            continue;
        }
        peaks.push(parabolic_vertex(
            (positions[i - 1], y[i - 1]),
            (positions[i], y[i]),
            (positions[i + 1], y[i + 1]),
        ));
    }
    peaks
}

fn parabolic_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Peak {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let (x2, y2) = c;
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let qa = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let qb = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if qa >= 0.0 || !qa.is_finite() {
        return Peak { position: x1, height: y1 };
    }
    let qc = y1 - qa * x1 * x1 - qb * x1;
    let xv = (-qb / (2.0 * qa)).clamp(x0, x2);
    Peak {
        position: xv,
        height: qa * xv * xv + qb * xv + qc,
    }
}

/// Zero-to-first-order spacing: the peak nearest the origin is order zero;
/// the tallest peak on each side of it is first order. Averages the sides
/// that exist.
pub fn peak_spacing(peaks: &[Peak]) -> Option<f64> {
    let zero = peaks
        .iter()
        .min_by(|a, b| a.position.abs().total_cmp(&b.position.abs()))?;
    let tallest = |side: &dyn Fn(&Peak) -> bool| {
        peaks
            .iter()
            .filter(|p| side(p))
            .max_by(|a, b| a.height.total_cmp(&b.height))
            .map(|p| (p.position - zero.position).abs())
    };
    let left = tallest(&|p: &Peak| p.position < zero.position);
    let right = tallest(&|p: &Peak| p.position > zero.position);
    match (left, right) {
        (Some(l), Some(r)) => Some(0.5 * (l + r)),
        (Some(s), None) | (None, Some(s)) => Some(s),
        (None, None) => None,
    }
}

/// Agreement between a Monte-Carlo scan and the closed-form oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    /// Against the finite-aperture law with excess `β_spatial` at zero separation.
    pub chi2_per_dof: f64,
    pub max_sigma_deviation: f64,
    /// Against the point-detector law scaled by `β_spatial`; diagnostic only.
    pub scalar_law_chi2_per_dof: f64,
    /// FixedD1 spacing over CounterScan spacing, when both scans are given.
    pub peak_spacing_ratio: Option<f64>,
}

/// Compares `result` to the finite-aperture oracle. With `partner`, one of
/// the two must be a FixedD1 scan and the other a CounterScan.
pub fn compare_to_oracle(
    result: &CorrelationResult,
    config: &ApparatusConfig,
    partner: Option<&CorrelationResult>,
) -> Result<OracleReport, CorrelationError> {
    let n = result.positions.len();
    if n == 0 || result.g2.len() != n || result.stderr.len() != n || result.meta.spec.positions != result.positions {
        return Err(CorrelationError::MismatchedGrids);
    }
    check(config)?;
    let pairs = result.meta.spec.detector_pairs();
    let oracle = g2_finite_aperture_pairs(config, &pairs, 1.0);
    let beta = beta_spatial(config);
    let scalar: Vec<f64> = pairs.iter().map(|&(a, b)| g2_analytic(config, a, b, beta)).collect();

    let (chi2, max_dev) = chi_square(&result.g2, &result.stderr, &oracle);
    let (scalar_chi2, _) = chi_square(&result.g2, &result.stderr, &scalar);

    let peak_spacing_ratio = match partner {
        None => None,
        Some(other) => {
            let (fixed, counter) = match (result.meta.spec.mode, other.meta.spec.mode) {
                (ScanMode::FixedD1, ScanMode::CounterScan) => (result, other),
                (ScanMode::CounterScan, ScanMode::FixedD1) => (other, result),
                _ => return Err(CorrelationError::MismatchedGrids),
            };
            let f = peak_spacing(&extract_peaks(fixed));
            let c = peak_spacing(&extract_peaks(counter));
            match (f, c) {
                (Some(f), Some(c)) if c > 0.0 => Some(f / c),
                _ => None,
            }
        }
    };
    Ok(OracleReport {
        chi2_per_dof: chi2 / n as f64,
        max_sigma_deviation: max_dev,
        scalar_law_chi2_per_dof: scalar_chi2 / n as f64,
        peak_spacing_ratio,
    })
}

fn chi_square(values: &[f64], sigma: &[f64], expected: &[f64]) -> (f64, f64) {
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for ((v, s), e) in values.iter().zip(sigma).zip(expected) {
        let r = v - e;
        let z = if r == 0.0 { 0.0 } else { r.abs() / s };
        total += z * z;
        worst = worst.max(z);
    }
    (total, worst)
}

/// Fraction of points with `|g² − mean g²| ≤ k·stderr`.
pub fn flat_fraction(result: &CorrelationResult, k: f64) -> f64 {
    let n = result.g2.len();
    if n == 0 {
        return 0.0;
    }
    let mean = pairwise_sum(&result.g2) / n as f64;
    let ok = result
        .g2
        .iter()
        .zip(&result.stderr)
        .filter(|(g, s)| (*g - mean).abs() <= k * *s)
        .count();
    ok as f64 / n as f64
}

/// Fourier amplitude of a profile at one frequency and the sampling noise
/// of that amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralLine {
    pub frequency: f64,
    pub amplitude: f64,
    /// RMS of the amplitude under pure noise, from the median batch scatter.
    pub noise_floor: f64,
}

impl SpectralLine {
    pub fn ratio(&self) -> f64 {
        if self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude / self.noise_floor
        }
    }
}

/// `n⁻¹ Σ (vᵢ − v̄) exp(−2πi·f·xᵢ)`.
pub fn fourier_coefficient(positions: &[f64], values: &[f64], frequency: f64) -> Complex64 {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, v) in positions.iter().zip(values) {
        acc += Complex64::cis(-2.0 * core::f64::consts::PI * frequency * x) * (v - mean);
    }
    acc / n
}

/// Line amplitude of `mean` with a noise floor from the batch profiles.
///
/// Each batch coefficient deviates from the pooled one by a circular
/// Gaussian whose modulus is Rayleigh distributed, median `s·√(ln 2)` for
/// mean square `s²`. The pooled coefficient's noise is that scatter over
/// `√(B − 1)`.
pub fn spectral_line(positions: &[f64], mean: &[f64], batches: &[Vec<f64>], frequency: f64) -> SpectralLine {
    let pooled = fourier_coefficient(positions, mean, frequency);
    let scatter: Vec<f64> = batches
        .iter()
        .map(|b| (fourier_coefficient(positions, b, frequency) - pooled).norm())
        .collect();
    let b = batches.len() as f64;
    let noise_floor = if batches.len() > 1 {
        median(&scatter) / libm::sqrt(core::f64::consts::LN_2 * (b - 1.0))
    } else {
        f64::INFINITY
    };
    SpectralLine {
        frequency,
        amplitude: pooled.norm(),
        noise_floor,
    }
}

/// Fringe visibility of a g² curve under both common conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    /// `g²max − 1`.
    pub excess: f64,
    /// `(max − min)/(max + min)`.
    pub contrast: f64,
}

pub fn visibility(g2: &[f64]) -> Visibility {
    let max = g2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = g2.iter().copied().fold(f64::INFINITY, f64::min);
    Visibility {
        excess: max - 1.0,
        contrast: (max - min) / (max + min),
    }
}
