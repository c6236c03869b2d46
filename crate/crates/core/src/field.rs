//! Stochastic thermal field at the grating and its far-field image.
//!
//! The spatially incoherent source is a set of point emitters on a uniform
//! grid inside the slit mask, each with an independent circular complex
//! Gaussian amplitude. The detector plane field is the Fraunhofer sum
//! `E(x) = Σⱼ aⱼ exp(−i 2π x ξⱼ / (λz))`, optionally with the quadratic
//! source phase restored.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::apparatus::{ApparatusConfig, SlitMask};
use crate::rng::{complex_normal, StreamId};

/// One draw of the source field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub emitter_positions: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    /// Index of the random stream the amplitudes came from.
    pub seed_tag: u64,
}

/// Aperture-integrated intensity of one detector for one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSample {
    pub position: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// The aperture needs the field at `needed`, outside `[lo, hi]`.
    GridCoverage { needed: f64, lo: f64, hi: f64 },
    /// Plane positions must be strictly increasing and match the amplitudes.
    MalformedPlane,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::GridCoverage { needed, lo, hi } => write!(
                f,
                "grid coverage: aperture point {needed:e} m outside sampled range [{lo:e}, {hi:e}] m"
            ),
            FieldError::MalformedPlane => {
                f.write_str("sampled plane positions must be strictly increasing and match amplitudes")
            }
        }
    }
}

impl core::error::Error for FieldError {}

/// Emitter positions: a uniform grid of pitch `b / density` inside every
/// mask interval, placed at interval midpoints. A clipped slit keeps the
/// pitch and gets proportionally fewer emitters (at least one).
pub fn emitter_grid(config: &ApparatusConfig, mask: &SlitMask) -> Vec<f64> {
    let density = config.emitter_density.max(1);
    let pitch = config.groove_width / density as f64;
    let mut out = Vec::new();
    for iv in &mask.intervals {
        let n = (libm::round(iv.width() / pitch) as usize).max(1);
        let step = iv.width() / n as f64;
        out.extend((0..n).map(|k| iv.left + (k as f64 + 0.5) * step));
    }
    out
}

/// Draws one field realization on the emitter grid of `mask`.
pub fn sample_field(config: &ApparatusConfig, mask: &SlitMask, stream: StreamId) -> FieldRealization {
    let emitter_positions = emitter_grid(config, mask);
    let mut rng = stream.rng();
    let amplitudes = emitter_positions
        .iter()
        .map(|_| complex_normal(&mut rng))
        .collect();
    FieldRealization {
        emitter_positions,
        amplitudes,
        seed_tag: stream.index,
    }
}

/// Precomputed emitter-to-point phase factors for a fixed geometry.
///
/// The emitter grid does not change between realizations, so the matrix is
/// built once and each realization costs one matrix-vector product.
#[derive(Debug, Clone)]
pub struct Propagator {
    points: Vec<f64>,
    emitters: usize,
    phases: Vec<Complex64>,
}

impl Propagator {
    pub fn new(config: &ApparatusConfig, emitters: &[f64], points: &[f64]) -> Self {
        let k = 2.0 * PI / config.lambda_z();
        let source_phase: Vec<Complex64> = emitters
            .iter()
            .map(|&xi| {
                if config.fresnel_phase {
                    Complex64::cis(0.5 * k * xi * xi)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            })
            .collect();
        let mut phases = Vec::with_capacity(points.len() * emitters.len());
        for &x in points {
            for (&xi, &s) in emitters.iter().zip(&source_phase) {
                phases.push(Complex64::cis(-k * x * xi) * s);
            }
        }
        Self {
            points: points.to_vec(),
            emitters: emitters.len(),
            phases,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Field at every point for the given emitter amplitudes.
    pub fn apply(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.points.len());
        self.apply_into(amplitudes, &mut out);
        out
    }

    pub fn apply_into(&self, amplitudes: &[Complex64], out: &mut Vec<Complex64>) {
        assert_eq!(amplitudes.len(), self.emitters, "amplitude count");
        out.clear();
        if self.emitters == 0 {
            out.resize(self.points.len(), Complex64::new(0.0, 0.0));
            return;
        }
        for row in self.phases.chunks_exact(self.emitters) {
            let mut re = 0.0;
            let mut im = 0.0;
            for (p, a) in row.iter().zip(amplitudes) {
                re += p.re * a.re - p.im * a.im;
                im += p.re * a.im + p.im * a.re;
            }
            out.push(Complex64::new(re, im));
        }
    }
}

/// Far-field amplitudes of `field` at `x_points`.
pub fn propagate(field: &FieldRealization, config: &ApparatusConfig, x_points: &[f64]) -> Vec<Complex64> {
    Propagator::new(config, &field.emitter_positions, x_points).apply(&field.amplitudes)
}

/// Field samples on the detection plane, positions strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPlane {
    pub positions: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

impl SampledPlane {
    pub fn new(positions: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self, FieldError> {
        if positions.len() != amplitudes.len()
            || positions.is_empty()
            || positions.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(FieldError::MalformedPlane);
        }
        Ok(Self {
            positions,
            amplitudes,
        })
    }

    /// `|E|²` at `x`: exact on grid points, linear in intensity between them.
    fn intensity_at(&self, x: f64) -> Result<f64, FieldError> {
        let pos = &self.positions;
        let (lo, hi) = (pos[0], pos[pos.len() - 1]);
        if !(lo..=hi).contains(&x) {
            return Err(FieldError::GridCoverage { needed: x, lo, hi });
        }
        let i = pos.partition_point(|&p| p < x);
        if pos[i] == x {
            return Ok(self.amplitudes[i].norm_sqr());
        }
        let (x0, x1) = (pos[i - 1], pos[i]);
        let (i0, i1) = (self.amplitudes[i - 1].norm_sqr(), self.amplitudes[i].norm_sqr());
        let t = (x - x0) / (x1 - x0);
        Ok(i0 + t * (i1 - i0))
    }
}

/// Midpoint-rule sub-point offsets across a detector aperture.
pub fn aperture_offsets(config: &ApparatusConfig) -> Vec<f64> {
    let m = config.aperture_points.max(1);
    let a = config.detector_aperture;
    (0..m)
        .map(|k| -0.5 * a + (k as f64 + 0.5) * a / m as f64)
        .collect()
}

/// Aperture-averaged intensity of a detector centred at `position`.
pub fn detect(plane: &SampledPlane, config: &ApparatusConfig, position: f64) -> Result<DetectorSample, FieldError> {
    let offsets = aperture_offsets(config);
    let mut sum = 0.0;
    for off in &offsets {
        sum += plane.intensity_at(position + off)?;
    }
    Ok(DetectorSample {
        position,
        intensity: sum / offsets.len() as f64,
    })
}
