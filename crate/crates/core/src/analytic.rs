//! Closed-form predictions for every quantity the simulators measure.
//!
//! The far-field mutual coherence of the incoherent slit source follows
//! from van Cittert–Zernike: the normalised Fourier transform of the mask's
//! intensity profile. The second-order correlation of circular Gaussian
//! light is `g² = 1 + β|μ|²`, with `β` collecting the degradation from
//! finite detector apertures and finite time resolution.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::apparatus::{slit_mask, ApparatusConfig, Lineshape, SlitMask};
use crate::quad::{dirichlet, normal_cdf, simpson, sinc};

/// Panels per half of the aperture-difference integral.
const APERTURE_PANELS: usize = 2000;

/// One diffraction order from the grating equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingOrder {
    pub order: i32,
    /// Diffraction angle from the grating normal.
    pub angle: f64,
    /// Position on the detection plane, `z·tan θ`.
    pub position: f64,
}

/// Propagating orders `|m| ≤ max_m` of `sin θ − sin θ₀ = mλ/d`.
pub fn grating_orders(config: &ApparatusConfig, max_m: u32) -> Vec<GratingOrder> {
    let base = libm::sin(config.incidence_angle);
    let step = config.wavelength / config.groove_spacing;
    let m = max_m as i32;
    (-m..=m)
        .filter_map(|order| {
            let s = base + order as f64 * step;
            (s.abs() <= 1.0).then(|| {
                let angle = libm::asin(s);
                GratingOrder {
                    order,
                    angle,
                    position: config.propagation_distance * libm::tan(angle),
                }
            })
        })
        .collect()
}

/// Excess-correlation law for `N` identical slits.
///
/// Stored in terms of the detector separation `Δx = x₂ − x₁`:
/// `g² − 1 = β · sinc²(πΔx/envelope_scale) · D_N²(πΔx/fringe_period)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeLaw {
    pub beta: f64,
    /// `λz/b`.
    pub envelope_scale: f64,
    /// `λz/d`.
    pub fringe_period: f64,
    pub num_slits: usize,
}

impl FringeLaw {
    /// Returns `None` unless `beta ∈ [0, 1]`.
    pub fn new(config: &ApparatusConfig, beta: f64) -> Option<Self> {
        (0.0..=1.0).contains(&beta).then(|| Self {
            beta,
            envelope_scale: config.envelope_scale(),
            fringe_period: config.fringe_period(),
            num_slits: config.num_slits,
        })
    }

    /// `|μ(Δx)|²` for unclipped slits.
    pub fn coherence_sq(&self, dx: f64) -> f64 {
        let env = sinc(PI * dx / self.envelope_scale);
        let grating = dirichlet(self.num_slits, PI * dx / self.fringe_period);
        env * env * grating * grating
    }

    pub fn excess(&self, dx: f64) -> f64 {
        self.beta * self.coherence_sq(dx)
    }

    pub fn g2(&self, x1: f64, x2: f64) -> f64 {
        1.0 + self.excess(x2 - x1)
    }
}

/// Normalised mutual coherence `⟨E(x₁)E*(x₂)⟩ / ⟨|E|²⟩` of the field
/// radiated by `mask`, in the sign convention of the field propagator.
pub fn mask_coherence(mask: &SlitMask, config: &ApparatusConfig, x1: f64, x2: f64) -> Complex64 {
    let q = 2.0 * PI * (x1 - x2) / config.lambda_z();
    let total = mask.total_width();
    if total <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let sum: Complex64 = mask
        .intervals
        .iter()
        .map(|iv| Complex64::cis(-q * iv.center()) * (iv.width() * sinc(0.5 * q * iv.width())))
        .sum();
    sum / total
}

/// Van Cittert–Zernike mutual coherence between two detector-plane points.
pub fn mutual_coherence(config: &ApparatusConfig, x1: f64, x2: f64) -> Complex64 {
    mask_coherence(&slit_mask(config), config, x1, x2)
}

/// Point-detector law `g² = 1 + β|μ(x₁, x₂)|²`, for any (possibly clipped) mask.
pub fn g2_analytic(config: &ApparatusConfig, x1: f64, x2: f64, beta: f64) -> f64 {
    1.0 + beta * mutual_coherence(config, x1, x2).norm_sqr()
}

/// Mean of `|μ(Δx + u₂ − u₁)|²` with `u₁`, `u₂` uniform across the two
/// detector apertures.
///
/// The difference `s = u₂ − u₁` has the triangular density
/// `(a − |s|)/a²` on `[−a, a]`, which reduces the double aperture
/// integral to one dimension.
pub fn aperture_averaged_coherence(config: &ApparatusConfig, dx: f64) -> f64 {
    let mask = slit_mask(config);
    aperture_average(&mask, config, dx)
}

fn aperture_average(mask: &SlitMask, config: &ApparatusConfig, dx: f64) -> f64 {
    let a = config.detector_aperture;
    let integrand = |s: f64| (a - s.abs()) / (a * a) * mask_coherence(mask, config, 0.0, dx + s).norm_sqr();
    simpson(integrand, -a, 0.0, APERTURE_PANELS) + simpson(integrand, 0.0, a, APERTURE_PANELS)
}

/// Spatial visibility factor: the aperture-averaged `|μ|²` at zero separation.
pub fn beta_spatial(config: &ApparatusConfig) -> f64 {
    aperture_averaged_coherence(config, 0.0)
}

/// Finite-aperture law `g² = 1 + β_t · ⟨|μ(x₂ − x₁ + u₂ − u₁)|²⟩`.
///
/// Its excess at zero separation is `β_t · β_spatial`; for point detectors
/// it reduces to [`g2_analytic`] with `β = β_t`.
pub fn g2_finite_aperture(config: &ApparatusConfig, x1: f64, x2: f64, beta_temporal: f64) -> f64 {
    1.0 + beta_temporal * aperture_averaged_coherence(config, x2 - x1)
}

/// Vectorised [`g2_finite_aperture`] sharing one slit mask.
pub fn g2_finite_aperture_pairs(config: &ApparatusConfig, pairs: &[(f64, f64)], beta_temporal: f64) -> Vec<f64> {
    let mask = slit_mask(config);
    pairs
        .iter()
        .map(|&(x1, x2)| 1.0 + beta_temporal * aperture_average(&mask, config, x2 - x1))
        .collect()
}

/// `|γ(τ)|²` for the configured lineshape.
pub fn temporal_coherence_sq(config: &ApparatusConfig, tau: f64) -> f64 {
    let t0 = config.coherence_time;
    match config.lineshape {
        Lineshape::Lorentzian => libm::exp(-2.0 * tau.abs() / t0),
        Lineshape::Gaussian => libm::exp(-PI * tau * tau / (t0 * t0)),
    }
}

/// Temporal visibility factor: `|γ|²` averaged over the near window
/// `|τ| ≤ coincidence_window_near`, assuming perfect timing.
pub fn beta_temporal(config: &ApparatusConfig) -> f64 {
    let t0 = config.coherence_time;
    let window = 2.0 * config.coincidence_window_near;
    match config.lineshape {
        Lineshape::Lorentzian => t0 / window * -libm::expm1(-window / t0),
        Lineshape::Gaussian => t0 / window * libm::erf(libm::sqrt(PI) * window / (2.0 * t0)),
    }
}

/// Temporal factor including detector jitter: `|γ|²` convolved with the
/// Gaussian of the start–stop difference (σ√2 for two detectors each with
/// σ = FWHM/2.355), then averaged over the near window.
pub fn beta_detection(config: &ApparatusConfig) -> f64 {
    let sigma = core::f64::consts::SQRT_2 * config.jitter_sigma();
    beta_windowed(config, -config.coincidence_window_near, config.coincidence_window_near, sigma)
}

/// Mean over `τ ∈ [lo, hi]` of `|γ|²` smeared by a zero-mean Gaussian of
/// standard deviation `sigma`.
pub fn beta_windowed(config: &ApparatusConfig, lo: f64, hi: f64, sigma: f64) -> f64 {
    let width = hi - lo;
    let t0 = config.coherence_time;
    if sigma <= 0.0 {
        let f = |t: f64| temporal_coherence_sq(config, t);
        let mut total = 0.0;
        if lo < 0.0 {
            total += simpson(f, lo, hi.min(0.0), 4000);
        }
        if hi > 0.0 {
            total += simpson(f, lo.max(0.0), hi, 4000);
        }
        return total / width;
    }
    // ∫ |γ(s)|² P(s + e ∈ [lo, hi]) ds over the support of |γ|².
    let reach = 40.0 * t0;
    let weight = |s: f64| {
        temporal_coherence_sq(config, s) * (normal_cdf((hi - s) / sigma) - normal_cdf((lo - s) / sigma))
    };
    (simpson(weight, -reach, 0.0, 8000) + simpson(weight, 0.0, reach, 8000)) / width
}
