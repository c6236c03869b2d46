//! Seedable, splittable random streams.
//!
//! A stream is addressed by `(seed, domain, index)`. The seed and domain pick
//! a ChaCha8 key; the index selects one of its 2⁶⁴ independent streams. Work
//! items draw from the stream named by their own index, so results do not
//! depend on how items are scheduled across workers.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Exp1, StandardNormal};

/// What a stream is used for; keeps different consumers of one seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Field = 0x0066_6965_6c64,
    Trace = 0x0074_7261_6365,
    Events = 0x6576_656e_7473,
    Jitter = 0x6a69_7474_6572,
}

/// Identifier of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId {
    pub seed: u64,
    pub domain: Domain,
    pub index: u64,
}

impl StreamId {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        Self {
            seed,
            domain,
            index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ self.domain as u64));
        rng.set_stream(self.index);
        rng
    }
}

/// Derives an independent seed for a named sub-task of a run.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circular complex Gaussian with `E[z] = 0`, `E[|z|²] = 1`, `E[z²] = 0`.
pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Uniform on `[0, 1)` with 53 random bits.
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential variate with the given rate.
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = StreamId::new(7, Domain::Field, 3).rng().next_u64();
        let b = StreamId::new(7, Domain::Field, 3).rng().next_u64();
        let c = StreamId::new(7, Domain::Field, 4).rng().next_u64();
        let d = StreamId::new(7, Domain::Trace, 3).rng().next_u64();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn complex_normal_moments() {
        let mut rng = StreamId::new(1, Domain::Field, 0).rng();
        let n = 100_000;
        let (mut m2, mut sq) = (0.0, Complex64::new(0.0, 0.0));
        for _ in 0..n {
            let z = complex_normal(&mut rng);
            m2 += z.norm_sqr();
            sq += z * z;
        }
        let m2 = m2 / n as f64;
        let sq = sq / n as f64;
        // |z|² is Exp(1): σ of the mean is 1/√n.
        assert!((m2 - 1.0).abs() < 3.0 / (n as f64).sqrt());
        // Re and Im of z² each have variance 1/2.
        let tol = 3.0 * (0.5 / n as f64).sqrt();
        assert!(sq.re.abs() < tol && sq.im.abs() < tol);
    }
}
