use num_complex::Complex64;
use proptest::prelude::*;
use thermal_hbt_core::analytic::mutual_coherence;
use thermal_hbt_core::apparatus::{slit_mask, ApparatusConfig};
use thermal_hbt_core::correlation::spectral_line;
use thermal_hbt_core::field::{emitter_grid, propagate, sample_field, Propagator};
use thermal_hbt_core::rng::{Domain, StreamId};

const SEED: u64 = 0x5eed_f1e1d;

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn amplitudes_are_unit_circular_gaussian() {
    let config = ApparatusConfig::default();
    let mask = slit_mask(&config);
    let mut power = Vec::new();
    let mut square_re = Vec::new();
    let mut square_im = Vec::new();
    let mut re = Vec::new();
    for r in 0..700 {
        let f = sample_field(&config, &mask, StreamId::new(SEED, Domain::Field, r));
        assert_eq!(f.amplitudes.len(), f.emitter_positions.len());
        for a in &f.amplitudes {
            power.push(a.norm_sqr());
            let sq = a * a;
            square_re.push(sq.re);
            square_im.push(sq.im);
            re.push(a.re);
        }
    }
    assert!(power.len() >= 100_000);
    let (p, _) = mean_and_stderr(&power);
    assert!((p - 1.0).abs() < 0.01, "mean |a|² = {p}");
    for xs in [&square_re, &square_im, &re] {
        let (m, se) = mean_and_stderr(xs);
        assert!(m.abs() < 3.0 * se, "mean {m} ± {se}");
    }
}

#[test]
fn ensemble_coherence_matches_van_cittert_zernike() {
    let config = ApparatusConfig::default();
    let mask = slit_mask(&config);
    let pairs = [(0.0, 1e-3), (0.0, 3.16e-3), (0.0, 6.32e-3), (-2e-3, 2e-3), (-5e-3, 4e-3)];
    let points: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let n = 10_000;
    let fields: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            let f = sample_field(&config, &mask, StreamId::new(SEED, Domain::Field, r));
            propagate(&f, &config, &points)
        })
        .collect();
    for (p, &(x1, x2)) in pairs.iter().enumerate() {
        let i1: Vec<f64> = fields.iter().map(|e| e[2 * p].norm_sqr()).collect();
        let i2: Vec<f64> = fields.iter().map(|e| e[2 * p + 1].norm_sqr()).collect();
        let norm = (mean_and_stderr(&i1).0 * mean_and_stderr(&i2).0).sqrt();
        let cross: Vec<Complex64> = fields.iter().map(|e| e[2 * p] * e[2 * p + 1].conj() / norm).collect();
        let (re, se_re) = mean_and_stderr(&cross.iter().map(|z| z.re).collect::<Vec<_>>());
        let (im, se_im) = mean_and_stderr(&cross.iter().map(|z| z.im).collect::<Vec<_>>());
        let mu = mutual_coherence(&config, x1, x2);
        assert!((re - mu.re).abs() < 3.0 * se_re + 5e-3, "pair {p}: re {re} vs {} ± {se_re}", mu.re);
        assert!((im - mu.im).abs() < 3.0 * se_im + 5e-3, "pair {p}: im {im} vs {} ± {se_im}", mu.im);
    }
}

#[test]
fn ensemble_intensity_profile_is_fringe_free() {
    let config = ApparatusConfig::default();
    let mask = slit_mask(&config);
    let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25e-3).collect();
    let (batches, per_batch) = (20, 500);
    let mut profiles = vec![vec![0.0; xs.len()]; batches];
    for (b, profile) in profiles.iter_mut().enumerate() {
        for r in 0..per_batch {
            let f = sample_field(&config, &mask, StreamId::new(SEED, Domain::Field, (b * per_batch + r) as u64));
            for (m, e) in profile.iter_mut().zip(propagate(&f, &config, &xs)) {
                *m += e.norm_sqr() / per_batch as f64;
            }
        }
    }
    let mean: Vec<f64> = (0..xs.len())
        .map(|i| profiles.iter().map(|p| p[i]).sum::<f64>() / batches as f64)
        .collect();
    let line = spectral_line(&xs, &mean, &profiles, 1.0 / config.fringe_period());
    assert!(line.ratio() <= 5.0, "{line:?}");
}

/// `Σⱼ Pⱼ(u)Pⱼ*(v)` from the propagator's columns.
fn discrete_coherence(config: &ApparatusConfig, u: f64, v: f64) -> Complex64 {
    let emitters = emitter_grid(config, &slit_mask(config));
    let prop = Propagator::new(config, &emitters, &[u, v]);
    let mut total = Complex64::new(0.0, 0.0);
    let mut unit = vec![Complex64::new(0.0, 0.0); emitters.len()];
    for j in 0..emitters.len() {
        unit[j] = Complex64::new(1.0, 0.0);
        let e = prop.apply(&unit);
        total += e[0] * e[1].conj();
        unit[j] = Complex64::new(0.0, 0.0);
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fresnel_phase_leaves_second_order_statistics_unchanged(u in -12e-3f64..12e-3, v in -12e-3f64..12e-3) {
        let plain = ApparatusConfig::default();
        let fresnel = ApparatusConfig { fresnel_phase: true, ..plain.clone() };
        let a = discrete_coherence(&plain, u, v);
        let b = discrete_coherence(&fresnel, u, v);
        prop_assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
    }
}
