use proptest::prelude::*;
use thermal_hbt_core::analytic::beta_windowed;
use thermal_hbt_core::apparatus::ApparatusConfig;
use thermal_hbt_core::events::{
    apply_jitter, g2_windowed, g2_windowed_stderr, generate_intensity_trace, ou_samples, tac_mca, thin_pair,
    thin_to_events, AcquisitionPlan, CoincidenceHistogram, DetectorId, GridTrace, PhotonEventStream,
};
use thermal_hbt_core::rng::{Domain, StreamId};

const SEED: u64 = 77_001;

/// Fast-counting variant of the defaults: many coincidences per simulated second.
fn busy(rate: f64, time: f64) -> ApparatusConfig {
    ApparatusConfig {
        mean_rate_d1: rate,
        mean_rate_d2: rate,
        acquisition_time: time,
        ..ApparatusConfig::default()
    }
}

#[test]
fn ou_autocorrelation_is_exponential() {
    let tau0 = 0.2e-9;
    let step = tau0 / 20.0;
    let a = ou_samples(tau0, step, 1_000_000, StreamId::new(SEED, Domain::Trace, 0));
    let batches = 50;
    let len = a.len() / batches;
    for lag in (0..=60).step_by(5) {
        let per_batch: Vec<f64> = (0..batches)
            .map(|b| {
                let chunk = &a[b * len..(b + 1) * len];
                let num: f64 = chunk.iter().zip(&chunk[lag..]).map(|(x, y)| (y * x.conj()).re).sum();
                let den: f64 = chunk.iter().map(|x| x.norm_sqr()).sum();
                num / (chunk.len() - lag) as f64 / (den / chunk.len() as f64)
            })
            .collect();
        let mean = per_batch.iter().sum::<f64>() / batches as f64;
        let var = per_batch.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        let expected = (-(lag as f64) * step / tau0).exp();
        assert!((mean - expected).abs() <= 3.0 * se + 1e-12, "lag {lag}: {mean} vs {expected} ± {se}");
    }
}

/// All pairs with `|t₂ − t₁| < w`.
fn close_pairs(a: &[f64], b: &[f64], w: f64) -> usize {
    a.iter()
        .map(|&t| b.partition_point(|&s| s < t + w) - b.partition_point(|&s| s <= t - w))
        .sum()
}

#[test]
fn shared_trace_bunches_to_two_at_zero_delay() {
    let config = ApparatusConfig::default();
    let duration = 2e-5;
    let mut trace = generate_intensity_trace(&config, duration, StreamId::new(SEED, Domain::Trace, 1)).unwrap();
    let rate = 2e9;
    let (d1, d2) = thin_pair(&mut trace, [rate, rate], 0.0, StreamId::new(SEED, Domain::Events, 1));
    let h = trace.step;
    let w = h / 2.0;
    let count = close_pairs(&d1.timestamps, &d2.timestamps, w) as f64;
    // Conditional expectation given the sampled trace.
    let same: f64 = trace.samples.iter().map(|i| i * i).sum();
    let adjacent: f64 = trace.samples.windows(2).map(|p| p[0] * p[1]).sum();
    let expected = rate * rate * ((2.0 * h * w - w * w) * same + w * w * adjacent);
    assert!((count - expected).abs() < 3.0 * expected.sqrt(), "{count} vs {expected}");
    let mean_i = trace.samples.iter().sum::<f64>() / trace.samples.len() as f64;
    let g0 = expected / (rate * rate * mean_i * mean_i * duration * 2.0 * w);
    let g0_measured = count / (rate * rate * mean_i * mean_i * duration * 2.0 * w);
    assert!((g0 - 2.0).abs() < 0.05, "trace-level g²(0) = {g0}");
    assert!((g0_measured - 2.0).abs() < 0.05 + 3.0 * g0_measured / count.sqrt(), "{g0_measured}");
}

#[test]
fn independent_streams_give_flat_histogram() {
    let config = ApparatusConfig::default();
    let duration = 1.0;
    let mut flat = GridTrace {
        step: duration,
        samples: vec![1.0],
    };
    let d1 = thin_to_events(&mut flat, 1e6, DetectorId::D1, 0.0, StreamId::new(SEED, Domain::Events, 2));
    let d2 = thin_to_events(&mut flat, 1e6, DetectorId::D2, 0.0, StreamId::new(SEED, Domain::Events, 3));
    let h = tac_mca(&d1, &d2, config.bin_width, (config.tau_min, config.tau_max), 0.0).unwrap();
    let mean = h.total() as f64 / h.counts.len() as f64;
    assert!(mean > 50.0);
    let outliers = h.counts.iter().filter(|&&c| (c as f64 - mean).abs() > 3.0 * mean.sqrt()).count();
    // Two-sided 3σ excursions occur in 0.27% of bins; allow two of a hundred.
    assert!(outliers <= 2, "{outliers} bins beyond 3σ");
}

#[test]
fn halves_of_a_run_agree() {
    let config = busy(1e7, 0.05);
    let plan = AcquisitionPlan::new(&config, SEED).unwrap();
    let segments: Vec<CoincidenceHistogram> = (0..plan.segment_count()).map(|s| plan.run_segment(s).unwrap()).collect();
    let half = segments.len() / 2;
    let a = plan.merge(&segments[..half]).unwrap();
    let b = plan.merge(&segments[half..]).unwrap();
    let (ga, gb) = (g2_windowed(&a, &config).unwrap(), g2_windowed(&b, &config).unwrap());
    let sigma = g2_windowed_stderr(&a, &config)
        .unwrap()
        .hypot(g2_windowed_stderr(&b, &config).unwrap());
    assert!((ga - gb).abs() < 3.0 * sigma, "{ga} vs {gb} ± {sigma}");
}

#[test]
fn jitter_never_sharpens_the_peak() {
    let base = busy(1e7, 0.3);
    let plan = AcquisitionPlan::new(&ApparatusConfig { timing_resolution: 1e-30, ..base.clone() }, SEED).unwrap();
    let segments = 8;
    let raw: Vec<(PhotonEventStream, PhotonEventStream)> = (0..segments).map(|s| plan.segment_streams(s)).collect();
    let mut excess = Vec::new();
    for fwhm in [0.0f64, 0.5e-9, 1.0e-9] {
        let config = ApparatusConfig {
            timing_resolution: fwhm.max(1e-30),
            ..base.clone()
        };
        let mut total = CoincidenceHistogram::new(config.bin_width, (config.tau_min, config.tau_max)).unwrap();
        for (s, (d1, d2)) in raw.iter().enumerate() {
            let mut rng = StreamId::new(SEED, Domain::Jitter, 1000 + s as u64).rng();
            let (mut d1, mut d2) = (d1.clone(), d2.clone());
            apply_jitter(&mut d1, config.jitter_sigma(), &mut rng);
            apply_jitter(&mut d2, config.jitter_sigma(), &mut rng);
            let h = tac_mca(&d1, &d2, config.bin_width, (config.tau_min, config.tau_max), 0.0).unwrap();
            total.merge(&h).unwrap();
        }
        excess.push(g2_windowed(&total, &config).unwrap() - 1.0);
    }
    assert!(excess[0] >= excess[1] && excess[1] >= excess[2], "{excess:?}");
}

#[test]
fn doubling_rates_keeps_windowed_g2() {
    let slow = busy(5e6, 0.1);
    let fast = busy(1e7, 0.1);
    let a = thermal_hbt_core::events::simulate_acquisition(&slow, SEED).unwrap();
    let b = thermal_hbt_core::events::simulate_acquisition(&fast, SEED).unwrap();
    let (ga, gb) = (g2_windowed(&a, &slow).unwrap(), g2_windowed(&b, &fast).unwrap());
    let sigma = g2_windowed_stderr(&a, &slow)
        .unwrap()
        .hypot(g2_windowed_stderr(&b, &fast).unwrap());
    assert!((ga - gb).abs() < 3.0 * sigma, "{ga} vs {gb} ± {sigma}");
    assert!(b.total() > 3 * a.total());
}

#[test]
fn peak_shape_follows_jitter_convolved_coherence() {
    let config = busy(1e7, 0.3);
    let plan = AcquisitionPlan::new(&config, SEED + 5).unwrap();
    let segments: Vec<_> = (0..plan.segment_count()).map(|s| plan.run_segment(s).unwrap()).collect();
    let h = plan.merge(&segments).unwrap();
    let c2 = plan.coupling_sq();
    let sigma = std::f64::consts::SQRT_2 * config.jitter_sigma();
    let delay = config.stop_delay();
    // Shape: bunching excess times the first-stop survival exp(−r₂·raw delay).
    let shape: Vec<f64> = (0..h.counts.len())
        .map(|k| {
            let lo = h.range.0 + k as f64 * h.bin_width;
            let raw = h.bin_center(k) + delay;
            (1.0 + c2 * beta_windowed(&config, lo, lo + h.bin_width, sigma)) * (-config.mean_rate_d2 * raw).exp()
        })
        .collect();
    let scale = h.total() as f64 / shape.iter().sum::<f64>();
    let chi2: f64 = h
        .counts
        .iter()
        .zip(&shape)
        .map(|(&c, s)| (c as f64 - scale * s).powi(2) / (scale * s))
        .sum();
    let dof = (h.counts.len() - 1) as f64;
    assert!(chi2 / dof < 1.4, "χ²/dof = {}", chi2 / dof);

    // Predicted RMS width of the excess: Laplace variance τ₀²/2 plus twice the jitter variance.
    let width = |s: f64| {
        let lo = -5e-9;
        let n = 2000;
        let dt = 10e-9 / n as f64;
        let (mut m0, mut m2) = (0.0, 0.0);
        for k in 0..n {
            let t = lo + (k as f64 + 0.5) * dt;
            let v = beta_windowed(&config, t - dt / 2.0, t + dt / 2.0, s);
            m0 += v;
            m2 += v * t * t;
        }
        (m2 / m0).sqrt()
    };
    let expected = (config.coherence_time.powi(2) / 2.0 + sigma * sigma).sqrt();
    assert!((width(sigma) - expected).abs() < 0.02 * expected, "{} vs {expected}", width(sigma));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_tac_equals_nearest_forward_pairs(
        offsets in prop::collection::vec(prop::option::of(-6e-9f64..6e-9), 10),
        extra in prop::collection::vec(prop::option::of(-6e-9f64..6e-9), 10),
    ) {
        let (bin, range) = (0.1e-9, (-5e-9, 5e-9));
        let starts: Vec<f64> = (0..10).map(|k| 1e-6 + k as f64 * 100e-9).collect();
        let mut stops: Vec<f64> = Vec::new();
        for (k, &t) in starts.iter().enumerate() {
            stops.extend(offsets[k].map(|o| t + o));
            stops.extend(extra[k].map(|o| t + o));
        }
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        let duration = 2e-6;
        let d1 = PhotonEventStream::new(DetectorId::D1, starts.clone(), duration).unwrap();
        let d2 = PhotonEventStream::new(DetectorId::D2, stops.clone(), duration).unwrap();
        let h = tac_mca(&d1, &d2, bin, range, 0.0).unwrap();

        let mut oracle = vec![0u64; 100];
        for &t in &starts {
            let nearest = stops
                .iter()
                .map(|&s| s - t)
                .filter(|&tau| tau >= range.0 && tau < range.1)
                .min_by(f64::total_cmp);
            if let Some(tau) = nearest {
                let k = ((tau - range.0) / bin).floor() as usize;
                oracle[k.min(99)] += 1;
            }
        }
        prop_assert_eq!(h.counts, oracle);
    }
}
