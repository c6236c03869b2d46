//! Rayon drivers for the core's batch and segment entry points.
//!
//! Work units are fixed by the core (batches of realizations, acquisition
//! segments), each with its own random stream, and results are reduced in
//! index order, so output does not depend on the number of threads.

use rayon::prelude::*;
use thermal_hbt_core::apparatus::ApparatusConfig;
use thermal_hbt_core::correlation::{assemble_result, CorrelationError, CorrelationResult, ScanPlan, ScanSpec};
use thermal_hbt_core::events::{AcquisitionPlan, CoincidenceHistogram, EventsError};

pub fn estimate_g2(config: &ApparatusConfig, spec: &ScanSpec, seed: u64) -> Result<CorrelationResult, CorrelationError> {
    let plan = ScanPlan::new(config, spec, seed)?;
    let batches = (0..plan.batch_count())
        .into_par_iter()
        .map(|b| plan.run_batch(b))
        .collect::<Result<Vec<_>, _>>()?;
    let stats = plan.finish(&batches)?;
    Ok(assemble_result(config, spec, seed, stats))
}

pub fn simulate_acquisition(config: &ApparatusConfig, seed: u64) -> Result<CoincidenceHistogram, EventsError> {
    let plan = AcquisitionPlan::new(config, seed)?;
    let segments = (0..plan.segment_count())
        .into_par_iter()
        .map(|s| plan.run_segment(s))
        .collect::<Result<Vec<_>, _>>()?;
    plan.merge(&segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
    }

    #[test]
    fn matches_sequential_scan() {
        let c = ApparatusConfig::default();
        let spec = ScanSpec::default_counter(400);
        let seq = thermal_hbt_core::correlation::estimate_g2(&c, &spec, 9).unwrap();
        for threads in [1, 3] {
            let par = pool(threads).install(|| estimate_g2(&c, &spec, 9)).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn matches_sequential_acquisition() {
        let c = ApparatusConfig {
            acquisition_time: 0.02,
            mean_rate_d1: 1e6,
            mean_rate_d2: 1e6,
            ..ApparatusConfig::default()
        };
        let seq = thermal_hbt_core::events::simulate_acquisition(&c, 4).unwrap();
        let par = pool(3).install(|| simulate_acquisition(&c, 4)).unwrap();
        assert_eq!(par, seq);
    }
}
