//! Named experiments: run, write CSVs, summarise.
//!
//! Summary metrics are computed from the CSV text as written, so anyone
//! reading the CSVs back obtains the same numbers.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use thermal_hbt_core::apparatus::ApparatusConfig;
use thermal_hbt_core::correlation::{
    compare_to_oracle, extract_peaks, flat_fraction, peak_spacing, visibility, CorrelationResult, ResultMeta, ScanMode,
    ScanSpec, SpectralLine,
};
use thermal_hbt_core::events::{g2_windowed, g2_windowed_stderr, predicted_g2_windowed, spatial_coupling, CoincidenceHistogram};
use thermal_hbt_core::rng::derive_seed;

use crate::config;
use crate::csv::{read_correlation, read_histogram, write_correlation, write_histogram, CorrelationTable, HistogramTable};
use crate::error::{AppError, CsvError};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::parallel;

pub const DEFAULT_ENSEMBLE: usize = 20_000;
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SinglesScan,
    G2Fixed,
    G2Counter,
    G2Coscan,
    CoincidenceHistogram,
    FullPaper,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SinglesScan,
        Experiment::G2Fixed,
        Experiment::G2Counter,
        Experiment::G2Coscan,
        Experiment::CoincidenceHistogram,
        Experiment::FullPaper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SinglesScan => "singles-scan",
            Experiment::G2Fixed => "g2-fixed",
            Experiment::G2Counter => "g2-counter",
            Experiment::G2Coscan => "g2-coscan",
            Experiment::CoincidenceHistogram => "coincidence-histogram",
            Experiment::FullPaper => "full-paper",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub experiment: Experiment,
    pub config: ApparatusConfig,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub ensemble: usize,
}

/// Output file written by each single experiment.
pub fn output_file(experiment: Experiment) -> &'static str {
    match experiment {
        Experiment::SinglesScan => "singles_scan.csv",
        Experiment::G2Fixed => "g2_fixed.csv",
        Experiment::G2Counter => "g2_counter.csv",
        Experiment::G2Coscan => "g2_coscan.csv",
        Experiment::CoincidenceHistogram => "coincidence_histogram.csv",
        Experiment::FullPaper => MANIFEST_FILE,
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn generated_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    derive_seed(nanos, std::process::id() as u64)
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<PathBuf>,
    metrics: Vec<(String, String)>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<(), AppError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| AppError::io(&path, e))?;
        self.outputs.push(PathBuf::from(name));
        Ok(())
    }

    fn extend(&mut self, metrics: Vec<(String, String)>) {
        self.metrics.extend(metrics);
    }
}

/// Runs one experiment into `opts.out_dir` and writes `manifest.txt`.
pub fn run(opts: &RunOptions) -> Result<RunManifest, AppError> {
    let started = now();
    let dir = opts.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let (seed, seed_generated) = match opts.seed {
        Some(s) => (s, false),
        None => (generated_seed(), true),
    };
    let config = &opts.config;
    let mut w = Writer {
        dir,
        outputs: Vec::new(),
        metrics: Vec::new(),
    };
    w.write(CONFIG_FILE, &config::render(config))?;

    let scan = |mode: ScanMode| -> Result<(CorrelationResult, String), AppError> {
        let spec = match mode {
            ScanMode::FixedD1 => ScanSpec::default_fixed(opts.ensemble),
            ScanMode::CounterScan => ScanSpec::default_counter(opts.ensemble),
            ScanMode::CoScan => ScanSpec::default_coscan(opts.ensemble),
        };
        let result = parallel::estimate_g2(config, &spec, seed)?;
        let text = write_correlation(&result);
        Ok((result, text))
    };

    let e = opts.experiment;
    let mut spacings = (None, None);
    if matches!(e, Experiment::G2Fixed | Experiment::SinglesScan | Experiment::FullPaper) {
        let (result, text) = scan(ScanMode::FixedD1)?;
        if e != Experiment::G2Fixed {
            w.write(output_file(Experiment::SinglesScan), &text)?;
            w.extend(singles_metrics(&result.singles_line));
        }
        if e != Experiment::SinglesScan {
            w.write(output_file(Experiment::G2Fixed), &text)?;
            let m = scan_metrics("fixed", &read_correlation(&text)?, ScanMode::FixedD1, config)?;
            spacings.0 = metric_f64(&m, "fixed.peak_spacing_m");
            w.extend(m);
        }
    }
    if matches!(e, Experiment::G2Counter | Experiment::FullPaper) {
        let (_, text) = scan(ScanMode::CounterScan)?;
        w.write(output_file(Experiment::G2Counter), &text)?;
        let m = scan_metrics("counter", &read_correlation(&text)?, ScanMode::CounterScan, config)?;
        spacings.1 = metric_f64(&m, "counter.peak_spacing_m");
        w.extend(m);
    }
    if matches!(e, Experiment::G2Coscan | Experiment::FullPaper) {
        let (_, text) = scan(ScanMode::CoScan)?;
        w.write(output_file(Experiment::G2Coscan), &text)?;
        w.extend(scan_metrics("coscan", &read_correlation(&text)?, ScanMode::CoScan, config)?);
    }
    if matches!(e, Experiment::CoincidenceHistogram | Experiment::FullPaper) {
        let hist = parallel::simulate_acquisition(config, seed)?;
        let text = write_histogram(&hist);
        w.write(output_file(Experiment::CoincidenceHistogram), &text)?;
        w.extend(histogram_metrics(&read_histogram(&text)?, config)?);
    }
    if let (Some(f), Some(c)) = spacings {
        w.extend(vec![("spacing_ratio".into(), (f / c).to_string())]);
    }

    let mut manifest = RunManifest {
        experiment: e.name().to_string(),
        config_hash: config.fingerprint(),
        seed,
        seed_generated,
        started,
        finished: now(),
        outputs: w.outputs,
        metrics: w.metrics,
    };
    manifest.outputs.push(PathBuf::from(MANIFEST_FILE));
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.render()).map_err(|e| AppError::io(&path, e))?;
    for name in &manifest.outputs {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(AppError::io(p, std::io::ErrorKind::NotFound.into()));
        }
    }
    Ok(manifest)
}

fn metric_f64(metrics: &[(String, String)], key: &str) -> Option<f64> {
    metrics.iter().find(|(k, _)| k == key).and_then(|(_, v)| v.parse().ok())
}

/// Rebuilds a scan result from CSV columns, for the default grid of `mode`.
pub fn table_to_result(table: &CorrelationTable, mode: ScanMode, config: &ApparatusConfig) -> CorrelationResult {
    let spec = ScanSpec {
        mode,
        positions: table.positions.clone(),
        ensemble_size: 0,
        fixed_position: 0.0,
    };
    CorrelationResult {
        positions: table.positions.clone(),
        g2: table.g2.clone(),
        stderr: table.stderr.clone(),
        singles_d1: table.singles_d1.clone(),
        singles_d2: table.singles_d2.clone(),
        singles_line: SpectralLine::default(),
        meta: ResultMeta {
            spec,
            config_hash: config.fingerprint(),
            seed: 0,
        },
    }
}

/// Peak, visibility and oracle metrics of one scan, keys prefixed `prefix.`.
pub fn scan_metrics(
    prefix: &str,
    table: &CorrelationTable,
    mode: ScanMode,
    config: &ApparatusConfig,
) -> Result<Vec<(String, String)>, AppError> {
    let result = table_to_result(table, mode, config);
    let key = |k: &str| format!("{prefix}.{k}");
    let mut m = Vec::new();
    let peaks = extract_peaks(&result);
    let list: Vec<String> = peaks.iter().map(|p| p.position.to_string()).collect();
    m.push((key("peaks_m"), list.join(";")));
    if let Some(s) = peak_spacing(&peaks) {
        m.push((key("peak_spacing_m"), s.to_string()));
    }
    let v = visibility(&result.g2);
    m.push((key("g2max"), (1.0 + v.excess).to_string()));
    m.push((key("visibility_excess"), v.excess.to_string()));
    m.push((key("visibility_contrast"), v.contrast.to_string()));
    let report = compare_to_oracle(&result, config, None)?;
    m.push((key("chi2_per_dof"), report.chi2_per_dof.to_string()));
    m.push((key("max_sigma_deviation"), report.max_sigma_deviation.to_string()));
    m.push((key("scalar_law_chi2_per_dof"), report.scalar_law_chi2_per_dof.to_string()));
    if mode == ScanMode::CoScan {
        let frac = flat_fraction(&result, 3.0);
        let mean = result.g2.iter().sum::<f64>() / result.g2.len() as f64;
        m.push((key("mean_g2"), mean.to_string()));
        m.push((key("flat_fraction"), frac.to_string()));
        m.push((key("flat"), (frac >= 0.95).to_string()));
    }
    Ok(m)
}

/// First-order fringe test of the D2 singles. Uses batch data, which the CSV
/// does not carry.
pub fn singles_metrics(line: &SpectralLine) -> Vec<(String, String)> {
    vec![
        ("singles.fringe_frequency_per_m".into(), line.frequency.to_string()),
        ("singles.fringe_amplitude".into(), line.amplitude.to_string()),
        ("singles.fringe_noise_floor".into(), line.noise_floor.to_string()),
        ("singles.fringe_ratio".into(), line.ratio().to_string()),
        ("singles.fringe_free".into(), (line.ratio() <= 5.0).to_string()),
    ]
}

/// Rebuilds the histogram for the configured layout from CSV columns.
pub fn table_to_histogram(table: &HistogramTable, config: &ApparatusConfig) -> Result<CoincidenceHistogram, AppError> {
    let mut h = CoincidenceHistogram::new(config.bin_width, (config.tau_min, config.tau_max))?;
    if h.counts.len() != table.counts.len() {
        return Err(CsvError::Row {
            line: 0,
            reason: format!("{} bins, config implies {}", table.counts.len(), h.counts.len()),
        }
        .into());
    }
    h.counts.clone_from(&table.counts);
    Ok(h)
}

pub fn histogram_metrics(table: &HistogramTable, config: &ApparatusConfig) -> Result<Vec<(String, String)>, AppError> {
    let h = table_to_histogram(table, config)?;
    let g = g2_windowed(&h, config)?;
    Ok(vec![
        ("histogram.total_counts".into(), h.total().to_string()),
        ("histogram.g2_windowed".into(), g.to_string()),
        ("histogram.g2_windowed_stderr".into(), g2_windowed_stderr(&h, config)?.to_string()),
        ("histogram.g2_predicted".into(), predicted_g2_windowed(config, &h)?.to_string()),
        ("histogram.spatial_coupling".into(), spatial_coupling(config).to_string()),
        ("histogram.visibility_excess".into(), (g - 1.0).to_string()),
        ("histogram.visibility_contrast".into(), ((g - 1.0) / (g + 1.0)).to_string()),
    ])
}
