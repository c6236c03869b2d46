//! Flat `key = value` run summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: u64,
    pub seed: u64,
    /// True when no seed was supplied and one was drawn from the clock.
    pub seed_generated: bool,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    /// Output file names, relative to the output directory.
    pub outputs: Vec<PathBuf>,
    /// Summary metrics in insertion order.
    pub metrics: Vec<(String, String)>,
}

impl RunManifest {
    pub fn metric(&self, key: &str) -> Option<&str> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment = {}", self.experiment);
        let _ = writeln!(out, "config_hash = {:016x}", self.config_hash);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(
            out,
            "seed_source = {}",
            if self.seed_generated { "generated" } else { "given" }
        );
        let _ = writeln!(out, "started_unix = {:.3}", self.started);
        let _ = writeln!(out, "finished_unix = {:.3}", self.finished);
        let names: Vec<String> = self.outputs.iter().map(|p| p.display().to_string()).collect();
        let _ = writeln!(out, "outputs = {}", names.join(","));
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Reads any flat `key = value` file into a map.
pub fn parse_flat(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_flat_keys() {
        let m = RunManifest {
            experiment: "g2-fixed".into(),
            config_hash: 0xabc,
            seed: 42,
            seed_generated: false,
            started: 1.0,
            finished: 2.5,
            outputs: vec!["config.txt".into(), "g2_fixed.csv".into()],
            metrics: vec![("fixed.g2max".into(), "1.2".into())],
        };
        let map = parse_flat(&m.render());
        assert_eq!(map["experiment"], "g2-fixed");
        assert_eq!(map["config_hash"], "0000000000000abc");
        assert_eq!(map["seed"], "42");
        assert_eq!(map["seed_source"], "given");
        assert_eq!(map["outputs"], "config.txt,g2_fixed.csv");
        assert_eq!(map["fixed.g2max"], "1.2");
        assert_eq!(m.metric("fixed.g2max"), Some("1.2"));
    }
}
