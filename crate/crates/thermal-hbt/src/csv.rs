//! Text formats: scan results, coincidence histograms and event streams.

use std::fmt::Write as _;

use thermal_hbt_core::correlation::CorrelationResult;
use thermal_hbt_core::events::{CoincidenceHistogram, DetectorId, PhotonEventStream};

use crate::error::CsvError;

pub const CORRELATION_HEADER: &str = "position_m,g2,stderr,singles_d1,singles_d2";
pub const HISTOGRAM_HEADER: &str = "tau_s,count";

/// Columns of a scan-result CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationTable {
    pub positions: Vec<f64>,
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
    pub singles_d1: Vec<f64>,
    pub singles_d2: Vec<f64>,
}

/// Columns of a histogram CSV; `tau` holds bin centres.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HistogramTable {
    pub tau: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn write_correlation(result: &CorrelationResult) -> String {
    let mut out = String::from(CORRELATION_HEADER);
    out.push('\n');
    for i in 0..result.positions.len() {
        let _ = writeln!(
            out,
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            result.positions[i], result.g2[i], result.stderr[i], result.singles_d1[i], result.singles_d2[i]
        );
    }
    out
}

fn rows<'a>(text: &'a str, header: &'static str) -> Result<impl Iterator<Item = (usize, &'a str)>, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(CsvError::Empty)?;
    if first.trim() != header {
        return Err(CsvError::Header {
            found: first.trim().to_string(),
            expected: header,
        });
    }
    Ok(lines.map(|(n, l)| (n + 1, l.trim())))
}

fn field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, CsvError> {
    s.trim().parse().map_err(|_| CsvError::Row {
        line,
        reason: format!("cannot parse `{s}`"),
    })
}

pub fn read_correlation(text: &str) -> Result<CorrelationTable, CsvError> {
    let mut t = CorrelationTable::default();
    for (line, row) in rows(text, CORRELATION_HEADER)? {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 5 {
            return Err(CsvError::Row {
                line,
                reason: format!("expected 5 columns, found {}", cols.len()),
            });
        }
        t.positions.push(field(line, cols[0])?);
        t.g2.push(field(line, cols[1])?);
        t.stderr.push(field(line, cols[2])?);
        t.singles_d1.push(field(line, cols[3])?);
        t.singles_d2.push(field(line, cols[4])?);
    }
    if t.positions.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(t)
}

pub fn write_histogram(hist: &CoincidenceHistogram) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for (k, c) in hist.counts.iter().enumerate() {
        let _ = writeln!(out, "{:.8e},{c}", hist.bin_center(k));
    }
    out
}

pub fn read_histogram(text: &str) -> Result<HistogramTable, CsvError> {
    let mut t = HistogramTable::default();
    for (line, row) in rows(text, HISTOGRAM_HEADER)? {
        let (tau, count) = row.split_once(',').ok_or_else(|| CsvError::Row {
            line,
            reason: "expected 2 columns".into(),
        })?;
        t.tau.push(field(line, tau)?);
        t.counts.push(field(line, count)?);
    }
    if t.tau.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(t)
}

/// One timestamp per line, 12 significant digits.
pub fn write_events(stream: &PhotonEventStream) -> String {
    let mut out = String::with_capacity(20 * stream.len());
    for t in &stream.timestamps {
        let _ = writeln!(out, "{t:.11e}");
    }
    out
}

pub fn read_events(text: &str, detector_id: DetectorId, duration: f64) -> Result<PhotonEventStream, CsvError> {
    let mut ts = Vec::new();
    for (n, l) in text.lines().enumerate() {
        if !l.trim().is_empty() {
            ts.push(field(n + 1, l)?);
        }
    }
    PhotonEventStream::new(detector_id, ts, duration).map_err(|e| CsvError::Row {
        line: 0,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use thermal_hbt_core::correlation::{ResultMeta, ScanSpec, SpectralLine};

    fn result(n: usize) -> CorrelationResult {
        let spec = ScanSpec::default_fixed(100);
        CorrelationResult {
            positions: spec.positions[..n].to_vec(),
            g2: (0..n).map(|i| 1.0 + 0.01 * i as f64).collect(),
            stderr: vec![0.004; n],
            singles_d1: vec![160.0; n],
            singles_d2: vec![159.5; n],
            singles_line: SpectralLine::default(),
            meta: ResultMeta {
                spec,
                config_hash: 1,
                seed: 2,
            },
        }
    }

    #[test]
    fn correlation_round_trip() {
        let r = result(5);
        let text = write_correlation(&r);
        assert!(text.starts_with("position_m,g2,stderr,singles_d1,singles_d2\n"));
        let t = read_correlation(&text).unwrap();
        assert_eq!(t.g2.len(), 5);
        for (a, b) in t.g2.iter().zip(&r.g2) {
            assert!((a - b).abs() <= 1e-8 * b);
        }
    }

    #[test]
    fn malformed_correlation_rejected() {
        assert_eq!(read_correlation(""), Err(CsvError::Empty));
        assert_eq!(read_correlation(&format!("{CORRELATION_HEADER}\n")), Err(CsvError::Empty));
        assert!(matches!(read_correlation("a,b\n1,2\n"), Err(CsvError::Header { .. })));
        assert!(matches!(
            read_correlation(&format!("{CORRELATION_HEADER}\n1,2,3\n")),
            Err(CsvError::Row { line: 2, .. })
        ));
        assert!(matches!(
            read_correlation(&format!("{CORRELATION_HEADER}\n1,2,x,4,5\n")),
            Err(CsvError::Row { .. })
        ));
    }

    #[test]
    fn histogram_round_trip() {
        let mut h = CoincidenceHistogram::new(0.1e-9, (-5e-9, 5e-9)).unwrap();
        h.counts[50] = 7;
        let t = read_histogram(&write_histogram(&h)).unwrap();
        assert_eq!(t.counts, h.counts);
        assert!((t.tau[50] - 0.05e-9).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn events_keep_twelve_digits(mut ts in prop::collection::vec(0.0f64..60.0, 1..50)) {
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            let s = PhotonEventStream::new(DetectorId::D1, ts.clone(), 60.0).unwrap();
            let text = write_events(&s);
            let back = read_events(&text, DetectorId::D1, 60.0);
            // Rounding can merge two timestamps closer than 12 digits apart.
            if let Ok(back) = back {
                for (a, b) in back.timestamps.iter().zip(&ts) {
                    prop_assert!((a - b).abs() <= 6e-12 * b.abs().max(1e-300));
                }
            }
        }
    }
}
