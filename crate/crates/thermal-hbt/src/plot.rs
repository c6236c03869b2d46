//! gnuplot data and scripts for result CSVs.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thermal_hbt_core::apparatus::ApparatusConfig;

use crate::csv::{read_correlation, read_histogram, HISTOGRAM_HEADER};
use crate::error::CsvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Singles,
    Fixed,
    Counter,
    Coscan,
    Histogram,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "singles" => Ok(PlotKind::Singles),
            "fixed" => Ok(PlotKind::Fixed),
            "counter" => Ok(PlotKind::Counter),
            "coscan" => Ok(PlotKind::Coscan),
            "histogram" => Ok(PlotKind::Histogram),
            _ => Err(format!("unknown plot kind `{s}`")),
        }
    }
}

/// Guesses the plot kind from the CSV header and the file name.
pub fn infer_kind(path: &Path, text: &str) -> PlotKind {
    if text.lines().next().map(str::trim) == Some(HISTOGRAM_HEADER) {
        return PlotKind::Histogram;
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    if stem.contains("singles") {
        PlotKind::Singles
    } else if stem.contains("counter") {
        PlotKind::Counter
    } else if stem.contains("coscan") {
        PlotKind::Coscan
    } else {
        PlotKind::Fixed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    /// Whitespace-separated columns.
    pub data: String,
    pub script: String,
}

/// Converts a result CSV to plot data (mm or ns) and a gnuplot script that
/// reads `<stem>.dat` and writes `<stem>.png`.
pub fn emit_plot_data(text: &str, kind: PlotKind, stem: &str, config: &ApparatusConfig) -> Result<PlotFiles, CsvError> {
    let mut data = String::new();
    let mut script = String::new();
    let _ = writeln!(script, "set terminal pngcairo size 900,560 enhanced");
    let _ = writeln!(script, "set output '{stem}.png'");
    let _ = writeln!(script, "set grid");
    if kind == PlotKind::Histogram {
        let t = read_histogram(text)?;
        let _ = writeln!(data, "# tau_ns count");
        for (tau, c) in t.tau.iter().zip(&t.counts) {
            let _ = writeln!(data, "{:.6} {c}", tau * 1e9);
        }
        let _ = writeln!(script, "set xlabel 'τ = t_{{stop}} − t_{{start}} (ns)'");
        let _ = writeln!(script, "set ylabel 'coincidences per bin'");
        let _ = writeln!(script, "plot '{stem}.dat' using 1:2 with histeps lw 2 notitle");
        return Ok(PlotFiles { data, script });
    }

    let t = read_correlation(text)?;
    let _ = writeln!(data, "# x_mm g2 stderr singles_d1 singles_d2");
    for i in 0..t.positions.len() {
        let _ = writeln!(
            data,
            "{:.6} {:.8} {:.8} {:.8} {:.8}",
            t.positions[i] * 1e3,
            t.g2[i],
            t.stderr[i],
            t.singles_d1[i],
            t.singles_d2[i]
        );
    }
    let period_mm = config.fringe_period() * 1e3;
    let g2_plot = format!("plot '{stem}.dat' using 1:2:3 with yerrorbars pt 7 ps 0.7 notitle");
    match kind {
        PlotKind::Singles => {
            let _ = writeln!(script, "set xlabel 'x_2 (mm)'");
            let _ = writeln!(script, "set ylabel 'D_2 singles (arb. units)'");
            let _ = writeln!(script, "set yrange [0:*]");
            let _ = writeln!(script, "plot '{stem}.dat' using 1:5 with linespoints pt 7 ps 0.7 notitle");
        }
        PlotKind::Fixed => {
            let _ = writeln!(script, "set xlabel 'x_2 (mm), D_1 at x_1 = 0'");
            let _ = writeln!(script, "set ylabel 'g^{{(2)}}(0, x_2)'");
            let _ = writeln!(script, "set xtics {period_mm:.4}");
            let _ = writeln!(
                script,
                "set label 1 sprintf('period λz/d = %.2f mm', {period_mm:.4}) at graph 0.03, graph 0.94"
            );
            let _ = writeln!(script, "{g2_plot}");
        }
        PlotKind::Counter => {
            let half = period_mm / 2.0;
            let _ = writeln!(script, "set xlabel 'x (mm), D_1 at −x, D_2 at +x'");
            let _ = writeln!(script, "set ylabel 'g^{{(2)}}(−x, x)'");
            let _ = writeln!(script, "set xtics {half:.4}");
            let _ = writeln!(
                script,
                "set label 1 sprintf('half period λz/(2d) = %.2f mm', {half:.4}) at graph 0.03, graph 0.94"
            );
            let _ = writeln!(script, "{g2_plot}");
        }
        PlotKind::Coscan => {
            let _ = writeln!(script, "set xlabel 'x (mm), D_1 and D_2 both at x'");
            let _ = writeln!(script, "set ylabel 'g^{{(2)}}(x, x)'");
            let _ = writeln!(script, "{g2_plot}");
        }
        PlotKind::Histogram => unreachable!(),
    }
    Ok(PlotFiles { data, script })
}
