use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermal_hbt::config;
use thermal_hbt::experiments::DEFAULT_ENSEMBLE;
use thermal_hbt::plot::{emit_plot_data, infer_kind, PlotKind};
use thermal_hbt::{run, AppError, Experiment, RunOptions};

#[derive(Parser)]
#[command(name = "thermal-hbt", version, about = "Two-photon interference of thermal light through a grating")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSVs plus manifest.txt.
    Run {
        /// singles-scan, g2-fixed, g2-counter, g2-coscan, coincidence-histogram or full-paper.
        #[arg(long, env = "THERMAL_HBT_EXPERIMENT")]
        experiment: Experiment,
        /// Flat `key = value` config file; defaults apply when absent.
        #[arg(long, env = "THERMAL_HBT_CONFIG")]
        config: Option<PathBuf>,
        /// Drawn from the clock and recorded when absent.
        #[arg(long, env = "THERMAL_HBT_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "THERMAL_HBT_OUT")]
        out: PathBuf,
        /// Field realizations per scan point.
        #[arg(long, env = "THERMAL_HBT_ENSEMBLE", default_value_t = DEFAULT_ENSEMBLE)]
        ensemble: usize,
        /// Worker threads; all cores when absent.
        #[arg(long, env = "THERMAL_HBT_WORKERS")]
        workers: Option<usize>,
    },
    /// Write gnuplot data and script for a result CSV.
    Plot {
        csv: PathBuf,
        /// singles, fixed, counter, coscan or histogram; guessed when absent.
        #[arg(long)]
        kind: Option<PlotKind>,
        /// Config used for axis annotations.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to the CSV's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn load_config(path: Option<&Path>) -> Result<thermal_hbt::core::ApparatusConfig, AppError> {
    let text = path.map(read).transpose()?;
    Ok(config::load(text.as_deref(), std::env::vars())?)
}

fn execute(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
            ensemble,
            workers,
        } => {
            let opts = RunOptions {
                experiment,
                config: load_config(config.as_deref())?,
                seed,
                out_dir: out,
                ensemble,
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or(0))
                .build()
                .map_err(|e| AppError::Usage(e.to_string()))?;
            let manifest = pool.install(|| run(&opts))?;
            print!("{}", manifest.render());
            Ok(())
        }
        Command::Plot { csv, kind, config, out } => {
            let text = read(&csv)?;
            let kind = kind.unwrap_or_else(|| infer_kind(&csv, &text));
            let config = load_config(config.as_deref())?;
            let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
            let files = emit_plot_data(&text, kind, &stem, &config)?;
            let dir = out.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
            fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
            for (ext, body) in [("dat", &files.data), ("gp", &files.script)] {
                let path = dir.join(format!("{stem}.{ext}"));
                fs::write(&path, body).map_err(|e| AppError::io(&path, e))?;
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
