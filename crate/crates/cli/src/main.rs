use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use tsimpute::bench::{
    emit_results_csv, emit_strip_plot, generate_synthetic, run_benchmark, ExperimentConfig, Metric,
    SyntheticKind, SyntheticSpec,
};
use tsimpute::decomposition::{classical_decompose, stl_periodic, StlOptions};
use tsimpute::io::{load_csv, row_time, write_series_csv, MISSING_TOKEN};
use tsimpute::missing::create_missing;
use tsimpute::series::acf;
use tsimpute::{impute, Algorithm, Error, ImputeOptions, TimeSeries};

/// Univariate time-series imputation toolkit.
#[derive(Parser)]
#[command(name = "tsimpute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Delete values from a complete series with the MCAR simulator.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        frequency: usize,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fill the gaps of a series.
    Impute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        frequency: usize,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 10)]
        lags: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Split a complete series into trend, seasonal and remainder.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        frequency: usize,
        #[arg(long, value_enum, default_value_t = Method::Stl)]
        method: Method,
        #[arg(long)]
        output: PathBuf,
    },
    /// Sample autocorrelation of a complete series.
    Acf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        frequency: usize,
        #[arg(long)]
        max_lag: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the rate x seed x algorithm grid and write results and plots.
    Bench {
        /// Comma-separated CSV files; the file stem names the dataset.
        #[arg(long, value_delimiter = ',', required_unless_present = "synthetic")]
        datasets: Vec<PathBuf>,
        /// Use the four synthetic archetypes instead of files.
        #[arg(long, conflicts_with = "datasets")]
        synthetic: bool,
        /// Frequency of the dataset files, or of the synthetic series.
        #[arg(long, default_value_t = 12)]
        frequency: usize,
        /// Length of the synthetic series.
        #[arg(long, default_value_t = 144)]
        length: usize,
        /// Noise level of the synthetic series.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// TOML file with rates, seeds, algorithms, lags and parallel.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Classical,
    Stl,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> tsimpute::Result<()> {
    match command {
        Command::Simulate {
            input,
            frequency,
            rate,
            seed,
            output,
        } => {
            let series = load_csv(&input, frequency)?;
            let result = create_missing(&series, rate, seed)?;
            info!("deleted {} of {} values", result.na_indices.len(), series.len());
            write_series_csv(&result.data, &output)
        }
        Command::Impute {
            input,
            frequency,
            algorithm,
            lags,
            output,
        } => {
            let series = load_csv(&input, frequency)?;
            let options = ImputeOptions {
                lags,
                ..ImputeOptions::default()
            };
            let outcome = impute(&series, algorithm, &options)?;
            write_series_csv(&outcome.series, &output)
        }
        Command::Decompose {
            input,
            frequency,
            method,
            output,
        } => {
            let series = load_csv(&input, frequency)?;
            let d = match method {
                Method::Classical => classical_decompose(&series)?,
                Method::Stl => stl_periodic(&series, StlOptions::default())?,
            };
            let mut w = csv::Writer::from_path(&output)?;
            w.write_record(["time", "observed", "trend", "seasonal", "remainder"])?;
            for i in 0..series.len() {
                w.write_record([
                    row_time(&series, i).to_string(),
                    cell(series.get(i)),
                    cell(d.trend[i]),
                    cell(Some(d.seasonal[i])),
                    cell(d.remainder[i]),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Acf {
            input,
            frequency,
            max_lag,
            output,
        } => {
            let series = load_csv(&input, frequency)?;
            let result = acf(&series, max_lag)?;
            let mut w = csv::Writer::from_path(&output)?;
            w.write_record(["lag", "coefficient", "bound"])?;
            for (lag, c) in result.coefficients.iter().enumerate() {
                w.write_record([
                    lag.to_string(),
                    format!("{c:.16e}"),
                    format!("{:.16e}", result.significance_bound),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Bench {
            datasets,
            synthetic,
            frequency,
            length,
            noise,
            config,
            out_dir,
        } => {
            let config = match config {
                Some(path) => read_config(&path)?,
                None => ExperimentConfig::default(),
            };
            let named = if synthetic {
                synthetic_datasets(frequency, length, noise)?
            } else {
                datasets
                    .iter()
                    .map(|p| Ok((dataset_name(p), load_csv(p, frequency)?)))
                    .collect::<tsimpute::Result<Vec<_>>>()?
            };
            std::fs::create_dir_all(&out_dir)?;
            let records = run_benchmark(&config, &named)?;
            emit_results_csv(&records, out_dir.join("results.csv"))?;
            for metric in [Metric::Rmse, Metric::Mape, Metric::Runtime] {
                let path = out_dir.join(format!("{}.svg", metric.label()));
                match emit_strip_plot(&records, metric, &path) {
                    Err(Error::NoPlottableRecords) => {
                        log::warn!("no finite {} values, skipping plot", metric.label())
                    }
                    other => other?,
                }
            }
            info!("{} records written to {}", records.len(), out_dir.display());
            Ok(())
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING_TOKEN.to_string(), |x| format!("{x:.16e}"))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn read_config(path: &Path) -> tsimpute::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn synthetic_datasets(
    frequency: usize,
    n: usize,
    noise_sigma: f64,
) -> tsimpute::Result<Vec<(String, TimeSeries)>> {
    SyntheticKind::ALL
        .iter()
        .map(|&kind| {
            let spec = SyntheticSpec {
                kind,
                n,
                frequency,
                noise_sigma,
                seed: 0,
            };
            Ok((kind.label().to_string(), generate_synthetic(&spec)?))
        })
        .collect()
}
