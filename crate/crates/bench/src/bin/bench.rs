//! `bench run <config>` runs a noise sweep and writes the report and plot data;
//! `bench gen <config>` writes the generated datasets only.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 on runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use worm_bench::{emit_plot_data, emit_report, generate_datasets, run_experiment, BenchError, ExperimentConfig};

#[derive(Parser)]
#[command(version, about = "Accuracy-versus-noise benchmark for subspace classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write the report plus plot data.
    Run {
        #[command(flatten)]
        common: Common,
        /// Report format: csv, tsv or jsonl (overrides the config).
        #[arg(long)]
        format: Option<String>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Write the train/test CSV files of every trial and noise level.
    Gen {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, BenchError> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run {
            common,
            format,
            sequential,
        } => {
            let mut config = common.load()?;
            if let Some(format) = format {
                config.format = format;
            }
            if sequential {
                config.parallel = false;
            }
            let format = config.report_format()?;
            let report = run_experiment(&config)?;
            let dir = &config.output_dir;
            std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
            let report_path = dir.join(format!("report.{}", format.extension()));
            let plot_path = dir.join("plot_data.csv");
            emit_report(&report, format, &report_path)?;
            emit_plot_data(&report, &plot_path)?;
            for row in &report.rows {
                let acc = row
                    .mean_accuracy
                    .map_or_else(|| "error".to_string(), |a| format!("{:.4}", a));
                println!(
                    "{:<44} {:<15} {:>8} {:>8}",
                    row.classifier,
                    row.noise_kind.as_str(),
                    row.noise_level,
                    acc
                );
            }
            eprintln!("wrote {} and {}", report_path.display(), plot_path.display());
        }
        Command::Gen { common } => {
            let config = common.load()?;
            let written = generate_datasets(&config, &config.output_dir)?;
            eprintln!("wrote {} files to {}", written.len(), config.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
