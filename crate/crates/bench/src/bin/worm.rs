//! Single-model usage: `worm fit` trains on a labelled CSV and saves the model as JSON;
//! `worm predict` loads it and labels the samples of a CSV.
//!
//! Exit codes: 0 on success, 1 on usage or invalid parameter errors, 2 on runtime errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use worm_bench::BenchError;
use worm_core::dataset::read_csv;
use worm_core::worm::{DecisionVariant, WormConfig, WormModel, DEFAULT_TAU};

#[derive(Parser)]
#[command(version, about = "Fit and apply a weighted orthogonal regression classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a labelled CSV (one sample per row, `label` as last column).
    Fit {
        /// Training data.
        train: PathBuf,
        /// Energy fraction each class basis must capture, in (0, 1].
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// weighted_abs or weighted_signed.
        #[arg(long, default_value = "weighted_abs")]
        variant: String,
        /// Subtract each class mean before the SVD.
        #[arg(long)]
        center: bool,
        /// Where to write the model.
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Label every row of a CSV; prints accuracy when the file has a `label` column.
    Predict {
        model: PathBuf,
        data: PathBuf,
        /// Write predictions here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Fit {
            train,
            tau,
            variant,
            center,
            out,
        } => {
            let variant: DecisionVariant = variant
                .parse()
                .map_err(|e: worm_core::Error| BenchError::Config(e.to_string()))?;
            let config = WormConfig { tau, variant, center };
            config.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            let train = read_csv(&train)?.into_labeled()?;
            let model = WormModel::fit(&train, &config)?;
            model.save(&out)?;
            let counts: Vec<usize> = model.dictionaries().iter().map(|d| d.len()).collect();
            eprintln!(
                "fitted {} classes, {} atoms {counts:?}, wrote {}",
                model.num_classes(),
                model.num_atoms(),
                out.display()
            );
        }
        Command::Predict { model, data, out } => {
            let model = WormModel::load(&model)?;
            let samples = read_csv(&data)?;
            let predicted = (0..samples.data.cols())
                .map(|i| model.classify(&samples.data.column(i)))
                .collect::<worm_core::Result<Vec<usize>>>()?;
            let mut text = String::from("prediction\n");
            for p in &predicted {
                text.push_str(&format!("{p}\n"));
            }
            match &out {
                Some(path) => std::fs::write(path, &text).map_err(|e| BenchError::io(path, e))?,
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| BenchError::io("<stdout>", e))?,
            }
            if let Some(labels) = &samples.labels {
                let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
                eprintln!("accuracy {:.4} ({correct}/{})", correct as f64 / labels.len() as f64, labels.len());
            }
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
