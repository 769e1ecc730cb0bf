use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slp_core::projection::Subset;
use slp_core::sanity::VisKind;

mod commands;
mod io;

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "slp",
    version,
    about = "Switched linear projection analysis for ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// A single sample of a dataset.
#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// SLPD dataset holding the input.
    #[arg(long)]
    pub input: PathBuf,
    /// Sample index within the dataset.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Describe an SLPM model, SLPD dataset or SLPT tensor.
    Info { path: PathBuf },
    /// Run a sample through the model and print every layer's activity.
    Forward {
        #[command(flatten)]
        sample: SampleArgs,
        /// Write the output-layer activity as SLPT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Switched linear projection of one neuron.
    Slp {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        neuron: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Input component decomposition of one neuron.
    Icd {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        neuron: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Singular pattern analysis of one layer.
    Spa {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        layer: usize,
        #[arg(long, default_value = "all")]
        subset: Subset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Representational power of layers over a dataset, as CSV.
    Capacity {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Layers to analyse (repeatable); every layer when omitted.
        #[arg(long)]
        layer: Vec<usize>,
        #[arg(long, value_parser = parse_gamma)]
        gamma: f64,
        #[arg(long, default_value = "all")]
        subset: Subset,
        /// Analyse only the first N samples.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spearman agreement of two models' visualisations, as CSV.
    Sanity {
        #[arg(long)]
        model_a: PathBuf,
        #[arg(long)]
        model_b: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// icd_nu, broad:K or narrow:K (repeatable).
        #[arg(long, required = true)]
        method: Vec<VisKind>,
        /// Layer to visualise; the output layer when omitted.
        #[arg(long)]
        layer: Option<usize>,
        /// Neuron to explain; model A's winner when omitted.
        #[arg(long)]
        neuron: Option<usize>,
        /// Correlate absolute values.
        #[arg(long)]
        abs: bool,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an SLPT vector as a red-blue PPM heatmap.
    Render {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 1)]
        channels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a dense relu MLP with SGD.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated widths from input to output, e.g. 144,32,32,10.
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 16)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        randomize_labels: bool,
        /// Optional per-epoch loss CSV.
        #[arg(long)]
        loss_log: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace a dataset's labels with seeded uniform draws.
    RandomizeLabels {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a labelled synthetic 12×12 digit dataset.
    SynthDigits {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if g > 0.0 && g < 1.0 {
        Ok(g)
    } else {
        Err(format!("gamma must lie strictly between 0 and 1, got {g}"))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    use commands::*;
    match cli.command {
        Command::Info { path } => info(&path),
        Command::Forward { sample, out } => forward(&sample, out.as_deref()),
        Command::Slp {
            sample,
            layer,
            neuron,
            out,
        } => slp(&sample, layer, neuron, &out),
        Command::Icd {
            sample,
            layer,
            neuron,
            out,
        } => icd(&sample, layer, neuron, &out),
        Command::Spa {
            sample,
            layer,
            subset,
            out,
        } => spa(&sample, layer, subset, &out),
        Command::Capacity {
            model,
            input,
            layer,
            gamma,
            subset,
            count,
            out,
        } => capacity(&model, &input, &layer, gamma, subset, count, &out),
        Command::Sanity {
            model_a,
            model_b,
            input,
            method,
            layer,
            neuron,
            abs,
            count,
            out,
        } => sanity(&model_a, &model_b, &input, &method, layer, neuron, abs, count, &out),
        Command::Render {
            tensor,
            width,
            height,
            channels,
            out,
        } => render(&tensor, width, height, channels, &out),
        Command::Train {
            input,
            widths,
            epochs,
            batch_size,
            learning_rate,
            seed,
            randomize_labels,
            loss_log,
            out,
        } => {
            let config = slp_core::train::TrainConfig {
                widths,
                epochs,
                batch_size,
                learning_rate,
                seed,
                randomize_labels,
            };
            train(&input, &config, loss_log.as_deref(), &out)
        }
        Command::RandomizeLabels {
            input,
            classes,
            seed,
            out,
        } => randomize(&input, classes, seed, &out),
        Command::SynthDigits { count, seed, out } => synth_digits(count, seed, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
