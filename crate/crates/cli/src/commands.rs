use std::fmt::Write as _;
use std::path::Path;

use slp_core::digits::synthetic_digits;
use slp_core::model::{DATASET_MAGIC, MODEL_MAGIC};
use slp_core::projection::Subset;
use slp_core::render::render_heatmap;
use slp_core::sanity::{sanity_report, VisKind, VisMethod};
use slp_core::tensor::{spa_tensors, Tensor, TENSOR_MAGIC};
use slp_core::train::{randomize_labels, train_mlp_logged, TrainConfig};
use slp_core::{
    forward_trace, icd_vector, save_dataset, save_model, spa_for_layer, switched_projection, Dataset, Model,
};

use crate::io::{self, out_dir, write_atomic, write_tensor};
use crate::{CliResult, SampleArgs};

fn sample(ds: &Dataset, index: usize) -> CliResult<&[f64]> {
    if index >= ds.len() {
        return Err(format!("sample index {index} out of range for {} samples", ds.len()).into());
    }
    Ok(ds.sample(index))
}

fn load_sample(args: &SampleArgs) -> CliResult<(Model, Vec<f64>)> {
    let model = io::model(&args.model)?;
    let ds = io::dataset(&args.input)?;
    ds.validate_for(&model)?;
    let x = sample(&ds, args.index)?.to_vec();
    Ok((model, x))
}

fn first_n(ds: Dataset, count: Option<usize>) -> Dataset {
    match count {
        Some(n) if n < ds.len() => ds.truncated(n),
        _ => ds,
    }
}

pub fn info(path: &Path) -> CliResult<()> {
    let bytes = io::read(path)?;
    let mut out = String::new();
    match bytes.get(..4) {
        Some(m) if m == MODEL_MAGIC => {
            let model = io::model(path)?;
            writeln!(
                out,
                "model: input {:?}, {} layers",
                model.input_shape(),
                model.layers().len()
            )?;
            writeln!(
                out,
                "{:>5}  {:<8} {:<8} {:<6} {:>10}  output",
                "layer", "kind", "act", "dtype", "params"
            )?;
            for (l, layer) in model.layers().iter().enumerate() {
                writeln!(
                    out,
                    "{:>5}  {:<8} {:<8} {:<6} {:>10}  {:?}",
                    l,
                    layer.kind.name(),
                    layer.activation.name(),
                    format!("{:?}", layer.dtype).to_lowercase(),
                    layer.weights.len() + layer.bias.len(),
                    model.output_shape(l)
                )?;
            }
        }
        Some(m) if m == DATASET_MAGIC => {
            let ds = io::dataset(path)?;
            let labels = if ds.labels().is_some() {
                "labelled"
            } else {
                "unlabelled"
            };
            writeln!(
                out,
                "dataset: {} samples of shape {:?}, {labels}",
                ds.len(),
                ds.sample_shape()
            )?;
        }
        Some(m) if m == TENSOR_MAGIC => {
            let t = io::tensor(path)?;
            writeln!(out, "tensor: shape {:?}, {} values", t.shape, t.data.len())?;
        }
        _ => return Err(format!("{}: not an SLPM, SLPD or SLPT file", path.display()).into()),
    }
    print!("{out}");
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn forward(args: &SampleArgs, out: Option<&Path>) -> CliResult<()> {
    let (model, x) = load_sample(args)?;
    let trace = forward_trace(&model, &x)?;
    for (l, lt) in trace.layers.iter().enumerate() {
        println!("layer {l}: {}", join(&lt.activity));
    }
    println!("argmax: {}", slp_core::forward::argmax(trace.output_activity()));
    if let Some(path) = out {
        write_atomic(path, &Tensor::vector(trace.output_activity().to_vec()).to_bytes())?;
    }
    Ok(())
}

pub fn slp(args: &SampleArgs, layer: usize, neuron: usize, out: &Path) -> CliResult<()> {
    let (model, x) = load_sample(args)?;
    let trace = forward_trace(&model, &x)?;
    let p = switched_projection(&model, &trace, layer, neuron)?;
    let dir = out_dir(out)?;
    write_tensor(dir, "w_hat", &Tensor::vector(p.w_hat.clone()))?;
    let record = format!("layer {layer}\nneuron {neuron}\nb_hat {}\nv {}\n", p.b_hat, p.activity);
    write_atomic(&dir.join("projection.txt"), record.as_bytes())?;
    print!("{record}");
    Ok(())
}

pub fn icd(args: &SampleArgs, layer: usize, neuron: usize, out: &Path) -> CliResult<()> {
    let (model, x) = load_sample(args)?;
    let trace = forward_trace(&model, &x)?;
    let p = switched_projection(&model, &trace, layer, neuron)?;
    let r = icd_vector(&x, &p);
    let dir = out_dir(out)?;
    write_tensor(dir, "nu", &Tensor::vector(r.nu))?;
    write_tensor(dir, "centre", &Tensor::vector(r.centre))?;
    let record = format!(
        "layer {layer}\nneuron {neuron}\nv {}\ndegenerate {}\n",
        p.activity, r.degenerate as u8
    );
    write_atomic(&dir.join("icd.txt"), record.as_bytes())?;
    print!("{record}");
    Ok(())
}

pub fn spa(args: &SampleArgs, layer: usize, subset: Subset, out: &Path) -> CliResult<()> {
    let (model, x) = load_sample(args)?;
    let trace = forward_trace(&model, &x)?;
    let r = spa_for_layer(&model, &trace, layer, subset)?;
    let dir = out_dir(out)?;
    for (stem, t) in spa_tensors(&r) {
        write_tensor(dir, stem, &t)?;
    }
    let record = format!(
        "layer {layer}\nsubset {subset}\ncolumns {}\nrank {}\ndegenerate_columns {}\n",
        r.v.cols(),
        r.rank(),
        r.degenerate_columns
    );
    write_atomic(&dir.join("spa.txt"), record.as_bytes())?;
    print!("{record}");
    Ok(())
}

pub fn capacity(
    model: &Path,
    input: &Path,
    layers: &[usize],
    gamma: f64,
    subset: Subset,
    count: Option<usize>,
    out: &Path,
) -> CliResult<()> {
    let model = io::model(model)?;
    let ds = first_n(io::dataset(input)?, count);
    ds.validate_for(&model)?;
    let layers: Vec<usize> = if layers.is_empty() {
        (0..model.layers().len()).collect()
    } else {
        layers.to_vec()
    };
    for &l in &layers {
        model.layer(l)?;
    }
    let mut csv = String::from("input,layer,rank,r_max,count,proportion\n");
    let mut sums = vec![0.0; layers.len()];
    for i in 0..ds.len() {
        let trace = forward_trace(&model, ds.sample(i))?;
        for (k, &l) in layers.iter().enumerate() {
            let r = spa_for_layer(&model, &trace, l, subset)?;
            let c = r.representational_power(gamma)?;
            sums[k] += c.proportion;
            writeln!(
                csv,
                "{i},{l},{},{},{},{}",
                r.rank(),
                r.max_rank(),
                c.count,
                c.proportion
            )?;
        }
    }
    write_atomic(out, csv.as_bytes())?;
    for (k, &l) in layers.iter().enumerate() {
        println!("layer {l}: mean proportion {}", sums[k] / ds.len().max(1) as f64);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn sanity(
    model_a: &Path,
    model_b: &Path,
    input: &Path,
    kinds: &[VisKind],
    layer: Option<usize>,
    neuron: Option<usize>,
    abs: bool,
    count: Option<usize>,
    out: &Path,
) -> CliResult<()> {
    let a = io::model(model_a)?;
    let b = io::model(model_b)?;
    let ds = first_n(io::dataset(input)?, count);
    let methods: Vec<VisMethod> = kinds.iter().map(|&kind| VisMethod { kind, layer, neuron }).collect();
    let report = sanity_report(&a, &b, &ds, &methods, abs)?;
    let csv = report.to_csv();
    write_atomic(out, csv.as_bytes())?;
    print!("{csv}");
    println!("input baseline {}", report.input_baseline);
    Ok(())
}

pub fn render(tensor: &Path, width: usize, height: usize, channels: usize, out: &Path) -> CliResult<()> {
    let t = io::tensor(tensor)?;
    let image = render_heatmap(&t.data, width, height, channels)?;
    write_atomic(out, &image.to_ppm())
}

pub fn train(input: &Path, config: &TrainConfig, loss_log: Option<&Path>, out: &Path) -> CliResult<()> {
    let ds = io::dataset(input)?;
    let outcome = train_mlp_logged(config, &ds)?;
    write_atomic(out, &save_model(&outcome.model))?;
    if let Some(path) = loss_log {
        let mut csv = String::from("epoch,loss\n");
        for (e, l) in outcome.losses.iter().enumerate() {
            writeln!(csv, "{e},{l}")?;
        }
        write_atomic(path, csv.as_bytes())?;
    }
    if let Some(last) = outcome.losses.last() {
        println!("final loss {last}");
    }
    Ok(())
}

pub fn randomize(input: &Path, classes: usize, seed: u64, out: &Path) -> CliResult<()> {
    let ds = io::dataset(input)?;
    write_atomic(out, &save_dataset(&randomize_labels(&ds, classes, seed)?))
}

pub fn synth_digits(count: usize, seed: u64, out: &Path) -> CliResult<()> {
    write_atomic(out, &save_dataset(&synthetic_digits(count, seed)?))
}
