//! Plain SGD training of small dense relu MLPs with softmax cross-entropy.
//!
//! Single-threaded and fully determined by the seed: the same config and
//! dataset always produce a bitwise-identical model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Activation, Dataset, Layer, LayerKind, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Layer widths from input to output, e.g. `[2, 8, 2]`.
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Train on seeded uniformly random labels instead of the dataset's.
    pub randomize_labels: bool,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 || self.widths.contains(&0) {
            return Err(Error::invalid("need at least input and output widths, all ≥ 1"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be ≥ 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        *self.widths.last().expect("validated widths")
    }
}

/// Dense parameters, `w` is `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// A relu MLP under training: relu on hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseParams>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(widths: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|pair| {
                let (inputs, outputs) = (pair[0], pair[1]);
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                DenseParams {
                    inputs,
                    outputs,
                    w: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
                    b: vec![0.0; outputs],
                }
            })
            .collect();
        Mlp { layers }
    }

    /// Pre-activations of every layer for one sample.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (l, p) in self.layers.iter().enumerate() {
            let input: Vec<f64> = if l == 0 {
                x.to_vec()
            } else {
                acts[l - 1].iter().map(|v| v.max(0.0)).collect()
            };
            let v = (0..p.outputs)
                .map(|o| {
                    let row = &p.w[o * p.inputs..(o + 1) * p.inputs];
                    row.iter().zip(&input).map(|(w, x)| w * x).sum::<f64>() + p.b[o]
                })
                .collect();
            acts.push(v);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::forward::argmax(self.forward(x).last().expect("non-empty mlp"))
    }

    /// Mean cross-entropy over the batch and its gradient (same layout as
    /// the parameters).
    pub fn loss_and_gradient(&self, samples: &[&[f64]], labels: &[u32]) -> (f64, Vec<DenseParams>) {
        let mut grads: Vec<DenseParams> = self
            .layers
            .iter()
            .map(|p| DenseParams {
                inputs: p.inputs,
                outputs: p.outputs,
                w: vec![0.0; p.w.len()],
                b: vec![0.0; p.b.len()],
            })
            .collect();
        let mut loss = 0.0;
        let n = samples.len() as f64;
        for (x, &y) in samples.iter().zip(labels) {
            let acts = self.forward(x);
            let logits = acts.last().expect("non-empty mlp");
            let peak = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|z| (z - peak).exp()).collect();
            let total: f64 = exps.iter().sum();
            loss += total.ln() + peak - logits[y as usize];

            // dL/dlogits = softmax − onehot
            let mut delta: Vec<f64> = exps.iter().map(|e| e / total).collect();
            delta[y as usize] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let p = &self.layers[l];
                let g = &mut grads[l];
                let input: Vec<f64> = if l == 0 {
                    x.to_vec()
                } else {
                    acts[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                for (o, &d) in delta.iter().enumerate() {
                    g.b[o] += d / n;
                    if d == 0.0 {
                        continue;
                    }
                    for (gw, xi) in g.w[o * p.inputs..(o + 1) * p.inputs].iter_mut().zip(&input) {
                        *gw += d * xi / n;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; p.inputs];
                    for (o, &d) in delta.iter().enumerate() {
                        for (pv, w) in prev.iter_mut().zip(&p.w[o * p.inputs..(o + 1) * p.inputs]) {
                            *pv += d * w;
                        }
                    }
                    for (pv, a) in prev.iter_mut().zip(&acts[l - 1]) {
                        if *a <= 0.0 {
                            *pv = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (loss / n, grads)
    }

    pub fn to_model(&self, input_shape: &[usize]) -> Result<Model> {
        let mut layers = Vec::with_capacity(self.layers.len() + 1);
        if input_shape.len() > 1 {
            layers.push(Layer::flatten());
        }
        let last = self.layers.len() - 1;
        for (l, p) in self.layers.iter().enumerate() {
            let act = if l == last { Activation::None } else { Activation::Relu };
            layers.push(Layer::dense(p.inputs, p.outputs, act, p.w.clone(), p.b.clone()));
        }
        Model::new(input_shape.to_vec(), layers)
    }

    /// Reads the dense layers back out of a model built by [`Mlp::to_model`].
    pub fn from_model(model: &Model) -> Result<Self> {
        let layers = model
            .layers()
            .iter()
            .filter(|l| l.kind != LayerKind::Flatten)
            .map(|l| match l.kind {
                LayerKind::Dense { inputs, outputs } => Ok(DenseParams {
                    inputs,
                    outputs,
                    w: l.weights.clone(),
                    b: l.bias.clone(),
                }),
                _ => Err(Error::invalid("only dense relu MLPs are supported")),
            })
            .collect::<Result<_>>()?;
        Ok(Mlp { layers })
    }
}

/// Per-epoch mean training loss alongside the trained model.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub losses: Vec<f64>,
}

pub fn train_mlp(config: &TrainConfig, dataset: &Dataset) -> Result<Model> {
    train_mlp_logged(config, dataset).map(|o| o.model)
}

pub fn train_mlp_logged(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::invalid("training needs a labelled dataset"))?;
    if dataset.sample_len() != config.widths[0] {
        return Err(Error::shape(format!(
            "samples have {} values, input width is {}",
            dataset.sample_len(),
            config.widths[0]
        )));
    }
    let k = config.classes();
    if let Some(bad) = labels.iter().find(|&&l| l as usize >= k) {
        return Err(Error::invalid(format!("label {bad} outside [0, {k})")));
    }
    let labels: Vec<u32> = if config.randomize_labels {
        let shuffled = randomize_labels(dataset, k, config.seed)?;
        shuffled.labels().expect("labelled").to_vec()
    } else {
        labels.to_vec()
    };

    let mut mlp = Mlp::init(&config.widths, config.seed);
    // separate stream so init does not depend on the shuffling schedule
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_5ba7_c4e5);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| dataset.sample(i)).collect();
            let ys: Vec<u32> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = mlp.loss_and_gradient(&xs, &ys);
            epoch_loss += loss * batch.len() as f64;
            for (p, g) in mlp.layers.iter_mut().zip(&grads) {
                p.w.iter_mut()
                    .zip(&g.w)
                    .for_each(|(w, d)| *w -= config.learning_rate * d);
                p.b.iter_mut()
                    .zip(&g.b)
                    .for_each(|(b, d)| *b -= config.learning_rate * d);
            }
        }
        let mean = epoch_loss / dataset.len().max(1) as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        losses.push(mean);
    }
    Ok(TrainOutcome {
        model: mlp.to_model(dataset.sample_shape())?,
        losses,
    })
}

/// Fraction of samples whose predicted class matches the label.
pub fn accuracy(model: &Model, dataset: &Dataset) -> Result<f64> {
    let mlp = Mlp::from_model(model)?;
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::invalid("accuracy needs a labelled dataset"))?;
    if dataset.is_empty() {
        return Err(Error::invalid("accuracy of an empty dataset"));
    }
    let hits = (0..dataset.len())
        .filter(|&i| mlp.predict(dataset.sample(i)) == labels[i] as usize)
        .count();
    Ok(hits as f64 / dataset.len() as f64)
}

/// Replaces every label by a seeded uniform draw from `[0, classes)`.
pub fn randomize_labels(dataset: &Dataset, classes: usize, seed: u64) -> Result<Dataset> {
    if dataset.labels().is_none() {
        return Err(Error::invalid("dataset has no labels to randomise"));
    }
    if classes == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = (0..dataset.len()).map(|_| rng.gen_range(0..classes as u32)).collect();
    dataset.clone().with_labels(Some(labels))
}
