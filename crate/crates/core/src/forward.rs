//! Forward evaluation that records pre-activation activity, outputs and
//! switching masks for every layer.

use crate::error::{Error, Result};
use crate::model::{Conv2d, Layer, LayerKind, MaxPool2d, Model};

/// Everything recorded for one layer on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Pre-activation activity, flattened. For max-pool layers this is the
    /// incoming value of each window's winner.
    pub activity: Vec<f64>,
    /// Post-activation output.
    pub output: Vec<f64>,
    /// Local derivative of the activation at `activity` ({0, 1} for relu).
    /// For max-pool layers the mask runs over the layer's *inputs* and marks
    /// pool winners with 1.
    pub mask: Vec<f64>,
    /// Flat input index of each max-pool window's winner.
    pub winners: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    /// Network output (post-activation output of the last layer).
    pub fn output(&self) -> &[f64] {
        &self.layers.last().expect("trace has layers").output
    }

    /// Activity of the last layer.
    pub fn output_activity(&self) -> &[f64] {
        &self.layers.last().expect("trace has layers").activity
    }

    /// Input to layer `l`.
    pub fn layer_input(&self, l: usize) -> &[f64] {
        if l == 0 {
            &self.input
        } else {
            &self.layers[l - 1].output
        }
    }

    /// Checks that this trace has the shapes `model` would produce.
    pub fn check_matches(&self, model: &Model) -> Result<()> {
        let ok = self.input.len() == model.input_len()
            && self.layers.len() == model.layers().len()
            && self
                .layers
                .iter()
                .enumerate()
                .all(|(l, t)| t.activity.len() == model.layer_width(l));
        if ok {
            Ok(())
        } else {
            Err(Error::shape("trace was not produced by this model"))
        }
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn forward_trace(model: &Model, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != model.input_len() {
        return Err(Error::shape(format!(
            "input has {} values, model expects {:?}",
            x.len(),
            model.input_shape()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("input contains non-finite values"));
    }
    let mut layers: Vec<LayerTrace> = Vec::with_capacity(model.layers().len());
    for (l, layer) in model.layers().iter().enumerate() {
        let input = layers.last().map_or(x, |t| t.output.as_slice());
        let in_shape = model.layer_input_shape(l);
        let trace = match &layer.kind {
            LayerKind::MaxPool2d(p) => {
                let (activity, winners) = maxpool_forward(p, in_shape, input);
                let mut mask = vec![0.0; input.len()];
                winners.iter().for_each(|&w| mask[w] = 1.0);
                LayerTrace {
                    output: activity.clone(),
                    activity,
                    mask,
                    winners: Some(winners),
                }
            }
            _ => {
                let activity = linear_forward(layer, in_shape, input);
                let act = layer.activation;
                LayerTrace {
                    output: activity.iter().map(|&v| act.apply(v)).collect(),
                    mask: activity.iter().map(|&v| act.derivative(v)).collect(),
                    activity,
                    winners: None,
                }
            }
        };
        if trace.activity.iter().chain(&trace.output).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { layer: l });
        }
        layers.push(trace);
    }
    Ok(ForwardTrace {
        input: x.to_vec(),
        layers,
    })
}

/// Affine part of a weighted (or pass-through) layer.
pub(crate) fn linear_forward(layer: &Layer, in_shape: &[usize], input: &[f64]) -> Vec<f64> {
    match &layer.kind {
        LayerKind::Dense { inputs, outputs } => (0..*outputs)
            .map(|i| {
                let row = &layer.weights[i * inputs..(i + 1) * inputs];
                row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + layer.bias[i]
            })
            .collect(),
        LayerKind::Conv2d(c) => conv_forward(c, &layer.weights, &layer.bias, in_shape, input),
        LayerKind::Flatten => input.to_vec(),
        LayerKind::MaxPool2d(_) => unreachable!("max-pool has no affine part"),
    }
}

/// Visits every (output index, input index, weight index) triple of a
/// convolution, skipping taps that land in the padding.
fn conv_taps(c: &Conv2d, in_shape: &[usize], mut visit: impl FnMut(usize, usize, usize)) {
    let (h, w) = (in_shape[1], in_shape[2]);
    let (oh, ow) = c.output_hw(h, w).expect("validated conv shape");
    for oc in 0..c.out_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let o = (oc * oh + oy) * ow + ox;
                for ic in 0..c.in_channels {
                    for ky in 0..c.kernel_h {
                        let iy = (oy * c.stride_h + ky) as isize - c.pad_top as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..c.kernel_w {
                            let ix = (ox * c.stride_w + kx) as isize - c.pad_left as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let i = (ic * h + iy as usize) * w + ix as usize;
                            let k = ((oc * c.in_channels + ic) * c.kernel_h + ky) * c.kernel_w + kx;
                            visit(o, i, k);
                        }
                    }
                }
            }
        }
    }
}

fn conv_forward(c: &Conv2d, weights: &[f64], bias: &[f64], in_shape: &[usize], input: &[f64]) -> Vec<f64> {
    let (oh, ow) = c.output_hw(in_shape[1], in_shape[2]).expect("validated conv shape");
    let plane = oh * ow;
    let mut out: Vec<f64> = (0..c.out_channels * plane).map(|o| bias[o / plane]).collect();
    conv_taps(c, in_shape, |o, i, k| out[o] += weights[k] * input[i]);
    out
}

fn maxpool_forward(p: &MaxPool2d, in_shape: &[usize], input: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let (ch, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (oh, ow) = p.output_hw(h, w).expect("validated pool shape");
    let mut values = Vec::with_capacity(ch * oh * ow);
    let mut winners = Vec::with_capacity(ch * oh * ow);
    for c in 0..ch {
        for oy in 0..oh {
            for ox in 0..ow {
                // Row-major scan visits flat indices in increasing order, so a
                // strict comparison keeps the lowest index on ties.
                let mut best = None::<usize>;
                for ky in 0..p.window_h {
                    for kx in 0..p.window_w {
                        let i = (c * h + oy * p.stride_h + ky) * w + ox * p.stride_w + kx;
                        if best.is_none_or(|b| input[i] > input[b]) {
                            best = Some(i);
                        }
                    }
                }
                let b = best.expect("non-empty window");
                values.push(input[b]);
                winners.push(b);
            }
        }
    }
    (values, winners)
}

/// Pulls a gradient with respect to layer `l`'s activity back to a gradient
/// with respect to that layer's input.
pub(crate) fn backward_linear(model: &Model, trace: &ForwardTrace, l: usize, grad: &[f64]) -> Vec<f64> {
    let layer = &model.layers()[l];
    let in_shape = model.layer_input_shape(l);
    let n_in: usize = in_shape.iter().product();
    match &layer.kind {
        LayerKind::Dense { inputs, .. } => {
            let mut g = vec![0.0; n_in];
            for (i, &gi) in grad.iter().enumerate() {
                if gi == 0.0 {
                    continue;
                }
                let row = &layer.weights[i * inputs..(i + 1) * inputs];
                for (gj, w) in g.iter_mut().zip(row) {
                    *gj += gi * w;
                }
            }
            g
        }
        LayerKind::Conv2d(c) => {
            let mut g = vec![0.0; n_in];
            conv_taps(c, in_shape, |o, i, k| g[i] += grad[o] * layer.weights[k]);
            g
        }
        LayerKind::MaxPool2d(_) => {
            let mut g = vec![0.0; n_in];
            let winners = trace.layers[l].winners.as_ref().expect("pool trace has winners");
            for (&w, &go) in winners.iter().zip(grad) {
                g[w] += go;
            }
            g
        }
        LayerKind::Flatten => grad.to_vec(),
    }
}

/// Fraction of neurons with a zero mask over the selected layers. Every conv
/// output position counts as its own neuron; for max-pool layers the
/// neurons are the pooled inputs and the losers count as inactive.
pub fn inactive_fraction(trace: &ForwardTrace, layers: &[usize]) -> Result<f64> {
    if layers.is_empty() {
        return Err(Error::invalid("empty layer selection"));
    }
    let (mut inactive, mut total) = (0usize, 0usize);
    for &l in layers {
        let t = trace.layers.get(l).ok_or(Error::IndexOutOfRange {
            what: "layer",
            index: l,
            len: trace.layers.len(),
        })?;
        inactive += t.mask.iter().filter(|&&m| m == 0.0).count();
        total += t.mask.len();
    }
    Ok(inactive as f64 / total as f64)
}
