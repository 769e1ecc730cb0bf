//! Switched linear projections: for one traced input, every neuron's
//! activity is exactly `x · ŵ + b̂` with `ŵ`, `b̂` fixed by the network state.
//!
//! [`switched_projection`] gets `ŵ` as the input gradient of the activity by
//! one reverse sweep through the stored local derivatives and sets
//! `b̂ = v − x · ŵ`. [`switched_projection_chain_oracle`] rebuilds the same
//! pair from explicitly materialised, column-masked layer matrices; it only
//! exists to cross-check the sweep.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forward::{backward_linear, ForwardTrace};
use crate::linalg::{dot, Matrix};
use crate::model::{Activation, LayerKind, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedProjection {
    pub w_hat: Vec<f64>,
    pub b_hat: f64,
    pub layer: usize,
    pub neuron: usize,
    /// Activity `v` of the neuron at the traced input.
    pub activity: f64,
}

impl SwitchedProjection {
    /// `x · ŵ + b̂`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(x, &self.w_hat) + self.b_hat
    }
}

/// Which neurons of a layer to analyse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subset {
    All,
    Active,
    Inactive,
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::All => "all",
            Subset::Active => "active",
            Subset::Inactive => "inactive",
        })
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Subset::All),
            "active" => Ok(Subset::Active),
            "inactive" => Ok(Subset::Inactive),
            _ => Err(Error::invalid(format!("unknown subset {s:?}"))),
        }
    }
}

fn check_neuron(model: &Model, trace: &ForwardTrace, layer: usize, neuron: usize) -> Result<()> {
    trace.check_matches(model)?;
    model.layer(layer)?;
    let width = model.layer_width(layer);
    if neuron >= width {
        return Err(Error::IndexOutOfRange {
            what: "neuron",
            index: neuron,
            len: width,
        });
    }
    Ok(())
}

/// Switched projection of neuron `neuron` in layer `layer` by reverse
/// accumulation. Works for any activation; for relu networks it equals the
/// masked chain product.
pub fn switched_projection(
    model: &Model,
    trace: &ForwardTrace,
    layer: usize,
    neuron: usize,
) -> Result<SwitchedProjection> {
    check_neuron(model, trace, layer, neuron)?;
    let mut grad = vec![0.0; model.layer_width(layer)];
    grad[neuron] = 1.0;
    grad = backward_linear(model, trace, layer, &grad);
    for k in (0..layer).rev() {
        if !matches!(model.layers()[k].kind, LayerKind::MaxPool2d(_)) {
            for (g, m) in grad.iter_mut().zip(&trace.layers[k].mask) {
                *g *= m;
            }
        }
        grad = backward_linear(model, trace, k, &grad);
    }
    let activity = trace.layers[layer].activity[neuron];
    let b_hat = activity - dot(&trace.input, &grad);
    Ok(SwitchedProjection {
        w_hat: grad,
        b_hat,
        layer,
        neuron,
        activity,
    })
}

/// Layer `k` as an explicit affine map `A · input + β` (A is out×in).
/// Max-pool becomes a 0/1 winner-selection matrix taken from the trace.
pub fn materialize_layer(model: &Model, trace: &ForwardTrace, k: usize) -> (Matrix, Vec<f64>) {
    let layer = &model.layers()[k];
    let in_shape = model.layer_input_shape(k);
    let n_in: usize = in_shape.iter().product();
    let n_out = model.layer_width(k);
    let mut a = Matrix::zeros(n_out, n_in);
    let mut beta = vec![0.0; n_out];
    match &layer.kind {
        LayerKind::Dense { .. } => {
            a = Matrix::from_vec(n_out, n_in, layer.weights.clone()).expect("validated dense");
            beta.copy_from_slice(&layer.bias);
        }
        LayerKind::Conv2d(c) => {
            let (h, w) = (in_shape[1], in_shape[2]);
            let out_shape = model.output_shape(k);
            let (oh, ow) = (out_shape[1], out_shape[2]);
            // Row `o` of the matrix is the kernel of channel `oc` laid over
            // the receptive field of output position (oy, ox).
            for o in 0..n_out {
                let (oc, rem) = (o / (oh * ow), o % (oh * ow));
                let (oy, ox) = (rem / ow, rem % ow);
                beta[o] = layer.bias[oc];
                let top = (oy * c.stride_h) as isize - c.pad_top as isize;
                let left = (ox * c.stride_w) as isize - c.pad_left as isize;
                for ic in 0..c.in_channels {
                    for ky in 0..c.kernel_h {
                        for kx in 0..c.kernel_w {
                            let (iy, ix) = (top + ky as isize, left + kx as isize);
                            if (0..h as isize).contains(&iy) && (0..w as isize).contains(&ix) {
                                let col = ic * h * w + iy as usize * w + ix as usize;
                                let widx = ((oc * c.in_channels + ic) * c.kernel_h + ky) * c.kernel_w + kx;
                                a[(o, col)] = layer.weights[widx];
                            }
                        }
                    }
                }
            }
        }
        LayerKind::MaxPool2d(_) => {
            let winners = trace.layers[k].winners.as_ref().expect("pool trace has winners");
            for (o, &wi) in winners.iter().enumerate() {
                a[(o, wi)] = 1.0;
            }
        }
        LayerKind::Flatten => a = Matrix::identity(n_in),
    }
    (a, beta)
}

/// Masked layer matrix `W_k^(x) = Aᵀ · diag(mask)` (in×out) and masked bias.
fn masked_layer(model: &Model, trace: &ForwardTrace, k: usize) -> Result<(Matrix, Vec<f64>)> {
    let layer = &model.layers()[k];
    if !matches!(layer.activation, Activation::Relu | Activation::None) {
        return Err(Error::UnsupportedActivation(layer.activation.name()));
    }
    let (a, beta) = materialize_layer(model, trace, k);
    let mut wx = a.transpose();
    let mut bx = beta;
    // Max-pool selection already encodes the winners.
    if !matches!(layer.kind, LayerKind::MaxPool2d(_)) {
        let mask = &trace.layers[k].mask;
        for r in 0..wx.rows() {
            for (c, &m) in mask.iter().enumerate() {
                wx[(r, c)] *= m;
            }
        }
        bx.iter_mut().zip(mask).for_each(|(b, m)| *b *= m);
    }
    Ok((wx, bx))
}

fn row_times(v: &[f64], m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (i, &vi) in v.iter().enumerate() {
        for (o, &mij) in out.iter_mut().zip(m.row(i)) {
            *o += vi * mij;
        }
    }
    out
}

/// Switched projection from the explicit masked chain product
/// `ŵᵀ = W₁⁽ˣ⁾ ⋯ W_{l−1}⁽ˣ⁾ w_liᵀ`,
/// `b̂ = Σ_k b_k⁽ˣ⁾ W_{k+1}⁽ˣ⁾ ⋯ W_{l−1}⁽ˣ⁾ w_liᵀ + b_li`.
///
/// Only relu and linear layers are accepted. The result depends on the
/// input only through the masks and pool winners.
pub fn switched_projection_chain_oracle(
    model: &Model,
    trace: &ForwardTrace,
    layer: usize,
    neuron: usize,
) -> Result<SwitchedProjection> {
    check_neuron(model, trace, layer, neuron)?;
    let masked: Vec<(Matrix, Vec<f64>)> = (0..layer)
        .map(|k| masked_layer(model, trace, k))
        .collect::<Result<_>>()?;

    let (a, beta) = materialize_layer(model, trace, layer);
    let w_li = a.row(neuron).to_vec();

    let mut chain = Matrix::identity(model.input_len());
    for (wx, _) in &masked {
        chain = chain.matmul(wx)?;
    }
    let w_hat: Vec<f64> = (0..chain.rows()).map(|r| dot(chain.row(r), &w_li)).collect();

    let mut b_hat = beta[neuron];
    for (k, (_, bx)) in masked.iter().enumerate() {
        let mut row = bx.clone();
        for (wx, _) in &masked[k + 1..] {
            row = row_times(&row, wx);
        }
        b_hat += dot(&row, &w_li);
    }

    Ok(SwitchedProjection {
        w_hat,
        b_hat,
        layer,
        neuron,
        activity: trace.layers[layer].activity[neuron],
    })
}

/// Whether neuron `i` of layer `l` is active. Max-pool outputs are winners
/// by construction and count as active.
pub fn is_active(model: &Model, trace: &ForwardTrace, l: usize, i: usize) -> bool {
    match model.layers()[l].kind {
        LayerKind::MaxPool2d(_) => true,
        _ => trace.layers[l].mask[i] != 0.0,
    }
}

/// Indices of the neurons of layer `l` in `subset`, ascending.
pub fn select_neurons(model: &Model, trace: &ForwardTrace, l: usize, subset: Subset) -> Vec<usize> {
    (0..model.layer_width(l))
        .filter(|&i| match subset {
            Subset::All => true,
            Subset::Active => is_active(model, trace, l, i),
            Subset::Inactive => !is_active(model, trace, l, i),
        })
        .collect()
}

/// Projections of every neuron of layer `l` in `subset`. An inactive
/// neuron's projection is still well defined: only upstream masks enter it.
pub fn layer_switched_projections(
    model: &Model,
    trace: &ForwardTrace,
    l: usize,
    subset: Subset,
) -> Result<Vec<SwitchedProjection>> {
    trace.check_matches(model)?;
    model.layer(l)?;
    select_neurons(model, trace, l, subset)
        .into_iter()
        .map(|i| switched_projection(model, trace, l, i))
        .collect()
}
