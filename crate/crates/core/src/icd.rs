//! Input component decomposition: splits a neuron's activity into one
//! contribution per input component, measured from the neuron's centre.

use crate::linalg::dot;
use crate::projection::SwitchedProjection;

#[derive(Debug, Clone, PartialEq)]
pub struct IcdResult {
    /// Closest point to `x` on the zero-activity hyperplane of the projection.
    pub centre: Vec<f64>,
    /// Per-component contributions; they sum to the activity.
    pub nu: Vec<f64>,
    /// Set when `ŵ = 0`: the centre is undefined and falls back to `x`.
    pub degenerate: bool,
}

fn is_degenerate(w: &[f64]) -> bool {
    w.iter().all(|&v| v == 0.0)
}

/// `c = x − (v / ŵŵᵀ) ŵ`, or `x` itself when `ŵ = 0`.
pub fn centre(x: &[f64], proj: &SwitchedProjection) -> Vec<f64> {
    let w = &proj.w_hat;
    if is_degenerate(w) {
        return x.to_vec();
    }
    let scale = proj.activity / dot(w, w);
    x.iter().zip(w).map(|(xi, wi)| xi - scale * wi).collect()
}

/// `ν_j = (x_j − c_j) ŵ_j`.
pub fn icd_vector(x: &[f64], proj: &SwitchedProjection) -> IcdResult {
    let degenerate = is_degenerate(&proj.w_hat);
    let c = centre(x, proj);
    let nu = if degenerate {
        vec![0.0; x.len()]
    } else {
        x.iter()
            .zip(&c)
            .zip(&proj.w_hat)
            .map(|((xi, ci), wi)| (xi - ci) * wi)
            .collect()
    };
    IcdResult {
        centre: c,
        nu,
        degenerate,
    }
}
