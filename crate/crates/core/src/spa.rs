//! Singular pattern analysis of a layer.
//!
//! The ICD vectors of a layer's neurons form the d×M ICD matrix `V`; its
//! compact SVD `V = U · diag(S) · H` yields orthogonal input-space patterns
//! (columns of `U`) that jointly make up the layer's activity. Patterns can
//! be ranked layer-wide by `S` (broad significance) or for a single neuron
//! `m` by `|s_i · h_im|` (narrow significance).

use crate::error::{Error, Result};
use crate::forward::ForwardTrace;
use crate::icd::icd_vector;
use crate::linalg::{compact_svd, Matrix};
use crate::model::Model;
use crate::projection::{layer_switched_projections, Subset, SwitchedProjection};

#[derive(Debug, Clone, PartialEq)]
pub struct SpaResult {
    /// ICD matrix, one column per analysed neuron.
    pub v: Matrix,
    pub u: Matrix,
    pub s: Vec<f64>,
    pub h: Matrix,
    /// Activity of each analysed neuron, in column order.
    pub activities: Vec<f64>,
    /// Layer-local index of each analysed neuron, in column order.
    pub neurons: Vec<usize>,
    pub subset: Subset,
    /// Columns whose projection had `ŵ = 0`.
    pub degenerate_columns: usize,
}

impl SpaResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Pattern `u_j` (0-based broad index).
    pub fn pattern(&self, j: usize) -> Vec<f64> {
        self.u.col(j)
    }

    /// `min(d, M)`.
    pub fn max_rank(&self) -> usize {
        self.v.rows().min(self.v.cols())
    }

    pub fn representational_power(&self, gamma: f64) -> Result<Capacity> {
        representational_power(&self.s, gamma, self.max_rank())
    }
}

/// Assembles the d×M ICD matrix from projections taken at input `x`.
pub fn icd_matrix(x: &[f64], projections: &[SwitchedProjection]) -> Result<Matrix> {
    if projections.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(p) = projections.iter().find(|p| p.w_hat.len() != x.len()) {
        return Err(Error::shape(format!(
            "projection of neuron {} has {} weights for a {}-value input",
            p.neuron,
            p.w_hat.len(),
            x.len()
        )));
    }
    let columns: Vec<Vec<f64>> = projections.iter().map(|p| icd_vector(x, p).nu).collect();
    Matrix::from_columns(&columns)
}

/// Compact SVD of an ICD matrix. Activities default to the column sums.
pub fn singular_patterns(v: Matrix) -> Result<SpaResult> {
    let svd = compact_svd(&v)?;
    Ok(SpaResult {
        activities: v.column_sums(),
        neurons: (0..v.cols()).collect(),
        subset: Subset::All,
        degenerate_columns: 0,
        u: svd.u,
        s: svd.s,
        h: svd.h,
        v,
    })
}

/// Projections → ICD matrix → singular patterns for one layer and subset.
pub fn spa_for_layer(model: &Model, trace: &ForwardTrace, layer: usize, subset: Subset) -> Result<SpaResult> {
    let projections = layer_switched_projections(model, trace, layer, subset)?;
    if projections.is_empty() {
        return Err(Error::EmptySubset);
    }
    let v = icd_matrix(&trace.input, &projections)?;
    let mut spa = singular_patterns(v)?;
    spa.activities = projections.iter().map(|p| p.activity).collect();
    spa.neurons = projections.iter().map(|p| p.neuron).collect();
    spa.subset = subset;
    spa.degenerate_columns = projections.iter().filter(|p| p.w_hat.iter().all(|&w| w == 0.0)).count();
    Ok(spa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Significance {
    Broad,
    /// Ordering for the neuron in column `m`.
    Narrow(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceOrder {
    pub kind: Significance,
    /// `order[i]` is the broad index `j` of the pattern ranked `i`.
    pub order: Vec<usize>,
    /// Signed coefficient of each ranked pattern: `s_j` for broad order,
    /// `α_mj = s_j · h_jm` for narrow order.
    pub coefficients: Vec<f64>,
}

impl SignificanceOrder {
    /// Pattern ranked `i` with the sign of its coefficient applied
    /// (`μ_{m,i} = sign(α_mj) u_j`); zero coefficients keep `u_j`.
    pub fn signed_pattern(&self, spa: &SpaResult, i: usize) -> Result<Vec<f64>> {
        let j = *self.order.get(i).ok_or(Error::RankExceeded {
            k: i + 1,
            rank: self.order.len(),
        })?;
        let mut u = spa.pattern(j);
        if self.coefficients[i] < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(u)
    }
}

/// Patterns in descending singular value order: the identity permutation.
pub fn broad_order(spa: &SpaResult) -> SignificanceOrder {
    SignificanceOrder {
        kind: Significance::Broad,
        order: (0..spa.rank()).collect(),
        coefficients: spa.s.clone(),
    }
}

/// Patterns ranked by `|α_mj|`, `α_mj = s_j · h_jm`, for column `m`. Ties
/// keep broad order.
pub fn narrow_order(spa: &SpaResult, m: usize) -> Result<SignificanceOrder> {
    let cols = spa.v.cols();
    if m >= cols {
        return Err(Error::IndexOutOfRange {
            what: "neuron column",
            index: m,
            len: cols,
        });
    }
    let alpha: Vec<f64> = spa.s.iter().enumerate().map(|(j, s)| s * spa.h[(j, m)]).collect();
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by(|&a, &b| alpha[b].abs().total_cmp(&alpha[a].abs()));
    Ok(SignificanceOrder {
        kind: Significance::Narrow(m),
        coefficients: order.iter().map(|&j| alpha[j]).collect(),
        order,
    })
}

/// Instance-based representational power at `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    /// Smallest number of leading normalised singular values whose sum
    /// reaches `gamma`.
    pub count: usize,
    /// `count / r_max`.
    pub proportion: f64,
}

pub fn representational_power(s: &[f64], gamma: f64, r_max: usize) -> Result<Capacity> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("singular values must be finite and non-negative"));
    }
    if s.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("singular values must be sorted descending"));
    }
    let total: f64 = s.iter().sum();
    if total == 0.0 {
        return Err(Error::invalid(
            "representational power is undefined for an all-zero spectrum",
        ));
    }
    if r_max < s.len() {
        return Err(Error::invalid(format!(
            "r_max {r_max} below the {} singular values",
            s.len()
        )));
    }
    let mut acc = 0.0;
    let mut count = s.len();
    for (k, v) in s.iter().enumerate() {
        acc += v / total;
        if acc >= gamma {
            count = k + 1;
            break;
        }
    }
    Ok(Capacity {
        count,
        proportion: count as f64 / r_max as f64,
    })
}
