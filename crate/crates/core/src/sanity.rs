//! Randomisation sanity checks: how strongly do attribution maps of two
//! models agree on the same inputs?

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forward::{argmax, forward_trace, ForwardTrace};
use crate::icd::icd_vector;
use crate::linalg::spearman;
use crate::model::{Dataset, Model};
use crate::projection::{switched_projection, Subset};
use crate::spa::{broad_order, narrow_order, spa_for_layer};

/// Which attribution to draw. Pattern ranks `k` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VisKind {
    IcdNu,
    BroadPattern(usize),
    NarrowPattern(usize),
}

impl fmt::Display for VisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VisKind::IcdNu => f.write_str("icd_nu"),
            VisKind::BroadPattern(k) => write!(f, "broad:{k}"),
            VisKind::NarrowPattern(k) => write!(f, "narrow:{k}"),
        }
    }
}

impl FromStr for VisKind {
    type Err = Error;

    /// `icd_nu`, `broad:K` or `narrow:K`.
    fn from_str(s: &str) -> Result<Self> {
        let rank = |k: &str| -> Result<usize> {
            match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(Error::invalid(format!(
                    "pattern rank must be a positive integer, got {k:?}"
                ))),
            }
        };
        match s.split_once(':') {
            None if s == "icd_nu" => Ok(VisKind::IcdNu),
            Some(("broad", k)) => Ok(VisKind::BroadPattern(rank(k)?)),
            Some(("narrow", k)) => Ok(VisKind::NarrowPattern(rank(k)?)),
            _ => Err(Error::invalid(format!("unknown visualisation method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisMethod {
    pub kind: VisKind,
    /// Layer to analyse; the output layer when unset.
    pub layer: Option<usize>,
    /// Neuron to explain; the layer's winner (largest activity) when unset.
    pub neuron: Option<usize>,
}

impl VisMethod {
    pub fn new(kind: VisKind) -> Self {
        VisMethod {
            kind,
            layer: None,
            neuron: None,
        }
    }

    fn layer_for(&self, model: &Model) -> usize {
        self.layer.unwrap_or(model.layers().len() - 1)
    }
}

/// Winner of layer `l`: largest activity, lowest index on ties.
pub fn winning_neuron(trace: &ForwardTrace, l: usize) -> usize {
    argmax(&trace.layers[l].activity)
}

/// Raw attribution over the input components of `x`.
pub fn visualization_vector(model: &Model, x: &[f64], method: &VisMethod) -> Result<Vec<f64>> {
    let trace = forward_trace(model, x)?;
    let layer = method.layer_for(model);
    model.layer(layer)?;
    let neuron = method.neuron.unwrap_or_else(|| winning_neuron(&trace, layer));
    visualize(model, &trace, method.kind, layer, neuron)
}

fn visualize(model: &Model, trace: &ForwardTrace, kind: VisKind, layer: usize, neuron: usize) -> Result<Vec<f64>> {
    match kind {
        VisKind::IcdNu => {
            let p = switched_projection(model, trace, layer, neuron)?;
            Ok(icd_vector(&trace.input, &p).nu)
        }
        VisKind::BroadPattern(k) => {
            let spa = spa_for_layer(model, trace, layer, Subset::All)?;
            broad_order(&spa)
                .signed_pattern(&spa, k - 1)
                .map_err(|_| Error::RankExceeded { k, rank: spa.rank() })
        }
        VisKind::NarrowPattern(k) => {
            let width = model.layer_width(layer);
            if neuron >= width {
                return Err(Error::IndexOutOfRange {
                    what: "neuron",
                    index: neuron,
                    len: width,
                });
            }
            // subset=all keeps column m == neuron m
            let spa = spa_for_layer(model, trace, layer, Subset::All)?;
            let order = narrow_order(&spa, neuron)?;
            order
                .signed_pattern(&spa, k - 1)
                .map_err(|_| Error::RankExceeded { k, rank: spa.rank() })
        }
    }
}

/// One row of a sanity report.
#[derive(Debug, Clone, PartialEq)]
pub struct SanityRow {
    pub method: VisKind,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
    pub abs: bool,
    /// Inputs where either visualisation was constant; counted as 0.
    pub constant_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SanityReport {
    pub rows: Vec<SanityRow>,
    /// Mean Spearman correlation of every input with itself: the score a
    /// model-independent "visualisation" (the raw input) would get.
    pub input_baseline: f64,
}

impl SanityReport {
    /// `method,mean,std,n,abs_flag` with LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,mean,std,n,abs_flag\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.method, r.mean, r.std, r.n, r.abs as u8));
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Spearman correlation between the two models' visualisations of every
/// input. When `method.neuron` is unset, the neuron is `model_a`'s winner
/// and the same index is explained in `model_b`.
pub fn sanity_correlation(
    model_a: &Model,
    model_b: &Model,
    dataset: &Dataset,
    method: &VisMethod,
    abs: bool,
) -> Result<SanityRow> {
    if dataset.is_empty() {
        return Err(Error::invalid("sanity check needs at least one input"));
    }
    for m in [model_a, model_b] {
        if m.input_shape() != dataset.sample_shape() {
            return Err(Error::shape(format!(
                "dataset samples are {:?}, model expects {:?}",
                dataset.sample_shape(),
                m.input_shape()
            )));
        }
    }
    let layer = method.layer_for(model_a);
    model_a.layer(layer)?;
    model_b.layer(layer)?;

    let mut scores = Vec::with_capacity(dataset.len());
    let mut constant_pairs = 0;
    for i in 0..dataset.len() {
        let x = dataset.sample(i);
        let ta = forward_trace(model_a, x)?;
        let tb = forward_trace(model_b, x)?;
        let neuron = method.neuron.unwrap_or_else(|| winning_neuron(&ta, layer));
        let mut va = visualize(model_a, &ta, method.kind, layer, neuron)?;
        let mut vb = visualize(model_b, &tb, method.kind, layer, neuron)?;
        if abs {
            va.iter_mut().for_each(|v| *v = v.abs());
            vb.iter_mut().for_each(|v| *v = v.abs());
        }
        if is_constant(&va) || is_constant(&vb) {
            constant_pairs += 1;
        }
        scores.push(spearman(&va, &vb)?);
    }
    let (mean, std) = mean_std(&scores);
    Ok(SanityRow {
        method: method.kind,
        mean,
        std,
        n: scores.len(),
        abs,
        constant_pairs,
    })
}

pub fn sanity_report(
    model_a: &Model,
    model_b: &Model,
    dataset: &Dataset,
    methods: &[VisMethod],
    abs: bool,
) -> Result<SanityReport> {
    let rows = methods
        .iter()
        .map(|m| sanity_correlation(model_a, model_b, dataset, m, abs))
        .collect::<Result<Vec<_>>>()?;
    let baseline: Vec<f64> = (0..dataset.len())
        .map(|i| spearman(dataset.sample(i), dataset.sample(i)))
        .collect::<Result<_>>()?;
    Ok(SanityReport {
        rows,
        input_baseline: mean_std(&baseline).0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::tiny_net;
    use crate::model::{Activation, Layer};

    #[test]
    fn method_parsing() {
        assert_eq!("icd_nu".parse::<VisKind>().unwrap(), VisKind::IcdNu);
        assert_eq!("broad:2".parse::<VisKind>().unwrap(), VisKind::BroadPattern(2));
        assert_eq!("narrow:1".parse::<VisKind>().unwrap(), VisKind::NarrowPattern(1));
        for bad in ["broad:0", "narrow:x", "gradient", "icd_nu:1"] {
            assert!(bad.parse::<VisKind>().is_err(), "{bad}");
        }
        assert_eq!(VisKind::BroadPattern(3).to_string(), "broad:3");
    }

    #[test]
    fn tiny_net_icd_nu() {
        let v = visualization_vector(&tiny_net(), &[1.0, 1.0], &VisMethod::new(VisKind::IcdNu)).unwrap();
        assert!((v[0] - 0.7).abs() < 1e-15 && (v[1] - 2.8).abs() < 1e-15);
    }

    #[test]
    fn ignored_input_component_is_zero_everywhere() {
        // component 1 never reaches the output
        let m = Model::new(
            vec![3],
            vec![
                Layer::dense(
                    3,
                    3,
                    Activation::Relu,
                    vec![1., 0., 2., -1., 0., 1., 0.5, 0., 0.5],
                    vec![0.1; 3],
                ),
                Layer::dense(3, 2, Activation::None, vec![1., 1., 1., -1., 2., 0.5], vec![0.0; 2]),
            ],
        )
        .unwrap();
        let x = [0.7, 3.0, 0.4];
        for kind in [VisKind::IcdNu, VisKind::BroadPattern(1), VisKind::NarrowPattern(1)] {
            let v = visualization_vector(&m, &x, &VisMethod::new(kind)).unwrap();
            assert_eq!(v[1], 0.0, "{kind}");
        }
    }

    #[test]
    fn rank_exceeded() {
        let err = visualization_vector(&tiny_net(), &[1.0, 1.0], &VisMethod::new(VisKind::BroadPattern(2)));
        assert_eq!(err, Err(Error::RankExceeded { k: 2, rank: 1 }));
    }

    #[test]
    fn self_and_negated_correlation() {
        let m = tiny_net();
        let ds = Dataset::new(vec![2], vec![1.0, 1.0, 2.0, 0.5, 0.3, 1.7], None).unwrap();
        let method = VisMethod::new(VisKind::IcdNu);
        let same = sanity_correlation(&m, &m, &ds, &method, false).unwrap();
        assert_eq!(same.mean, 1.0);
        assert_eq!(same.n, 3);

        let (shape, mut layers) = m.clone().into_layers();
        let out = layers.last_mut().unwrap();
        out.weights.iter_mut().for_each(|w| *w = -*w);
        out.bias.iter_mut().for_each(|b| *b = -*b);
        let negated = Model::new(shape, layers).unwrap();
        let flipped = sanity_correlation(&m, &negated, &ds, &method, false).unwrap();
        assert_eq!(flipped.mean, -1.0);
        let abs = sanity_correlation(&m, &negated, &ds, &method, true).unwrap();
        assert_eq!(abs.mean, 1.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let m = tiny_net();
        let ds = Dataset::new(vec![2], vec![], None).unwrap();
        assert!(sanity_correlation(&m, &m, &ds, &VisMethod::new(VisKind::IcdNu), false).is_err());
    }

    #[test]
    fn csv_layout() {
        let report = SanityReport {
            rows: vec![SanityRow {
                method: VisKind::BroadPattern(1),
                mean: 0.5,
                std: 0.25,
                n: 4,
                abs: true,
                constant_pairs: 0,
            }],
            input_baseline: 1.0,
        };
        assert_eq!(report.to_csv(), "method,mean,std,n,abs_flag\nbroad:1,0.5,0.25,4,1\n");
    }
}
