//! Model and dataset containers and their SLPM / SLPD byte formats.
//!
//! Both formats are little-endian throughout. SLPM:
//!
//! ```text
//! "SLPM" u32 version=1
//! u32 input_rank, u32 dims[input_rank]
//! u32 layer_count
//! per layer:
//!   u8 kind (0 dense, 1 conv2d, 2 maxpool2d, 3 flatten)
//!   u8 activation (0 none, 1 relu, 2 tanh, 3 sigmoid)
//!   u32 shape fields (dense: in, out; conv2d: in_ch, out_ch, kh, kw, sh, sw,
//!       pad_top, pad_bottom, pad_left, pad_right; maxpool2d: wh, ww, sh, sw)
//!   u8 dtype (0 f32, 1 f64)
//!   weights, then biases
//! ```
//!
//! Dense weights are `[out][in]`, conv weights `[out_ch][in_ch][kh][kw]` and
//! image tensors `[channels][height][width]`.
//!
//! SLPD: `"SLPD" u32 version=1, u32 count, u32 rank, u32 dims[rank], u8 dtype,
//! u8 has_labels`, the samples, then `count` u32 labels when present.

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"SLPM";
pub const DATASET_MAGIC: [u8; 4] = *b"SLPD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    None,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::None => v,
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }

    /// Local derivative at `v`. The relu step is 0 at `v == 0`.
    pub fn derivative(self, v: f64) -> f64 {
        match self {
            Activation::None => 1.0,
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = v.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-v).exp());
                s * (1.0 - s)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::None => "none",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    fn tag(self) -> u8 {
        match self {
            Activation::None => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Activation::None,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            _ => {
                return Err(Error::UnknownTag {
                    what: "activation",
                    tag,
                })
            }
        })
    }
}

/// Storage precision of a payload. Values are always held as `f64` in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            t => Err(Error::UnsupportedDtype(t)),
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn check_representable(self, values: &[f64]) -> Result<()> {
        if self == Dtype::F32 && values.iter().any(|&v| (v as f32) as f64 != v) {
            return Err(Error::invalid("value not representable as f32 storage"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride_h: usize,
    pub stride_w: usize,
    pub pad_top: usize,
    pub pad_bottom: usize,
    pub pad_left: usize,
    pub pad_right: usize,
}

impl Conv2d {
    /// Unpadded convolution with unit stride.
    pub fn valid(in_channels: usize, out_channels: usize, kernel_h: usize, kernel_w: usize) -> Self {
        Conv2d {
            in_channels,
            out_channels,
            kernel_h,
            kernel_w,
            stride_h: 1,
            stride_w: 1,
            pad_top: 0,
            pad_bottom: 0,
            pad_left: 0,
            pad_right: 0,
        }
    }

    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_h * self.kernel_w
    }

    /// Output `(height, width)` for an input of `(height, width)`.
    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let ph = h + self.pad_top + self.pad_bottom;
        let pw = w + self.pad_left + self.pad_right;
        if ph < self.kernel_h || pw < self.kernel_w {
            return None;
        }
        Some((
            (ph - self.kernel_h) / self.stride_h + 1,
            (pw - self.kernel_w) / self.stride_w + 1,
        ))
    }

    fn fields(&self) -> [usize; 10] {
        [
            self.in_channels,
            self.out_channels,
            self.kernel_h,
            self.kernel_w,
            self.stride_h,
            self.stride_w,
            self.pad_top,
            self.pad_bottom,
            self.pad_left,
            self.pad_right,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MaxPool2d {
    pub window_h: usize,
    pub window_w: usize,
    pub stride_h: usize,
    pub stride_w: usize,
}

impl MaxPool2d {
    pub fn square(size: usize) -> Self {
        MaxPool2d {
            window_h: size,
            window_w: size,
            stride_h: size,
            stride_w: size,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        if h < self.window_h || w < self.window_w {
            return None;
        }
        Some((
            (h - self.window_h) / self.stride_h + 1,
            (w - self.window_w) / self.stride_w + 1,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense { inputs: usize, outputs: usize },
    Conv2d(Conv2d),
    MaxPool2d(MaxPool2d),
    Flatten,
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Dense { .. } => "dense",
            LayerKind::Conv2d(_) => "conv2d",
            LayerKind::MaxPool2d(_) => "maxpool2d",
            LayerKind::Flatten => "flatten",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            LayerKind::Dense { .. } => 0,
            LayerKind::Conv2d(_) => 1,
            LayerKind::MaxPool2d(_) => 2,
            LayerKind::Flatten => 3,
        }
    }

    fn weight_count(&self) -> usize {
        match self {
            LayerKind::Dense { inputs, outputs } => inputs * outputs,
            LayerKind::Conv2d(c) => c.weight_count(),
            _ => 0,
        }
    }

    fn bias_count(&self) -> usize {
        match self {
            LayerKind::Dense { outputs, .. } => *outputs,
            LayerKind::Conv2d(c) => c.out_channels,
            _ => 0,
        }
    }

    /// Output shape for the given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            LayerKind::Dense { inputs, outputs } => {
                if input != [*inputs] {
                    return Err(Error::shape(format!("dense layer expects [{inputs}], got {input:?}")));
                }
                Ok(vec![*outputs])
            }
            LayerKind::Conv2d(c) => {
                let [ch, h, w] = image_shape(input)?;
                if ch != c.in_channels {
                    return Err(Error::shape(format!(
                        "conv2d expects {} channels, got {ch}",
                        c.in_channels
                    )));
                }
                let (oh, ow) = c
                    .output_hw(h, w)
                    .ok_or_else(|| Error::shape("conv2d kernel larger than padded input"))?;
                Ok(vec![c.out_channels, oh, ow])
            }
            LayerKind::MaxPool2d(p) => {
                let [ch, h, w] = image_shape(input)?;
                let (oh, ow) = p
                    .output_hw(h, w)
                    .ok_or_else(|| Error::shape("maxpool2d window larger than input"))?;
                Ok(vec![ch, oh, ow])
            }
            LayerKind::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

fn image_shape(shape: &[usize]) -> Result<[usize; 3]> {
    match shape {
        [c, h, w] => Ok([*c, *h, *w]),
        _ => Err(Error::shape(format!(
            "expected a [channels, height, width] input, got {shape:?}"
        ))),
    }
}

/// One layer with its parameters widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub activation: Activation,
    /// Precision the parameters are stored with on disk.
    pub dtype: Dtype,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        Layer {
            kind: LayerKind::Dense { inputs, outputs },
            activation,
            dtype: Dtype::F64,
            weights,
            bias,
        }
    }

    pub fn conv2d(conv: Conv2d, activation: Activation, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        Layer {
            kind: LayerKind::Conv2d(conv),
            activation,
            dtype: Dtype::F64,
            weights,
            bias,
        }
    }

    pub fn maxpool2d(pool: MaxPool2d) -> Self {
        Layer {
            kind: LayerKind::MaxPool2d(pool),
            activation: Activation::None,
            dtype: Dtype::F64,
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    pub fn flatten() -> Self {
        Layer {
            kind: LayerKind::Flatten,
            activation: Activation::None,
            dtype: Dtype::F64,
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    /// Row `i` of a dense layer's weight matrix.
    pub fn dense_row(&self, i: usize) -> &[f64] {
        match self.kind {
            LayerKind::Dense { inputs, .. } => &self.weights[i * inputs..(i + 1) * inputs],
            _ => panic!("dense_row on a {} layer", self.kind.name()),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let counts_ok = match &self.kind {
            LayerKind::Dense { inputs, outputs } => *inputs >= 1 && *outputs >= 1,
            LayerKind::Conv2d(c) => {
                c.in_channels >= 1
                    && c.out_channels >= 1
                    && c.kernel_h >= 1
                    && c.kernel_w >= 1
                    && c.stride_h >= 1
                    && c.stride_w >= 1
            }
            LayerKind::MaxPool2d(p) => p.window_h >= 1 && p.window_w >= 1 && p.stride_h >= 1 && p.stride_w >= 1,
            LayerKind::Flatten => true,
        };
        if !counts_ok {
            return Err(Error::shape(format!("layer {index}: zero-sized shape field")));
        }
        if matches!(self.kind, LayerKind::MaxPool2d(_) | LayerKind::Flatten) && self.activation != Activation::None {
            return Err(Error::invalid(format!(
                "layer {index}: {} layers carry no activation",
                self.kind.name()
            )));
        }
        if self.weights.len() != self.kind.weight_count() || self.bias.len() != self.kind.bias_count() {
            return Err(Error::shape(format!(
                "layer {index}: {} expects {} weights and {} biases, got {} and {}",
                self.kind.name(),
                self.kind.weight_count(),
                self.kind.bias_count(),
                self.weights.len(),
                self.bias.len()
            )));
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("layer {index}: non-finite parameter")));
        }
        self.dtype.check_representable(&self.weights)?;
        self.dtype.check_representable(&self.bias)
    }
}

/// An immutable feed-forward layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    /// Output shape of every layer.
    shapes: Vec<Vec<usize>>,
}

impl Model {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::shape(format!("invalid input shape {input_shape:?}")));
        }
        if layers.is_empty() {
            return Err(Error::invalid("a model needs at least one layer"));
        }
        let mut shapes = Vec::with_capacity(layers.len());
        let mut current = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            layer.validate(i)?;
            current = layer
                .kind
                .output_shape(&current)
                .map_err(|e| Error::shape(format!("layer {i}: {e}")))?;
            shapes.push(current.clone());
        }
        Ok(Model {
            input_shape,
            layers,
            shapes,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> Result<&Layer> {
        self.layers.get(l).ok_or(Error::IndexOutOfRange {
            what: "layer",
            index: l,
            len: self.layers.len(),
        })
    }

    pub fn output_shape(&self, l: usize) -> &[usize] {
        &self.shapes[l]
    }

    /// Shape feeding layer `l`.
    pub fn layer_input_shape(&self, l: usize) -> &[usize] {
        if l == 0 {
            &self.input_shape
        } else {
            &self.shapes[l - 1]
        }
    }

    /// Number of units (flattened outputs) in layer `l`.
    pub fn layer_width(&self, l: usize) -> usize {
        self.shapes[l].iter().product()
    }

    /// Number of network outputs K.
    pub fn output_len(&self) -> usize {
        self.layer_width(self.layers.len() - 1)
    }

    pub fn into_layers(self) -> (Vec<usize>, Vec<Layer>) {
        (self.input_shape, self.layers)
    }
}

pub fn save_model(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MODEL_MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize);
    put_shape(&mut out, model.input_shape());
    put_u32(&mut out, model.layers().len());
    for layer in model.layers() {
        out.push(layer.kind.tag());
        out.push(layer.activation.tag());
        match &layer.kind {
            LayerKind::Dense { inputs, outputs } => {
                put_u32(&mut out, *inputs);
                put_u32(&mut out, *outputs);
            }
            LayerKind::Conv2d(c) => c.fields().iter().for_each(|&f| put_u32(&mut out, f)),
            LayerKind::MaxPool2d(p) => {
                for f in [p.window_h, p.window_w, p.stride_h, p.stride_w] {
                    put_u32(&mut out, f);
                }
            }
            LayerKind::Flatten => {}
        }
        out.push(layer.dtype.tag());
        put_values(&mut out, layer.dtype, &layer.weights);
        put_values(&mut out, layer.dtype, &layer.bias);
    }
    out
}

pub fn load_model(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    r.version()?;
    let input_shape = r.shape()?;
    let layer_count = r.u32()? as usize;
    let mut layers = Vec::new();
    for _ in 0..layer_count {
        let kind_tag = r.u8()?;
        let activation = Activation::from_tag(r.u8()?)?;
        let kind = match kind_tag {
            0 => LayerKind::Dense {
                inputs: r.u32()? as usize,
                outputs: r.u32()? as usize,
            },
            1 => {
                let mut f = [0usize; 10];
                for v in f.iter_mut() {
                    *v = r.u32()? as usize;
                }
                LayerKind::Conv2d(Conv2d {
                    in_channels: f[0],
                    out_channels: f[1],
                    kernel_h: f[2],
                    kernel_w: f[3],
                    stride_h: f[4],
                    stride_w: f[5],
                    pad_top: f[6],
                    pad_bottom: f[7],
                    pad_left: f[8],
                    pad_right: f[9],
                })
            }
            2 => LayerKind::MaxPool2d(MaxPool2d {
                window_h: r.u32()? as usize,
                window_w: r.u32()? as usize,
                stride_h: r.u32()? as usize,
                stride_w: r.u32()? as usize,
            }),
            3 => LayerKind::Flatten,
            tag => {
                return Err(Error::UnknownTag {
                    what: "layer kind",
                    tag,
                })
            }
        };
        let dtype = Dtype::from_tag(r.u8()?)?;
        // Payload lengths come from the declared shape; a mismatch between
        // declaration and payload shows up as truncation or trailing bytes.
        let weights = r.values(dtype, checked_weight_count(&kind)?)?;
        let bias = r.values(dtype, kind.bias_count())?;
        layers.push(Layer {
            kind,
            activation,
            dtype,
            weights,
            bias,
        });
    }
    r.finish()?;
    Model::new(input_shape, layers)
}

fn checked_weight_count(kind: &LayerKind) -> Result<usize> {
    let factors: &[usize] = match kind {
        LayerKind::Dense { inputs, outputs } => &[*inputs, *outputs],
        LayerKind::Conv2d(c) => &[c.out_channels, c.in_channels, c.kernel_h, c.kernel_w],
        _ => return Ok(0),
    };
    factors
        .iter()
        .try_fold(1usize, |acc, &f| acc.checked_mul(f))
        .ok_or_else(|| Error::shape("weight count overflows"))
}

/// A set of samples sharing one shape, optionally labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sample_shape: Vec<usize>,
    samples: Vec<f64>,
    labels: Option<Vec<u32>>,
    pub dtype: Dtype,
}

impl Dataset {
    pub fn new(sample_shape: Vec<usize>, samples: Vec<f64>, labels: Option<Vec<u32>>) -> Result<Self> {
        let ds = Dataset {
            sample_shape,
            samples,
            labels,
            dtype: Dtype::F64,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.sample_shape.is_empty() || self.sample_shape.contains(&0) {
            return Err(Error::shape(format!("invalid sample shape {:?}", self.sample_shape)));
        }
        let per = self.sample_len();
        if !self.samples.len().is_multiple_of(per) {
            return Err(Error::shape(format!(
                "{} values is not a whole number of {per}-value samples",
                self.samples.len()
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.len() {
                return Err(Error::shape(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    self.len()
                )));
            }
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite sample value"));
        }
        self.dtype.check_representable(&self.samples)
    }

    pub fn sample_shape(&self) -> &[usize] {
        &self.sample_shape
    }

    pub fn sample_len(&self) -> usize {
        self.sample_shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.sample_len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let n = self.sample_len();
        &self.samples[i * n..(i + 1) * n]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Option<Vec<u32>>) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    /// Keeps the first `n` samples.
    pub fn truncated(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            sample_shape: self.sample_shape.clone(),
            samples: self.samples[..n * self.sample_len()].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
            dtype: self.dtype,
        }
    }

    /// Checks that the dataset can be fed to `model`: matching sample shape
    /// and labels inside `[0, K)`.
    pub fn validate_for(&self, model: &Model) -> Result<()> {
        if self.sample_shape != model.input_shape() {
            return Err(Error::shape(format!(
                "dataset samples are {:?}, model expects {:?}",
                self.sample_shape,
                model.input_shape()
            )));
        }
        let k = model.output_len();
        if let Some(bad) = self.labels().and_then(|l| l.iter().find(|&&v| v as usize >= k)) {
            return Err(Error::invalid(format!("label {bad} outside [0, {k}) for this model")));
        }
        Ok(())
    }
}

pub fn save_dataset(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&DATASET_MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize);
    put_u32(&mut out, ds.len());
    put_shape(&mut out, &ds.sample_shape);
    out.push(ds.dtype.tag());
    out.push(ds.labels.is_some() as u8);
    put_values(&mut out, ds.dtype, &ds.samples);
    if let Some(labels) = &ds.labels {
        for &l in labels {
            out.write_u32::<LittleEndian>(l).unwrap();
        }
    }
    out
}

pub fn load_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(bytes);
    r.magic(DATASET_MAGIC)?;
    r.version()?;
    let count = r.u32()? as usize;
    let sample_shape = r.shape()?;
    let dtype = Dtype::from_tag(r.u8()?)?;
    let has_labels = match r.u8()? {
        0 => false,
        1 => true,
        tag => {
            return Err(Error::UnknownTag {
                what: "has_labels",
                tag,
            })
        }
    };
    let total = sample_shape
        .iter()
        .try_fold(count, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::shape("sample count overflows"))?;
    let samples = r.values(dtype, total)?;
    let labels = if has_labels {
        let raw = r.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::shape("label count overflows"))?,
        )?;
        Some(raw.chunks_exact(4).map(LittleEndian::read_u32).collect())
    } else {
        None
    };
    r.finish()?;
    let ds = Dataset {
        sample_shape,
        samples,
        labels,
        dtype,
    };
    ds.validate()?;
    Ok(ds)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("field exceeds u32");
    out.write_u32::<LittleEndian>(v).unwrap();
}

fn put_shape(out: &mut Vec<u8>, shape: &[usize]) {
    put_u32(out, shape.len());
    shape.iter().for_each(|&d| put_u32(out, d));
}

fn put_values(out: &mut Vec<u8>, dtype: Dtype, values: &[f64]) {
    for &v in values {
        match dtype {
            Dtype::F32 => out.write_f32::<LittleEndian>(v as f32).unwrap(),
            Dtype::F64 => out.write_f64::<LittleEndian>(v).unwrap(),
        }
    }
}

/// Bounds-checked little-endian cursor.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - available,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let available = self.bytes.len().min(4);
        let mut found = [0u8; 4];
        found[..available].copy_from_slice(&self.bytes[..available]);
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        self.pos = 4;
        Ok(())
    }

    pub(crate) fn version(&mut self) -> Result<()> {
        match self.u32()? {
            FORMAT_VERSION => Ok(()),
            v => Err(Error::UnsupportedVersion(v)),
        }
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    pub(crate) fn shape(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()? as usize;
        // each dim needs 4 bytes; fail before allocating for a bogus rank
        if rank > (self.bytes.len() - self.pos) / 4 {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: rank * 4 - (self.bytes.len() - self.pos),
            });
        }
        (0..rank).map(|_| self.u32().map(|d| d as usize)).collect()
    }

    pub(crate) fn values(&mut self, dtype: Dtype, n: usize) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(dtype.width())
            .ok_or_else(|| Error::shape("payload size overflows"))?;
        let raw = self.take(bytes)?;
        Ok(match dtype {
            Dtype::F32 => raw.chunks_exact(4).map(|c| LittleEndian::read_f32(c) as f64).collect(),
            Dtype::F64 => raw.chunks_exact(8).map(LittleEndian::read_f64).collect(),
        })
    }

    pub(crate) fn finish(&self) -> Result<()> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            n => Err(Error::TrailingBytes(n)),
        }
    }
}
