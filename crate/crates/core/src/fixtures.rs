//! Small reference networks and random model generators shared by the unit,
//! integration and acceptance tests.

use rand::Rng;

use crate::model::{Activation, Conv2d, Layer, MaxPool2d, Model};

/// Two inputs, two relu hidden neurons `h1: w=(1,2), b=−0.5` and
/// `h2: w=(1,−1), b=0`, and a linear output `w=(1,1), b=1`.
pub fn tiny_net() -> Model {
    Model::new(
        vec![2],
        vec![
            Layer::dense(2, 2, Activation::Relu, vec![1.0, 2.0, 1.0, -1.0], vec![-0.5, 0.0]),
            Layer::dense(2, 1, Activation::None, vec![1.0, 1.0], vec![1.0]),
        ],
    )
    .expect("tiny net is valid")
}

fn uniform_vec<R: Rng>(rng: &mut R, n: usize, limit: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

/// Random dense network: `1..=max_depth` layers of width `1..=max_width`,
/// `hidden` activation on all but the last layer, which is linear.
pub fn random_dense_model<R: Rng>(rng: &mut R, max_depth: usize, max_width: usize, hidden: Activation) -> Model {
    let depth = rng.gen_range(1..=max_depth);
    let mut widths = vec![rng.gen_range(1..=max_width)];
    for _ in 0..depth {
        widths.push(rng.gen_range(1..=max_width));
    }
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(l, pair)| {
            let (i, o) = (pair[0], pair[1]);
            let limit = (6.0 / (i + o) as f64).sqrt();
            let act = if l + 1 == depth { Activation::None } else { hidden };
            Layer::dense(i, o, act, uniform_vec(rng, i * o, limit), uniform_vec(rng, o, 0.5))
        })
        .collect();
    Model::new(vec![widths[0]], layers).expect("random dense model is valid")
}

/// Random `conv → maxpool → flatten → dense → dense` relu network on a small
/// image, with random strides and per-edge padding.
pub fn random_conv_model<R: Rng>(rng: &mut R) -> Model {
    loop {
        let channels = rng.gen_range(1..=2);
        let (h, w) = (rng.gen_range(4..=7), rng.gen_range(4..=7));
        let conv = Conv2d {
            in_channels: channels,
            out_channels: rng.gen_range(1..=3),
            kernel_h: rng.gen_range(1..=3),
            kernel_w: rng.gen_range(1..=3),
            stride_h: rng.gen_range(1..=2),
            stride_w: rng.gen_range(1..=2),
            pad_top: rng.gen_range(0..=1),
            pad_bottom: rng.gen_range(0..=1),
            pad_left: rng.gen_range(0..=1),
            pad_right: rng.gen_range(0..=1),
        };
        let Some((oh, ow)) = conv.output_hw(h, w) else { continue };
        let pool = MaxPool2d {
            window_h: 2,
            window_w: 2,
            stride_h: rng.gen_range(1..=2),
            stride_w: rng.gen_range(1..=2),
        };
        let Some((ph, pw)) = pool.output_hw(oh, ow) else {
            continue;
        };
        let flat = conv.out_channels * ph * pw;
        let hidden = rng.gen_range(2..=8);
        let outputs = rng.gen_range(1..=4);
        let fan = (channels * conv.kernel_h * conv.kernel_w) as f64;
        let layers = vec![
            Layer::conv2d(
                conv,
                Activation::Relu,
                uniform_vec(rng, conv.weight_count(), (3.0 / fan).sqrt()),
                uniform_vec(rng, conv.out_channels, 0.5),
            ),
            Layer::maxpool2d(pool),
            Layer::flatten(),
            Layer::dense(
                flat,
                hidden,
                Activation::Relu,
                uniform_vec(rng, flat * hidden, (6.0 / (flat + hidden) as f64).sqrt()),
                uniform_vec(rng, hidden, 0.5),
            ),
            Layer::dense(
                hidden,
                outputs,
                Activation::None,
                uniform_vec(rng, hidden * outputs, (6.0 / (hidden + outputs) as f64).sqrt()),
                uniform_vec(rng, outputs, 0.5),
            ),
        ];
        return Model::new(vec![channels, h, w], layers).expect("random conv model is valid");
    }
}

/// Uniform random input in `[-2, 2)^d`.
pub fn random_input<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    uniform_vec(rng, d, 2.0)
}
