//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p slp-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slp_core::digits::synthetic_digits;
use slp_core::fixtures::{random_conv_model, random_dense_model, random_input};
use slp_core::linalg::{dot, Matrix};
use slp_core::render::render_heatmap;
use slp_core::sanity::{sanity_correlation, VisKind, VisMethod};
use slp_core::train::{train_mlp, Mlp, TrainConfig};
use slp_core::{
    forward_trace, icd_vector, layer_switched_projections, representational_power, spa_for_layer, switched_projection,
    switched_projection_chain_oracle, Activation, Dataset, Model, Subset,
};

type Outcome = Result<String, String>;
type Corpus = Vec<(Model, Vec<Vec<f64>>)>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// 200 relu dense models (depth ≤ 5, width ≤ 32), 10 inputs each.
fn dense_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..200)
        .map(|_| {
            let m = random_dense_model(&mut rng, 5, 32, Activation::Relu);
            let xs = (0..10).map(|_| random_input(&mut rng, m.input_len())).collect();
            (m, xs)
        })
        .collect()
}

fn conv_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    (0..20)
        .map(|_| {
            let m = random_conv_model(&mut rng);
            let xs = (0..10).map(|_| random_input(&mut rng, m.input_len())).collect();
            (m, xs)
        })
        .collect()
}

fn slp_exactness(corpus: &[(Model, Vec<Vec<f64>>)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut neurons = 0;
    for (m, xs) in corpus {
        for x in xs {
            let t = forward_trace(m, x).map_err(|e| e.to_string())?;
            for l in 0..m.layers().len() {
                for p in layer_switched_projections(m, &t, l, Subset::All).map_err(|e| e.to_string())? {
                    worst = worst.max((p.evaluate(x) - p.activity).abs());
                    neurons += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max |x·ŵ + b̂ − v| = {worst:e}"))?;
    Ok(format!("{neurons} neurons, max error {worst:.1e}"))
}

fn oracle_equivalence(corpora: &[&Corpus]) -> Outcome {
    let mut worst = 0.0f64;
    let mut neurons = 0;
    for corpus in corpora {
        for (m, xs) in corpus.iter() {
            for x in xs {
                let t = forward_trace(m, x).map_err(|e| e.to_string())?;
                for l in 0..m.layers().len() {
                    for i in 0..m.layer_width(l) {
                        let p = switched_projection(m, &t, l, i).map_err(|e| e.to_string())?;
                        let o = switched_projection_chain_oracle(m, &t, l, i).map_err(|e| e.to_string())?;
                        for (a, b) in p.w_hat.iter().zip(&o.w_hat) {
                            worst = worst.max((a - b).abs());
                        }
                        worst = worst.max((p.b_hat - o.b_hat).abs());
                        neurons += 1;
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max elementwise difference {worst:e}"))?;
    Ok(format!("{neurons} neurons, max difference {worst:.1e}"))
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn finite_difference_check() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        for _ in 0..30 {
            let m = random_dense_model(&mut rng, 4, 16, act);
            for _ in 0..3 {
                // resample until no neuron sits near a switching boundary
                let (x, t) = loop {
                    let x = random_input(&mut rng, m.input_len());
                    let t = forward_trace(&m, &x).map_err(|e| e.to_string())?;
                    if t.layers.iter().all(|lt| lt.activity.iter().all(|v| v.abs() > 1e-4)) {
                        break (x, t);
                    }
                };
                for l in 0..m.layers().len() {
                    for i in 0..m.layer_width(l) {
                        let p = switched_projection(&m, &t, l, i).map_err(|e| e.to_string())?;
                        let mut fd = vec![0.0; x.len()];
                        for (j, g) in fd.iter_mut().enumerate() {
                            let mut xp = x.clone();
                            let mut xm = x.clone();
                            xp[j] += H;
                            xm[j] -= H;
                            let vp = forward_trace(&m, &xp).map_err(|e| e.to_string())?.layers[l].activity[i];
                            let vm = forward_trace(&m, &xm).map_err(|e| e.to_string())?.layers[l].activity[i];
                            *g = (vp - vm) / (2.0 * H);
                        }
                        let scale = norm(&p.w_hat);
                        if scale == 0.0 {
                            ensure(norm(&fd) <= 1e-9, || {
                                "dead neuron with non-zero finite difference".into()
                            })?;
                            continue;
                        }
                        let diff: Vec<f64> = p.w_hat.iter().zip(&fd).map(|(a, b)| a - b).collect();
                        worst = worst.max(norm(&diff) / scale);
                        checked += 1;
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-5, || format!("max relative error {worst:e}"))?;
    Ok(format!("{checked} gradients, max relative error {worst:.1e}"))
}

fn icd_sum_property(corpus: &[(Model, Vec<Vec<f64>>)]) -> Outcome {
    let (mut sum_err, mut centre_err) = (0.0f64, 0.0f64);
    let mut degenerate = 0;
    for (m, xs) in corpus {
        for x in xs {
            let t = forward_trace(m, x).map_err(|e| e.to_string())?;
            for l in 0..m.layers().len() {
                for p in layer_switched_projections(m, &t, l, Subset::All).map_err(|e| e.to_string())? {
                    let icd = icd_vector(x, &p);
                    if icd.degenerate {
                        degenerate += 1;
                        continue;
                    }
                    sum_err = sum_err.max((icd.nu.iter().sum::<f64>() - p.activity).abs());
                    centre_err = centre_err.max((dot(&icd.centre, &p.w_hat) + p.b_hat).abs());
                }
            }
        }
    }
    ensure(sum_err <= 1e-9 && centre_err <= 1e-9, || {
        format!("|Σν − v| = {sum_err:e}, |c·ŵ + b̂| = {centre_err:e}")
    })?;
    Ok(format!(
        "|Σν − v| ≤ {sum_err:.1e}, |c·ŵ + b̂| ≤ {centre_err:.1e}, {degenerate} degenerate skipped"
    ))
}

fn spa_contracts(corpus: &[(Model, Vec<Vec<f64>>)]) -> Outcome {
    let (mut recon, mut ortho, mut colsum) = (0.0f64, 0.0f64, 0.0f64);
    let mut analyses = 0;
    for (m, xs) in corpus.iter().take(100) {
        for x in xs.iter().take(3) {
            let t = forward_trace(m, x).map_err(|e| e.to_string())?;
            for l in 0..m.layers().len() {
                let spa = spa_for_layer(m, &t, l, Subset::All).map_err(|e| e.to_string())?;
                analyses += 1;

                let mut rebuilt = Matrix::zeros(spa.v.rows(), spa.v.cols());
                if spa.rank() > 0 {
                    let scaled: Vec<Vec<f64>> = (0..spa.rank())
                        .map(|j| spa.u.col(j).iter().map(|u| u * spa.s[j]).collect())
                        .collect();
                    let us = Matrix::from_columns(&scaled).map_err(|e| e.to_string())?;
                    rebuilt = us.matmul(&spa.h).map_err(|e| e.to_string())?;
                    let g = spa.u.transpose().matmul(&spa.u).map_err(|e| e.to_string())?;
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            let target = if i == j { 1.0 } else { 0.0 };
                            ortho = ortho.max((g[(i, j)] - target).abs());
                        }
                    }
                }
                let diff: f64 = spa
                    .v
                    .data()
                    .iter()
                    .zip(rebuilt.data())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let fro = spa.v.frobenius_norm();
                if fro > 0.0 {
                    recon = recon.max(diff / fro);
                }

                for (mcol, v) in spa.activities.iter().enumerate() {
                    let col = spa.v.col(mcol);
                    if col.iter().all(|&e| e == 0.0) && spa.degenerate_columns > 0 {
                        continue;
                    }
                    colsum = colsum.max((col.iter().sum::<f64>() - v).abs());
                }

                let all = layer_switched_projections(m, &t, l, Subset::All).map_err(|e| e.to_string())?;
                let mut parts = layer_switched_projections(m, &t, l, Subset::Active).map_err(|e| e.to_string())?;
                parts.extend(layer_switched_projections(m, &t, l, Subset::Inactive).map_err(|e| e.to_string())?);
                parts.sort_by_key(|p| p.neuron);
                ensure(parts == all, || format!("partition mismatch in layer {l}"))?;
            }
        }
    }
    ensure(recon <= 1e-10 && ortho <= 1e-10 && colsum <= 1e-9, || {
        format!("reconstruction {recon:e}, orthonormality {ortho:e}, column sums {colsum:e}")
    })?;
    Ok(format!(
        "{analyses} layers, reconstruction {recon:.1e}, UᵀU−I {ortho:.1e}, column sums {colsum:.1e}"
    ))
}

fn capacity_cases() -> Outcome {
    let r = |s: &[f64], g| {
        representational_power(s, g, s.len())
            .map(|c| c.count)
            .map_err(|e| e.to_string())
    };
    ensure(r(&[10.0, 1.0], 0.9)? == 1, || "S=(10,1), γ=0.9 should give R=1".into())?;
    ensure(r(&[1.0, 1.0], 0.9)? == 2, || "S=(1,1), γ=0.9 should give R=2".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let n = rng.gen_range(1..=40);
        let mut s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        if s[0] == 0.0 {
            continue;
        }
        let mut prev = 0;
        for g in 1..100 {
            let c = r(&s, g as f64 / 100.0)?;
            ensure(c >= prev && c <= n, || {
                format!("spectrum {case}: R not monotone at γ={g}%")
            })?;
            prev = c;
        }
    }
    Ok("unit cases and 1000 random spectra".into())
}

const WIDTHS: [usize; 4] = [144, 32, 32, 10];

fn config(seed: u64, randomize_labels: bool) -> TrainConfig {
    TrainConfig {
        widths: WIDTHS.to_vec(),
        epochs: 100,
        batch_size: 16,
        learning_rate: 0.05,
        seed,
        randomize_labels,
    }
}

fn mean_capacity(model: &Model, test: &Dataset, layer: usize) -> Result<f64, String> {
    let mut total = 0.0;
    for i in 0..test.len() {
        let t = forward_trace(model, test.sample(i)).map_err(|e| e.to_string())?;
        let spa = spa_for_layer(model, &t, layer, Subset::All).map_err(|e| e.to_string())?;
        total += spa.representational_power(0.9).map_err(|e| e.to_string())?.proportion;
    }
    Ok(total / test.len() as f64)
}

fn capacity_direction(train: &Dataset) -> Outcome {
    let test = synthetic_digits(100, 2).map_err(|e| e.to_string())?;
    let truth = train_mlp(&config(7, false), train).map_err(|e| e.to_string())?;
    let random = train_mlp(&config(7, true), train).map_err(|e| e.to_string())?;
    let (first, penult) = (0, WIDTHS.len() - 3);
    let (t0, r0) = (
        mean_capacity(&truth, &test, first)?,
        mean_capacity(&random, &test, first)?,
    );
    let (tp, rp) = (
        mean_capacity(&truth, &test, penult)?,
        mean_capacity(&random, &test, penult)?,
    );
    let summary = format!("penultimate true {tp:.3} < random {rp:.3}; first layer |{t0:.3} − {r0:.3}| < 0.1");
    ensure(rp > tp && (t0 - r0).abs() < 0.1, || summary.clone())?;
    Ok(summary)
}

fn sanity_direction(train: &Dataset) -> Outcome {
    let inputs = synthetic_digits(200, 3).map_err(|e| e.to_string())?;
    let trained = train_mlp(&config(7, false), train).map_err(|e| e.to_string())?;
    let replica = train_mlp(&config(8, false), train).map_err(|e| e.to_string())?;
    let untrained = Mlp::init(&WIDTHS, 7)
        .to_model(&[WIDTHS[0]])
        .map_err(|e| e.to_string())?;
    let method = VisMethod::new(VisKind::IcdNu);
    let corr = |b: &Model| sanity_correlation(&trained, b, &inputs, &method, false).map_err(|e| e.to_string());
    let own = corr(&trained)?.mean;
    let rand = corr(&untrained)?.mean;
    let rep = corr(&replica)?.mean;
    let summary = format!("self {own}, untrained {rand:.3}, replica {rep:.3}");
    ensure(own == 1.0 && rand < 1.0 && rand < rep, || summary.clone())?;
    Ok(summary)
}

fn renderer_golden() -> Outcome {
    let ppm = |v: &[f64], w, h| {
        render_heatmap(v, w, h, 1)
            .map(|m| m.to_ppm())
            .map_err(|e| e.to_string())
    };
    let mut zero = b"P6\n2 2\n255\n".to_vec();
    zero.extend([255u8; 12]);
    ensure(ppm(&[0.0; 4], 2, 2)? == zero, || "zero vector is not all white".into())?;
    ensure(
        ppm(&[1.0, -1.0], 2, 1)? == b"P6\n2 1\n255\n\xff\x00\x00\x00\x00\xff".to_vec(),
        || "saturated ends".into(),
    )?;
    // a half-magnitude value next to the peak: 255 · 0.5 = 127.5 → 128
    ensure(
        ppm(&[0.5, 1.0], 2, 1)? == b"P6\n2 1\n255\n\xff\x80\x80\xff\x00\x00".to_vec(),
        || "half intensity rounding".into(),
    )?;
    Ok("3 golden images bit-exact".into())
}

fn main() -> ExitCode {
    let dense = dense_corpus();
    let conv = conv_corpus();
    let train = synthetic_digits(2000, 1).expect("digits");

    type Check<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        (
            "slp-exactness",
            Duration::from_secs(60),
            Box::new(|| slp_exactness(&dense)),
        ),
        (
            "oracle-equivalence",
            Duration::from_secs(120),
            Box::new(|| oracle_equivalence(&[&dense, &conv])),
        ),
        (
            "finite-difference-gradient",
            Duration::MAX,
            Box::new(finite_difference_check),
        ),
        ("icd-sum-property", Duration::MAX, Box::new(|| icd_sum_property(&dense))),
        ("spa-contracts", Duration::MAX, Box::new(|| spa_contracts(&dense))),
        ("representational-power", Duration::MAX, Box::new(capacity_cases)),
        (
            "capacity-direction",
            Duration::from_secs(600),
            Box::new(|| capacity_direction(&train)),
        ),
        ("sanity-direction", Duration::MAX, Box::new(|| sanity_direction(&train))),
        ("renderer-golden", Duration::MAX, Box::new(renderer_golden)),
    ];

    let mut failed = 0;
    for (name, budget, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > budget => Err(format!("{msg}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("[PASS] {name}: {msg} ({elapsed:.1?})"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg} ({elapsed:.1?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
