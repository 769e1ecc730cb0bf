use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slp_core::fixtures::{random_conv_model, random_dense_model};
use slp_core::render::render_heatmap;
use slp_core::tensor::Tensor;
use slp_core::{load_dataset, load_model, save_dataset, save_model, Activation, Dataset};

fn activation(i: u8) -> Activation {
    [
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::None,
    ][i as usize % 4]
}

proptest! {
    #[test]
    fn model_round_trip(seed in any::<u64>(), act in 0u8..4, conv in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = if conv {
            random_conv_model(&mut rng)
        } else {
            random_dense_model(&mut rng, 4, 16, activation(act))
        };
        let bytes = save_model(&m);
        prop_assert_eq!(load_model(&bytes).unwrap(), m.clone());
        prop_assert_eq!(save_model(&load_model(&bytes).unwrap()), bytes);
    }

    #[test]
    fn dataset_round_trip(
        shape in prop::collection::vec(1usize..4, 1..4),
        n in 0usize..6,
        labelled in any::<bool>(),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len: usize = shape.iter().product();
        let samples: Vec<f64> = (0..n * len).map(|_| rng.gen_range(-1e6..1e6)).collect();
        let labels = labelled.then(|| (0..n).map(|_| rng.gen_range(0..10)).collect());
        let ds = Dataset::new(shape, samples, labels).unwrap();
        prop_assert_eq!(load_dataset(&save_dataset(&ds)).unwrap(), ds);
    }

    /// Corrupt or cut files fail with an error, never a panic.
    #[test]
    fn corrupted_files_do_not_panic(seed in any::<u64>(), pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bytes = save_model(&random_conv_model(&mut rng));
        let mut flipped = bytes.clone();
        let i = pos.index(flipped.len());
        flipped[i] = byte;
        let _ = load_model(&flipped);
        let cut = cut.index(bytes.len());
        prop_assert!(load_model(&bytes[..cut]).is_err());
        let _ = Tensor::from_bytes(&flipped);
        let _ = load_dataset(&flipped);
    }

    #[test]
    fn heatmap_scale_invariant_and_negation_swaps(
        values in prop::collection::vec(-50.0f64..50.0, 12),
        k in 0.01f64..100.0,
    ) {
        let base = render_heatmap(&values, 4, 3, 1).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        let negated: Vec<f64> = values.iter().map(|v| -v).collect();
        let s = render_heatmap(&scaled, 4, 3, 1).unwrap();
        let n = render_heatmap(&negated, 4, 3, 1).unwrap();
        for ((a, b), c) in base.pixels.chunks(3).zip(s.pixels.chunks(3)).zip(n.pixels.chunks(3)) {
            for ch in 0..3 {
                prop_assert!((a[ch] as i32 - b[ch] as i32).abs() <= 1);
            }
            if a != [255, 255, 255] {
                prop_assert_eq!([a[2], a[1], a[0]], [c[0], c[1], c[2]]);
            }
        }
    }
}
