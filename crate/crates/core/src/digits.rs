//! Procedural handwriting-like digit images for desk-scale experiments.
//!
//! Each sample is a 5×7 bitmap glyph of its class, placed at a random offset
//! on a 12×12 canvas with random stroke intensity, pixel dropout, stray
//! pixels and background noise. Samples are flat 144-value vectors in
//! `[0, 1]`, row-major.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::Dataset;

pub const SIDE: usize = 12;
pub const CLASSES: usize = 10;

const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;

const GLYPHS: [[&str; GLYPH_H]; CLASSES] = [
    [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
    ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
    [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    ["####.", "....#", "....#", ".###.", "....#", "....#", "####."],
    ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
    ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
];

fn glyph_on(class: usize, row: usize, col: usize) -> bool {
    GLYPHS[class][row].as_bytes()[col] == b'#'
}

fn render_sample<R: Rng>(rng: &mut R, class: usize, out: &mut Vec<f64>) {
    let mut img = [0.0f64; SIDE * SIDE];
    for p in img.iter_mut() {
        *p = rng.gen_range(0.0..0.15);
    }
    let dy = rng.gen_range(0..=SIDE - GLYPH_H);
    let dx = rng.gen_range(0..=SIDE - GLYPH_W);
    let ink = rng.gen_range(0.6..1.0);
    for r in 0..GLYPH_H {
        for c in 0..GLYPH_W {
            if glyph_on(class, r, c) && rng.gen_bool(0.9) {
                img[(r + dy) * SIDE + c + dx] = ink + rng.gen_range(-0.1..0.0);
            }
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        img[rng.gen_range(0..SIDE * SIDE)] = rng.gen_range(0.5..1.0);
    }
    out.extend_from_slice(&img);
}

/// `count` labelled samples with classes cycling 0..9.
pub fn synthetic_digits(count: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count * SIDE * SIDE);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let class = i % CLASSES;
        render_sample(&mut rng, class, &mut samples);
        labels.push(class as u32);
    }
    Dataset::new(vec![SIDE * SIDE], samples, Some(labels))
}
