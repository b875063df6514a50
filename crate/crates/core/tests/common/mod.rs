#![allow(dead_code)]

use mas_core::{AlignmentMatrix, LikelihoodBatch, ValidLengths};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

/// Checks every alignment invariant straight from the bytes, without going
/// through the crate's own path decoding. Returns 0-based paths.
pub fn check_alignment(
    out: &AlignmentMatrix,
    input: &LikelihoodBatch<f32>,
) -> Result<Vec<Vec<usize>>, String> {
    if out.shape() != input.shape() {
        return Err(format!(
            "shape {:?} != input {:?}",
            out.shape(),
            input.shape()
        ));
    }
    let [b, tc, sc] = out.shape();
    let mut paths = Vec::with_capacity(b);
    for item in 0..b {
        let ValidLengths { text, speech } = input.valid_lengths()[item];
        let cell = |i: usize, j: usize| out.values()[item * tc * sc + i * sc + j];
        let mut path = Vec::with_capacity(speech);
        for j in 0..sc {
            let ones: Vec<usize> = (0..tc).filter(|&i| cell(i, j) != 0).collect();
            if j >= speech {
                if !ones.is_empty() {
                    return Err(format!("item {item}: padding column {j} not zero"));
                }
                continue;
            }
            if ones.len() != 1 || cell(ones[0], j) != 1 {
                return Err(format!("item {item}: column {j} has {} ones", ones.len()));
            }
            if ones[0] >= text {
                return Err(format!(
                    "item {item}: column {j} marks padding row {}",
                    ones[0]
                ));
            }
            if ones[0] > j {
                return Err(format!("item {item}: infeasible cell ({}, {j})", ones[0]));
            }
            path.push(ones[0]);
        }
        if path[0] != 0 {
            return Err(format!("item {item}: A*(1) = {}", path[0] + 1));
        }
        if path[speech - 1] != text - 1 {
            return Err(format!(
                "item {item}: A*(s) = {} != t = {text}",
                path[speech - 1] + 1
            ));
        }
        if path.windows(2).any(|w| w[1] < w[0] || w[1] - w[0] > 1) {
            return Err(format!("item {item}: step outside {{0, 1}}"));
        }
        paths.push(path);
    }
    Ok(paths)
}

/// Single-item batch of uniform `[-5, 5]` values with random padding around
/// the valid `t x s` region; padding cells hold large junk.
pub fn padded_item<R: Rng>(rng: &mut R, t: usize, s: usize) -> LikelihoodBatch<f32> {
    let tc = t + rng.gen_range(0..3);
    let sc = s + rng.gen_range(0..5);
    let dist = Uniform::new_inclusive(-5.0f32, 5.0);
    let mut values = vec![0.0f32; tc * sc];
    for i in 0..tc {
        for j in 0..sc {
            values[i * sc + j] = if i < t && j < s {
                dist.sample(rng)
            } else {
                1e20
            };
        }
    }
    LikelihoodBatch::new(1, tc, sc, values, vec![ValidLengths::new(t, s)]).unwrap()
}

/// Relative agreement with a unit floor on the denominator.
pub fn rel_close(engine: f64, oracle: f64, tol: f64) -> bool {
    (engine - oracle).abs() <= tol * oracle.abs().max(1.0)
}
