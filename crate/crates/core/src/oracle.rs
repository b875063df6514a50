//! Exhaustive ground truth for small instances.
//!
//! A monotonic path over `s` frames and `t` text units is fixed by choosing
//! which `t - 1` of the `s - 1` frame boundaries advance the text index, so
//! there are `C(s - 1, t - 1)` of them. Paths are enumerated in
//! lexicographic order of the chosen boundary set and scored in `f64`.

use crate::alignment::PathVector;
use crate::batch::ItemView;
use crate::error::{MasError, Result};
use crate::scalar::Scalar;

/// Upper bound on how many paths the oracle will enumerate.
pub const MAX_ENUMERATED_PATHS: u128 = 1_000_000;

/// Paths within this absolute distance of the maximum count as optimal.
pub const ARGMAX_TOLERANCE: f64 = 1e-9;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn guard(t: usize, s: usize) -> Result<()> {
    if t == 0 || t > s {
        return Err(MasError::InfeasibleLengths {
            item: 0,
            text: t,
            speech: s,
        });
    }
    let paths = binomial(s - 1, t - 1);
    if paths > MAX_ENUMERATED_PATHS {
        return Err(MasError::TooLarge {
            paths,
            limit: MAX_ENUMERATED_PATHS,
        });
    }
    Ok(())
}

/// Every monotonic path for `(t, s)`.
pub fn enumerate_paths(t: usize, s: usize) -> Result<Vec<PathVector>> {
    let mut out = Vec::new();
    for_each_path(t, s, |p| {
        out.push(PathVector::new(p.to_vec(), t).expect("valid by construction"))
    })?;
    Ok(out)
}

/// Calls `visit` with the 0-based indices of every path, in enumeration order.
fn for_each_path(t: usize, s: usize, mut visit: impl FnMut(&[usize])) -> Result<()> {
    guard(t, s)?;
    let k = t - 1;
    // boundaries[m] = frame at which text unit m + 1 starts, strictly increasing in 1..s
    let mut boundaries: Vec<usize> = (1..=k).collect();
    let mut path = vec![0usize; s];
    loop {
        let mut unit = 0;
        for (j, slot) in path.iter_mut().enumerate() {
            if unit < k && boundaries[unit] == j {
                unit += 1;
            }
            *slot = unit;
        }
        visit(&path);

        // next k-combination of 1..s in lexicographic order
        let mut m = k;
        loop {
            if m == 0 {
                return Ok(());
            }
            m -= 1;
            if boundaries[m] < s - k + m {
                break;
            }
            if m == 0 {
                return Ok(());
            }
        }
        boundaries[m] += 1;
        for r in m + 1..k {
            boundaries[r] = boundaries[r - 1] + 1;
        }
    }
}

/// Maximum path score and every path attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub max_score: f64,
    pub argmax_paths: Vec<PathVector>,
}

impl OracleResult {
    pub fn is_unique(&self) -> bool {
        self.argmax_paths.len() == 1
    }

    pub fn contains(&self, path: &PathVector) -> bool {
        self.argmax_paths.contains(path)
    }
}

/// Scores every path of `q` in `f64` and keeps the optimal ones.
pub fn best_paths<F: Scalar>(q: ItemView<'_, F>) -> Result<OracleResult> {
    let (t, s) = (q.text_len(), q.speech_len());
    let mut scored: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut max_score = f64::NEG_INFINITY;
    for_each_path(t, s, |p| {
        let score: f64 = p
            .iter()
            .enumerate()
            .map(|(j, &i)| q.get(i, j).to_f64().unwrap_or(f64::NAN))
            .sum();
        max_score = max_score.max(score);
        scored.push((score, p.to_vec()));
    })?;
    let argmax_paths = scored
        .into_iter()
        .filter(|(score, _)| (max_score - score).abs() <= ARGMAX_TOLERANCE)
        .map(|(_, p)| PathVector::new(p, t).expect("valid by construction"))
        .collect();
    Ok(OracleResult {
        max_score,
        argmax_paths,
    })
}
