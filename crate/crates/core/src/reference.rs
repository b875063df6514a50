//! Nested-loop alignment search over an explicit score cache.
//!
//! This is the legible baseline: a full `t x s` cache initialised to the
//! sentinel, a cumulative first row, a double loop that only touches the
//! feasible triangle `i <= j`, and a serial argmax walk back from `(t, s)`.

use crate::alignment::{write_path, AlignmentMatrix, PathVector};
use crate::batch::{validate_batch, ItemView, LikelihoodBatch};
use crate::config::MasConfig;
use crate::error::Result;
use crate::scalar::Scalar;

/// Best prefix-path score ending at every cell.
///
/// Stored row-major (`values[i * s + j]`), matching the likelihood layout.
#[derive(Debug, Clone, PartialEq)]
pub struct QCache<F> {
    text_len: usize,
    speech_len: usize,
    values: Vec<F>,
}

impl<F: Scalar> QCache<F> {
    pub fn text_len(&self) -> usize {
        self.text_len
    }

    pub fn speech_len(&self) -> usize {
        self.speech_len
    }

    /// Score at 0-based text `i`, frame `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.values[i * self.speech_len + j]
    }

    /// Optimal total alignment score, `Q[t][s]`.
    pub fn score(&self) -> F {
        self.get(self.text_len - 1, self.speech_len - 1)
    }

    /// Raw row-major storage.
    pub fn values(&self) -> &[F] {
        &self.values
    }
}

/// Larger of the diagonal and horizontal predecessors; shared by both
/// engines so their cumulative scores agree bit for bit.
#[inline(always)]
pub(crate) fn pick_max<F: Scalar>(diagonal: F, horizontal: F) -> F {
    if horizontal > diagonal {
        horizontal
    } else {
        diagonal
    }
}

/// Fills the score cache for one item.
pub fn forward_reference<F: Scalar>(q: ItemView<'_, F>, cfg: &MasConfig<F>) -> QCache<F> {
    let (t, s) = (q.text_len(), q.speech_len());
    let mut cache = QCache {
        text_len: t,
        speech_len: s,
        values: vec![cfg.max_neg_val(); t * s],
    };
    let v = &mut cache.values;

    let mut acc = F::zero();
    for (j, &x) in q.row(0).iter().enumerate() {
        acc = acc + x;
        v[j] = acc;
    }
    // Row by row: cell (i, j) needs only row i - 1 and cell (i, j - 1), so
    // this visits the same feasible cells i <= j as a frame-outer sweep.
    for i in 1..t {
        let (done, rest) = v.split_at_mut(i * s);
        let prev = &done[(i - 1) * s..];
        let cur = &mut rest[..s];
        let row = q.row(i);
        for j in i..s {
            cur[j] = pick_max(prev[j - 1], cur[j - 1]) + row[j];
        }
    }
    cache
}

/// Walks the cache back from `(t, s)`.
///
/// At each frame the walk moves down to `i - 1` only when that cell scores
/// strictly higher; ties keep the current text unit.
pub fn backward_reference<F: Scalar>(cache: &QCache<F>) -> PathVector {
    backtrack(cache.text_len, cache.speech_len, |i, j| cache.get(i, j))
}

/// Serial argmax walk shared by both engines.
pub(crate) fn backtrack<F: Scalar>(
    t: usize,
    s: usize,
    score: impl Fn(usize, usize) -> F,
) -> PathVector {
    let mut indices = vec![0; s];
    let mut i = t - 1;
    indices[s - 1] = i;
    for j in (0..s - 1).rev() {
        if i > 0 && score(i - 1, j) > score(i, j) {
            i -= 1;
        }
        indices[j] = i;
    }
    PathVector::from_raw(indices, t)
}

/// Score and path for one item.
pub fn solve_reference<F: Scalar>(q: ItemView<'_, F>, cfg: &MasConfig<F>) -> (F, PathVector) {
    let cache = forward_reference(q, cfg);
    (cache.score(), backward_reference(&cache))
}

/// Aligns every item of the batch sequentially.
pub fn align_reference<F: Scalar>(
    batch: &LikelihoodBatch<F>,
    cfg: &MasConfig<F>,
) -> Result<AlignmentMatrix> {
    validate_batch(batch)?;
    let mut out = AlignmentMatrix::zeros(
        batch.text_capacity(),
        batch.speech_capacity(),
        batch.valid_lengths().to_vec(),
    );
    let stride = batch.speech_capacity();
    for (view, chunk) in batch.items().zip(out.item_chunks_mut()) {
        let (_, path) = solve_reference(view, cfg);
        write_path(&path, chunk, stride);
    }
    Ok(out)
}
