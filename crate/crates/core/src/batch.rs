//! Likelihood batches and their validation.

use crate::error::{MasError, Result};
use crate::scalar::Scalar;

/// Longest speech axis any item may have.
///
/// The forward pass can add up to `S` sentinel-seeded terms into an
/// infeasible cell; at `S = 1e5` and a `-1e32` sentinel that stays well
/// inside the `f32` range.
pub const MAX_SPEECH_LEN: usize = 100_000;

/// Largest accepted `|q|`.
///
/// Together with [`MAX_SPEECH_LEN`] this bounds every feasible path score by
/// `1e29` in magnitude, so a sentinel at or below `-1e30` always loses.
pub const MAX_ABS_LIKELIHOOD: f64 = 1e24;

/// Valid extent `(t_b, s_b)` of one batch item inside the padded capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValidLengths {
    pub text: usize,
    pub speech: usize,
}

impl ValidLengths {
    pub fn new(text: usize, speech: usize) -> Self {
        Self { text, speech }
    }
}

/// Batch of `B` dense `T x S` log-likelihood matrices, row-major `[B, T, S]`.
///
/// Every item carries its own valid lengths; cells outside the valid region
/// are padding and are never read by the engines. A constructed batch always
/// satisfies [`validate_batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodBatch<F> {
    batch_size: usize,
    text_capacity: usize,
    speech_capacity: usize,
    values: Vec<F>,
    valid_lengths: Vec<ValidLengths>,
}

impl<F: Scalar> LikelihoodBatch<F> {
    /// Builds and validates a batch.
    pub fn new(
        batch_size: usize,
        text_capacity: usize,
        speech_capacity: usize,
        values: Vec<F>,
        valid_lengths: Vec<ValidLengths>,
    ) -> Result<Self> {
        let batch = Self {
            batch_size,
            text_capacity,
            speech_capacity,
            values,
            valid_lengths,
        };
        validate_batch(&batch)?;
        Ok(batch)
    }

    /// Batch whose items all use the full `T x S` extent.
    pub fn full(
        batch_size: usize,
        text_capacity: usize,
        speech_capacity: usize,
        values: Vec<F>,
    ) -> Result<Self> {
        let lengths = vec![ValidLengths::new(text_capacity, speech_capacity); batch_size];
        Self::new(batch_size, text_capacity, speech_capacity, values, lengths)
    }

    /// Single-item batch from nested rows (`rows[i][j]` = text `i`, frame `j`).
    pub fn from_rows<R: AsRef<[F]>>(rows: &[R]) -> Result<Self> {
        let t = rows.len();
        let s = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != s) {
            return Err(MasError::ShapeMismatch("ragged rows".into()));
        }
        let values = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::full(1, t, s, values)
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn text_capacity(&self) -> usize {
        self.text_capacity
    }

    pub fn speech_capacity(&self) -> usize {
        self.speech_capacity
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn valid_lengths(&self) -> &[ValidLengths] {
        &self.valid_lengths
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.batch_size, self.text_capacity, self.speech_capacity]
    }

    pub fn item_len(&self) -> usize {
        self.text_capacity * self.speech_capacity
    }

    /// Read-only view of item `b`.
    pub fn item(&self, b: usize) -> ItemView<'_, F> {
        let len = self.item_len();
        ItemView {
            values: &self.values[b * len..(b + 1) * len],
            stride: self.speech_capacity,
            lengths: self.valid_lengths[b],
        }
    }

    pub fn items(&self) -> impl ExactSizeIterator<Item = ItemView<'_, F>> + '_ {
        (0..self.batch_size).map(move |b| self.item(b))
    }
}

/// Borrowed row-major view of one item, restricted to its valid lengths.
#[derive(Debug, Clone, Copy)]
pub struct ItemView<'a, F> {
    values: &'a [F],
    stride: usize,
    lengths: ValidLengths,
}

impl<'a, F: Scalar> ItemView<'a, F> {
    /// View over a dense `t x s` row-major slice.
    pub fn dense(values: &'a [F], t: usize, s: usize) -> Result<Self> {
        if values.len() != t * s {
            return Err(MasError::ShapeMismatch(format!(
                "{} values for a {t}x{s} item",
                values.len()
            )));
        }
        Ok(Self {
            values,
            stride: s,
            lengths: ValidLengths::new(t, s),
        })
    }

    pub fn text_len(&self) -> usize {
        self.lengths.text
    }

    pub fn speech_len(&self) -> usize {
        self.lengths.speech
    }

    pub fn lengths(&self) -> ValidLengths {
        self.lengths
    }

    /// Value at 0-based text `i`, frame `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.values[i * self.stride + j]
    }

    /// Valid part of text row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &'a [F] {
        let start = i * self.stride;
        &self.values[start..start + self.lengths.speech]
    }
}

/// Checks every batch invariant: buffer shape, per-item lengths within
/// capacity, `1 <= t_b <= s_b <= MAX_SPEECH_LEN` and finite values of
/// magnitude at most [`MAX_ABS_LIKELIHOOD`] inside each valid region.
pub fn validate_batch<F: Scalar>(batch: &LikelihoodBatch<F>) -> Result<()> {
    let [b, t_cap, s_cap] = batch.shape();
    if b == 0 || t_cap == 0 || s_cap == 0 {
        return Err(MasError::ShapeMismatch(format!(
            "dimensions must be positive, got [{b}, {t_cap}, {s_cap}]"
        )));
    }
    let expected = b
        .checked_mul(t_cap)
        .and_then(|n| n.checked_mul(s_cap))
        .ok_or_else(|| MasError::ShapeMismatch("dimension product overflows".into()))?;
    if batch.values.len() != expected {
        return Err(MasError::ShapeMismatch(format!(
            "{} values for shape [{b}, {t_cap}, {s_cap}]",
            batch.values.len()
        )));
    }
    if batch.valid_lengths.len() != b {
        return Err(MasError::ShapeMismatch(format!(
            "{} length pairs for batch size {b}",
            batch.valid_lengths.len()
        )));
    }
    let limit = F::from_f64(MAX_ABS_LIKELIHOOD).unwrap_or_else(F::max_value);
    for (item, &ValidLengths { text, speech }) in batch.valid_lengths.iter().enumerate() {
        if text == 0 || speech == 0 {
            return Err(MasError::ZeroDim { item, text, speech });
        }
        if text > t_cap || speech > s_cap {
            return Err(MasError::ShapeMismatch(format!(
                "item {item}: lengths ({text}, {speech}) exceed capacity ({t_cap}, {s_cap})"
            )));
        }
        if text > speech {
            return Err(MasError::InfeasibleLengths { item, text, speech });
        }
        if speech > MAX_SPEECH_LEN {
            return Err(MasError::SpeechTooLong {
                item,
                speech,
                max: MAX_SPEECH_LEN,
            });
        }
        let view = batch.item(item);
        for i in 0..text {
            // NaN fails the comparison as well
            let row = view.row(i);
            if row.iter().fold(true, |ok, v| ok & (v.abs() <= limit)) {
                continue;
            }
            let j = row
                .iter()
                .position(|v| v.is_nan() || v.abs() > limit)
                .unwrap();
            let (text, frame) = (i + 1, j + 1);
            return Err(if view.get(i, j).is_finite() {
                MasError::MagnitudeTooLarge {
                    item,
                    text,
                    frame,
                    limit: MAX_ABS_LIKELIHOOD,
                }
            } else {
                MasError::NonFinite { item, text, frame }
            });
        }
    }
    Ok(())
}
