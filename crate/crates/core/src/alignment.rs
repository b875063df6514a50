//! Alignment outputs: compact paths and `{0,1}` matrices.

use crate::batch::ValidLengths;
use crate::error::{MasError, Result};

/// Monotonic alignment of `s` frames onto `t` text units.
///
/// Indices are stored 0-based: `indices[j]` is the text unit assigned to
/// frame `j`. The path starts at 0, ends at `t - 1` and advances by 0 or 1
/// per frame, so every text unit receives at least one frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathVector {
    indices: Vec<usize>,
    text_len: usize,
}

impl PathVector {
    /// Validates 0-based indices against `text_len`.
    pub fn new(indices: Vec<usize>, text_len: usize) -> Result<Self> {
        let (Some(&first), Some(&last)) = (indices.first(), indices.last()) else {
            return Err(MasError::InvalidPath("empty path".into()));
        };
        if first != 0 {
            return Err(MasError::InvalidPath(format!(
                "path starts at text {} instead of 1",
                first + 1
            )));
        }
        if text_len == 0 || last != text_len - 1 {
            return Err(MasError::InvalidPath(format!(
                "path ends at text {} instead of {text_len}",
                last + 1
            )));
        }
        if let Some(j) = indices
            .windows(2)
            .position(|w| w[1] < w[0] || w[1] - w[0] > 1)
        {
            return Err(MasError::InvalidPath(format!(
                "step from frame {} to {} is {} -> {}",
                j + 1,
                j + 2,
                indices[j] + 1,
                indices[j + 1] + 1
            )));
        }
        Ok(Self { indices, text_len })
    }

    /// Builds a path from 1-based text indices.
    pub fn from_one_based(indices: &[usize], text_len: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(MasError::InvalidPath("1-based index 0".into()));
        }
        Self::new(indices.iter().map(|&i| i - 1).collect(), text_len)
    }

    /// Wraps indices produced by a backward pass without checking them.
    ///
    /// With a valid sentinel the result always satisfies the invariants; an
    /// undersized sentinel can yield paths that fail [`Self::check`].
    pub(crate) fn from_raw(indices: Vec<usize>, text_len: usize) -> Self {
        Self { indices, text_len }
    }

    /// Re-checks the path invariants.
    pub fn check(&self) -> Result<()> {
        Self::new(self.indices.clone(), self.text_len).map(|_| ())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn text_len(&self) -> usize {
        self.text_len
    }

    pub fn speech_len(&self) -> usize {
        self.indices.len()
    }

    /// Sum of `score(i, j)` along the path, accumulated left to right.
    pub fn score_with<T, G>(&self, mut score: G) -> T
    where
        T: std::ops::Add<Output = T> + Default,
        G: FnMut(usize, usize) -> T,
    {
        self.indices
            .iter()
            .enumerate()
            .fold(T::default(), |acc, (j, &i)| acc + score(i, j))
    }
}

/// Batch of `B` binary `T x S` alignment matrices, row-major `[B, T, S]`.
///
/// Inside each item's valid region every frame column holds exactly one 1
/// and the ones trace a monotonic path; everything else is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMatrix {
    batch_size: usize,
    text_capacity: usize,
    speech_capacity: usize,
    values: Vec<u8>,
    valid_lengths: Vec<ValidLengths>,
}

impl AlignmentMatrix {
    /// Builds a matrix and checks all invariants.
    pub fn new(
        batch_size: usize,
        text_capacity: usize,
        speech_capacity: usize,
        values: Vec<u8>,
        valid_lengths: Vec<ValidLengths>,
    ) -> Result<Self> {
        let len = batch_size
            .checked_mul(text_capacity)
            .and_then(|n| n.checked_mul(speech_capacity));
        if len != Some(values.len()) || valid_lengths.len() != batch_size {
            return Err(MasError::ShapeMismatch(format!(
                "{} values / {} length pairs for shape [{batch_size}, {text_capacity}, {speech_capacity}]",
                values.len(),
                valid_lengths.len()
            )));
        }
        let m = Self {
            batch_size,
            text_capacity,
            speech_capacity,
            values,
            valid_lengths,
        };
        for b in 0..batch_size {
            let l = m.valid_lengths[b];
            if l.text == 0
                || l.text > l.speech
                || l.text > text_capacity
                || l.speech > speech_capacity
            {
                return Err(MasError::InvalidMatrix(format!(
                    "item {b}: unusable valid lengths ({}, {})",
                    l.text, l.speech
                )));
            }
            path_from_matrix(m.item(b))
                .map_err(|e| MasError::InvalidMatrix(format!("item {b}: {e}")))?;
        }
        Ok(m)
    }

    /// All-zero matrix; engines fill it item by item.
    pub(crate) fn zeros(
        text_capacity: usize,
        speech_capacity: usize,
        valid_lengths: Vec<ValidLengths>,
    ) -> Self {
        let batch_size = valid_lengths.len();
        Self {
            batch_size,
            text_capacity,
            speech_capacity,
            values: vec![0; batch_size * text_capacity * speech_capacity],
            valid_lengths,
        }
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

    pub fn shape(&self) -> [usize; 3] {
        [self.batch_size, self.text_capacity, self.speech_capacity]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn valid_lengths(&self) -> &[ValidLengths] {
        &self.valid_lengths
    }

    pub fn item(&self, b: usize) -> AlignmentView<'_> {
        let len = self.text_capacity * self.speech_capacity;
        AlignmentView {
            values: &self.values[b * len..(b + 1) * len],
            stride: self.speech_capacity,
            lengths: self.valid_lengths[b],
        }
    }

    /// Decodes every item back into its path.
    pub fn paths(&self) -> Result<Vec<PathVector>> {
        (0..self.batch_size)
            .map(|b| path_from_matrix(self.item(b)))
            .collect()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [u8] {
        &mut self.values
    }

    pub(crate) fn item_chunks_mut(&mut self) -> std::slice::ChunksExactMut<'_, u8> {
        let len = self.text_capacity * self.speech_capacity;
        self.values.chunks_exact_mut(len)
    }
}

/// Borrowed view of one alignment item.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentView<'a> {
    values: &'a [u8],
    stride: usize,
    lengths: ValidLengths,
}

impl<'a> AlignmentView<'a> {
    /// View over a dense `t x s` row-major item with full valid lengths.
    pub fn dense(values: &'a [u8], t: usize, s: usize) -> Result<Self> {
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

    pub fn lengths(&self) -> ValidLengths {
        self.lengths
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.stride + j]
    }
}

/// Writes `path` as ones into a zeroed row-major item buffer.
pub(crate) fn write_path(path: &PathVector, item: &mut [u8], stride: usize) {
    for (j, &i) in path.indices().iter().enumerate() {
        item[i * stride + j] = 1;
    }
}

/// Expands a path into a single-item `t x s` alignment matrix.
pub fn matrix_from_path(path: &PathVector, t: usize, s: usize) -> Result<AlignmentMatrix> {
    if path.text_len() != t || path.speech_len() != s {
        return Err(MasError::InvalidPath(format!(
            "path covers {}x{} but {t}x{s} was requested",
            path.text_len(),
            path.speech_len()
        )));
    }
    let mut m = AlignmentMatrix::zeros(t, s, vec![ValidLengths::new(t, s)]);
    write_path(path, &mut m.values, s);
    Ok(m)
}

/// Recovers the path encoded by one alignment item.
pub fn path_from_matrix(item: AlignmentView<'_>) -> Result<PathVector> {
    let ValidLengths { text, speech } = item.lengths;
    let rows = item.values.len() / item.stride.max(1);
    let mut indices = Vec::with_capacity(speech);
    for j in 0..item.stride {
        let ones: Vec<usize> = (0..rows).filter(|&i| item.get(i, j) != 0).collect();
        if j >= speech {
            if !ones.is_empty() {
                return Err(MasError::InvalidMatrix(format!(
                    "non-zero entry in padding column {}",
                    j + 1
                )));
            }
            continue;
        }
        match ones.as_slice() {
            [i] if *i < text && item.get(*i, j) == 1 => indices.push(*i),
            [i] if *i >= text => {
                return Err(MasError::InvalidMatrix(format!(
                    "column {} marks padding row {}",
                    j + 1,
                    i + 1
                )))
            }
            [i] => {
                return Err(MasError::InvalidMatrix(format!(
                    "entry ({}, {}) is {} instead of 0 or 1",
                    i + 1,
                    j + 1,
                    item.get(*i, j)
                )))
            }
            _ => {
                return Err(MasError::InvalidMatrix(format!(
                    "column {} has {} ones",
                    j + 1,
                    ones.len()
                )))
            }
        }
    }
    PathVector::new(indices, text).map_err(|e| MasError::InvalidMatrix(e.to_string()))
}
