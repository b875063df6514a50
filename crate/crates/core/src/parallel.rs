//! In-place alignment search with the text axis processed as lanes.
//!
//! Each item is copied once into column-major storage (one contiguous run of
//! lanes per speech frame). The forward pass then overwrites column `j` with
//! `max(shift(column j-1), column j-1) + column j`, where the shift moves
//! every lane down by one and feeds the sentinel into lane 0. Nothing else
//! is allocated: the cumulative scores replace the likelihoods and the
//! backward walk reads them directly.
//!
//! Sentinel propagation alone keeps the `i > j` triangle infeasible, so no
//! triangular mask is needed. Items run concurrently on a rayon pool, each
//! writing to its own slice of the output.

use rayon::prelude::*;

use crate::alignment::{write_path, AlignmentMatrix, PathVector};
use crate::batch::{validate_batch, ItemView, LikelihoodBatch};
use crate::config::{LanePadding, MasConfig};
use crate::error::{MasError, Result};
use crate::reference::{backtrack, pick_max};
use crate::scalar::Scalar;

const TILE: usize = 32;

/// Number of lanes a column of `t` text units occupies.
pub fn pad_lanes(t: usize, policy: LanePadding) -> usize {
    match policy {
        LanePadding::None => t,
        LanePadding::NextPowerOfTwo => t.next_power_of_two(),
    }
}

/// Column-addressable score storage the forward pass runs over.
///
/// The forward pass reads only column `j - 1` and writes only column `j`
/// while processing frame `j`, always through [`ColumnStore::column_pair_mut`].
pub trait ColumnStore<F> {
    fn lanes(&self) -> usize;
    fn columns(&self) -> usize;
    fn column(&self, j: usize) -> &[F];
    fn column_mut(&mut self, j: usize) -> &mut [F];
    /// Column `j - 1` for reading and column `j` for writing; `j >= 1`.
    fn column_pair_mut(&mut self, j: usize) -> (&[F], &mut [F]);
}

/// Column-major copy of one item: `columns` frames of `lanes` text lanes.
#[derive(Debug, Clone, Default)]
pub struct LaneBuffer<F> {
    lanes: usize,
    columns: usize,
    values: Vec<F>,
}

impl<F: Scalar> LaneBuffer<F> {
    /// Copies the valid region of `view`; surplus lanes hold `sentinel`.
    pub fn from_item(view: ItemView<'_, F>, padding: LanePadding, sentinel: F) -> Self {
        let mut buf = Self {
            lanes: 0,
            columns: 0,
            values: Vec::new(),
        };
        buf.load(view, padding, sentinel);
        buf
    }

    /// Reloads the buffer from another item, reusing its allocation.
    pub fn load(&mut self, view: ItemView<'_, F>, padding: LanePadding, sentinel: F) {
        let (t, s) = (view.text_len(), view.speech_len());
        let lanes = pad_lanes(t, padding);
        self.lanes = lanes;
        self.columns = s;
        self.values.resize(lanes * s, sentinel);
        for column in self.values.chunks_exact_mut(lanes) {
            column[t..].fill(sentinel);
        }
        // tiled transpose: each tile's rows and columns stay in cache
        for j0 in (0..s).step_by(TILE) {
            let j1 = (j0 + TILE).min(s);
            for i0 in (0..t).step_by(TILE) {
                let i1 = (i0 + TILE).min(t);
                for j in j0..j1 {
                    let column = &mut self.values[j * lanes + i0..j * lanes + i1];
                    for (di, dst) in column.iter_mut().enumerate() {
                        *dst = view.get(i0 + di, j);
                    }
                }
            }
        }
    }

    /// Value at text lane `i`, frame `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.values[j * self.lanes + i]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }
}

impl<F: Scalar> ColumnStore<F> for LaneBuffer<F> {
    fn lanes(&self) -> usize {
        self.lanes
    }

    fn columns(&self) -> usize {
        self.columns
    }

    fn column(&self, j: usize) -> &[F] {
        &self.values[j * self.lanes..(j + 1) * self.lanes]
    }

    fn column_mut(&mut self, j: usize) -> &mut [F] {
        &mut self.values[j * self.lanes..(j + 1) * self.lanes]
    }

    #[inline]
    fn column_pair_mut(&mut self, j: usize) -> (&[F], &mut [F]) {
        let (head, tail) = self.values.split_at_mut(j * self.lanes);
        (&head[(j - 1) * self.lanes..], &mut tail[..self.lanes])
    }
}

/// One frame of the recurrence over all lanes.
#[inline]
fn update_column<F: Scalar>(prev: &[F], cur: &mut [F], sentinel: F) {
    let n = cur.len();
    debug_assert_eq!(prev.len(), n);
    if n == 0 {
        return;
    }
    cur[0] = pick_max(sentinel, prev[0]) + cur[0];
    for ((c, &diagonal), &horizontal) in cur[1..].iter_mut().zip(&prev[..n - 1]).zip(&prev[1..]) {
        *c = pick_max(diagonal, horizontal) + *c;
    }
}

/// Overwrites the store with cumulative best-prefix scores, in place.
///
/// Lanes `1..` of the first frame are set to the sentinel first, since a
/// single frame can only be assigned to text unit 1.
pub fn forward_parallel<F: Scalar, C: ColumnStore<F> + ?Sized>(store: &mut C, cfg: &MasConfig<F>) {
    let sentinel = cfg.max_neg_val();
    if store.columns() == 0 {
        return;
    }
    for v in store.column_mut(0).iter_mut().skip(1) {
        *v = sentinel;
    }
    for j in 1..store.columns() {
        let (prev, cur) = store.column_pair_mut(j);
        update_column(prev, cur, sentinel);
    }
}

/// Argmax walk over the scores left by [`forward_parallel`].
pub fn backward_parallel<F: Scalar, C: ColumnStore<F> + ?Sized>(
    store: &C,
    t: usize,
    s: usize,
) -> PathVector {
    backtrack(t, s, |i, j| store.column(j)[i])
}

/// Score and path for one item.
pub fn solve_parallel<F: Scalar>(view: ItemView<'_, F>, cfg: &MasConfig<F>) -> (F, PathVector) {
    let mut buf = LaneBuffer::from_item(view, cfg.lane_padding, cfg.max_neg_val());
    solve_buffered(&mut buf, view, cfg)
}

fn solve_buffered<F: Scalar>(
    buf: &mut LaneBuffer<F>,
    view: ItemView<'_, F>,
    cfg: &MasConfig<F>,
) -> (F, PathVector) {
    let (t, s) = (view.text_len(), view.speech_len());
    forward_parallel(buf, cfg);
    (buf.get(t - 1, s - 1), backward_parallel(buf, t, s))
}

/// Aligns every item, one rayon task per item.
///
/// The input batch is left untouched; each worker keeps one reusable
/// [`LaneBuffer`] as its private copy of the item being solved.
pub fn align_parallel<F: Scalar>(
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
    let item_len = batch.item_len();
    let run = |values: &mut [u8]| {
        values
            .par_chunks_exact_mut(item_len)
            .enumerate()
            .for_each_init(LaneBuffer::default, |buf, (b, chunk)| {
                let view = batch.item(b);
                buf.load(view, cfg.lane_padding, cfg.max_neg_val());
                let (_, path) = solve_buffered(buf, view, cfg);
                write_path(&path, chunk, stride);
            });
    };
    let values = out.values_mut();
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| MasError::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| run(values)),
        None => run(values),
    }
    Ok(out)
}
