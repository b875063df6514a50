//! Monotonic alignment search (MAS) between text units and speech frames.
//!
//! Given a batch of `T x S` log-likelihood matrices `q`, each engine finds
//! the monotonic, surjective frame-to-text assignment with the highest total
//! log-likelihood and returns it as a `{0,1}` matrix of the input's shape.
//!
//! * [`reference`] fills an explicit score cache with nested loops.
//! * [`parallel`] overwrites a column-major copy of `q` in place, one whole
//!   text column per step, and spreads batch items across threads.
//! * [`oracle`] enumerates every monotonic path of small instances.
//!
//! Both engines are generic over [`Scalar`] (`f32` and `f64`) and produce
//! byte-identical alignments: they share the recurrence order, the
//! `-1e32` sentinel and the tie rule (a tie in the backward walk keeps the
//! current text unit).
//!
//! ```
//! use mas_core::{align, F32Batch, F32Config};
//!
//! let batch = F32Batch::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
//! let out = align(&batch, &F32Config::default()).unwrap();
//! assert_eq!(out.values(), &[1, 0, 0, 0, 1, 1]);
//! ```

pub mod alignment;
pub mod batch;
pub mod bench;
pub mod config;
pub mod error;
pub mod io;
pub mod oracle;
pub mod parallel;
pub mod reference;
pub mod scalar;

pub use alignment::{
    matrix_from_path, path_from_matrix, AlignmentMatrix, AlignmentView, PathVector,
};
pub use batch::{
    validate_batch, ItemView, LikelihoodBatch, ValidLengths, MAX_ABS_LIKELIHOOD, MAX_SPEECH_LEN,
};
pub use config::{Engine, LanePadding, MasConfig};
pub use error::{MasError, Result};
pub use parallel::{align_parallel, pad_lanes};
pub use reference::{align_reference, QCache};
pub use scalar::Scalar;

pub type F32Batch = LikelihoodBatch<f32>;
pub type F64Batch = LikelihoodBatch<f64>;
pub type F32Config = MasConfig<f32>;
pub type F64Config = MasConfig<f64>;
pub type F32Cache = QCache<f32>;
pub type F64Cache = QCache<f64>;

/// Aligns a batch with the engine selected in `cfg`.
pub fn align<F: Scalar>(batch: &LikelihoodBatch<F>, cfg: &MasConfig<F>) -> Result<AlignmentMatrix> {
    match cfg.engine {
        Engine::Reference => align_reference(batch, cfg),
        Engine::Parallel => align_parallel(batch, cfg),
    }
}

/// Optimal score and path of a single item with the configured engine.
pub fn solve_item<F: Scalar>(view: ItemView<'_, F>, cfg: &MasConfig<F>) -> (F, PathVector) {
    match cfg.engine {
        Engine::Reference => reference::solve_reference(view, cfg),
        Engine::Parallel => parallel::solve_parallel(view, cfg),
    }
}
