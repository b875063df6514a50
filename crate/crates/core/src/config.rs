use std::fmt;
use std::str::FromStr;

use crate::error::{MasError, Result};
use crate::scalar::Scalar;

/// Alignment engine selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    /// Nested-loop search over an explicit score cache.
    Reference,
    /// In-place, lane-vectorized forward pass with batch-level threading.
    Parallel,
}

impl Engine {
    pub const ALL: [Engine; 2] = [Engine::Reference, Engine::Parallel];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Reference => "reference",
            Engine::Parallel => "parallel",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = MasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reference" => Ok(Engine::Reference),
            "parallel" => Ok(Engine::Parallel),
            other => Err(MasError::InvalidConfig(format!("unknown engine '{other}'"))),
        }
    }
}

/// How many lanes a column occupies in the parallel engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LanePadding {
    /// Exactly `t` lanes.
    #[default]
    None,
    /// Round up to the next power of two; surplus lanes hold the sentinel.
    NextPowerOfTwo,
}

/// Engine configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasConfig<F> {
    pub engine: Engine,
    max_neg_val: F,
    pub lane_padding: LanePadding,
    /// Worker threads for batch-level parallelism; `None` uses all cores.
    pub threads: Option<usize>,
}

impl<F: Scalar> Default for MasConfig<F> {
    fn default() -> Self {
        Self {
            engine: Engine::Parallel,
            max_neg_val: F::DEFAULT_SENTINEL,
            lane_padding: LanePadding::None,
            threads: None,
        }
    }
}

impl<F: Scalar> MasConfig<F> {
    pub fn new(engine: Engine) -> Self {
        Self {
            engine,
            ..Self::default()
        }
    }

    /// Replaces the sentinel. It must be finite and `<= -1e30`.
    pub fn with_max_neg_val(mut self, value: F) -> Result<Self> {
        if !value.is_finite() || value > F::SENTINEL_CEILING {
            return Err(MasError::InvalidConfig(format!(
                "max_neg_val must be finite and <= {}, got {value}",
                F::SENTINEL_CEILING
            )));
        }
        self.max_neg_val = value;
        Ok(self)
    }

    /// Sets any sentinel without the magnitude check. Only meant for
    /// reproducing the misalignments a too-small sentinel causes.
    #[doc(hidden)]
    pub fn with_unchecked_max_neg_val(mut self, value: F) -> Self {
        self.max_neg_val = value;
        self
    }

    pub fn with_lane_padding(mut self, padding: LanePadding) -> Self {
        self.lane_padding = padding;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn max_neg_val(&self) -> F {
        self.max_neg_val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sentinel() {
        let cfg = MasConfig::<f32>::default();
        assert_eq!(cfg.max_neg_val(), -1e32f32);
        assert_eq!(cfg.engine, Engine::Parallel);
    }

    #[test]
    fn sentinel_bounds() {
        let cfg = MasConfig::<f32>::default();
        assert!(cfg.with_max_neg_val(-1e30).is_ok());
        assert!(cfg.with_max_neg_val(-1e9).is_err());
        assert!(cfg.with_max_neg_val(f32::NEG_INFINITY).is_err());
        assert!(cfg.with_max_neg_val(f32::NAN).is_err());
        assert_eq!(cfg.with_unchecked_max_neg_val(-1e9).max_neg_val(), -1e9);
    }

    #[test]
    fn engine_names() {
        assert_eq!("Parallel".parse::<Engine>().unwrap(), Engine::Parallel);
        assert_eq!(Engine::Reference.to_string(), "reference");
        assert!("triton".parse::<Engine>().is_err());
    }
}
