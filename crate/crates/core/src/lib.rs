//! Straggler-tolerant coded distributed matrix multiplication.
//!
//! `Aᵀ` is split into `m` row blocks and `B` into `n` column blocks; `N`
//! workers each multiply one encoded pair and any `K = mn` responses
//! recover every block product. Four code families are provided:
//! non-systematic and systematic random Khatri-Rao-product (RKRP) codes,
//! OrthoPoly codes over the Chebyshev basis, and a monomial Polynomial
//! baseline.
//!
//! ```
//! use rkrp_core::{codes, decode, linalg::DenseMatrix, runtime::StragglerPattern};
//!
//! let a_t = DenseMatrix::from_fn(4, 3, |r, c| (r + 2 * c) as f64);
//! let b = DenseMatrix::from_fn(3, 6, |r, c| (r * c) as f64 - 1.0);
//! let dist = codes::CoefficientDistribution::standard(7);
//! let spec = codes::sample_rkrp_systematic(2, 3, 10, &dist).unwrap();
//! let pattern = StragglerPattern::from_stragglers([2, 4, 5, 8], 10).unwrap();
//! let round = decode::coded_multiply(&spec, &a_t, &b, &pattern, Default::default()).unwrap();
//! assert_eq!(round.report.solve_dim, 3);
//! let err = decode::relative_error(&a_t.matmul(&b).unwrap(), &round.report.product).unwrap();
//! assert!(err < 1e-12);
//! ```

pub mod codes;
pub mod decode;
pub mod linalg;
pub mod metrics;
pub mod partition;
pub mod runtime;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use codes::{CodeKind, CodeSpec, CoefficientDistribution, PolynomialNodes};
pub use decode::{DecodeError, DecodeOptions, DecodeReport};
pub use linalg::{DenseMatrix, LinalgError, SolveOptions, SolveOutcome};
pub use metrics::{TrialConfig, TrialRecord};
pub use partition::{BlockIndex, BlockPartition, PartitionError};
pub use runtime::{StragglerModel, StragglerPattern, WorkerResult, WorkerTask};

/// ChaCha stream ids for the three per-seed random sources.
pub const DATA_STREAM: u64 = 0;
pub const COEFFICIENT_STREAM: u64 = 1;
pub const PATTERN_STREAM: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Code(#[from] codes::CodeError),
    #[error(transparent)]
    Pattern(#[from] runtime::PatternError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Metric(#[from] decode::MetricError),
}
