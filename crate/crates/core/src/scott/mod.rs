//! Back-and-forth ranks between finite metric spaces and the
//! Gromov–Hausdorff distance.
//!
//! For finite spaces `X`, `Y` and tuples `ā ∈ X^n`, `b̄ ∈ Y^n`:
//!
//! ```text
//! r_0(ā, b̄)   = ½ max_{i,k<n} |d(a_i, a_k) − d(b_i, b_k)|
//! r_{α+1}(ā, b̄) = max( max_x min_y r_α(āx, b̄y), max_y min_x r_α(āx, b̄y) )
//! ```
//!
//! The ranks are nondecreasing in `α`, stabilize at a finite stage, and the
//! stable value at `n = 0` is `d_GH(X, Y)`.

mod gh;
mod katetov;
mod rank;
mod scott_formula;
mod space;

pub use gh::{delta_k, gh_bruteforce, gh_rank, GhResult};
pub use katetov::{
    katetov_check, katetov_extend, katetov_from_correspondence, q_error, BiKatetov, KatetovWitness,
};
pub use rank::{
    continuous_scott_rank, literal_layer, r0, r0_layer, rank_step, rank_table, stabilization_rank, RankEngine,
    RankTable, TupleLayer, DEFAULT_ALPHA_CEILING, DEFAULT_MAX_PAIRS,
};
pub use scott_formula::{scott_formula, scott_var};
pub use space::{common_scale_factor, FiniteSpace};

use crate::rational::Rational;
use crate::structure::StructureError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScottError {
    #[error("not a metric space: {0}")]
    NotAMetric(#[from] StructureError),
    #[error("distinct points {0} and {1} are at distance 0")]
    ZeroDistance(usize, usize),
    #[error("diameter {0} is not below 1")]
    DiameterTooLarge(Rational),
    #[error("tuples of lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("point {index} out of range for a space of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("stage {alpha} has not been computed")]
    MissingStage { alpha: usize },
    #[error("{what} exceeds the budget {budget}")]
    BudgetExceeded { what: String, budget: u64 },
    #[error("no stabilization within {0} stages")]
    NoStabilization(usize),
    #[error("empty subspace")]
    EmptySubspace,
    #[error("table has {found} entries, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not bi-Katetov: {0:?}")]
    KatetovViolation(KatetovWitness),
}

impl ScottError {
    pub fn code(&self) -> &'static str {
        match self {
            ScottError::NotAMetric(e) => e.code(),
            ScottError::ZeroDistance(..) => "ZeroDistance",
            ScottError::DiameterTooLarge(_) => "DiameterTooLarge",
            ScottError::LengthMismatch(..) => "LengthMismatch",
            ScottError::IndexOutOfRange { .. } => "IndexOutOfRange",
            ScottError::MissingStage { .. } => "MissingStage",
            ScottError::BudgetExceeded { .. } | ScottError::NoStabilization(_) => "BudgetExceeded",
            ScottError::EmptySubspace => "EmptySubspace",
            ScottError::DimensionMismatch { .. } => "DimensionMismatch",
            ScottError::KatetovViolation(_) => "KatetovViolation",
        }
    }
}
