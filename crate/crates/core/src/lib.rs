//! Coordinate descent for pointwise maxima of sparse affine functions,
//! with two message-passing instantiations built on the same machinery:
//! max-sum diffusion on pairwise models and max-marginal averaging over
//! chain decompositions.
//!
//! All numerics are generic over [`Scalar`]; `f64` is the fast mode and
//! [`Rational`] the exact one, in which the energy certificate, the cycle
//! demo and the no-cycling property are checked without rounding.

pub mod decomp;
pub mod diffusion;
pub mod energy;
pub mod envelope;
pub mod error;
pub mod generate;
pub mod instance;
pub mod io;
pub mod midpoint;
pub mod mrf;
pub mod observe;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod trace;

pub use error::{Error, NumberError, ParseError, Result};
pub use scalar::{Rational, Scalar};

pub use instance::{AffineRow, ColumnSigns, MaxAffInstance, PruneOutcome};
pub use solver::{
    apply_update, coordinate_minimizer, fixed_point_residual, run, solve, IterateState,
    RunReport, SolveConfig, SolveOutcome, UpdateOrder, Verdict,
};

/// Which scalar instantiation a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericMode {
    Float64,
    ExactRational,
}

// Concrete instantiations of the generic core.
pub type MaxAffInstance64 = instance::MaxAffInstance<f64>;
pub type MaxAffInstanceExact = instance::MaxAffInstance<Rational>;
pub type PairwiseModel64 = mrf::PairwiseModel<f64>;
pub type PairwiseModelExact = mrf::PairwiseModel<Rational>;
pub type RunReport64 = solver::RunReport<f64>;
pub type RunReportExact = solver::RunReport<Rational>;
