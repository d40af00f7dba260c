//! Integral stochastic orders on finite grids.
//!
//! The crate computes C-envelopes and optimal values for problems of the form
//! `max ∫ f dν` over `ν ⪯_C μ`, builds order-preserving couplings and exposing
//! payoffs, checks Blackwell-style kernel families, tests divisibility of
//! non-Bayesian updating rules and solves leader–follower persuasion games.
//!
//! Everything that reduces to linear programming is generic over [`Scalar`],
//! so the same code runs in `f64` and in exact rational arithmetic.

pub mod blackwell;
pub mod cone;
pub mod coupling;
pub mod envelope;
pub mod io;
pub mod error;
pub mod lp;
pub mod measure;
pub mod optimize;
pub mod scalar;
pub mod stackelberg;
pub mod updating;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};

pub type ExactGrid = measure::Grid<Rational>;
pub type ExactMeasure = measure::Measure<Rational>;
pub type ExactKernel = measure::Kernel<Rational>;
pub type ExactLinearProgram = lp::LinearProgram<Rational>;
