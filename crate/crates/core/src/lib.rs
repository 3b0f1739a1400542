//! cfolab-core: carrier frequency offset estimation for MIMO-OFDM over
//! frequency-selective channels.
//!
//! The estimator works in two stages. The integer CFO is found by sliding the
//! received spectrum against the known pilot comb and maximizing captured
//! pilot energy, which needs only one N-point FFT per receive antenna. The
//! fractional CFO is then recovered with a subspace method: the corrected
//! frame is stacked into a short matrix whose rows carry complex exponentials
//! at the equivalent CFOs, the sample covariance is mapped to a real matrix
//! by a unitary conjugate-symmetric transform, and the noise subspace yields
//! a polynomial with *real* coefficients whose near-real roots encode the
//! offsets through a cotangent mapping.
//!
//! Around the estimator the crate provides Chu-sequence training design with
//! design-quality diagnostics, a synthetic MIMO-OFDM channel/transmit model,
//! Cramer-Rao bound evaluation and a deterministic Monte-Carlo harness.

pub mod error;
pub mod estimator;
pub mod evalkit;
pub mod numkit;
pub mod rng;
pub mod seqdesign;
pub mod sigmodel;

pub use error::{AmbiguityInfo, Error, Result};
pub use estimator::{CfoEstimate, CfoEstimator, SubspaceDecomposition, TransformMatrices};
pub use seqdesign::{
    DesignDiagnostics, SystemConfig, TrainingSet, TrainingVariant, ValidationReport,
};
pub use sigmodel::{ChannelSet, ReceivedFrame};
