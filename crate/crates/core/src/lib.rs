//! Strength-of-evidence (Bayes factor) functions for the one-sided composite
//! hypotheses `H_p: θ >= θ₀` and `H_d: θ < θ₀`, where the prior on `θ` is only
//! pinned down through `α = P(θ >= θ₀)` and otherwise fitted to the evidence
//! by maximum likelihood.
//!
//! * [`stats`]: standard normal functions and the odds function `Λ`.
//! * [`models`]: measurement families and their one-sided likelihood suprema.
//! * [`nonparam`]: the nonparametric empirical-Bayes strength (ratio of suprema).
//! * [`param`]: the normal-prior strengths (known prior, balanced, unbalanced).
//! * [`oracle`]: brute-force integration and maximisation used for verification.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod cubic;
pub mod error;
pub mod evidence;
pub mod models;
pub mod nonparam;
pub mod oracle;
mod optimize;
pub mod param;
pub mod stats;
pub mod verify;

pub use cubic::CubicPoly;
pub use error::{EvidenceError, Result};
pub use evidence::{EvidenceStrength, Method};
pub use models::{EvidenceModel, Kernel, LocationFamily, NormalLocationModel, ScaleFamily, Side};
pub use nonparam::{empirical_prior, v_nonparam, TwoPointPrior};
pub use param::{NormalPrior, QuantileConstraint};
