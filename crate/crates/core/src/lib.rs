//! D-optimal sensor selection for linear Bayesian inverse problems through
//! column subset selection on the prior- and noise-preconditioned operator
//! `A = η⁻¹ Γ_pr^{1/2} Fᵀ`.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: pivoted QR (QRCP, sRRQR), SVD helpers, `logdet(I + CCᵀ)`.
//! * [`operator`]: matrix-free operators with adjoints and apply counters.
//! * [`rsvd`]: randomized truncated SVD.
//! * [`selection`]: GKS, RAF, hybrid leverage sampling, greedy, random.
//! * [`criteria`]: D-optimality evaluation and the structural bounds.
//! * [`completion`]: interpolatory data completion and MAP estimates.
//! * [`models`]: heat and tomography test problems, priors, data.

pub mod completion;
pub mod criteria;
pub mod error;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod rsvd;
pub mod selection;

pub use error::{Error, Result};
pub use operator::{ApplyCounts, LinearMap, LinearOperator, PreconditionedOperator};
pub use rsvd::{SketchConfig, SvdFactors};
pub use selection::{PivotRule, SelectionResult};
