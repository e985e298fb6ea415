//! ritzlab: a numerical laboratory for Deep Ritz training of one-dimensional
//! elliptic boundary value problems, built to demonstrate — without any
//! autodiff framework — why ReLU networks fail on the variational objective.
//!
//! The pieces:
//!
//! * [`quadrature`] — midpoint integration on [0, 1] and the discrete delta
//!   stencil that makes distributional terms integrable.
//! * [`activation`] — scalar activations with value, first derivative, and
//!   kink metadata.
//! * [`network`] — the width-N single-hidden-layer field
//!   `u(x) = Σ θ³_i sin(πx) R(θ¹_i x + θ²_i)` with closed-form derivatives
//!   and structured impulse events.
//! * [`energy`] — the variational energy, its gradient under three competing
//!   engines, and the MSE regression objective.
//! * [`optimizer`] — ADAM plus the full-batch training loop and traces.
//! * [`landscape`] — finite-difference Hessians, Jacobi eigendecomposition,
//!   eigenvector-plane slices, and the roughness metric.
//! * [`experiments`] — the scripted diagnostic experiments behind each CLI
//!   subcommand, emitting figure-ready CSV artifacts.
//! * [`engine_checks`] — the seeded engine-equivalence/divergence law suite.
//! * [`report`] — CSV/manifest emission with round-trip-exact formatting.
//! * [`cli`] — argument parsing and per-experiment defaults.

pub mod activation;
pub mod cli;
pub mod energy;
pub mod engine_checks;
pub mod error;
pub mod experiments;
pub mod landscape;
pub mod network;
pub mod optimizer;
pub mod quadrature;
pub mod report;

pub use activation::{Activation, Smoothness};
pub use energy::{GradientEngine, Problem, ProblemOnGrid};
pub use error::{Error, Result};
pub use network::{DeltaEvent, Params, RitzNet};
pub use optimizer::{Adam, Objective, TrainOptions, TrainingTrace};
pub use quadrature::{DeltaStencil, Grid};
