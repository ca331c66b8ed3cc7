//! Wrapped normal distributions on the Lorentz model of hyperbolic space.
//!
//! The crate provides, bottom-up:
//!
//! - [`lorentz`]: exact, numerically stable primitives of the Lorentz model
//!   (inner product, distance, exp/log maps, parallel transport, Poincare
//!   projection, validation);
//! - [`autodiff`]: a minimal reverse-mode scalar tape;
//! - [`scalar`]: the [`Real`](scalar::Real) abstraction that lets every
//!   geometric formula run on both plain `f64` and the tape;
//! - [`wrapped`]: the wrapped normal distribution G(mu, Sigma) with exact
//!   differentiable log-density, reparametrized sampling, and Monte-Carlo
//!   KL;
//! - [`embedding`]: max-margin probabilistic word embedding with
//!   KL-divergence energies, plus its Euclidean baseline;
//! - [`vae`]: a toy variational autoencoder with hyperbolic latent space
//!   and its Euclidean control;
//! - [`tree`]: the synthetic noisy binary-tree dataset;
//! - [`stats`], [`optim`]: supporting statistics and optimizers.

pub mod autodiff;
pub mod diagnostics;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod lorentz;
pub mod optim;
pub mod scalar;
pub mod stats;
pub mod tree;
pub mod vae;
pub mod wrapped;

pub use error::{Error, Result};
pub use geometry::Geometry;
pub use lorentz::{LorentzPoint, TangentVector};
pub use wrapped::{CovKind, WrappedNormal};
