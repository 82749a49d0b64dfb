//! Robust directional-modulation (DM) beamforming for multi-user MISO
//! downlinks with artificial noise, where the base station only knows noisy
//! direction angles toward the eavesdroppers.
//!
//! The crate covers the whole pipeline:
//!
//! - [`model`]: uniform linear array steering vectors, free-space path loss,
//!   line-of-sight channels and the [`Scenario`] description (plus its
//!   key/value config format in [`config`]).
//! - [`vonmises`] and [`special`]: the truncated Von Mises angle-error model,
//!   the closed-form expected eavesdropper covariance and its quadrature
//!   oracle.
//! - [`error_bound`]: the norm-bounded channel-error model derived from a
//!   maximum angle error.
//! - [`secrecy`]: SINRs, worst-case sum secrecy rate and Monte Carlo
//!   evaluation under sampled angle errors.
//! - [`conic`] and [`sca`]: a small conic modelling layer (linear, second-order,
//!   exponential and PSD cones) on top of Clarabel, and the two successive
//!   convex approximation designers ([`sca::sca_vmd`], [`sca::sca_maee`]).
//! - [`baselines`]: zero-forcing and SLNR reference designs.
//! - [`experiments`]: parameter sweeps, the per-iteration complexity
//!   estimate and CSV output.
//!
//! ```no_run
//! use robust_dm::{Scenario, sca, secrecy};
//!
//! let scenario = Scenario::reference();
//! let outcome = sca::sca_vmd(&scenario, &sca::ScaOptions::default()).unwrap();
//! let report = secrecy::monte_carlo_secrecy(&scenario, &outcome.beams.transmit(), 1000, 7).unwrap();
//! println!("R_s = {:.4} +/- {:.4} bit/s/Hz", report.sum_rate, report.confidence_halfwidth);
//! ```

// Negated comparisons are how validation rejects NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the (user, eavesdropper) subscripts of the model.
#![allow(clippy::needless_range_loop)]

// Links the system OpenBLAS/LAPACK used by Clarabel's PSD cone support.
extern crate openblas_src;

pub mod baselines;
pub mod config;
pub mod conic;
pub mod error;
pub mod error_bound;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod sca;
pub mod secrecy;
pub mod special;
pub mod vonmises;

pub use error::{Error, Result};
pub use model::{ArrayGeometry, ChannelVector, Scenario};
pub use secrecy::{BeamformerSet, SecrecyReport};
pub use vonmises::VonMisesParams;
