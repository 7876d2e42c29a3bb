//! Secrecy-rate optimization for reconfigurable intelligent surface (RIS)
//! deployments.
//!
//! A source talks to a destination through a passive RIS while an
//! eavesdropper listens to the reflected path. The direct source-destination
//! link is blocked by an obstacle, so both where the surface is mounted and
//! how each unit reflects determine the achievable secrecy rate. This crate
//! provides the full pipeline:
//!
//! - [`geometry`]: scenes, line-of-sight half-space tests against the
//!   obstacle, and the constraint geometry of the placement search.
//! - [`channel`]: Rician fading, cascaded reflection channels, SNR and
//!   secrecy-rate evaluation.
//! - [`placement`]: the two-tier grid search over mounting positions and its
//!   complexity predictor.
//! - [`sdp`]: dense Hermitian linear algebra and a small interior-point
//!   solver for the semidefinite programs produced by the beamformer.
//! - [`beamforming`]: fractional-program rewrite, rank-one-constrained SDP
//!   iteration, and reflect-vector recovery.
//! - [`harness`]: benchmark schemes, Monte-Carlo sweeps, and CSV/plot
//!   emission used by the command-line tool.

pub mod beamforming;
pub mod channel;
pub mod cmat;
pub mod geometry;
pub mod harness;
pub mod placement;
pub mod sdp;
