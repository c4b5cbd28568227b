//! Relay beamforming for a jammed two-hop network with an energy-harvesting
//! receiver.
//!
//! A multi-antenna relay forwards a single-antenna source's signal to a
//! destination while a jammer transmits a known-structure interference signal
//! and a separate energy-harvesting node must collect a minimum amount of RF
//! power. The crate computes the relay weight matrix maximizing the
//! destination rate subject to relay power, jammer-leakage, and harvested-
//! energy constraints, via a semidefinite relaxation solved by a built-in
//! interior-point method, plus closed-form boundary points, simple baseline
//! schemes, brute-force verification oracles, and rate-energy region sweeps.
//!
//! Module map:
//! - [`matrixkit`]: dense complex linear algebra helpers (Kronecker, vec,
//!   Hermitian eigensolvers, null spaces).
//! - [`model`]: system parameters, channels, and the exact performance
//!   quantities (SINR, rate, relay power, harvested energy).
//! - [`liftings`]: the three equivalent liftings of the design problem into
//!   standard SDP form, and recovery of a relay matrix from a solution.
//! - [`sdp`]: the SDP types, interior-point solver, and rank-1 extraction.

pub mod baselines;
pub mod closedform;
pub mod config;
pub mod experiment;
pub mod liftings;
pub mod matrixkit;
pub mod model;
pub mod oracle;
pub mod region;
pub mod sdp;

pub use liftings::{Formulation, FormulationKind, LiftedData, ReducedData};
pub use matrixkit::{CMat, CVec};
pub use model::{Beamformer, ChannelSet, SystemParams};
pub use sdp::{SdpProblem, SdpSolution, SolveStatus};
