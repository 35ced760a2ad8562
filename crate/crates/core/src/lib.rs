//! Variational quantum classifier toolkit.
//!
//! Everything runs in dense statevector simulation at desk scale (1–12
//! qubits). The pipeline has four stages, each its own module:
//!
//! 1. [`data`] — image ingestion, average pooling, `[0, π]` feature
//!    normalization, synthetic fixtures.
//! 2. [`search`] — device-aware candidate generation and ranking by Clifford
//!    noise resilience (CNR), representation capacity (RepCap) and the
//!    composite F-score.
//! 3. [`train`] — classical optimization of circuit parameters (Adam, adjoint
//!    or parameter-shift gradients, MSE / cross-entropy losses).
//! 4. [`noise`] + [`mitigate`] — Monte-Carlo trajectory sampling under a
//!    depolarizing/readout noise model with dynamical-decoupling and twirling
//!    transforms, followed by matrix-free readout-error mitigation.
//!
//! [`sim`] provides the shared statevector engine, [`circuit`] the circuit
//! template model and its text persistence, [`device`] the backend
//! description, and [`metrics`] accuracy/AUC evaluation.
//!
//! Amplitude ordering is little-endian throughout: qubit 0 is the least
//! significant bit of a basis-state index, and bitstring keys render qubit 0
//! as the rightmost character.

pub mod artifact;
pub mod circuit;
pub mod data;
pub mod device;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod mitigate;
pub mod noise;
pub mod search;
pub mod seed;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
