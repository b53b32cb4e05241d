//! Simulation of two-node, two-photon heralded entanglement between
//! emitter–cavity systems whose cavities may be birefringent.
//!
//! The pipeline runs node dynamics ([`dynamics`]) to get output wavepackets,
//! interferes them on a beam splitter and projects onto detector clicks
//! ([`herald`]), then scores the heralded two-qubit state against a Bell state
//! with and without a local correction at the birefringent node
//! ([`correction`]). [`experiment`] assembles detection-time landscapes,
//! trade-off curves and deliberate-birefringence sweeps; [`config`] and
//! [`output`] handle files.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod numerics;
pub mod dynamics;
pub mod lindblad;
pub mod herald;
pub mod correction;
pub mod landscape;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod output;

pub use error::{Error, Result};
