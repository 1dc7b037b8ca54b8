//! ML-aware architecture for IEEE 802.11 WLANs.
//!
//! A simulated WLAN underlay, a from-scratch MLP, the seven-stage ML pipeline, the
//! orchestrator (MLFO) that runs it from a declarative intent, a simulator-backed sandbox,
//! and the neural-network AP association use case evaluated against Strongest Signal First.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assoc;
pub mod mlfo;
pub mod nn;
pub mod pipeline;
pub mod sandbox;
pub mod stats;
pub mod underlay;
