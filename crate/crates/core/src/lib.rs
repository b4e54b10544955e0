//! Seeded modular wiretap codes over fading channels.
//!
//! A message `m` of `k` bits is first randomized by the security layer
//! (a seeded 2-universal hash over GF(2^q) and its preimage map), then
//! carried by a learned autoencoder reliability layer over a real-valued
//! multi-tap Rayleigh fading channel. The crate provides the building blocks
//! plus the evaluation machinery: Monte-Carlo block error rates, neural
//! mutual-information estimation of the leakage to an eavesdropper,
//! equivocation rates and a seed-dispersion study.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod gf2q;
pub mod metrics;
pub mod mine;
pub mod nn;
pub mod reliability;
pub mod rng;
pub mod seclayer;

pub use error::{Error, Result};
