//! Security analysis of a passive decoy-state BB84 transmitter.
//!
//! The transmitter interferes two phase-randomized coherent pulses, keeps a
//! weak tap for the channel and sorts each pulse into a signal or decoy
//! interval by measuring the intensity of the strong remainder. The crate
//! computes photon-number statistics, detector gains and error rates,
//! decoy-state bounds, secret key rates and their optimum over the source
//! parameters, and checks the analytics with an event-level Monte Carlo.

pub mod decoy;
pub mod detection;
pub mod error;
pub mod montecarlo;
pub mod optics;
pub mod optimizer;
pub mod photon;
pub mod quadrature;
pub mod rate;
pub mod special;

pub use error::{Error, Result};
