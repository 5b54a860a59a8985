//! Linear MMSE performance of multiuser SIMO channels with full receive
//! correlation, `H = B · D^{1/2}`.
//!
//! * [`numerics`]: dense complex kernels, `E₁`, seeded random streams
//! * [`channel`]: gain matrices, fading models, channel realizations
//! * [`detector`]: per-instance SINR, MMSE, mutual information and bounds
//! * [`closedform`]: expected-MMSE approximations for composite and rain fading
//! * [`montecarlo`]: SNR sweeps, crossing search, deviation metrics
//! * [`cli`]: configuration, experiment runner and file outputs

pub mod channel;
pub mod cli;
pub mod closedform;
pub mod detector;
pub mod error;
pub mod montecarlo;
pub mod numerics;

pub use channel::{ChannelInstance, CompositeParams, FadingModel, GainMatrix, MuUnits, RainParams};
pub use error::{Error, Result};
pub use montecarlo::{SnrGrid, SweepResult};
