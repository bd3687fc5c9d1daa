//! Quantum discord, geometric discord and concurrence of two-qubit states,
//! their evolution under local amplitude-damping, phase-damping and
//! depolarizing channels, and detection of sudden changes in their decay.

pub mod analytic;
pub mod channels;
pub mod cli;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod optimize;
pub mod states;

pub use error::{ChannelError, DynamicsError, NumericsError, OptimizerError, StateError};
