//! Simulation of silicon microring-resonator photonic neural networks.
//!
//! - [`signal`]: waveforms, PRBS/NRZ, square-law detection, BER and NMSE.
//! - [`mrr`]: coupled-mode ring dynamics, external feedback, self-pulsing maps.
//! - [`reservoir`]: time-delay reservoir encoding, virtual nodes, ridge readout,
//!   pump-probe response and memory capacity.
//! - [`tasks`]: delayed logic, NARMA-10, Mackey-Glass and Iris.
//! - [`dcp`]: delayed complex perceptron, dispersive fiber and PSO training.
//! - [`experiment`]: declarative sweeps, result maps and baselines.

pub mod dcp;
pub mod error;
pub mod experiment;
pub mod mrr;
pub mod reservoir;
pub mod signal;
pub mod tasks;
pub mod units;

pub use error::{Error, Result};
