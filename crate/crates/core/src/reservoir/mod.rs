//! Time-delay reservoir computing: input encoding, virtual nodes, ridge
//! readout, the pump-probe memory kernel and memory capacity.

mod encoding;
mod memory;
mod pump_probe;
mod ridge;
mod state;

pub use encoding::{encode, mask_encode, EncodingConfig, Mask};
pub use memory::{memory_capacity, squared_correlation, MemoryCapacity, MemoryOptions};
pub use pump_probe::{pump_probe_response, PumpProbeCoeffs};
pub use ridge::{
    log_grid, readout_mse, ridge_cv, ridge_fit, winner_takes_all, CvEntry, RidgeReadout,
};
pub use state::{augment_rbits, sample_virtual_nodes, StateMatrix};
