//! Nonlinear microring dynamics: parameters and presets, coupled-mode
//! integration with or without an external feedback loop, and CW
//! stability classification.

mod dynamics;
mod params;
mod stability;

pub use dynamics::{
    integrate, linear_transmission, simulate_with_feedback, FeedbackParams, IntegrateOptions,
    MrrState, Scheme, Trajectory,
};
pub use params::{MrrParams, Preset, SPEED_OF_LIGHT};
pub use stability::{
    classify_stability, classify_trace, count_spikes, cw_drop_trace, resonance_shift, settled_tail,
    sp_frequency, Stability, StabilityMap, StabilityOptions, STABILITY_TOLERANCE,
};
