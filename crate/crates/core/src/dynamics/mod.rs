//! Electromechanical transients: classical machines, the SMR governor and
//! the BESS frequency controller.

pub mod bess;
pub mod frequency;
pub mod governor;
pub mod integrate;
mod network;
mod sim;

pub use bess::{bess_power, BessParams, BessState};
pub use frequency::{bus_frequency_estimate, unwrap_angle, FrequencyEstimator};
pub use governor::{
    apply_load_limiter, compute_droop, governor_power_correction, steam_flows_for_power, turbine_mechanical_power,
    SmrGovernor, SmrParams, SmrState,
};
pub use integrate::rk4_step;
pub use sim::{
    initialize_devices, run_transient, AppliedEvent, BessDevice, BusTrace, DeviceSet, DeviceStates, Event, EventKind,
    MachineLibrary, MachineParams, MachineState, SimConfig, Simulator, SmrDevice, TransientResult, NOMINAL_HZ,
};
