//! Datacenter demand: workload traces to a 5-minute electrical and
//! cooling profile.

mod power;
mod profile;
mod trace;

pub use power::{
    chiller_unit_power, compressor_power, it_power, staging_and_thermal, subsystem_power, AmbientConditions,
    ChillerFlows, ChillerParams, ChillerPower, ItPowerParams,
};
pub use profile::{build_profile, build_profile_for_peak, synthetic_week_trace, LoadProfile, BINS_PER_WEEK};
pub use trace::{
    bin_tasks, estimate_capacity, load_machine_events, load_tasks, normalize, read_machine_events, read_tasks,
    utilization, write_machine_events, write_tasks, MachineEvent, MachineEventKind, TaskRecord, UtilizationTrace,
    BIN_SECONDS,
};
