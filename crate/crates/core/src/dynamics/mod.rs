//! RMS dynamics: one-axis machines, AC5A exciters, hydro governors, event
//! scripting and the fixed-step simulator.

mod avr;
mod events;
mod governor;
mod machine;
mod signals;
mod sim;

pub use avr::{Ac5a, AvrAc5aParams, AvrState, Saturation, AVR_FIELDS};
pub use events::{load_event_script, Event, EventKind, Scenario, ScenarioClass};
pub use governor::{deadband, turbine_power, GovState, HydroGovParams, HydroGovernor, GOV_FIELDS};
pub use machine::{d_axis_current, flux_decay_derivative, swing_derivatives, MachineState};
pub use signals::{ChannelId, Quantity, SignalSet, DT_TOLERANCE};
pub use sim::{
    init_dynamic_state, simulate, DynamicState, MachineSetpoints, SimConfig, Simulator,
    DIVERGENCE_LIMIT,
};
