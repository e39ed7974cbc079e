//! Steady-state solvers: Newton–Raphson power flow and three-phase
//! short-circuit levels.

mod powerflow;
mod short_circuit;
pub mod ybus;

pub use powerflow::{
    branch_flows, element_flow, flat_start, jacobian, machine_output, mismatch, solve_power_flow,
    solve_power_flow_from, specified_injections, BranchFlow, PowerFlowSolution, DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
};
pub use short_circuit::{
    short_circuit, short_circuit_with_prefault, short_circuit_ybus, short_circuits,
    thevenin_impedance, thevenin_impedances, ShortCircuitResult,
};
