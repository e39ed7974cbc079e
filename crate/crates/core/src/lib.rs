//! Identification of generalized-Ward dynamic equivalents for external
//! power-system areas.
//!
//! An external area is replaced by one generator (with AVR and governor),
//! a series impedance to its boundary bus and a parallel constant-power
//! load; linked areas share a common impedance. Identification runs in two
//! stages:
//!
//! 1. steady state: series/common impedances, nominal power and load are
//!    tuned so boundary power flows and short-circuit levels match the full
//!    system ([`pipeline::identify_steady_state`]);
//! 2. dynamics: inertia, AC5A exciter and hydro governor parameters are
//!    tuned so recorded disturbance responses match
//!    ([`pipeline::identify_dynamic`]).
//!
//! The building blocks are usable on their own: a Newton–Raphson power flow
//! and Thevenin short-circuit solver ([`steady`]), an RMS time-domain
//! simulator ([`dynamics`]), PMU-style CSV records ([`pmu`]), integral
//! performance indices ([`objectives`]) and seeded PSO/DE optimizers
//! ([`optimizer`]).

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod objectives;
pub mod optimizer;
pub mod pipeline;
pub mod pmu;
pub mod steady;

pub use error::{Error, Result};
pub use grid::{load_network, Network};
