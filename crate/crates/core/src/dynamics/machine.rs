//! One-axis synchronous machine: swing equation plus q-axis flux decay.
//!
//! The internal EMF `E' = Eq'∠δ` sits behind `j·xd'`; currents are resolved
//! into the rotor frame by `(Id + j·Iq)·e^{j(δ−π/2)} = I`.

use num_complex::Complex64;

/// Rotor-angle and speed derivatives of `2H·dω/dt = Tm − Te − D·(ω − 1)`.
///
/// `omega` in pu, torques in pu on the machine rating, `h` in seconds,
/// `omega_base` in rad/s. Returns `(dδ/dt, dω/dt)`.
pub fn swing_derivatives(
    h: f64,
    d_damp: f64,
    omega_base: f64,
    omega: f64,
    t_mech: f64,
    t_elec: f64,
) -> (f64, f64) {
    let d_omega = (t_mech - t_elec - d_damp * (omega - 1.0)) / (2.0 * h);
    let d_delta = omega_base * (omega - 1.0);
    (d_delta, d_omega)
}

/// d-axis component of a current phasor for rotor angle `delta`.
pub fn d_axis_current(current: Complex64, delta: f64) -> f64 {
    (current * Complex64::from_polar(1.0, -(delta - std::f64::consts::FRAC_PI_2))).re
}

/// `dEq'/dt` of the flux-decay model (all quantities on the machine rating).
pub fn flux_decay_derivative(td0_p: f64, xd: f64, xd_p: f64, eq_p: f64, efd: f64, id: f64) -> f64 {
    (efd - eq_p - (xd - xd_p) * id) / td0_p
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineState {
    pub delta: f64,
    pub omega: f64,
    pub eq_p: f64,
}

impl MachineState {
    pub const LEN: usize = 3;
    pub const NAMES: [&'static str; 3] = ["delta", "omega", "eq_p"];
}
