//! Kinetic-energy bookkeeping.
//!
//! Along solutions with constant `M'` the Coriolis terms do no work, so
//! `dT/dt = nu'^T (tau' - g' - D)`. The residual compares this rate with the
//! change of `T` over the last step.

use serde::Serialize;

use super::{Model, SimState};
use crate::coriolis::kinetic_energy;
use crate::error::Result;
use crate::mass::{assemble_m_total, Vec9};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyReport {
    /// `T = 1/2 nu'^T M' nu'` (J).
    pub kinetic: f64,
    /// `nu'^T (tau' - g')` minus damping dissipation (W).
    pub work_input_rate: f64,
    /// Finite-difference `dT/dt` minus the trapezoidal mean input rate (W);
    /// zero without a previous step.
    pub residual: f64,
}

/// The accepted step ending at the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastStep {
    pub dt: f64,
    pub previous: EnergyReport,
}

pub fn energy_report(
    model: &Model,
    state: &SimState,
    tau: &Vec9,
    last_step: Option<LastStep>,
) -> Result<EnergyReport> {
    let (params, _) = model.effective(&state.r_p);
    let nu = state.nu_prime();
    let kinetic = kinetic_energy(&assemble_m_total(&params, &state.r_p), &nu);
    let g = model.hydrostatics.restoring(&model.env, &params, &state.eta, &state.r_p)?;
    let dissipation = state.nu.dot(&model.damping.force(&state.nu));
    let work_input_rate = nu.dot(&(tau - g)) - dissipation;
    let residual = match last_step {
        Some(LastStep { dt, previous }) => {
            (kinetic - previous.kinetic) / dt - 0.5 * (work_input_rate + previous.work_input_rate)
        }
        None => 0.0,
    };
    Ok(EnergyReport { kinetic, work_input_rate, residual })
}
