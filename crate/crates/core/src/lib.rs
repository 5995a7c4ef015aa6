//! Manoeuvring model of an underwater vehicle with an internal moving-mass
//! actuator: kinematics, mass and Coriolis matrices, hydrostatics, a
//! fixed-step integrator with a rail-constrained moving mass, the Remus 100
//! dive experiment, and a comparison formulation with the stationary mass at
//! the centre of gravity.

pub mod check;
pub mod config;
pub mod coriolis;
pub mod dynamics;
pub mod error;
pub mod hydrostatics;
pub mod kinematics;
pub mod mass;
pub mod output;
pub mod scenario;
pub mod woolsey;

pub use dynamics::{Formulation, Model, SimState};
pub use error::{ModelError, Result};
pub use mass::VehicleParams;
