//! The Remus 100 open-loop dive experiment.
//!
//! A constant surge force drives the vehicle while the moving mass is pushed
//! forward until the vehicle reaches the deep threshold, then backward until
//! it climbs back above the shallow one, and so on.

use log::{debug, warn};
use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::coriolis::kinetic_energy;
use crate::dynamics::{Model, RailSpec, SimState};
use crate::error::{ModelError, Result};
use crate::kinematics::Vec3;
use crate::mass::{assemble_m_total, ellipsoid_inertia, AddedMass, Vec9, VehicleParams};

/// Output columns, in order.
pub const CHANNELS: [&str; 20] = [
    "t", "x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r", "x_p", "vpx", "vpy",
    "vpz", "tau_X", "tau_Xp", "kinetic",
];

/// Published-source values the Remus parameter set is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemusSource {
    /// Total mass `m = m_s + m_p` (kg).
    pub total_mass: f64,
    /// Forward semi-axis (m).
    pub a: f64,
    /// Remaining semi-axes (m).
    pub b: f64,
    /// `(-X_udot, -Y_vdot, -Z_wdot)`.
    pub added_linear: Vec3,
    /// `(-K_pdot, -M_qdot, -N_rdot)`.
    pub added_angular: Vec3,
    pub rho: f64,
    pub gravity: f64,
    /// Derived for neutral buoyancy when absent.
    pub displaced_volume: Option<f64>,
}

/// Split the total mass one sixth moving, five sixths stationary at the
/// origin, with ellipsoid inertia and diagonal added mass.
pub fn remus_params(src: &RemusSource) -> Result<VehicleParams> {
    if !(src.a > 0.0 && src.b > 0.0) {
        return Err(ModelError::InvalidParams("ellipsoid semi-axes must be positive".into()));
    }
    let m_p = src.total_mass / 6.0;
    let m_s = src.total_mass - m_p;
    let params = VehicleParams {
        m_s,
        m_p,
        r_s: Vec3::zeros(),
        inertia: ellipsoid_inertia(m_s, src.a, src.b),
        added_mass: AddedMass::diagonal(src.added_linear, src.added_angular),
        rho: src.rho,
        displaced_volume: src.displaced_volume.unwrap_or(src.total_mass / src.rho),
        gravity: src.gravity,
        semi_axes: Some((src.a, src.b)),
    };
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub duration: f64,
    pub dt: f64,
    /// `tau_X` (N).
    pub surge_force: f64,
    /// `|tau_Xp|` (N), applied along the rail axis.
    pub mass_force_magnitude: f64,
    /// Switch the mass backward once `z >= depth_deep` (m).
    pub depth_deep: f64,
    /// Switch the mass forward once `z <= depth_shallow` (m).
    pub depth_shallow: f64,
    pub rail: RailSpec,
    pub initial_state: SimState,
}

impl ScenarioSpec {
    /// Remus open-loop dive: 500 s, 1 N surge, ±0.5 N on the mass,
    /// switching at 20 m and 3 m, starting at rest with the mass centred.
    pub fn remus_default() -> Self {
        let rail = RailSpec::remus_centreline();
        Self {
            duration: 500.0,
            dt: 0.01,
            surge_force: 1.0,
            mass_force_magnitude: 0.5,
            depth_deep: 20.0,
            depth_shallow: 3.0,
            rail,
            initial_state: SimState::at_rest(rail.point(0.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidScenario(msg));
        if !(self.duration > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(0.0 < self.depth_shallow && self.depth_shallow < self.depth_deep) {
            return bad(format!(
                "depth thresholds must satisfy 0 < depth_shallow < depth_deep (got {} and {})",
                self.depth_shallow, self.depth_deep
            ));
        }
        if !self.surge_force.is_finite() || !(self.mass_force_magnitude >= 0.0) {
            return bad("forces must be finite and the mass force magnitude non-negative".into());
        }
        self.rail.validate()?;
        if !self.initial_state.is_finite() {
            return bad("initial state must be finite".into());
        }
        let s = self.rail.coordinate(&self.initial_state.r_p);
        if (self.rail.point(s) - self.initial_state.r_p).amax() > 1e-12
            || s < self.rail.stroke_min
            || s > self.rail.stroke_max
        {
            return bad("initial moving-mass position must lie on the rail within its stroke".into());
        }
        self.steps().map(|_| ())
    }

    /// Number of steps; `duration` must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        let n = (self.duration / self.dt).round();
        if (n * self.dt - self.duration).abs() > 1e-9 * self.duration.max(self.dt) || n < 1.0 {
            return Err(ModelError::InvalidScenario(format!(
                "duration {} is not a whole number of steps of {}",
                self.duration, self.dt
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    MassForward,
    MassBackward,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceScheduleState {
    pub phase: Phase,
    pub last_switch_time: f64,
}

/// Update the depth latch at `state` and return the input for the next step.
pub fn force_schedule(
    spec: &ScenarioSpec,
    state: &SimState,
    sched: ForceScheduleState,
    t: f64,
) -> (Vec9, ForceScheduleState) {
    let z = state.eta.position.z;
    let phase = match sched.phase {
        Phase::MassForward if z >= spec.depth_deep => Phase::MassBackward,
        Phase::MassBackward if z <= spec.depth_shallow => Phase::MassForward,
        p => p,
    };
    let next = if phase != sched.phase {
        debug!("t = {t:.2}: z = {z:.3}, switching to {phase:?}");
        ForceScheduleState { phase, last_switch_time: t }
    } else {
        sched
    };
    let sign = match phase {
        Phase::MassForward => 1.0,
        Phase::MassBackward => -1.0,
    };
    let mut tau = Vec9::zeros();
    tau[0] = spec.surge_force;
    let along = sign * spec.mass_force_magnitude * spec.rail.axis;
    tau.fixed_rows_mut::<3>(6).copy_from(&along);
    (tau, next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub eta: Vector6<f64>,
    pub nu: Vector6<f64>,
    pub r_p: Vec3,
    pub x_p: f64,
    pub v_p: Vec3,
    pub tau_x: f64,
    pub tau_xp: f64,
    pub kinetic: f64,
}

impl TrajectoryRecord {
    /// Values in [`CHANNELS`] order.
    pub fn channels(&self) -> [f64; 20] {
        let e = &self.eta;
        let n = &self.nu;
        [
            self.t, e[0], e[1], e[2], e[3], e[4], e[5], n[0], n[1], n[2], n[3], n[4], n[5],
            self.x_p, self.v_p.x, self.v_p.y, self.v_p.z, self.tau_x, self.tau_xp, self.kinetic,
        ]
    }

    pub fn state(&self) -> SimState {
        SimState {
            eta: crate::kinematics::Pose::from_vector(&self.eta),
            r_p: self.r_p,
            nu: self.nu,
            v_p: self.v_p,
        }
    }
}

/// Records up to the end of the run or the failing step.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub records: Vec<TrajectoryRecord>,
    pub failure: Option<ModelError>,
}

impl ScenarioRun {
    pub fn into_result(self) -> Result<Vec<TrajectoryRecord>> {
        match self.failure {
            None => Ok(self.records),
            Some(e) => Err(e),
        }
    }
}

fn record(model: &Model, rail: &RailSpec, state: &SimState, tau: &Vec9, t: f64) -> TrajectoryRecord {
    let (params, _) = model.effective(&state.r_p);
    TrajectoryRecord {
        t,
        eta: state.eta.as_vector(),
        nu: state.nu,
        r_p: state.r_p,
        x_p: state.r_p.x,
        v_p: state.v_p,
        tau_x: tau[0],
        tau_xp: rail.axis.dot(&tau.fixed_rows::<3>(6).into_owned()),
        kinetic: kinetic_energy(&assemble_m_total(&params, &state.r_p), &state.nu_prime()),
    }
}

/// Integrate the scenario with `model`; the model's rail is replaced by the
/// scenario's. Samples are taken at `t_k = k dt`, and each record carries the
/// input applied over the step that starts there.
pub fn run_scenario(model: &Model, spec: &ScenarioSpec) -> ScenarioRun {
    let mut records = Vec::new();
    if let Err(e) = spec.validate() {
        return ScenarioRun { records, failure: Some(e) };
    }
    let steps = spec.steps().expect("validated");
    let model = model.clone().with_rail(Some(spec.rail));
    records.reserve(steps + 1);

    let mut state = spec.initial_state;
    let mut sched = ForceScheduleState::default();
    for k in 0..=steps {
        let t = k as f64 * spec.dt;
        let (tau, next) = force_schedule(spec, &state, sched, t);
        sched = next;
        records.push(record(&model, &spec.rail, &state, &tau, t));
        if k == steps {
            break;
        }
        match model.rk4_step(&state, |_, _| tau, t, spec.dt) {
            Ok(s) => state = s,
            Err(e) => {
                warn!("run stopped at t = {t}: {e}");
                return ScenarioRun { records, failure: Some(e) };
            }
        }
    }
    ScenarioRun { records, failure: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydrostatics::HydrostaticsMode;
    use crate::kinematics::Pose;

    fn source() -> RemusSource {
        RemusSource {
            total_mass: 31.0,
            a: 0.8,
            b: 0.095,
            added_linear: Vec3::new(0.84, 29.4, 29.4),
            added_angular: Vec3::new(0.034, 3.43, 3.43),
            rho: 1026.0,
            gravity: 9.81,
            displaced_volume: None,
        }
    }

    fn at_depth(z: f64) -> SimState {
        SimState { eta: Pose::new(Vec3::new(0.0, 0.0, z), Default::default()), ..Default::default() }
    }

    #[test]
    fn remus_split_and_layout() {
        for m in [12.0, 31.0, 47.5] {
            let p = remus_params(&RemusSource { total_mass: m, ..source() }).unwrap();
            assert!((p.m_p / p.m_s - 0.2).abs() < 1e-15);
            assert_eq!(p.r_s, Vec3::zeros());
            let ms = crate::mass::build_m_s(&p);
            assert_eq!(ms.fixed_view::<3, 3>(0, 3).into_owned(), nalgebra::Matrix3::zeros());
            assert!(crate::hydrostatics::HydrostaticEnv::from_params(&p).is_neutrally_buoyant());
        }
    }

    #[test]
    fn params_round_trip_through_toml() {
        let p = remus_params(&source()).unwrap();
        let text = toml::to_string(&p).unwrap();
        let back: VehicleParams = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn schedule_examples() {
        let spec = ScenarioSpec::remus_default();
        let (tau, s) = force_schedule(&spec, &at_depth(0.0), ForceScheduleState::default(), 0.0);
        assert_eq!((tau[0], tau[6], s.phase), (1.0, 0.5, Phase::MassForward));
        assert_eq!(tau.fixed_rows::<3>(3).into_owned(), Vec3::zeros());

        let (tau, s) = force_schedule(&spec, &at_depth(20.01), s, 42.0);
        assert_eq!((tau[6], s.phase, s.last_switch_time), (-0.5, Phase::MassBackward, 42.0));

        let (tau, s2) = force_schedule(&spec, &at_depth(10.0), s, 50.0);
        assert_eq!((tau[6], s2), (-0.5, s));

        let (tau, s3) = force_schedule(&spec, &at_depth(3.0), s2, 60.0);
        assert_eq!((tau[6], s3.phase), (0.5, Phase::MassForward));
    }

    #[test]
    fn spec_validation() {
        let spec = ScenarioSpec::remus_default();
        assert!(spec.validate().is_ok());
        assert_eq!(spec.steps().unwrap(), 50_000);
        let bad = ScenarioSpec { depth_shallow: 25.0, ..spec };
        assert!(matches!(bad.validate(), Err(ModelError::InvalidScenario(m)) if m.contains("depth_shallow < depth_deep")));
        assert!(ScenarioSpec { dt: 0.0, ..spec }.validate().is_err());
        assert!(ScenarioSpec { duration: 0.015, dt: 0.01, ..spec }.validate().is_err());
        let off = SimState::at_rest(Vec3::new(0.0, 0.01, 0.05));
        assert!(ScenarioSpec { initial_state: off, ..spec }.validate().is_err());
    }

    #[test]
    fn single_step_run_has_two_records() {
        let p = remus_params(&source()).unwrap();
        let model = Model::new(p).unwrap().with_hydrostatics(HydrostaticsMode::Compensated);
        let spec = ScenarioSpec { duration: 0.01, ..ScenarioSpec::remus_default() };
        let recs = run_scenario(&model, &spec).into_result().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].t, recs[1].t), (0.0, 0.01));
        assert!(recs[1].nu[0] > 0.0);
    }

    #[test]
    fn failure_keeps_partial_trajectory() {
        let p = remus_params(&source()).unwrap();
        let model = Model::new(p).unwrap().with_hydrostatics(HydrostaticsMode::Compensated);
        let mut spec = ScenarioSpec { duration: 1.0, ..ScenarioSpec::remus_default() };
        spec.initial_state.nu[4] = 1e6;
        let run = run_scenario(&model, &spec);
        assert!(run.failure.is_some());
        assert!(!run.records.is_empty());
    }
}
