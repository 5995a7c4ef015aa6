//! Equations of motion for the vehicle with its internal moving mass.
//!
//! ```text
//! eta_dot = J(eta) nu
//! r_p_dot = v_p - v - S(w) r_p
//! (M + M_P(r_p)) nu'_dot + (C(nu') + C_P(nu', r_p)) nu' + g(eta) + g_P(eta, r_p) = tau'
//! ```
//!
//! All matrices are rebuilt from the current `r_p` at every evaluation. When
//! a rail is configured, the mass is held on it by constraint forces acting
//! between the hull and the mass, and [`project_to_rail`] removes the drift
//! left after each step.

mod energy;
mod integrator;
mod rail;
mod solve;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SVector, Vector6};
use serde::{Deserialize, Serialize};

pub use energy::{energy_report, EnergyReport, LastStep};
pub use integrator::{rk4, OdeState};
pub use rail::{project_to_rail, RailContact, RailSpec};
pub use solve::{solve_accelerations, MassFactor, RESIDUAL_BOUND};

use crate::coriolis::CoriolisRoute;
use crate::error::{ModelError, Result};
use crate::hydrostatics::{HydrostaticEnv, HydrostaticsMode};
use crate::kinematics::{eta_dot, r_p_dot, skew, Pose, Vec3};
use crate::mass::{assemble_m_total, center_of_gravity, Mat9, Vec9, VehicleParams};

pub type StateVector = SVector<f64, 18>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub eta: Pose,
    /// Moving-mass position in the body frame (m).
    pub r_p: Vec3,
    /// Body velocities `[u, v, w, p, q, r]`.
    pub nu: Vector6<f64>,
    /// Moving-mass velocity (m/s, body frame).
    pub v_p: Vec3,
}

impl SimState {
    /// Vehicle at rest at the origin with the mass at `r_p` moving with it.
    pub fn at_rest(r_p: Vec3) -> Self {
        Self { r_p, ..Default::default() }
    }

    pub fn linear_velocity(&self) -> Vec3 {
        self.nu.fixed_rows::<3>(0).into_owned()
    }

    pub fn angular_velocity(&self) -> Vec3 {
        self.nu.fixed_rows::<3>(3).into_owned()
    }

    /// Extended velocity `nu' = [nu, v_p]`.
    pub fn nu_prime(&self) -> Vec9 {
        let mut n = Vec9::zeros();
        n.fixed_rows_mut::<6>(0).copy_from(&self.nu);
        n.fixed_rows_mut::<3>(6).copy_from(&self.v_p);
        n
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.eta.as_vector());
        x.fixed_rows_mut::<3>(6).copy_from(&self.r_p);
        x.fixed_rows_mut::<6>(9).copy_from(&self.nu);
        x.fixed_rows_mut::<3>(15).copy_from(&self.v_p);
        x
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            eta: Pose::from_vector(&x.fixed_rows::<6>(0).into_owned()),
            r_p: x.fixed_rows::<3>(6).into_owned(),
            nu: x.fixed_rows::<6>(9).into_owned(),
            v_p: x.fixed_rows::<3>(15).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub eta_dot: Vector6<f64>,
    pub r_p_dot: Vec3,
    pub nu_prime_dot: Vec9,
}

impl StateDerivative {
    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.eta_dot);
        x.fixed_rows_mut::<3>(6).copy_from(&self.r_p_dot);
        x.fixed_rows_mut::<9>(9).copy_from(&self.nu_prime_dot);
        x
    }
}

/// Damping `D(nu) nu` on the vehicle degrees of freedom.
pub trait Damping: Send + Sync + fmt::Debug {
    fn force(&self, nu: &Vector6<f64>) -> Vector6<f64>;
}

/// The default: no hydrodynamic damping.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDamping;

impl Damping for NoDamping {
    fn force(&self, _nu: &Vector6<f64>) -> Vector6<f64> {
        Vector6::zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// Stationary mass at its own fixed location `r_s`.
    #[default]
    NewtonEuler,
    /// Stationary mass placed at the moving centre of gravity.
    Woolsey,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::NewtonEuler => "newton-euler",
            Formulation::Woolsey => "woolsey",
        })
    }
}

impl std::str::FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "newton-euler" => Ok(Formulation::NewtonEuler),
            "woolsey" => Ok(Formulation::Woolsey),
            other => Err(format!("unknown formulation '{other}' (expected newton-euler or woolsey)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub params: VehicleParams,
    pub env: HydrostaticEnv,
    pub hydrostatics: HydrostaticsMode,
    pub formulation: Formulation,
    /// Newton-Euler only: evaluate with `r_s` replaced by the current centre
    /// of gravity.
    pub static_mass_at_cg: bool,
    pub rail: Option<RailSpec>,
    /// Hold `r_p` fixed (`r_p_dot = 0`), which makes `M'` constant.
    pub freeze_moving_mass: bool,
    pub damping: Arc<dyn Damping>,
}

impl Model {
    pub fn new(params: VehicleParams) -> Result<Self> {
        params.validate()?;
        if params.m_p <= 0.0 {
            return Err(ModelError::InvalidParams(
                "the equations of motion need a moving mass m_p > 0".into(),
            ));
        }
        Ok(Self {
            env: HydrostaticEnv::from_params(&params),
            params,
            hydrostatics: HydrostaticsMode::Full,
            formulation: Formulation::NewtonEuler,
            static_mass_at_cg: false,
            rail: None,
            freeze_moving_mass: false,
            damping: Arc::new(NoDamping),
        })
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn with_hydrostatics(mut self, mode: HydrostaticsMode) -> Self {
        self.hydrostatics = mode;
        self
    }

    pub fn with_rail(mut self, rail: Option<RailSpec>) -> Self {
        self.rail = rail;
        self
    }

    pub fn with_static_mass_at_cg(mut self, on: bool) -> Self {
        self.static_mass_at_cg = on;
        self
    }

    pub fn with_frozen_moving_mass(mut self, on: bool) -> Self {
        self.freeze_moving_mass = on;
        self
    }

    pub fn with_damping(mut self, damping: Arc<dyn Damping>) -> Self {
        self.damping = damping;
        self
    }

    /// Parameters and Coriolis route used at this state.
    pub(crate) fn effective(&self, r_p: &Vec3) -> (VehicleParams, CoriolisRoute) {
        match self.formulation {
            Formulation::NewtonEuler if self.static_mass_at_cg => (
                self.params.with_static_mass_at(center_of_gravity(&self.params, r_p)),
                CoriolisRoute::Matrix,
            ),
            Formulation::NewtonEuler => (self.params, CoriolisRoute::Matrix),
            Formulation::Woolsey => crate::woolsey::substituted(&self.params, r_p),
        }
    }

    /// Restoring vector `g'` for the configured mode and formulation.
    pub fn restoring(&self, state: &SimState) -> Result<Vec9> {
        let (params, _) = self.effective(&state.r_p);
        self.hydrostatics.restoring(&self.env, &params, &state.eta, &state.r_p)
    }

    /// `M'(r_p)` and `tau' - C' nu' - g' - D nu`.
    pub(crate) fn terms(
        &self,
        params: &VehicleParams,
        route: CoriolisRoute,
        state: &SimState,
        tau: &Vec9,
    ) -> Result<(Mat9, Vec9)> {
        let nu = state.nu_prime();
        let m = assemble_m_total(params, &state.r_p);
        let c = route.force(params, &state.r_p, &nu);
        let g = self.hydrostatics.restoring(&self.env, params, &state.eta, &state.r_p)?;
        let mut rhs = tau - c - g;
        let mut body = rhs.fixed_rows_mut::<6>(0);
        body -= self.damping.force(&state.nu);
        Ok((m, rhs))
    }

    fn kinematics(&self, state: &SimState) -> Result<(Vector6<f64>, Vec3)> {
        let eta_dot = eta_dot(&state.eta, &state.nu)?;
        let r_p_dot = if self.freeze_moving_mass {
            Vec3::zeros()
        } else {
            r_p_dot(&state.r_p, &state.nu, &state.v_p)
        };
        Ok((eta_dot, r_p_dot))
    }

    /// Unconstrained equations of motion at `state` under input `tau`.
    pub fn state_derivative(&self, state: &SimState, tau: &Vec9) -> Result<StateDerivative> {
        match self.formulation {
            Formulation::Woolsey => crate::woolsey::woolsey_state_derivative(self, state, tau),
            Formulation::NewtonEuler => {
                let (params, route) = self.effective(&state.r_p);
                self.derivative_with(&params, route, state, tau)
            }
        }
    }

    pub(crate) fn derivative_with(
        &self,
        params: &VehicleParams,
        route: CoriolisRoute,
        state: &SimState,
        tau: &Vec9,
    ) -> Result<StateDerivative> {
        let (eta_dot, r_p_dot) = self.kinematics(state)?;
        let (m, rhs) = self.terms(params, route, state, tau)?;
        let nu_prime_dot = MassFactor::spd(&m)?.solve_checked(&m, &rhs)?;
        Ok(StateDerivative { eta_dot, r_p_dot, nu_prime_dot })
    }

    /// Equations of motion with the rail constraint forces for `contact`.
    ///
    /// Without a rail this is [`Model::state_derivative`].
    pub fn constrained_derivative(
        &self,
        state: &SimState,
        tau: &Vec9,
        contact: RailContact,
    ) -> Result<StateDerivative> {
        let Some(rail) = self.rail.filter(|_| !self.freeze_moving_mass) else {
            return self.state_derivative(state, tau);
        };
        let (eta_dot, r_p_dot) = self.kinematics(state)?;
        let (params, route) = self.effective(&state.r_p);
        let (m, rhs) = self.terms(&params, route, state, tau)?;
        let factor = MassFactor::spd(&m)?;
        let free = factor.solve_checked(&m, &rhs)?;

        // Each direction d holds d . (v_p - v - w x r_p) = 0, i.e.
        // d^T [-I, S(r_p), I] nu'_dot = d . (w x r_p_dot).
        let dirs = rail.constrained_directions(contact);
        let k = dirs.len();
        let s_rp = skew(&state.r_p);
        let w = state.angular_velocity();
        let mut jac = DMatrix::<f64>::zeros(k, 9);
        let mut bias = DVector::<f64>::zeros(k);
        for (i, d) in dirs.iter().enumerate() {
            let row_w = s_rp.transpose() * d;
            for j in 0..3 {
                jac[(i, j)] = -d[j];
                jac[(i, 3 + j)] = row_w[j];
                jac[(i, 6 + j)] = d[j];
            }
            bias[i] = d.dot(&w.cross(&r_p_dot));
        }
        let mut m_inv_jt = DMatrix::<f64>::zeros(9, k);
        for i in 0..k {
            let col = Vec9::from_iterator(jac.row(i).iter().copied());
            m_inv_jt.set_column(i, &factor.solve(&col));
        }
        let schur = &jac * &m_inv_jt;
        let violation = &jac * DVector::from_iterator(9, free.iter().copied()) - bias;
        let multipliers = schur.lu().solve(&violation).ok_or(ModelError::Singular)?;
        let correction = &m_inv_jt * multipliers;
        let nu_prime_dot = free - Vec9::from_iterator(correction.iter().copied());
        Ok(StateDerivative { eta_dot, r_p_dot, nu_prime_dot })
    }

    /// Decide whether the mass is held against a stop for the next step:
    /// it sits at a stop and its free acceleration along the rail points
    /// outward.
    pub fn rail_contact(&self, state: &SimState, tau: &Vec9) -> Result<RailContact> {
        let Some(rail) = self.rail.filter(|_| !self.freeze_moving_mass) else {
            return Ok(RailContact::Free);
        };
        let s = rail.coordinate(&state.r_p);
        let (at_min, at_max) = (rail.at_min(s), rail.at_max(s));
        if !at_min && !at_max {
            return Ok(RailContact::Free);
        }
        let rel = r_p_dot(&state.r_p, &state.nu, &state.v_p);
        let s_dot = rail.axis.dot(&rel);
        // rebuilding v_p after projection leaves rounding noise in s_dot
        let still = 1e-12 * (1.0 + state.nu.amax() + state.v_p.amax());
        let d = self.constrained_derivative(state, tau, RailContact::Free)?;
        let s_ddot = rail.axis.dot(&relative_acceleration(state, &d));
        if at_max && s_dot >= -still && s_ddot > 0.0 {
            Ok(RailContact::AtMax)
        } else if at_min && s_dot <= still && s_ddot < 0.0 {
            Ok(RailContact::AtMin)
        } else {
            Ok(RailContact::Free)
        }
    }

    /// One RK4 step with the input evaluated at the stage times, followed by
    /// rail projection. The rail contact state is fixed for the whole step.
    pub fn rk4_step<F>(&self, state: &SimState, mut tau_of: F, t: f64, dt: f64) -> Result<SimState>
    where
        F: FnMut(f64, &SimState) -> Vec9,
    {
        if !(dt > 0.0) {
            return Err(ModelError::InvalidScenario(format!("time step must be positive, got {dt}")));
        }
        let contact = self.rail_contact(state, &tau_of(t, state))?;
        let next = rk4(state, t, dt, |ts, s| {
            let tau = tau_of(ts, s);
            self.constrained_derivative(s, &tau, contact)
        })?;
        let next = match self.rail.filter(|_| !self.freeze_moving_mass) {
            Some(rail) => project_to_rail(&next, &rail),
            None => next,
        };
        if !next.is_finite() {
            return Err(ModelError::NonFinite { t: t + dt });
        }
        Ok(next)
    }
}

/// `d/dt (v_p - v - w x r_p)` for a derivative evaluated at `state`.
pub fn relative_acceleration(state: &SimState, d: &StateDerivative) -> Vec3 {
    let v_dot = d.nu_prime_dot.fixed_rows::<3>(0).into_owned();
    let w_dot = d.nu_prime_dot.fixed_rows::<3>(3).into_owned();
    let vp_dot = d.nu_prime_dot.fixed_rows::<3>(6).into_owned();
    let w = state.angular_velocity();
    vp_dot - v_dot - w_dot.cross(&state.r_p) - w.cross(&d.r_p_dot)
}
