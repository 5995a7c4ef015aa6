//! The comparison formulation with the stationary mass placed at the centre
//! of gravity, plus trajectory comparison.
//!
//! The two models differ only in where the stationary mass sits, so this
//! formulation is built by substituting `r_s -> r_g(r_p)` into the shared
//! builders at every evaluation. The Coriolis term goes through the energy
//! gradients rather than the matrices, so the Newton-Euler model with the
//! same substitution is checked against an independently assembled force.

use serde::Serialize;

use crate::coriolis::CoriolisRoute;
use crate::dynamics::{Model, SimState, StateDerivative};
use crate::error::{ModelError, Result};
use crate::kinematics::Vec3;
use crate::mass::{center_of_gravity, Vec9, VehicleParams};
use crate::scenario::{TrajectoryRecord, CHANNELS};

pub(crate) fn substituted(params: &VehicleParams, r_p: &Vec3) -> (VehicleParams, CoriolisRoute) {
    (
        params.with_static_mass_at(center_of_gravity(params, r_p)),
        CoriolisRoute::Kirchhoff,
    )
}

/// Unconstrained equations of motion with `r_s` replaced by the current CG.
pub fn woolsey_state_derivative(model: &Model, state: &SimState, tau: &Vec9) -> Result<StateDerivative> {
    let (params, route) = substituted(&model.params, &state.r_p);
    model.derivative_with(&params, route, state, tau)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelDiff {
    pub name: &'static str,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Fraction of samples where both runs have the same sign (zero counts as
    /// its own sign).
    pub sign_agreement: f64,
    pub sign_changes_a: usize,
    pub sign_changes_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub samples: usize,
    pub channels: Vec<ChannelDiff>,
    /// Largest difference over the 18 state components.
    pub max_state_diff: f64,
}

impl ComparisonReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelDiff> {
        self.channels.iter().find(|c| c.name == name)
    }
}

fn state_of(r: &TrajectoryRecord) -> [f64; 18] {
    let mut out = [0.0; 18];
    out[..6].copy_from_slice(r.eta.as_slice());
    out[6..9].copy_from_slice(r.r_p.as_slice());
    out[9..15].copy_from_slice(r.nu.as_slice());
    out[15..].copy_from_slice(r.v_p.as_slice());
    out
}

fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut last = 0.0f64;
    let mut n = 0;
    for v in values.filter(|v| *v != 0.0) {
        if last != 0.0 && v.signum() != last.signum() {
            n += 1;
        }
        last = v;
    }
    n
}

/// Per-channel differences between two runs sampled on the same time grid.
pub fn compare_trajectories(a: &[TrajectoryRecord], b: &[TrajectoryRecord]) -> Result<ComparisonReport> {
    if a.len() != b.len() {
        return Err(ModelError::GridMismatch(format!("{} samples vs {}", a.len(), b.len())));
    }
    if let Some((ra, rb)) = a.iter().zip(b).find(|(ra, rb)| ra.t != rb.t) {
        return Err(ModelError::GridMismatch(format!("t = {} vs t = {}", ra.t, rb.t)));
    }
    let n = a.len();
    let rows_a: Vec<_> = a.iter().map(TrajectoryRecord::channels).collect();
    let rows_b: Vec<_> = b.iter().map(TrajectoryRecord::channels).collect();
    let channels = CHANNELS
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &name)| {
            let (mut max_abs, mut sum, mut agree) = (0.0f64, 0.0, 0usize);
            for (ra, rb) in rows_a.iter().zip(&rows_b) {
                let d = (ra[j] - rb[j]).abs();
                max_abs = max_abs.max(d);
                sum += d;
                if ra[j].signum() == rb[j].signum() || (ra[j] == 0.0 && rb[j] == 0.0) {
                    agree += 1;
                }
            }
            ChannelDiff {
                name,
                max_abs,
                mean_abs: if n > 0 { sum / n as f64 } else { 0.0 },
                sign_agreement: if n > 0 { agree as f64 / n as f64 } else { 1.0 },
                sign_changes_a: sign_changes(rows_a.iter().map(|r| r[j])),
                sign_changes_b: sign_changes(rows_b.iter().map(|r| r[j])),
            }
        })
        .collect();
    let max_state_diff = a
        .iter()
        .zip(b)
        .flat_map(|(ra, rb)| {
            let (sa, sb) = (state_of(ra), state_of(rb));
            (0..18).map(move |i| (sa[i] - sb[i]).abs())
        })
        .fold(0.0, f64::max);
    Ok(ComparisonReport { samples: n, channels, max_state_diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Formulation, RailContact};
    use crate::hydrostatics::HydrostaticsMode;
    use crate::kinematics::{EulerAngles, Pose};
    use crate::mass::testing::*;
    use nalgebra::Vector6;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models(p: VehicleParams) -> (Model, Model) {
        let ne = Model::new(p)
            .unwrap()
            .with_hydrostatics(HydrostaticsMode::Compensated)
            .with_static_mass_at_cg(true);
        let w = ne.clone().with_static_mass_at_cg(false).with_formulation(Formulation::Woolsey);
        (ne, w)
    }

    fn random_state<R: Rng>(rng: &mut R) -> SimState {
        let mut att = random_vec3(rng, 1.0);
        att[1] *= 0.9;
        SimState {
            eta: Pose::new(random_vec3(rng, 10.0), EulerAngles::from_vector(&att)),
            r_p: random_vec3(rng, 0.1),
            nu: Vector6::from_fn(|_, _| rng.random_range(-2.0..2.0)),
            v_p: random_vec3(rng, 2.0),
        }
    }

    #[test]
    fn substitution_matches_newton_euler_with_static_mass_at_cg() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let (ne, w) = models(random_params(&mut rng));
            let s = random_state(&mut rng);
            let tau = Vec9::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let a = ne.state_derivative(&s, &tau).unwrap().to_vector();
            let b = w.state_derivative(&s, &tau).unwrap().to_vector();
            assert!((a - b).amax() <= 1e-12 * (1.0 + a.amax()), "{}", (a - b).amax());
        }
    }

    #[test]
    fn equilibrium_is_shared() {
        let p = remus_like();
        let s = SimState::at_rest(Vec3::new(0.0, 0.0, 0.05));
        for f in [Formulation::NewtonEuler, Formulation::Woolsey] {
            let m = Model::new(p).unwrap().with_hydrostatics(HydrostaticsMode::Compensated).with_formulation(f);
            let d = m.state_derivative(&s, &Vec9::zeros()).unwrap();
            assert!(d.to_vector().amax() < 1e-14);
            let c = m.constrained_derivative(&s, &Vec9::zeros(), RailContact::Free).unwrap();
            assert!(c.to_vector().amax() < 1e-14);
        }
    }

    #[test]
    fn static_mass_at_cg_adds_pitch_torque() {
        // the stationary weight now acts at r_g, which lies between the origin
        // and the moving mass, so the nose-down moment grows
        let p = remus_like();
        let s = SimState::at_rest(Vec3::new(0.05, 0.0, 0.05));
        let ne = Model::new(p).unwrap().with_hydrostatics(HydrostaticsMode::Compensated);
        let w = ne.clone().with_formulation(Formulation::Woolsey);
        let q_ne = ne.state_derivative(&s, &Vec9::zeros()).unwrap().nu_prime_dot[4];
        let q_w = w.state_derivative(&s, &Vec9::zeros()).unwrap().nu_prime_dot[4];
        assert!(q_ne < 0.0 && q_w < q_ne, "{q_ne} {q_w}");
    }
}
