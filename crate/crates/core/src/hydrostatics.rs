//! Gravity and buoyancy restoring terms.
//!
//! With the centre of buoyancy at the body origin and a neutrally buoyant
//! vehicle the net linear force vanishes and only the weight lever arms
//! remain:
//!
//! ```text
//! g'(eta, r_p) = -[ 0 ; S(r_s) R^T f_s + S(r_p) R^T f_p ; R^T f_p ]
//! ```
//!
//! The vector sits on the left-hand side of the equations of motion.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::kinematics::{rotation, Pose, Vec3};
use crate::mass::{Vec9, VehicleParams};

/// Relative tolerance on `W_s + W_p = B`.
pub const NEUTRAL_BUOYANCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydrostaticEnv {
    /// `W_s = m_s g` (N).
    pub weight_static: f64,
    /// `W_p = m_p g` (N).
    pub weight_moving: f64,
    /// `B = rho g V` (N).
    pub buoyancy: f64,
    /// Centre of buoyancy; fixed at the body origin.
    pub r_b: Vec3,
}

impl HydrostaticEnv {
    pub fn from_params(params: &VehicleParams) -> Self {
        Self {
            weight_static: params.m_s * params.gravity,
            weight_moving: params.m_p * params.gravity,
            buoyancy: params.rho * params.gravity * params.displaced_volume,
            r_b: Vec3::zeros(),
        }
    }

    pub fn is_neutrally_buoyant(&self) -> bool {
        let weight = self.weight_static + self.weight_moving;
        (weight - self.buoyancy).abs() < NEUTRAL_BUOYANCY_TOLERANCE * self.buoyancy
    }

    pub fn check(&self) -> Result<()> {
        if self.is_neutrally_buoyant() {
            Ok(())
        } else {
            Err(ModelError::NotNeutrallyBuoyant {
                weight: self.weight_static + self.weight_moving,
                buoyancy: self.buoyancy,
            })
        }
    }
}

/// How restoring forces enter the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HydrostaticsMode {
    /// Full `g'`, gravity acts on the moving mass.
    Full,
    /// Gravity on the moving mass is cancelled by a constraint force; the
    /// torque from its lever arm remains.
    #[default]
    Compensated,
    /// No restoring forces.
    Off,
}

impl HydrostaticsMode {
    pub fn restoring(
        self,
        env: &HydrostaticEnv,
        params: &VehicleParams,
        eta: &Pose,
        r_p: &Vec3,
    ) -> Result<Vec9> {
        match self {
            HydrostaticsMode::Full => restoring_full(env, params, eta, r_p),
            HydrostaticsMode::Compensated => restoring_compensated(env, params, eta, r_p),
            HydrostaticsMode::Off => Ok(Vec9::zeros()),
        }
    }
}

fn weights_in_body(env: &HydrostaticEnv, eta: &Pose) -> (Vec3, Vec3) {
    let rt = rotation(&eta.attitude).transpose();
    (
        rt * Vec3::new(0.0, 0.0, env.weight_static),
        rt * Vec3::new(0.0, 0.0, env.weight_moving),
    )
}

/// Stationary and moving-mass parts `(g(eta), g_P(eta, r_p))`.
pub fn restoring_split(
    env: &HydrostaticEnv,
    params: &VehicleParams,
    eta: &Pose,
    r_p: &Vec3,
) -> Result<(Vec9, Vec9)> {
    env.check()?;
    let (f_s, f_p) = weights_in_body(env, eta);
    let mut g = Vec9::zeros();
    g.fixed_rows_mut::<3>(3).copy_from(&(-params.r_s.cross(&f_s)));
    let mut g_p = Vec9::zeros();
    g_p.fixed_rows_mut::<3>(3).copy_from(&(-r_p.cross(&f_p)));
    g_p.fixed_rows_mut::<3>(6).copy_from(&(-f_p));
    Ok((g, g_p))
}

pub fn restoring_full(
    env: &HydrostaticEnv,
    params: &VehicleParams,
    eta: &Pose,
    r_p: &Vec3,
) -> Result<Vec9> {
    let (g, g_p) = restoring_split(env, params, eta, r_p)?;
    Ok(g + g_p)
}

/// `g'` with the moving-mass weight carried by the compensating force.
pub fn restoring_compensated(
    env: &HydrostaticEnv,
    params: &VehicleParams,
    eta: &Pose,
    r_p: &Vec3,
) -> Result<Vec9> {
    let mut g = restoring_full(env, params, eta, r_p)?;
    g.fixed_rows_mut::<3>(6).fill(0.0);
    Ok(g)
}

/// Compensated restoring vector for a stationary mass at the body origin.
pub fn restoring_remus(env: &HydrostaticEnv, eta: &Pose, r_p: &Vec3) -> Vec9 {
    let (_, f_p) = weights_in_body(env, eta);
    let mut g = Vec9::zeros();
    g.fixed_rows_mut::<3>(3).copy_from(&(-r_p.cross(&f_p)));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::EulerAngles;
    use crate::mass::testing::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn level() -> Pose {
        Pose::default()
    }

    #[test]
    fn no_lever_arms_leaves_only_moving_weight() {
        let p = remus_like();
        let env = HydrostaticEnv::from_params(&p);
        let g = restoring_full(&env, &p, &level(), &Vec3::zeros()).unwrap();
        let mut expected = Vec9::zeros();
        expected[8] = -env.weight_moving;
        assert_eq!(g, expected);
    }

    #[test]
    fn forward_mass_gives_nose_down_torque_sign() {
        let p = remus_like();
        let env = HydrostaticEnv::from_params(&p);
        let (x_p, z_p) = (0.05, 0.05);
        let g = restoring_full(&env, &p, &level(), &Vec3::new(x_p, 0.0, z_p)).unwrap();
        assert_relative_eq!(
            g.fixed_rows::<3>(3).into_owned(),
            Vec3::new(0.0, x_p * env.weight_moving, 0.0),
            epsilon = 1e-14
        );
    }

    #[test]
    fn remus_example() {
        let p = remus_like();
        let env = HydrostaticEnv::from_params(&p);
        let g = restoring_remus(&env, &level(), &Vec3::new(0.05, 0.0, 0.05));
        let mut expected = Vec9::zeros();
        expected[4] = 0.05 * env.weight_moving;
        assert_relative_eq!(g, expected, epsilon = 1e-14);
        assert_eq!(restoring_remus(&env, &level(), &Vec3::zeros()), Vec9::zeros());
    }

    #[test]
    fn split_examples() {
        let mut p = remus_like();
        p.m_p = 0.0;
        p.displaced_volume = p.m_s / p.rho;
        let env = HydrostaticEnv::from_params(&p);
        let pose = Pose::new(Vec3::zeros(), EulerAngles::new(0.1, -0.3, 0.7));
        let (_, g_p) = restoring_split(&env, &p, &pose, &Vec3::new(0.05, 0.0, 0.05)).unwrap();
        assert_eq!(g_p, Vec9::zeros());

        let p = remus_like();
        let env = HydrostaticEnv::from_params(&p);
        let (g, _) = restoring_split(&env, &p, &pose, &Vec3::new(0.05, 0.0, 0.05)).unwrap();
        assert_eq!(g, Vec9::zeros());
    }

    #[test]
    fn rejects_non_neutral_vehicle() {
        let mut p = remus_like();
        p.displaced_volume *= 1.01;
        let env = HydrostaticEnv::from_params(&p);
        assert!(!env.is_neutrally_buoyant());
        assert!(matches!(
            restoring_full(&env, &p, &level(), &Vec3::zeros()),
            Err(ModelError::NotNeutrallyBuoyant { .. })
        ));
    }

    #[test]
    fn centreline_mass_below_origin_is_in_equilibrium() {
        let p = remus_like();
        let env = HydrostaticEnv::from_params(&p);
        let g = restoring_remus(&env, &level(), &Vec3::new(0.0, 0.0, 0.05));
        assert_eq!(g[4], 0.0);
    }

    #[test]
    fn split_sums_bit_identically_and_ignores_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let p = random_params(&mut rng);
            let env = HydrostaticEnv::from_params(&p);
            let att = random_vec3(&mut rng, 1.5);
            let pose = Pose::new(random_vec3(&mut rng, 50.0), EulerAngles::from_vector(&att));
            let r_p = random_vec3(&mut rng, 0.1);
            let (g, g_p) = restoring_split(&env, &p, &pose, &r_p).unwrap();
            let full = restoring_full(&env, &p, &pose, &r_p).unwrap();
            assert_eq!(g + g_p, full);
            assert_eq!(full.fixed_rows::<3>(0).into_owned(), Vec3::zeros());
            let moved = Pose::new(random_vec3(&mut rng, 50.0), pose.attitude);
            assert_eq!(restoring_full(&env, &p, &moved, &r_p).unwrap(), full);
        }
    }

    #[test]
    fn remus_equals_full_without_third_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let p = remus_like();
        let env = HydrostaticEnv::from_params(&p);
        for _ in 0..200 {
            let pose = Pose::new(Vec3::zeros(), EulerAngles::from_vector(&random_vec3(&mut rng, 1.5)));
            let r_p = random_vec3(&mut rng, 0.1);
            let mut full = restoring_full(&env, &p, &pose, &r_p).unwrap();
            full.fixed_rows_mut::<3>(6).fill(0.0);
            assert_eq!(restoring_remus(&env, &pose, &r_p), full);
            assert_eq!(restoring_compensated(&env, &p, &pose, &r_p).unwrap(), full);
        }
    }

    proptest! {
        #[test]
        fn rotated_weight_keeps_magnitude(phi in -3.0..3.0f64, theta in -1.5..1.5f64, psi in -3.0..3.0f64) {
            let p = remus_like();
            let env = HydrostaticEnv::from_params(&p);
            let pose = Pose::new(Vec3::zeros(), EulerAngles::new(phi, theta, psi));
            let g = restoring_full(&env, &p, &pose, &Vec3::zeros()).unwrap();
            let f_p = g.fixed_rows::<3>(6).norm();
            prop_assert!((f_p - env.weight_moving).abs() <= 1e-12 * env.weight_moving);
        }
    }
}
