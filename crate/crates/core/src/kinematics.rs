//! Attitude kinematics.
//!
//! Euler angles follow the zyx (yaw-pitch-roll) convention with an NED-style
//! inertial frame, so `z` is depth and a positive pitch `theta` is nose-up.
//!
//! ```text
//! eta_dot = J(eta) nu,        J = diag{R(Theta), T(Theta)}
//! r_p_dot = v_p - v - S(w) r_p
//! ```

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{ModelError, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Guard band around `theta = ±pi/2` inside which `T(Theta)` is refused.
pub const SINGULARITY_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub const fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn as_vector(&self) -> Vec3 {
        Vec3::new(self.phi, self.theta, self.psi)
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.theta.is_finite() && self.psi.is_finite()
    }

    /// Copy with every angle wrapped to `(-pi, pi]`. Reporting only; the
    /// integrator never wraps.
    pub fn wrapped(&self) -> Self {
        Self::new(wrap_angle(self.phi), wrap_angle(self.theta), wrap_angle(self.psi))
    }
}

/// Generalized position `eta = [p, Theta]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub attitude: EulerAngles,
}

impl Pose {
    pub fn new(position: Vec3, attitude: EulerAngles) -> Self {
        Self { position, attitude }
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        let a = self.attitude.as_vector();
        Vector6::new(
            self.position.x,
            self.position.y,
            self.position.z,
            a.x,
            a.y,
            a.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            position: v.fixed_rows::<3>(0).into_owned(),
            attitude: EulerAngles::from_vector(&v.fixed_rows::<3>(3).into_owned()),
        }
    }
}

/// Skew-symmetric cross-product matrix, `skew(a) * b == a x b`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Body-to-inertial rotation `R = Rz(psi) Ry(theta) Rx(phi)`.
pub fn rotation(att: &EulerAngles) -> Mat3 {
    let (sphi, cphi) = att.phi.sin_cos();
    let (sth, cth) = att.theta.sin_cos();
    let (spsi, cpsi) = att.psi.sin_cos();
    Mat3::new(
        cpsi * cth,
        -spsi * cphi + cpsi * sth * sphi,
        spsi * sphi + cpsi * cphi * sth,
        spsi * cth,
        cpsi * cphi + sphi * sth * spsi,
        -cpsi * sphi + sth * spsi * cphi,
        -sth,
        cth * sphi,
        cth * cphi,
    )
}

/// Euler-rate transform, `Theta_dot = T(Theta) w`.
pub fn angular_transform(att: &EulerAngles) -> Result<Mat3> {
    if att.theta.abs() >= FRAC_PI_2 - SINGULARITY_GUARD || !att.theta.is_finite() {
        return Err(ModelError::SingularAttitude { theta: att.theta });
    }
    let (sphi, cphi) = att.phi.sin_cos();
    let (sth, cth) = att.theta.sin_cos();
    let tth = sth / cth;
    Ok(Mat3::new(
        1.0,
        sphi * tth,
        cphi * tth,
        0.0,
        cphi,
        -sphi,
        0.0,
        sphi / cth,
        cphi / cth,
    ))
}

pub fn eta_dot(eta: &Pose, nu: &Vector6<f64>) -> Result<Vector6<f64>> {
    let t = angular_transform(&eta.attitude)?;
    let r = rotation(&eta.attitude);
    let lin = r * nu.fixed_rows::<3>(0);
    let ang = t * nu.fixed_rows::<3>(3);
    Ok(Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z))
}

/// Moving-mass position rate in the body frame.
pub fn r_p_dot(r_p: &Vec3, nu: &Vector6<f64>, v_p: &Vec3) -> Vec3 {
    let v = nu.fixed_rows::<3>(0).into_owned();
    let w = nu.fixed_rows::<3>(3).into_owned();
    v_p - v - skew(&w) * r_p
}

/// Wrap to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}
