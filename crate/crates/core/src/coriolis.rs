//! Kinetic energy, its gradients and the Coriolis-centripetal terms.
//!
//! Kirchhoff's equations give the velocity-dependent forces directly from the
//! energy gradients `Tv = dT/dv`, `Tw = dT/dw`, `Tp = dT/dv_p`:
//!
//! ```text
//! C'(nu') nu' = [ S(w) Tv ;  S(v) Tv + S(w) Tw + S(v_p) Tp ;  S(w) Tp ]
//! ```
//!
//! [`build_c`] and [`build_c_p`] split the same product into a stationary
//! part and a part carrying the moving mass. The blocks are arranged as
//! `[[0, X, 0], [X, Y, Z], [0, Z, 0]]` with skew-symmetric `X, Y, Z`, so
//! `nu'^T C' nu' = 0` for any velocity.
//!
//! The matrices are not unique; only `C' nu'` is physical. [`printed`] keeps
//! an alternative block layout for comparison.

use serde::{Deserialize, Serialize};

use crate::kinematics::{skew, Mat3, Vec3};
use crate::mass::{set_block, Mat9, Vec9, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGradients {
    pub dt_dv: Vec3,
    pub dt_dw: Vec3,
    pub dt_dvp: Vec3,
}

impl EnergyGradients {
    pub fn as_vector(&self) -> Vec9 {
        let mut g = Vec9::zeros();
        g.fixed_rows_mut::<3>(0).copy_from(&self.dt_dv);
        g.fixed_rows_mut::<3>(3).copy_from(&self.dt_dw);
        g.fixed_rows_mut::<3>(6).copy_from(&self.dt_dvp);
        g
    }
}

/// Which algebraic route produces `C'(nu') nu'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoriolisRoute {
    /// `(C + C_P) nu'` from the block matrices.
    Matrix,
    /// Kirchhoff assembly from the energy gradients.
    Kirchhoff,
}

impl CoriolisRoute {
    pub fn force(self, params: &VehicleParams, r_p: &Vec3, nu: &Vec9) -> Vec9 {
        match self {
            CoriolisRoute::Matrix => coriolis_force(params, r_p, nu),
            CoriolisRoute::Kirchhoff => kirchhoff_force(nu, &energy_gradients(params, r_p, nu)),
        }
    }
}

pub(crate) fn split(nu: &Vec9) -> (Vec3, Vec3, Vec3) {
    (
        nu.fixed_rows::<3>(0).into_owned(),
        nu.fixed_rows::<3>(3).into_owned(),
        nu.fixed_rows::<3>(6).into_owned(),
    )
}

/// `T = 1/2 nu'^T M' nu'`.
pub fn kinetic_energy(m: &Mat9, nu: &Vec9) -> f64 {
    0.5 * nu.dot(&(m * nu))
}

/// Closed-form block rows of `M' nu'`.
pub fn energy_gradients(params: &VehicleParams, r_p: &Vec3, nu: &Vec9) -> EnergyGradients {
    let (v, w, vp) = split(nu);
    let a = &params.added_mass;
    let m = params.total_mass();
    let (m_s, m_p) = (params.m_s, params.m_p);
    let s_rs = skew(&params.r_s);
    let s_rp = skew(r_p);
    let eye = Mat3::identity();

    let dt_dv = (m * eye + a.a11()) * v + (a.a12() - m_s * s_rs - m_p * s_rp) * w + m_p * vp;
    let dt_dw = (m_s * s_rs + m_p * s_rp + a.a21()) * v
        + (params.inertia_at_origin() - m_p * s_rp * s_rp + a.a22()) * w
        + m_p * s_rp * vp;
    let dt_dvp = m_p * v - m_p * s_rp * w + m_p * vp;
    EnergyGradients { dt_dv, dt_dw, dt_dvp }
}

/// Kirchhoff assembly of `C'(nu') nu'` from energy gradients.
pub fn kirchhoff_force(nu: &Vec9, g: &EnergyGradients) -> Vec9 {
    let (v, w, vp) = split(nu);
    let mut f = Vec9::zeros();
    f.fixed_rows_mut::<3>(0).copy_from(&w.cross(&g.dt_dv));
    f.fixed_rows_mut::<3>(3)
        .copy_from(&(v.cross(&g.dt_dv) + w.cross(&g.dt_dw) + vp.cross(&g.dt_dvp)));
    f.fixed_rows_mut::<3>(6).copy_from(&w.cross(&g.dt_dvp));
    f
}

fn symmetric_layout(x: &Mat3, y: &Mat3, z: &Mat3) -> Mat9 {
    let mut c = Mat9::zeros();
    set_block(&mut c, 0, 1, x);
    set_block(&mut c, 1, 0, x);
    set_block(&mut c, 1, 1, y);
    set_block(&mut c, 1, 2, z);
    set_block(&mut c, 2, 1, z);
    c
}

/// Stationary Coriolis-centripetal matrix, rigid body plus added mass.
pub fn build_c(params: &VehicleParams, nu: &Vec9) -> Mat9 {
    let (v, w, _) = split(nu);
    let a = &params.added_mass;
    let m = params.total_mass();
    let m_s = params.m_s;
    let r_s = &params.r_s;

    let x = -m * skew(&v)
        - skew(&(a.a11() * v))
        - skew(&(a.a12() * w))
        - m_s * skew(&w.cross(r_s));
    let y = -m_s * skew(&r_s.cross(&v))
        - skew(&(a.a21() * v))
        - skew(&(params.inertia_at_origin() * w))
        - skew(&(a.a22() * w));
    let z = -params.m_p * skew(&v);
    symmetric_layout(&x, &y, &z)
}

/// Coriolis-centripetal contribution of the moving mass position.
pub fn build_c_p(m_p: f64, r_p: &Vec3, nu: &Vec9) -> Mat9 {
    let (v, w, vp) = split(nu);
    let s_rp = skew(r_p);
    // relative-velocity part of the moving mass momentum: w x r_p + v_p
    let xz = -m_p * skew(&(w.cross(r_p) + vp));
    let y = -m_p * skew(&(s_rp * v - s_rp * (s_rp * w) + s_rp * vp));
    symmetric_layout(&xz, &y, &xz)
}

/// `(C(nu') + C_P(nu', r_p)) nu'`.
pub fn coriolis_force(params: &VehicleParams, r_p: &Vec3, nu: &Vec9) -> Vec9 {
    (build_c(params, nu) + build_c_p(params.m_p, r_p, nu)) * nu
}

/// Alternative closed-form Coriolis blocks.
///
/// These are kept for comparison only. The generic `C` omits the `A12 w`
/// momentum term, and `C_P` differs from the Kirchhoff assembly in its
/// `(2,2)` and `(2,3)/(3,2)` blocks whenever `w != 0`.
pub mod printed {
    use super::*;

    pub fn build_c(params: &VehicleParams, nu: &Vec9) -> Mat9 {
        let (v, w, _) = split(nu);
        let a = &params.added_mass;
        let m = params.total_mass();
        let m_s = params.m_s;
        let r_s = &params.r_s;
        let x = -m * skew(&v) - skew(&(a.a11() * v)) - m_s * skew(&(skew(&w) * r_s));
        let y = -m_s * skew(&(skew(r_s) * v))
            - skew(&(a.a21() * v))
            - skew(&(params.inertia_at_origin() * w))
            - skew(&(a.a22() * w));
        let z = -params.m_p * skew(&v);
        symmetric_layout(&x, &y, &z)
    }

    pub fn build_c_p(m_p: f64, r_p: &Vec3, nu: &Vec9) -> Mat9 {
        let (v, w, vp) = split(nu);
        let x = -m_p * skew(&(skew(&w) * r_p + vp));
        let y = -m_p * skew(&(skew(r_p) * v + skew(&w) * r_p + skew(&vp) * r_p));
        let z = -m_p * skew(&(skew(r_p) * w + vp));
        symmetric_layout(&x, &y, &z)
    }

    /// Specialisation for diagonal added mass (`A12 = A21 = 0`).
    pub fn build_c_remus(params: &VehicleParams, nu: &Vec9) -> Mat9 {
        let (v, w, _) = split(nu);
        let a1 = params.added_mass.a11();
        let a2 = params.added_mass.a22();
        let m = params.total_mass();
        let m_s = params.m_s;
        let r_s = &params.r_s;
        let x = -m * skew(&v) - skew(&(a1 * v)) - m_s * skew(&(skew(&w) * r_s));
        let y = -m_s * skew(&(skew(r_s) * v))
            - skew(&(params.inertia_at_origin() * w))
            - skew(&(a2 * w));
        let z = -params.m_p * skew(&v);
        symmetric_layout(&x, &y, &z)
    }
}
