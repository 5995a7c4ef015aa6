//! Vehicle parameters and the 9x9 mass matrices.
//!
//! The extended velocity is `nu' = [v, w, v_p]` and every 9x9 matrix below is
//! laid out as 3x3 blocks in that order. The rigid-body mass is split into a
//! stationary part `M_S` and a configuration-dependent part `M_P(r_p)`:
//!
//! ```text
//!        | m I         -m_s S(r_s)   m_p I |          | 0           -m_p S(r_p)     0          |
//! M_S =  | m_s S(r_s)   I_b          0     |   M_P =  | m_p S(r_p)  -m_p S(r_p)^2   m_p S(r_p) |
//!        | m_p I        0            m_p I |          | 0           -m_p S(r_p)     0          |
//! ```
//!
//! with `m = m_s + m_p` and `I_b = I_g - m_s S(r_s)^2`. Added mass only acts
//! on the vehicle rows: `M_A = [[A11, A12, 0], [A21, A22, 0], [0, 0, 0]]`.

use log::warn;
use nalgebra::{Cholesky, SMatrix, SVector, SymmetricEigen, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::kinematics::{skew, Mat3, Vec3};

pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Vec9 = SVector<f64, 9>;

/// Relative tolerance for symmetry / semi-definiteness checks on inputs.
pub const VALIDATION_TOLERANCE: f64 = 1e-9;

/// Hydrodynamic added mass. Diagonal entries are stored as positive numbers,
/// i.e. `linear = [-X_udot, -Y_vdot, -Z_wdot]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AddedMass {
    /// Diagonal of `A11` (kg).
    pub linear: Vec3,
    /// Diagonal of `A22` (kg m^2).
    pub angular: Vec3,
    /// `A12` (kg m); `A21 = A12^T`.
    pub coupling: Mat3,
}

impl AddedMass {
    pub fn diagonal(linear: Vec3, angular: Vec3) -> Self {
        Self {
            linear,
            angular,
            coupling: Mat3::zeros(),
        }
    }

    pub fn a11(&self) -> Mat3 {
        Mat3::from_diagonal(&self.linear)
    }

    pub fn a12(&self) -> Mat3 {
        self.coupling
    }

    pub fn a21(&self) -> Mat3 {
        self.coupling.transpose()
    }

    pub fn a22(&self) -> Mat3 {
        Mat3::from_diagonal(&self.angular)
    }

    fn as_6x6(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.a11());
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.a12());
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.a21());
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.a22());
        m
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.as_6x6();
        if m.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidAddedMass("non-finite entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let min_eig = SymmetricEigen::new(m).eigenvalues.min();
        if min_eig < -VALIDATION_TOLERANCE * scale {
            return Err(ModelError::InvalidAddedMass(format!(
                "M_A is not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Stationary mass (kg).
    pub m_s: f64,
    /// Moving point mass (kg).
    pub m_p: f64,
    /// Location of the stationary mass in the body frame (m).
    pub r_s: Vec3,
    /// Inertia of the stationary body about its own centre of gravity.
    pub inertia: Mat3,
    pub added_mass: AddedMass,
    pub rho: f64,
    /// Displaced volume (m^3).
    pub displaced_volume: f64,
    pub gravity: f64,
    /// Ellipsoid semi-axes `(a, b)` when the inertia was derived from them.
    pub semi_axes: Option<(f64, f64)>,
}

impl VehicleParams {
    pub fn total_mass(&self) -> f64 {
        self.m_s + self.m_p
    }

    /// `I_b = I_g - m_s S(r_s)^2`, the stationary inertia about the body origin.
    pub fn inertia_at_origin(&self) -> Mat3 {
        self.inertia + self.m_s * neg_skew_squared(&self.r_s)
    }

    /// Copy with the stationary mass relocated to `r_s`.
    pub fn with_static_mass_at(&self, r_s: Vec3) -> Self {
        Self { r_s, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        let scalars = [
            ("m_s", self.m_s),
            ("m_p", self.m_p),
            ("rho", self.rho),
            ("displaced_volume", self.displaced_volume),
            ("gravity", self.gravity),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.r_s.iter().chain(self.inertia.iter()).any(|x| !x.is_finite()) {
            return bad("r_s and inertia must be finite".into());
        }
        if self.m_s <= 0.0 {
            return bad(format!("m_s must be positive, got {}", self.m_s));
        }
        if self.m_p < 0.0 {
            return bad(format!("m_p must be non-negative, got {}", self.m_p));
        }
        if self.m_p >= self.m_s {
            return bad(format!(
                "moving mass must be smaller than the stationary mass (m_p = {}, m_s = {})",
                self.m_p, self.m_s
            ));
        }
        if self.m_p > self.m_s / 5.0 {
            warn!(
                "moving mass is large relative to the stationary mass (m_p/m_s = {:.3})",
                self.m_p / self.m_s
            );
        }
        if self.rho <= 0.0 || self.gravity <= 0.0 || self.displaced_volume <= 0.0 {
            return bad("rho, gravity and displaced_volume must be positive".into());
        }
        let asym = (self.inertia - self.inertia.transpose()).amax();
        if asym > VALIDATION_TOLERANCE * self.inertia.amax() {
            return bad("inertia I_g is not symmetric".into());
        }
        if Cholesky::new(self.inertia).is_none() {
            return bad("inertia I_g is not positive definite".into());
        }
        self.added_mass.validate()
    }
}

/// Mass-weighted centre of gravity in the body frame.
pub fn center_of_gravity(params: &VehicleParams, r_p: &Vec3) -> Vec3 {
    (params.m_s * params.r_s + params.m_p * r_p) / (params.m_s + params.m_p)
}

/// `-S(r)^2 = |r|^2 I - r r^T`, exactly symmetric in floating point.
pub fn neg_skew_squared(r: &Vec3) -> Mat3 {
    r.norm_squared() * Mat3::identity() - r * r.transpose()
}

pub(crate) fn set_block(m: &mut Mat9, row: usize, col: usize, block: &Mat3) {
    m.fixed_view_mut::<3, 3>(3 * row, 3 * col).copy_from(block);
}

pub fn build_m_s(params: &VehicleParams) -> Mat9 {
    let eye = Mat3::identity();
    let s = params.m_s * skew(&params.r_s);
    let mut m = Mat9::zeros();
    set_block(&mut m, 0, 0, &(params.total_mass() * eye));
    set_block(&mut m, 0, 1, &(-s));
    set_block(&mut m, 0, 2, &(params.m_p * eye));
    set_block(&mut m, 1, 0, &s);
    set_block(&mut m, 1, 1, &params.inertia_at_origin());
    set_block(&mut m, 2, 0, &(params.m_p * eye));
    set_block(&mut m, 2, 2, &(params.m_p * eye));
    m
}

pub fn build_m_p(m_p: f64, r_p: &Vec3) -> Mat9 {
    let s = skew(r_p);
    let ms = m_p * s;
    let mut m = Mat9::zeros();
    set_block(&mut m, 0, 1, &(-ms));
    set_block(&mut m, 1, 0, &ms);
    set_block(&mut m, 1, 1, &(m_p * neg_skew_squared(r_p)));
    set_block(&mut m, 1, 2, &ms);
    set_block(&mut m, 2, 1, &(-ms));
    m
}

pub fn build_m_a(params: &VehicleParams) -> Result<Mat9> {
    let a = &params.added_mass;
    a.validate()?;
    let mut m = Mat9::zeros();
    set_block(&mut m, 0, 0, &a.a11());
    set_block(&mut m, 0, 1, &a.a12());
    set_block(&mut m, 1, 0, &a.a21());
    set_block(&mut m, 1, 1, &a.a22());
    Ok(m)
}

/// `M' = M_S + M_A + M_P(r_p)` without any definiteness check.
pub fn assemble_m_total(params: &VehicleParams, r_p: &Vec3) -> Mat9 {
    let a = &params.added_mass;
    let mut m_a = Mat9::zeros();
    set_block(&mut m_a, 0, 0, &a.a11());
    set_block(&mut m_a, 0, 1, &a.a12());
    set_block(&mut m_a, 1, 0, &a.a21());
    set_block(&mut m_a, 1, 1, &a.a22());
    build_m_s(params) + m_a + build_m_p(params.m_p, r_p)
}

/// `M' = M_S + M_A + M_P(r_p)`, rejected unless it admits a Cholesky
/// factorization.
pub fn build_m_total(params: &VehicleParams, r_p: &Vec3) -> Result<Mat9> {
    let m = build_m_s(params) + build_m_a(params)? + build_m_p(params.m_p, r_p);
    if Cholesky::new(m).is_none() {
        return Err(ModelError::NotPositiveDefinite);
    }
    Ok(m)
}

/// Inertia of a solid prolate ellipsoid with forward semi-axis `a` and
/// remaining semi-axes `b`.
pub fn ellipsoid_inertia(m_s: f64, a: f64, b: f64) -> Mat3 {
    let transverse = m_s * (a * a + b * b) / 5.0;
    Mat3::from_diagonal(&Vec3::new(2.0 * m_s * b * b / 5.0, transverse, transverse))
}
