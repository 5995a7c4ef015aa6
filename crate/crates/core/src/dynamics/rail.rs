//! Moving-mass rail: a body-fixed line segment the point mass slides along.

use serde::{Deserialize, Serialize};

use super::SimState;
use crate::error::{ModelError, Result};
use crate::kinematics::{r_p_dot, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RailSpec {
    /// Rail origin in the body frame (m).
    pub origin: Vec3,
    /// Unit direction of travel.
    pub axis: Vec3,
    pub stroke_min: f64,
    pub stroke_max: f64,
}

/// Which stop, if any, the mass is held against for the current step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RailContact {
    #[default]
    Free,
    AtMin,
    AtMax,
}

impl RailSpec {
    /// Centreline rail 5 cm below the origin with a ±5 cm stroke.
    pub fn remus_centreline() -> Self {
        Self {
            origin: Vec3::new(0.0, 0.0, 0.05),
            axis: Vec3::x(),
            stroke_min: -0.05,
            stroke_max: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.origin.iter().chain(self.axis.iter()).all(|x| x.is_finite())
            && self.stroke_min.is_finite()
            && self.stroke_max.is_finite();
        if !finite {
            return Err(ModelError::InvalidScenario("rail values must be finite".into()));
        }
        if (self.axis.norm() - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidScenario(format!(
                "rail axis must be a unit vector (norm {})",
                self.axis.norm()
            )));
        }
        if self.stroke_min >= self.stroke_max {
            return Err(ModelError::InvalidScenario(
                "rail stroke_min must be below stroke_max".into(),
            ));
        }
        Ok(())
    }

    /// Signed travel along the axis.
    pub fn coordinate(&self, r_p: &Vec3) -> f64 {
        self.axis.dot(&(r_p - self.origin))
    }

    pub fn point(&self, s: f64) -> Vec3 {
        self.origin + s * self.axis
    }

    fn contact_tolerance(&self) -> f64 {
        1e-9 * (self.stroke_max - self.stroke_min)
    }

    pub fn at_max(&self, s: f64) -> bool {
        s >= self.stroke_max - self.contact_tolerance()
    }

    pub fn at_min(&self, s: f64) -> bool {
        s <= self.stroke_min + self.contact_tolerance()
    }

    /// Two unit vectors spanning the plane normal to the axis.
    pub fn normals(&self) -> [Vec3; 2] {
        let a = self.axis;
        let i = a.iamin();
        let mut e = Vec3::zeros();
        e[i] = 1.0;
        let n1 = a.cross(&e).normalize();
        let n2 = a.cross(&n1);
        [n1, n2]
    }

    /// Directions along which the relative velocity of the mass is held at
    /// zero for the given contact state.
    pub fn constrained_directions(&self, contact: RailContact) -> Vec<Vec3> {
        let [n1, n2] = self.normals();
        match contact {
            RailContact::Free => vec![n1, n2],
            RailContact::AtMin | RailContact::AtMax => vec![n1, n2, self.axis],
        }
    }
}

/// Put the mass back on the rail.
///
/// `r_p` is projected onto the rail line and clamped to the stroke. `v_p` is
/// rebuilt as `v + w x r_p + s_dot axis`, dropping any lateral relative
/// velocity; at a stop an outward `s_dot` is zeroed (inelastic contact).
pub fn project_to_rail(state: &SimState, rail: &RailSpec) -> SimState {
    let s = rail.coordinate(&state.r_p).clamp(rail.stroke_min, rail.stroke_max);
    let r_p = rail.point(s);
    let mut s_dot = rail.axis.dot(&r_p_dot(&state.r_p, &state.nu, &state.v_p));
    if (s >= rail.stroke_max && s_dot > 0.0) || (s <= rail.stroke_min && s_dot < 0.0) {
        s_dot = 0.0;
    }
    let v = state.linear_velocity();
    let w = state.angular_velocity();
    SimState {
        r_p,
        v_p: v + w.cross(&r_p) + s_dot * rail.axis,
        ..*state
    }
}
