//! Linear solves against the 9x9 extended mass matrix.

use nalgebra::{Cholesky, LU, U9};

use crate::error::{ModelError, Result};
use crate::mass::{Mat9, Vec9};

/// Residual bound `|M x - b|_inf <= RESIDUAL_BOUND (1 + |b|_inf)`.
pub const RESIDUAL_BOUND: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum MassFactor {
    Cholesky(Cholesky<f64, U9>),
    Lu(LU<f64, U9, U9>),
}

impl MassFactor {
    /// Cholesky only; an indefinite matrix is an error.
    pub fn spd(m: &Mat9) -> Result<Self> {
        Cholesky::new(*m)
            .map(MassFactor::Cholesky)
            .ok_or(ModelError::NotPositiveDefinite)
    }

    /// Cholesky with a fallback to partially pivoted LU.
    pub fn any(m: &Mat9) -> Result<Self> {
        if let Some(c) = Cholesky::new(*m) {
            return Ok(MassFactor::Cholesky(c));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Ok(MassFactor::Lu(lu))
        } else {
            Err(ModelError::Singular)
        }
    }

    pub fn solve(&self, rhs: &Vec9) -> Vec9 {
        match self {
            MassFactor::Cholesky(c) => c.solve(rhs),
            // invertibility was checked at construction
            MassFactor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| Vec9::repeat(f64::NAN)),
        }
    }

    /// Solve with one round of iterative refinement if the residual bound is
    /// missed.
    pub fn solve_checked(&self, m: &Mat9, rhs: &Vec9) -> Result<Vec9> {
        let bound = RESIDUAL_BOUND * (1.0 + rhs.amax());
        let mut x = self.solve(rhs);
        let mut residual = (m * x - rhs).amax();
        if !(residual <= bound) {
            x -= self.solve(&(m * x - rhs));
            residual = (m * x - rhs).amax();
        }
        if residual <= bound {
            Ok(x)
        } else if residual.is_nan() {
            Err(ModelError::Singular)
        } else {
            Err(ModelError::ResidualBound { residual, bound })
        }
    }
}

/// Solve `M' x = rhs` for the accelerations.
pub fn solve_accelerations(m: &Mat9, rhs: &Vec9) -> Result<Vec9> {
    MassFactor::any(m)?.solve_checked(m, rhs)
}
