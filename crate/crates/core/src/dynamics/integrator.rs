//! Classic fixed-step fourth-order Runge-Kutta.

use super::{SimState, StateDerivative};
use crate::error::Result;

/// A state that can be advanced along a rate of change.
pub trait OdeState: Copy {
    type Rate: Copy;

    /// `self + h * rate`.
    fn advanced(&self, h: f64, rate: &Self::Rate) -> Self;

    /// `(k1 + 2 k2 + 2 k3 + k4) / 6`.
    fn rk4_rate(k: &[Self::Rate; 4]) -> Self::Rate;
}

impl OdeState for f64 {
    type Rate = f64;

    fn advanced(&self, h: f64, rate: &f64) -> f64 {
        self + h * rate
    }

    fn rk4_rate(k: &[f64; 4]) -> f64 {
        (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]) / 6.0
    }
}

impl OdeState for SimState {
    type Rate = StateDerivative;

    fn advanced(&self, h: f64, rate: &StateDerivative) -> SimState {
        SimState::from_vector(&(self.to_vector() + h * rate.to_vector()))
    }

    fn rk4_rate(k: &[StateDerivative; 4]) -> StateDerivative {
        StateDerivative {
            eta_dot: (k[0].eta_dot + 2.0 * k[1].eta_dot + 2.0 * k[2].eta_dot + k[3].eta_dot) / 6.0,
            r_p_dot: (k[0].r_p_dot + 2.0 * k[1].r_p_dot + 2.0 * k[2].r_p_dot + k[3].r_p_dot) / 6.0,
            nu_prime_dot: (k[0].nu_prime_dot
                + 2.0 * k[1].nu_prime_dot
                + 2.0 * k[2].nu_prime_dot
                + k[3].nu_prime_dot)
                / 6.0,
        }
    }
}

/// One RK4 step of `x' = f(t, x)` from `t` to `t + dt`.
pub fn rk4<S, F>(x: &S, t: f64, dt: f64, mut f: F) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> Result<S::Rate>,
{
    let h = 0.5 * dt;
    let k1 = f(t, x)?;
    let k2 = f(t + h, &x.advanced(h, &k1))?;
    let k3 = f(t + h, &x.advanced(h, &k2))?;
    let k4 = f(t + dt, &x.advanced(dt, &k3))?;
    Ok(x.advanced(dt, &S::rk4_rate(&[k1, k2, k3, k4])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_error(dt: f64) -> f64 {
        let x = rk4(&1.0, 0.0, dt, |_, x: &f64| Ok(-x)).unwrap();
        (x - (-dt).exp()).abs()
    }

    #[test]
    fn single_step_error_is_fifth_order() {
        for dt in [0.2, 0.1, 0.05] {
            let ratio = decay_error(dt) / decay_error(dt / 2.0);
            assert!((ratio - 32.0).abs() < 2.5, "dt {dt}: ratio {ratio}");
        }
    }

    #[test]
    fn stage_times() {
        let mut seen = Vec::new();
        rk4(&0.0, 1.0, 0.5, |t, _: &f64| {
            seen.push(t);
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(seen, vec![1.0, 1.25, 1.25, 1.5]);
    }

    #[test]
    fn linear_rate_is_exact() {
        let x = rk4(&2.0, 0.0, 0.3, |t, _: &f64| Ok(3.0 * t * t)).unwrap();
        assert!((x - (2.0 + 0.3f64.powi(3))).abs() < 1e-15);
    }
}
