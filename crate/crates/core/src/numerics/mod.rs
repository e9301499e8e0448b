//! Numerical kernels shared by the packet models and tracers: the
//! complementary error function, Gauss–Legendre and adaptive Gauss–Kronrod
//! quadrature, bracketed root finding and an embedded Runge–Kutta integrator.
//!
//! Everything here is a pure function of its inputs. Units follow the rest of
//! the crate (ħ = m = 1).

mod ode;
mod quadrature;
mod roots;
mod special;

pub use ode::{integrate_ode, integrate_ode_n, OdeOutcome, OdePath};
pub use quadrature::{
    build_kgrid, gauss_legendre, integrate_adaptive, integrate_panels, GaussLegendre, Interval, KGrid, QuadResult,
};
pub use roots::{expand_bracket, find_root_monotone};
pub use special::{erf, erfc};

use crate::error::{Error, Result};

/// Error targets for quadrature, root finding and ODE stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative quadrature tolerance.
    pub quad_rel: f64,
    /// Absolute quadrature floor.
    pub quad_abs: f64,
    /// Bracket width at which root finding stops (position units).
    pub root_abs: f64,
    pub ode_rel: f64,
    pub ode_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quad_rel: 1e-10,
            quad_abs: 1e-13,
            root_abs: 1e-11,
            ode_rel: 1e-10,
            ode_abs: 1e-11,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("quad_rel", self.quad_rel),
            ("quad_abs", self.quad_abs),
            ("root_abs", self.root_abs),
            ("ode_rel", self.ode_rel),
            ("ode_abs", self.ode_abs),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "tolerance {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Quadrature target for a result of magnitude `value`.
    pub fn quad_target(&self, value: f64) -> f64 {
        self.quad_abs.max(self.quad_rel * value.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerances_are_tight_enough() {
        let tol = Tolerances::default();
        tol.validate().unwrap();
        assert!(tol.quad_rel <= 1e-6);
        assert!(tol.root_abs <= 1e-9);
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        let tol = Tolerances {
            ode_abs: 0.0,
            ..Tolerances::default()
        };
        assert!(matches!(tol.validate(), Err(Error::InvalidParameter(_))));
    }
}
