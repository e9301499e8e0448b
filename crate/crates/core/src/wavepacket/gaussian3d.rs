use std::f64::consts::{PI, SQRT_2};

use super::GaussianPacketParams;
use crate::error::Result;
use crate::numerics::erf;

/// Product of three free Gaussian packets sharing one width: an isotropic
/// spreading density in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3d {
    pub axes: [GaussianPacketParams; 3],
}

/// Isotropic packet centered at `center` with mean velocity `velocity` and
/// momentum width `sigma_p` along every axis.
pub fn gaussian3d_model(center: [f64; 3], velocity: [f64; 3], sigma_p: f64, mass: f64) -> Result<Gaussian3d> {
    let axis = |i: usize| GaussianPacketParams::from_momentum(center[i], velocity[i] * mass, sigma_p, mass);
    Ok(Gaussian3d {
        axes: [axis(0)?, axis(1)?, axis(2)?],
    })
}

impl Gaussian3d {
    pub fn width(&self, t: f64) -> f64 {
        self.axes[0].width(t)
    }

    pub fn mean_position(&self, t: f64) -> [f64; 3] {
        self.axes.map(|a| a.mean_position(t))
    }

    pub fn rho(&self, r: &[f64; 3], t: f64) -> f64 {
        let s = self.width(t);
        let m = self.mean_position(t);
        let d2: f64 = (0..3).map(|i| (r[i] - m[i]).powi(2)).sum();
        (-0.5 * d2 / (s * s)).exp() / ((2.0 * PI).sqrt() * s).powi(3)
    }

    /// Velocity field j/ρ, component-wise v̄ᵢ + σ_v² t (xᵢ − x̄ᵢ(t)) / σ_x²(t).
    pub fn velocity_field(&self, r: &[f64; 3], t: f64) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (i, a) in self.axes.iter().enumerate() {
            let s = a.width(t);
            v[i] = a.v_bar + a.sigma_v().powi(2) * t * (r[i] - a.mean_position(t)) / (s * s);
        }
        v
    }

    pub fn current(&self, r: &[f64; 3], t: f64) -> [f64; 3] {
        let rho = self.rho(r, t);
        self.velocity_field(r, t).map(|v| rho * v)
    }

    /// Closed-form flow map: the trajectory through `r0` at t = 0.
    pub fn flow_map(&self, r0: &[f64; 3], t: f64) -> [f64; 3] {
        let mut r = [0.0; 3];
        for (i, a) in self.axes.iter().enumerate() {
            r[i] = a.mean_position(t) + a.width(t) / a.sigma_x0 * (r0[i] - a.x_bar);
        }
        r
    }

    /// Probability inside the ball of radius `radius` around the mean.
    pub fn centered_ball_probability(&self, radius: f64, t: f64) -> f64 {
        let u = radius / self.width(t);
        erf(u / SQRT_2) - (2.0 / PI).sqrt() * u * (-0.5 * u * u).exp()
    }
}
