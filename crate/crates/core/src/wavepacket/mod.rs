//! Probability densities and currents behind one [`PacketModel`] interface.
//!
//! Natural units throughout: ħ = 1 and m = 1, positions in ħ/√(eV·m), times
//! in ħ/eV, velocities (= momenta) in √(eV/m).

mod gaussian;
mod gaussian3d;
mod scattering;
mod spectral;
mod superposition;

pub use gaussian::{dissipative_gaussian_model, free_gaussian_model, DissipativeGaussian, FreeGaussian};
pub use gaussian3d::{gaussian3d_model, Gaussian3d};
pub use scattering::{scattering_mode, BarrierSpec, Region, ScatteringMode};
pub use spectral::SpectralFunction;
pub use superposition::{free_reference_model, tunneling_packet_model, PacketSnapshot, ScatteringPacket};

use crate::error::{Error, Result};
use crate::numerics::{integrate_panels, Tolerances};

/// A time-dependent (possibly lossy) probability density on the line.
///
/// Implementations are immutable and may be shared across threads.
pub trait PacketModel: Send + Sync {
    /// Density ρ(x, t) ≥ 0.
    fn rho(&self, x: f64, t: f64) -> f64;

    /// Current density j(x, t).
    fn current(&self, x: f64, t: f64) -> f64;

    /// (ρ, j) at one point; override when both share expensive work.
    fn density_and_current(&self, x: f64, t: f64) -> (f64, f64) {
        (self.rho(x, t), self.current(x, t))
    }

    /// Loss density l(x, t) ≥ 0 of the lossy continuity equation.
    fn loss(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    /// `false` when probability is lost (`loss` may be non-zero).
    fn is_conserved(&self) -> bool {
        true
    }

    /// Total norm F(t) = ∫ρ dx.
    fn norm(&self, _t: f64) -> f64 {
        1.0
    }

    /// Tail probability ∫ₓ^∞ ρ(x′, t) dx′.
    fn tail(&self, x: f64, t: f64) -> Result<f64>;

    /// Signed mass ∫_{from}^{to} ρ(x′, t) dx′.
    fn mass_between(&self, from: f64, to: f64, t: f64) -> Result<f64> {
        Ok(self.tail(from, t)? - self.tail(to, t)?)
    }

    /// Whether `tail` is closed-form (no quadrature behind it).
    fn tail_is_cheap(&self) -> bool {
        false
    }

    /// ∫ₓ^∞ l(x′, t) dx′, the loss term of the quantile equation of motion.
    fn loss_tail(&self, x: f64, t: f64) -> Result<f64> {
        if self.is_conserved() {
            return Ok(0.0);
        }
        let (_, hi) = self.support_hint(t);
        if x >= hi {
            return Ok(0.0);
        }
        let breaks = panel_breaks(x, hi, self.width(t));
        Ok(integrate_panels(|y| self.loss(y, t), &breaks, &Tolerances::default())?.value)
    }

    /// Interval holding all but ~1e-12 of the probability at time `t`.
    fn support_hint(&self, t: f64) -> (f64, f64);

    /// Characteristic spatial width at time `t`.
    fn width(&self, t: f64) -> f64;

    /// Characteristic peak density at time `t` (sets the velocity floor).
    fn peak_density(&self, t: f64) -> f64;

    /// Checks that the model can be evaluated accurately at time `t`.
    fn check_time(&self, _t: f64) -> Result<()> {
        Ok(())
    }
}

/// Breakpoints from `from` to `to` spaced at most `spacing` apart.
pub fn panel_breaks(from: f64, to: f64, spacing: f64) -> Vec<f64> {
    let n = ((to - from).abs() / spacing).ceil().clamp(1.0, 10_000.0) as usize;
    (0..=n)
        .map(|i| {
            if i == n {
                to
            } else {
                from + (to - from) * i as f64 / n as f64
            }
        })
        .collect()
}

/// Central-difference residual of ∂ρ/∂t + ∂j/∂x + l = 0 at (x, t) with step
/// `h`, returned with the local scale |∂ρ/∂t| + |∂j/∂x| + l.
pub fn continuity_residual<M: PacketModel + ?Sized>(model: &M, x: f64, t: f64, h: f64) -> (f64, f64) {
    let drho = (model.rho(x, t + h) - model.rho(x, t - h)) / (2.0 * h);
    let dj = (model.current(x + h, t) - model.current(x - h, t)) / (2.0 * h);
    let l = model.loss(x, t);
    ((drho + dj + l).abs(), drho.abs() + dj.abs() + l)
}

/// Initial parameters of a Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacketParams {
    /// Mean position x̄ at t = 0.
    pub x_bar: f64,
    /// Mean velocity v̄ = p̄/m.
    pub v_bar: f64,
    /// Initial spatial width σ_x0 > 0.
    pub sigma_x0: f64,
    pub mass: f64,
}

impl GaussianPacketParams {
    pub fn new(x_bar: f64, v_bar: f64, sigma_x0: f64, mass: f64) -> Result<Self> {
        if !(sigma_x0.is_finite() && sigma_x0 > 0.0) {
            return Err(Error::invalid(format!("sigma_x0 must be > 0, got {sigma_x0}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid(format!("mass must be > 0, got {mass}")));
        }
        if !(x_bar.is_finite() && v_bar.is_finite()) {
            return Err(Error::invalid("mean position and velocity must be finite"));
        }
        Ok(GaussianPacketParams {
            x_bar,
            v_bar,
            sigma_x0,
            mass,
        })
    }

    /// From mean momentum p̄ and momentum width σ_p (σ_x0 = ħ / 2σ_p).
    pub fn from_momentum(x_bar: f64, p_bar: f64, sigma_p: f64, mass: f64) -> Result<Self> {
        if !(sigma_p.is_finite() && sigma_p > 0.0) {
            return Err(Error::invalid(format!("sigma_p must be > 0, got {sigma_p}")));
        }
        Self::new(x_bar, p_bar / mass, 0.5 / sigma_p, mass)
    }

    pub fn sigma_p(&self) -> f64 {
        0.5 / self.sigma_x0
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_p() / self.mass
    }

    /// σ_x(t) = σ_x0 √(1 + σ_v² t² / σ_x0²).
    pub fn width(&self, t: f64) -> f64 {
        let s = self.sigma_v() * t / self.sigma_x0;
        self.sigma_x0 * (1.0 + s * s).sqrt()
    }

    pub fn mean_position(&self, t: f64) -> f64 {
        self.x_bar + self.v_bar * t
    }
}

/// Parameter sets used for the reference figures.
pub mod presets {
    use super::{BarrierSpec, GaussianPacketParams};

    pub const X_BAR: f64 = -10.0;
    pub const P_BAR: f64 = 2.0;
    pub const SIGMA_P: f64 = 0.2;
    pub const LOSS_RATE: f64 = 0.1;
    pub const BARRIER_HEIGHT: f64 = 10.0;
    pub const BARRIER_HALF_WIDTH: f64 = 0.3;

    /// x̄ = −10, p̄ = 2, σ_p = 0.2 (σ_x0 = 2.5), m = 1.
    pub fn packet() -> GaussianPacketParams {
        GaussianPacketParams::from_momentum(X_BAR, P_BAR, SIGMA_P, 1.0).unwrap()
    }

    /// V = 10, a = 0.3.
    pub fn barrier() -> BarrierSpec {
        BarrierSpec::new(BARRIER_HEIGHT, BARRIER_HALF_WIDTH).unwrap()
    }
}
