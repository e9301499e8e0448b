use std::f64::consts::{PI, SQRT_2};

use super::{GaussianPacketParams, PacketModel};
use crate::error::{Error, Result};
use crate::numerics::{erfc, find_root_monotone, Tolerances};

/// Spreading Gaussian density of a force-free packet (classical ensemble or
/// quantum wave packet; both share this marginal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeGaussian {
    pub params: GaussianPacketParams,
}

pub fn free_gaussian_model(params: GaussianPacketParams) -> FreeGaussian {
    FreeGaussian { params }
}

impl FreeGaussian {
    /// Velocity field j/ρ = v̄ + σ_v² t (x − x̄ − v̄t) / σ_x²(t).
    pub fn velocity_field(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let s = p.width(t);
        p.v_bar + p.sigma_v().powi(2) * t * (x - p.mean_position(t)) / (s * s)
    }

    /// Initial quantile x₀ with ½ erfc((x₀ − x̄)/(√2 σ_x0)) = P.
    pub fn initial_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("P must lie in (0, 1), got {p}")));
        }
        let x_bar = self.params.x_bar;
        let s0 = self.params.sigma_x0;
        let tol = Tolerances {
            root_abs: 1e-13 * s0.max(1.0),
            ..Tolerances::default()
        };
        find_root_monotone(
            |x| Ok(0.5 * erfc((x - x_bar) / (SQRT_2 * s0)) - p),
            (x_bar - 40.0 * s0, x_bar + 40.0 * s0),
            &tol,
        )
    }

    /// Closed-form quantile trajectory x̄ + v̄t + (σ_x(t)/σ_x0)(x₀ − x̄).
    pub fn closed_form_quantile(&self, p: f64, t: f64) -> Result<f64> {
        let x0 = self.initial_quantile(p)?;
        let q = &self.params;
        Ok(q.mean_position(t) + q.width(t) / q.sigma_x0 * (x0 - q.x_bar))
    }

    /// Closed-form quantile velocity v̄ + σ_v² t (x₀ − x̄) / (σ_x(t) σ_x0).
    pub fn closed_form_velocity(&self, p: f64, t: f64) -> Result<f64> {
        let x0 = self.initial_quantile(p)?;
        let q = &self.params;
        Ok(q.v_bar + q.sigma_v().powi(2) * t * (x0 - q.x_bar) / (q.width(t) * q.sigma_x0))
    }
}

impl PacketModel for FreeGaussian {
    fn rho(&self, x: f64, t: f64) -> f64 {
        let s = self.params.width(t);
        let z = (x - self.params.mean_position(t)) / s;
        (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * s)
    }

    fn current(&self, x: f64, t: f64) -> f64 {
        self.rho(x, t) * self.velocity_field(x, t)
    }

    fn tail(&self, x: f64, t: f64) -> Result<f64> {
        let z = (x - self.params.mean_position(t)) / (SQRT_2 * self.params.width(t));
        Ok(0.5 * erfc(z))
    }

    fn tail_is_cheap(&self) -> bool {
        true
    }

    fn support_hint(&self, t: f64) -> (f64, f64) {
        let m = self.params.mean_position(t);
        let s = self.params.width(t);
        (m - 7.5 * s, m + 7.5 * s)
    }

    fn width(&self, t: f64) -> f64 {
        self.params.width(t)
    }

    fn peak_density(&self, t: f64) -> f64 {
        1.0 / ((2.0 * PI).sqrt() * self.params.width(t))
    }
}

/// Gaussian packet whose total probability decays as e^{−λt}, with loss
/// density l = λρ_λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativeGaussian {
    pub free: FreeGaussian,
    pub loss_rate: f64,
}

pub fn dissipative_gaussian_model(params: GaussianPacketParams, loss_rate: f64) -> Result<DissipativeGaussian> {
    if !(loss_rate.is_finite() && loss_rate >= 0.0) {
        return Err(Error::invalid(format!("loss rate must be >= 0, got {loss_rate}")));
    }
    Ok(DissipativeGaussian {
        free: FreeGaussian { params },
        loss_rate,
    })
}

impl DissipativeGaussian {
    fn decay(&self, t: f64) -> f64 {
        (-self.loss_rate * t).exp()
    }

    /// Time at which the norm e^{−λt} falls to `p`.
    pub fn exhaustion_time(&self, p: f64) -> Option<f64> {
        (self.loss_rate > 0.0 && p > 0.0 && p < 1.0).then(|| -p.ln() / self.loss_rate)
    }
}

impl PacketModel for DissipativeGaussian {
    fn rho(&self, x: f64, t: f64) -> f64 {
        self.free.rho(x, t) * self.decay(t)
    }

    fn current(&self, x: f64, t: f64) -> f64 {
        self.free.current(x, t) * self.decay(t)
    }

    fn loss(&self, x: f64, t: f64) -> f64 {
        self.loss_rate * self.rho(x, t)
    }

    fn is_conserved(&self) -> bool {
        self.loss_rate == 0.0
    }

    fn norm(&self, t: f64) -> f64 {
        self.decay(t)
    }

    fn tail(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.free.tail(x, t)? * self.decay(t))
    }

    fn tail_is_cheap(&self) -> bool {
        true
    }

    /// ∫ₓ^∞ λρ_λ dx′ = λ · tail(x, t).
    fn loss_tail(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.loss_rate * self.tail(x, t)?)
    }

    fn support_hint(&self, t: f64) -> (f64, f64) {
        self.free.support_hint(t)
    }

    fn width(&self, t: f64) -> f64 {
        self.free.width(t)
    }

    fn peak_density(&self, t: f64) -> f64 {
        self.free.peak_density(t) * self.decay(t)
    }
}

#[cfg(test)]
mod tests {
    use super::super::presets;
    use super::*;
    use crate::numerics::{integrate_adaptive, Interval};

    fn fig1() -> FreeGaussian {
        free_gaussian_model(presets::packet())
    }

    #[test]
    fn peak_and_median_at_mean() {
        let m = fig1();
        for t in [0.0, 3.0, 12.5] {
            let mean = m.params.mean_position(t);
            let want = 1.0 / ((2.0 * PI).sqrt() * m.params.width(t));
            assert!((m.rho(mean, t) - want).abs() < 1e-15);
            assert!((m.tail(mean, t).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn one_sigma_tail() {
        let m = fig1();
        let t = 4.0;
        let x = m.params.mean_position(t) + m.params.width(t);
        // ½ erfc(1/√2)
        assert!((m.tail(x, t).unwrap() - 0.158_655_253_931_457_05).abs() < 1e-14);
    }

    #[test]
    fn continuity_by_finite_differences() {
        let m = fig1();
        let h = 1e-4;
        for &t in &[0.5, 3.0, 9.0] {
            for i in 0..40 {
                let x = -20.0 + i as f64 + 0.37;
                let drho = (m.rho(x, t + h) - m.rho(x, t - h)) / (2.0 * h);
                let dj = (m.current(x + h, t) - m.current(x - h, t)) / (2.0 * h);
                assert!((drho + dj).abs() < 1e-8, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn initial_quantile_matches_normal_quantiles() {
        // z_P with ½ erfc(z/√2) = P
        let m = fig1();
        for (p, z) in [
            (0.1, 1.281_551_565_544_600_4),
            (0.3, 0.524_400_512_708_040_9),
            (0.5, 0.0),
            (0.9, -1.281_551_565_544_600_4),
        ] {
            let x0 = m.initial_quantile(p).unwrap();
            assert!((x0 - (-10.0 + 2.5 * z)).abs() < 1e-10, "P={p}");
        }
    }

    #[test]
    fn dissipative_reduces_to_free_at_zero_rate() {
        let d = dissipative_gaussian_model(presets::packet(), 0.0).unwrap();
        let f = fig1();
        assert!(d.is_conserved());
        for &(x, t) in &[(-10.0, 0.0), (-3.0, 2.0), (4.0, 7.0)] {
            assert_eq!(d.rho(x, t), f.rho(x, t));
            assert_eq!(d.current(x, t), f.current(x, t));
            assert_eq!(d.tail(x, t).unwrap(), f.tail(x, t).unwrap());
            assert_eq!(d.loss(x, t), 0.0);
        }
    }

    #[test]
    fn dissipative_norm_decays() {
        let d = dissipative_gaussian_model(presets::packet(), presets::LOSS_RATE).unwrap();
        for &t in &[0.0, 2.0, 6.931_471_8] {
            let total = integrate_adaptive(
                |x| d.rho(x, t),
                Interval::WholeLine {
                    center: d.free.params.mean_position(t),
                    decay: d.width(t),
                },
                &Tolerances::default(),
            )
            .unwrap()
            .value;
            assert!((total - (-0.1 * t).exp()).abs() < 1e-10);
            assert!((d.norm(t) - (-0.1 * t).exp()).abs() < 1e-15);
        }
        assert!((d.norm(6.931_471_8) - 0.5).abs() < 1e-8);
        assert_eq!(d.norm(0.0), 1.0);
    }

    #[test]
    fn lossy_continuity_holds() {
        let d = dissipative_gaussian_model(presets::packet(), 0.1).unwrap();
        let h = 1e-4;
        for &t in &[0.5, 5.0] {
            for i in 0..30 {
                let x = -18.0 + i as f64;
                let drho = (d.rho(x, t + h) - d.rho(x, t - h)) / (2.0 * h);
                let dj = (d.current(x + h, t) - d.current(x - h, t)) / (2.0 * h);
                assert!((drho + dj + d.loss(x, t)).abs() < 1e-6, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn analytic_loss_tail_matches_quadrature() {
        let d = dissipative_gaussian_model(presets::packet(), 0.1).unwrap();
        for &(x, t) in &[(-12.0, 1.0), (-4.0, 3.0), (2.0, 6.0)] {
            let analytic = d.loss_tail(x, t).unwrap();
            let quad = integrate_adaptive(
                |y| d.loss(y, t),
                Interval::UpperTail {
                    from: x,
                    decay: d.width(t),
                },
                &Tolerances::default(),
            )
            .unwrap()
            .value;
            assert!((analytic - quad).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_negative_rate() {
        assert!(dissipative_gaussian_model(presets::packet(), -0.1).is_err());
    }
}
