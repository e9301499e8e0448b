use std::f64::consts::PI;

use num_complex::Complex64;

use super::{panel_breaks, scattering_mode, BarrierSpec, PacketModel, Region, ScatteringMode, SpectralFunction};
use crate::error::{Error, Result};
use crate::numerics::{integrate_panels, Tolerances};

/// Wave packet built from stationary states on a discrete k-grid:
/// ψ(x, t) = (2π)^{−1/2} Σ wᵢ ψ̃(kᵢ) φ_{kᵢ}(x) e^{−ikᵢx̄ − ikᵢ²t/2}.
///
/// Without a barrier φ_k = e^{ikx} (free reference packet).
#[derive(Debug, Clone)]
pub struct ScatteringPacket {
    pub spectral: SpectralFunction,
    pub barrier: Option<BarrierSpec>,
    /// One per grid node; empty for the free reference.
    pub modes: Vec<ScatteringMode>,
    pub tolerances: Tolerances,
}

pub fn tunneling_packet_model(spectral: SpectralFunction, barrier: BarrierSpec) -> Result<ScatteringPacket> {
    let modes = spectral
        .grid
        .nodes
        .iter()
        .map(|&k| scattering_mode(k, barrier))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScatteringPacket {
        spectral,
        barrier: Some(barrier),
        modes,
        tolerances: Tolerances::default(),
    })
}

pub fn free_reference_model(spectral: SpectralFunction) -> ScatteringPacket {
    ScatteringPacket {
        spectral,
        barrier: None,
        modes: Vec::new(),
        tolerances: Tolerances::default(),
    }
}

/// Mode coefficients frozen at one time, for repeated evaluation in x.
pub struct PacketSnapshot<'a> {
    packet: &'a ScatteringPacket,
    /// wᵢ ψ̃ᵢ e^{−ikᵢx̄ − ikᵢ²t/2} / √(2π)
    base: Vec<Complex64>,
    /// base · R
    reflected: Vec<Complex64>,
    /// base · T
    transmitted: Vec<Complex64>,
}

impl PacketSnapshot<'_> {
    /// ψ and ∂ψ/∂x.
    pub fn psi(&self, x: f64) -> (Complex64, Complex64) {
        let nodes = &self.packet.spectral.grid.nodes;
        let region = match &self.packet.barrier {
            None => Region::Left,
            Some(b) => b.region(x),
        };
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        match region {
            Region::Left if self.reflected.is_empty() => {
                for (c, &k) in self.base.iter().zip(nodes) {
                    let term = c * Complex64::from_polar(1.0, k * x);
                    v += term;
                    d += term * k;
                }
            }
            Region::Left => {
                for ((c, cr), &k) in self.base.iter().zip(&self.reflected).zip(nodes) {
                    let e = Complex64::from_polar(1.0, k * x);
                    let fwd = c * e;
                    let back = cr * e.conj();
                    v += fwd + back;
                    d += (fwd - back) * k;
                }
            }
            Region::Right => {
                for (c, &k) in self.transmitted.iter().zip(nodes) {
                    let term = c * Complex64::from_polar(1.0, k * x);
                    v += term;
                    d += term * k;
                }
            }
            Region::Barrier => {
                for (c, m) in self.base.iter().zip(&self.packet.modes) {
                    let (phi, dphi) = m.value_and_derivative(x);
                    v += c * phi;
                    d += c * dphi;
                }
                return (v, d);
            }
        }
        (v, Complex64::new(-d.im, d.re))
    }

    pub fn rho(&self, x: f64) -> f64 {
        self.psi(x).0.norm_sqr()
    }

    /// j = Im(ψ* ∂ψ/∂x).
    pub fn current(&self, x: f64) -> f64 {
        let (v, d) = self.psi(x);
        (v.conj() * d).im
    }
}

impl ScatteringPacket {
    pub fn snapshot(&self, t: f64) -> PacketSnapshot<'_> {
        let s = &self.spectral;
        let scale = (2.0 * PI).sqrt().recip();
        let base: Vec<Complex64> = s
            .grid
            .nodes
            .iter()
            .zip(&s.grid.weights)
            .zip(&s.amplitudes)
            .map(|((&k, &w), &a)| Complex64::from_polar(scale * w * a, -k * s.x_bar - 0.5 * k * k * t))
            .collect();
        let reflected = self.modes.iter().zip(&base).map(|(m, c)| c * m.reflection).collect();
        let transmitted = self.modes.iter().zip(&base).map(|(m, c)| c * m.transmission).collect();
        PacketSnapshot {
            packet: self,
            base,
            reflected,
            transmitted,
        }
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        self.snapshot(t).psi(x).0
    }

    /// Packet transmission probability Σ wᵢ |T(kᵢ)|² |ψ̃(kᵢ)|²; 1 for the
    /// free reference.
    pub fn transmission_probability(&self) -> f64 {
        let s = &self.spectral;
        if self.modes.is_empty() {
            return s.grid_norm();
        }
        self.modes
            .iter()
            .zip(&s.grid.weights)
            .zip(&s.amplitudes)
            .map(|((m, w), a)| w * a * a * m.transmission_probability())
            .sum()
    }

    /// Breakpoint spacing: half the shortest interference period.
    fn panel_spacing(&self, t: f64) -> f64 {
        (PI / self.spectral.grid.k_max).min(self.width(t))
    }

    fn integrate_rho(&self, snap: &PacketSnapshot<'_>, from: f64, to: f64, t: f64) -> Result<f64> {
        if from == to {
            return Ok(0.0);
        }
        let breaks = panel_breaks(from, to, self.panel_spacing(t));
        Ok(integrate_panels(|x| snap.rho(x), &breaks, &self.tolerances)?.value)
    }

    /// Tail probability from a snapshot taken at time `t`.
    pub fn tail_at(&self, snap: &PacketSnapshot<'_>, x: f64, t: f64) -> Result<f64> {
        let (lo, hi) = self.support_hint(t);
        if x >= hi {
            return Ok(0.0);
        }
        self.integrate_rho(snap, x.max(lo), hi, t)
    }
}

impl PacketModel for ScatteringPacket {
    fn rho(&self, x: f64, t: f64) -> f64 {
        self.snapshot(t).rho(x)
    }

    fn current(&self, x: f64, t: f64) -> f64 {
        self.snapshot(t).current(x)
    }

    fn density_and_current(&self, x: f64, t: f64) -> (f64, f64) {
        let (v, d) = self.snapshot(t).psi(x);
        (v.norm_sqr(), (v.conj() * d).im)
    }

    fn norm(&self, _t: f64) -> f64 {
        self.spectral.grid_norm()
    }

    fn tail(&self, x: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        self.tail_at(&self.snapshot(t), x, t)
    }

    fn mass_between(&self, from: f64, to: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let (lo, hi) = self.support_hint(t);
        let a = from.clamp(lo, hi);
        let b = to.clamp(lo, hi);
        self.integrate_rho(&self.snapshot(t), a, b, t)
    }

    fn support_hint(&self, t: f64) -> (f64, f64) {
        let s = &self.spectral;
        let (k_lo, k_hi) = (s.grid.k_min, s.grid.k_max);
        let pad = 8.0 * s.width(t);
        let x0 = s.x_bar;
        let mut lo = x0 + k_lo * t - pad;
        let mut hi = x0 + k_hi * t + pad;
        if let Some(b) = &self.barrier {
            lo = lo.min(-x0 - k_hi * t - pad).min(-b.half_width);
            hi = hi.max(-x0 - k_lo * t + pad).max(b.half_width);
        }
        (lo, hi)
    }

    fn width(&self, t: f64) -> f64 {
        self.spectral.width(t)
    }

    fn peak_density(&self, t: f64) -> f64 {
        1.0 / ((2.0 * PI).sqrt() * self.spectral.width(t))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let grid = &self.spectral.grid;
        let required = grid.required_nodes(t);
        if required > grid.len() {
            return Err(Error::GridTooCoarse {
                t,
                required,
                available: grid.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{free_gaussian_model, presets};
    use super::*;

    fn spectral(n: usize) -> SpectralFunction {
        SpectralFunction::from_packet(&presets::packet(), 6.0, n).unwrap()
    }

    fn tunneling() -> ScatteringPacket {
        tunneling_packet_model(spectral(256), presets::barrier()).unwrap()
    }

    #[test]
    fn free_reference_tracks_gaussian() {
        let p = free_reference_model(spectral(256));
        let g = free_gaussian_model(presets::packet());
        for t in [0.0, 5.0, 10.0] {
            let snap = p.snapshot(t);
            let peak = g.peak_density(t);
            for i in 0..25 {
                let x = -25.0 + 2.0 * i as f64 + 2.0 * t;
                // cutting the amplitude at 6σ_k drops ~2e-5 of ∫ψ̃ dk
                assert!((snap.rho(x) - g.rho(x, t)).abs() < 3e-5 * peak, "x={x} t={t}");
                assert!((snap.current(x) - g.current(x, t)).abs() < 6e-5 * peak, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn tunneling_norm_is_conserved() {
        let p = tunneling();
        for t in [0.0, 5.0, 10.0] {
            let (lo, _) = p.support_hint(t);
            let total = p.tail(lo, t).unwrap();
            assert!((total - 1.0).abs() < 1e-6, "t={t}: {total}");
        }
    }

    #[test]
    fn packet_transmission() {
        let p = tunneling();
        let tp = p.transmission_probability();
        assert!((tp - 0.021_582).abs() < 2e-6, "{tp}");
        // the transmitted tail saturates towards the packet transmission
        let late = p.tail(0.3, 15.0).unwrap();
        assert!((late - tp).abs() < 1e-5, "{late}");
    }

    #[test]
    fn continuity_by_finite_differences() {
        let p = tunneling();
        let h = 1e-4;
        for t in [3.0, 6.0] {
            for x in [-6.0, -2.3, -0.29, 0.0, 0.2, 1.0, 4.0] {
                let drho = (p.rho(x, t + h) - p.rho(x, t - h)) / (2.0 * h);
                let dj = (p.current(x + h, t) - p.current(x - h, t)) / (2.0 * h);
                assert!((drho + dj).abs() < 1e-7, "x={x} t={t}");
            }
        }
    }

    #[test]
    fn tail_is_monotone() {
        let p = tunneling();
        let t = 6.0;
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let x = -20.0 + 0.5 * i as f64;
            let tail = p.tail(x, t).unwrap();
            assert!(tail <= prev + 1e-13);
            prev = tail;
        }
    }

    #[test]
    fn mass_between_matches_tail_difference() {
        let p = tunneling();
        let t = 4.0;
        let m = p.mass_between(-3.0, 1.5, t).unwrap();
        let d = p.tail(-3.0, t).unwrap() - p.tail(1.5, t).unwrap();
        assert!((m - d).abs() < 1e-11);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = tunneling_packet_model(spectral(64), presets::barrier()).unwrap();
        p.tail(0.0, 9.0).unwrap();
        assert!(matches!(
            p.tail(0.0, 40.0),
            Err(Error::GridTooCoarse { required: 261, .. })
        ));
    }
}
