use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::GaussianPacketParams;
use crate::error::{Error, Result};
use crate::numerics::{build_kgrid, erfc, KGrid};

/// Gaussian momentum amplitude ψ̃(k) = N exp(−(k − k̄)²/(4σ_k²)) restricted to
/// positive wave numbers within `n_sigma` widths of k̄, normalized so that
/// ∫|ψ̃|² dk = 1 over the truncated support.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub k_bar: f64,
    pub sigma_k: f64,
    /// Packet center at t = 0.
    pub x_bar: f64,
    pub norm_const: f64,
    pub grid: KGrid,
    /// ψ̃ at the grid nodes.
    pub amplitudes: Vec<f64>,
}

impl SpectralFunction {
    pub fn truncated_gaussian(k_bar: f64, sigma_k: f64, x_bar: f64, n_sigma: f64, n_nodes: usize) -> Result<Self> {
        if !x_bar.is_finite() {
            return Err(Error::invalid("packet center must be finite"));
        }
        let grid = build_kgrid(k_bar, sigma_k, n_sigma, n_nodes)?;
        let z = |k: f64| (k - k_bar) / (SQRT_2 * sigma_k);
        let mass = sigma_k * (0.5 * PI).sqrt() * (erfc(z(grid.k_min)) - erfc(z(grid.k_max)));
        let norm_const = mass.sqrt().recip();
        let amplitudes = grid
            .nodes
            .iter()
            .map(|&k| norm_const * (-(k - k_bar).powi(2) / (4.0 * sigma_k * sigma_k)).exp())
            .collect();
        Ok(SpectralFunction {
            k_bar,
            sigma_k,
            x_bar,
            norm_const,
            grid,
            amplitudes,
        })
    }

    /// Spectral function of a Gaussian packet (k̄ = p̄/ħ, σ_k = σ_p/ħ).
    pub fn from_packet(params: &GaussianPacketParams, n_sigma: f64, n_nodes: usize) -> Result<Self> {
        Self::truncated_gaussian(
            params.v_bar * params.mass,
            params.sigma_p(),
            params.x_bar,
            n_sigma,
            n_nodes,
        )
    }

    pub fn amplitude(&self, k: f64) -> f64 {
        if k < self.grid.k_min || k > self.grid.k_max {
            return 0.0;
        }
        self.norm_const * (-(k - self.k_bar).powi(2) / (4.0 * self.sigma_k * self.sigma_k)).exp()
    }

    /// ψ̃(k; x, t) = ψ̃(k) e^{ik(x − x̄) − ik²t/2}.
    pub fn evolved(&self, k: f64, x: f64, t: f64) -> Complex64 {
        let phase = k * (x - self.x_bar) - 0.5 * k * k * t;
        Complex64::from_polar(self.amplitude(k), phase)
    }

    /// Σ wᵢ ψ̃(kᵢ)², the discrete counterpart of ∫|ψ̃|² dk.
    pub fn grid_norm(&self) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, a)| w * a * a)
            .sum()
    }

    /// Position-space width σ_x0 = 1/(2σ_k) of the untruncated packet.
    pub fn initial_width(&self) -> f64 {
        0.5 / self.sigma_k
    }

    /// Width of the untruncated packet at time `t`.
    pub fn width(&self, t: f64) -> f64 {
        let s0 = self.initial_width();
        let r = self.sigma_k * t / s0;
        s0 * (1.0 + r * r).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::super::presets;
    use super::*;

    #[test]
    fn normalized_on_truncated_support() {
        let s = SpectralFunction::from_packet(&presets::packet(), 6.0, 256).unwrap();
        assert!((s.grid.k_min - 0.8).abs() < 1e-15);
        assert!((s.grid.k_max - 3.2).abs() < 1e-15);
        assert!((s.grid_norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn truncation_at_zero() {
        let s = SpectralFunction::truncated_gaussian(0.5, 0.2, 0.0, 6.0, 128).unwrap();
        assert_eq!(s.grid.k_min, 0.0);
        assert!((s.grid_norm() - 1.0).abs() < 1e-13);
        assert_eq!(s.amplitude(-0.1), 0.0);
        // truncated mass boosts the normalization above the full-line value
        let full = (2.0 * PI * 0.04f64).powf(-0.25);
        assert!(s.norm_const > full);
    }

    #[test]
    fn evolved_phase() {
        let s = SpectralFunction::from_packet(&presets::packet(), 6.0, 64).unwrap();
        let v = s.evolved(2.0, -10.0, 0.0);
        assert!((v.im).abs() < 1e-15);
        assert!((v.re - s.norm_const).abs() < 1e-15);
        let w = s.evolved(2.0, -9.0, 1.0);
        assert!((w.arg() - (2.0f64 - 2.0)).abs() < 1e-14);
        assert!((w.norm() - s.norm_const).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_support() {
        assert!(matches!(
            SpectralFunction::truncated_gaussian(-3.0, 0.2, 0.0, 6.0, 128),
            Err(Error::InvalidRange(_))
        ));
        assert!(SpectralFunction::truncated_gaussian(2.0, 0.2, 0.0, 6.0, 16).is_err());
    }
}
