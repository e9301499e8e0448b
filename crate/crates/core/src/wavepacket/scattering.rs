use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Rectangular barrier of height `height` on |x| ≤ `half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub height: f64,
    pub half_width: f64,
}

impl BarrierSpec {
    pub fn new(height: f64, half_width: f64) -> Result<Self> {
        if !(height.is_finite() && height >= 0.0) {
            return Err(Error::invalid(format!("barrier height must be >= 0, got {height}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!(
                "barrier half-width must be > 0, got {half_width}"
            )));
        }
        Ok(BarrierSpec { height, half_width })
    }

    /// Coupling 2mV/ħ² (m = ħ = 1).
    pub fn coupling(&self) -> f64 {
        2.0 * self.height
    }

    pub fn region(&self, x: f64) -> Region {
        if x < -self.half_width {
            Region::Left
        } else if x <= self.half_width {
            Region::Barrier
        } else {
            Region::Right
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Left,
    Barrier,
    Right,
}

/// Stationary scattering state for a wave incident from the left with unit
/// amplitude: e^{ikx} + R e^{−ikx} on the left, T e^{ikx} on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMode {
    pub k: f64,
    pub barrier: BarrierSpec,
    /// γ² = k² − 2V (negative below the barrier top).
    pub gamma_sq: f64,
    pub transmission: Complex64,
    pub reflection: Complex64,
}

/// cos(γu) and sin(γu)/γ for γ² = `e`, real in both regimes.
fn cos_sinc(e: f64, u: f64) -> (f64, f64) {
    let g = e.abs().sqrt();
    let z = g * u;
    if z.abs() < 1e-4 {
        let eu2 = e * u * u;
        return (
            1.0 - 0.5 * eu2 + eu2 * eu2 / 24.0,
            u * (1.0 - eu2 / 6.0 + eu2 * eu2 / 120.0),
        );
    }
    if e > 0.0 {
        (z.cos(), z.sin() / g)
    } else {
        (z.cosh(), z.sinh() / g)
    }
}

pub fn scattering_mode(k: f64, barrier: BarrierSpec) -> Result<ScatteringMode> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::DegenerateK(k));
    }
    let a = barrier.half_width;
    let e = k * k - barrier.coupling();
    if barrier.height == 0.0 {
        // no barrier: the mode is the plane wave itself
        return Ok(ScatteringMode {
            k,
            barrier,
            gamma_sq: e,
            transmission: Complex64::new(1.0, 0.0),
            reflection: Complex64::new(0.0, 0.0),
        });
    }
    let (c, s) = cos_sinc(e, 2.0 * a);
    let denom = Complex64::new(2.0 * k * c, -(k * k + e) * s);
    let transmission = (-2.0 * I * k * a).exp() * (2.0 * k) / denom;
    if !(transmission.re.is_finite() && transmission.im.is_finite()) {
        return Err(Error::invalid(format!(
            "transmission amplitude not representable for k = {k}, V = {}, a = {a}",
            barrier.height
        )));
    }
    let mut mode = ScatteringMode {
        k,
        barrier,
        gamma_sq: e,
        transmission,
        reflection: Complex64::new(0.0, 0.0),
    };
    let (phi, dphi) = mode.interior(-a);
    mode.reflection = (-I * k * a).exp() * (phi + I * dphi / k) * 0.5;
    Ok(mode)
}

impl ScatteringMode {
    /// γ, real above the barrier top and +i|γ| below it.
    pub fn gamma(&self) -> Complex64 {
        if self.gamma_sq >= 0.0 {
            Complex64::new(self.gamma_sq.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-self.gamma_sq).sqrt())
        }
    }

    pub fn transmission_probability(&self) -> f64 {
        self.transmission.norm_sqr()
    }

    pub fn reflection_probability(&self) -> f64 {
        self.reflection.norm_sqr()
    }

    fn interior(&self, x: f64) -> (Complex64, Complex64) {
        let a = self.barrier.half_width;
        let (c, s) = cos_sinc(self.gamma_sq, x - a);
        let pre = self.transmission * (I * self.k * a).exp();
        let k = self.k;
        (
            pre * Complex64::new(c, k * s),
            pre * Complex64::new(-self.gamma_sq * s, k * c),
        )
    }

    /// φ_k(x).
    pub fn value(&self, x: f64) -> Complex64 {
        self.value_and_derivative(x).0
    }

    /// φ_k(x) and dφ_k/dx.
    pub fn value_and_derivative(&self, x: f64) -> (Complex64, Complex64) {
        let k = self.k;
        match self.barrier.region(x) {
            Region::Left => {
                let fwd = (I * k * x).exp();
                let back = self.reflection * fwd.conj();
                (fwd + back, I * k * (fwd - back))
            }
            Region::Barrier => self.interior(x),
            Region::Right => {
                let v = self.transmission * (I * k * x).exp();
                (v, I * k * v)
            }
        }
    }

    /// D(k) = (k+γ)² e^{2ia(k−γ)} − (k−γ)² e^{2ia(k+γ)}, so that T = 4kγ / D.
    pub fn denominator(&self) -> Complex64 {
        let (kp, km, ep, em) = self.phase_factors(1.0);
        kp * kp * em - km * km * ep
    }

    /// Z_λ = (k+γ) e^{2iaλ(k−γ)} − (k−γ) e^{2iaλ(k+γ)}.
    pub fn partial_numerator(&self, lambda: f64) -> Complex64 {
        let (kp, km, ep, em) = self.phase_factors(lambda);
        kp * em - km * ep
    }

    /// (k+γ, k−γ, e^{2iaλ(k+γ)}, e^{2iaλ(k−γ)}).
    fn phase_factors(&self, lambda: f64) -> (Complex64, Complex64, Complex64, Complex64) {
        let k = Complex64::new(self.k, 0.0);
        let g = self.gamma();
        let two_ia = 2.0 * I * self.barrier.half_width * lambda;
        (k + g, k - g, (two_ia * (k + g)).exp(), (two_ia * (k - g)).exp())
    }
}
