use std::f64::consts::PI;

use rayon::prelude::*;

use super::DENSITY_FLOOR;
use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, integrate_ode_n, Interval, OdeOutcome, Tolerances};
use crate::wavepacket::Gaussian3d;

/// Points on a sphere plus its center, with the angular weights of the
/// 26-point Lebedev rule (exact for spherical harmonics up to degree 7).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSeeds {
    pub center: [f64; 3],
    pub radius: f64,
    /// Unit directions, one per surface seed.
    pub directions: Vec<[f64; 3]>,
    /// Angular weights summing to 1.
    pub weights: Vec<f64>,
}

pub fn sphere_seeds(center: [f64; 3], radius: f64) -> Result<SphereSeeds> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("sphere radius must be > 0, got {radius}")));
    }
    let mut directions = Vec::with_capacity(26);
    let mut weights = Vec::with_capacity(26);
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut d = [0.0; 3];
            d[axis] = s;
            directions.push(d);
            weights.push(1.0 / 21.0);
        }
    }
    let h = 0.5f64.sqrt();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut d = [0.0; 3];
            d[i] = si * h;
            d[j] = sj * h;
            directions.push(d);
            weights.push(4.0 / 105.0);
        }
    }
    let c = 3.0f64.sqrt().recip();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                directions.push([sx * c, sy * c, sz * c]);
                weights.push(9.0 / 280.0);
            }
        }
    }
    Ok(SphereSeeds {
        center,
        radius,
        directions,
        weights,
    })
}

impl SphereSeeds {
    /// Seed points: the center (id 0) followed by the surface points.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut pts = vec![self.center];
        for d in &self.directions {
            pts.push(std::array::from_fn(|i| self.center[i] + self.radius * d[i]));
        }
        pts
    }
}

/// Seeds transported along dx⃗/dt = j⃗/ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap3D {
    pub times: Vec<f64>,
    pub seeds: Vec<[f64; 3]>,
    /// `paths[i][n]` is the image of seed i at `times[n]`.
    pub paths: Vec<Vec<[f64; 3]>>,
}

impl FlowMap3D {
    /// Distances of the surface images (seeds 1..) from the center image.
    pub fn radii(&self, n: usize) -> Vec<f64> {
        let c = self.paths[0][n];
        self.paths[1..].iter().map(|p| dist(&p[n], &c)).collect()
    }

    /// (max − min)/mean of the transported radii.
    pub fn radius_spread(&self, n: usize) -> f64 {
        let r = self.radii(n);
        let max = r.iter().cloned().fold(f64::MIN, f64::max);
        let min = r.iter().cloned().fold(f64::MAX, f64::min);
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        (max - min) / mean
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Integrates every seed through the velocity field of `field`.
pub fn trace_flowmap_3d(field: &Gaussian3d, seeds: &[[f64; 3]], t_grid: &[f64], tol: &Tolerances) -> Result<FlowMap3D> {
    if seeds.is_empty() {
        return Err(Error::invalid("no seeds"));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidRange("times must be strictly increasing".into()));
    }
    let paths = seeds
        .par_iter()
        .map(|seed| {
            let path = integrate_ode_n(
                |t, r: &[f64; 3]| {
                    let floor = DENSITY_FLOOR * field.rho(&field.mean_position(t), t);
                    (field.rho(r, t) > floor).then(|| field.velocity_field(r, t))
                },
                *seed,
                t_grid,
                tol,
                |_, _| None::<()>,
            )?;
            match path.outcome {
                OdeOutcome::Completed => Ok(path.samples.into_iter().map(|(_, r)| r).collect()),
                _ => Err(Error::VelocitySingular {
                    t: path.t_last,
                    x: path.x_last[0],
                    rho: field.rho(&path.x_last, path.t_last),
                }),
            }
        })
        .collect::<Result<Vec<Vec<[f64; 3]>>>>()?;
    Ok(FlowMap3D {
        times: t_grid.to_vec(),
        seeds: seeds.to_vec(),
        paths,
    })
}

/// Probability inside the star-shaped region bounded by `surface` around
/// `center`, by angular quadrature with `weights` and adaptive radial
/// integration: 4π Σᵢ wᵢ ∫₀^{Rᵢ} ρ(c + rΩᵢ) r² dr.
pub fn probability_in_volume(
    field: &Gaussian3d,
    t: f64,
    center: &[f64; 3],
    surface: &[[f64; 3]],
    weights: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    if surface.len() != weights.len() || surface.is_empty() {
        return Err(Error::invalid("surface points and weights must match"));
    }
    let mut total = 0.0;
    for (p, &w) in surface.iter().zip(weights) {
        let r_max = dist(p, center);
        if r_max == 0.0 {
            continue;
        }
        let dir: [f64; 3] = std::array::from_fn(|i| (p[i] - center[i]) / r_max);
        let radial = integrate_adaptive(
            |r| {
                let q: [f64; 3] = std::array::from_fn(|i| center[i] + r * dir[i]);
                field.rho(&q, t) * r * r
            },
            Interval::Finite(0.0, r_max),
            tol,
        )?;
        total += w * radial.value;
    }
    Ok(4.0 * PI * total)
}
