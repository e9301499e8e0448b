//! Retardation of tunneled quantiles: the transmitted tail of a packet that
//! crossed a barrier never exceeds the tail of the free packet with the same
//! spectral function, ΔP(x, t) = P_F(x, t) − P_T(x, t) ≥ 0 for x > a.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, integrate_panels};
use crate::quantile::QuantileTrajectory;
use crate::wavepacket::{
    free_reference_model, panel_breaks, scattering_mode, tunneling_packet_model, BarrierSpec, PacketModel,
    ScatteringMode, ScatteringPacket, SpectralFunction,
};

/// Absolute tolerance on ΔP ≥ 0 (quadrature floor).
pub const POSITIVITY_TOL: f64 = 1e-6;
/// Denominator floor of the relative agreement measure.
pub const AGREEMENT_FLOOR: f64 = 1e-9;

/// A tunneling packet and the free packet built from the same spectral
/// function.
#[derive(Debug, Clone)]
pub struct TunnelScenario {
    pub tunneling: ScatteringPacket,
    pub free: ScatteringPacket,
}

impl TunnelScenario {
    pub fn new(spectral: SpectralFunction, barrier: BarrierSpec) -> Result<Self> {
        Ok(TunnelScenario {
            tunneling: tunneling_packet_model(spectral.clone(), barrier)?,
            free: free_reference_model(spectral),
        })
    }

    pub fn barrier(&self) -> BarrierSpec {
        self.tunneling.barrier.expect("tunneling packet carries a barrier")
    }
}

fn check_transmission_point(barrier: &BarrierSpec, x: f64) -> Result<()> {
    if x > barrier.half_width {
        Ok(())
    } else {
        Err(Error::InvalidRange(format!(
            "ΔP is defined beyond the barrier: need x > {}, got {x}",
            barrier.half_width
        )))
    }
}

/// ΔP(x, t) = tail_F(x, t) − tail_T(x, t) by direct spatial integration.
pub fn delta_p_direct<F, T>(free: &F, tunneling: &T, x: f64, t: f64) -> Result<f64>
where
    F: PacketModel + ?Sized,
    T: PacketModel + ?Sized,
{
    free.check_time(t)?;
    tunneling.check_time(t)?;
    Ok(free.tail(x, t)? - tunneling.tail(x, t)?)
}

/// The three non-negative contributions of the λ-parameterized form of ΔP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPTerms {
    /// ∫₀¹ dλ |Σ w Z_λ/D ψ̃(k; x, t)|²
    pub term1: f64,
    /// ∫₀¹ dλ |Σ w e^{2iaλk} sin(2aλγ)/D ψ̃(k; x, t)|²
    pub term2: f64,
    /// ∫ₓ^∞ dx′ |Σ w e^{2iak} sin(2aγ)/D ψ̃(k; x′, t)|²
    pub term3: f64,
    /// (2a/π) q [term1 + 4q term2 + (q/a) term3] with q = 2mV/ħ².
    pub total: f64,
    /// λ nodes used after refinement.
    pub lambda_nodes: usize,
}

const MAX_LAMBDA_NODES: usize = 1024;

/// ΔP(x, t) from its positive-definite decomposition. The λ-rule starts at
/// `n_lambda` Gauss–Legendre nodes and doubles until the total changes by
/// less than 0.1 %.
pub fn delta_p_decomposition(packet: &ScatteringPacket, x: f64, t: f64, n_lambda: usize) -> Result<DeltaPTerms> {
    let barrier = packet
        .barrier
        .ok_or_else(|| Error::invalid("decomposition needs a packet with a barrier"))?;
    check_transmission_point(&barrier, x)?;
    if n_lambda < 16 {
        return Err(Error::invalid(format!("need at least 16 λ nodes, got {n_lambda}")));
    }
    packet.check_time(t)?;
    let a = barrier.half_width;
    let q = barrier.coupling();
    let s = &packet.spectral;
    let modes = &packet.modes;

    // wᵢ ψ̃(kᵢ) e^{ikᵢ(x − x̄) − ikᵢ²t/2} / D(kᵢ)
    let weighted = |y: f64| -> Vec<Complex64> {
        s.grid
            .nodes
            .iter()
            .zip(&s.grid.weights)
            .zip(&s.amplitudes)
            .zip(modes)
            .map(|(((&k, &w), &amp), m)| {
                Complex64::from_polar(w * amp, k * (y - s.x_bar) - 0.5 * k * k * t) / m.denominator()
            })
            .collect()
    };
    let base = weighted(x);
    let lambda_terms = |lambda: f64| -> (f64, f64) {
        let mut z1 = Complex64::new(0.0, 0.0);
        let mut z2 = Complex64::new(0.0, 0.0);
        for (c, m) in base.iter().zip(modes) {
            z1 += c * m.partial_numerator(lambda);
            z2 += c * barrier_factor(m, lambda);
        }
        (z1.norm_sqr(), z2.norm_sqr())
    };
    let combine = |t1: f64, t2: f64, t3: f64| (2.0 * a / PI) * q * (t1 + 4.0 * q * t2 + (q / a) * t3);

    let term3 = {
        let (_, hi) = packet.support_hint(t);
        if x >= hi {
            0.0
        } else {
            // wᵢ ψ̃(kᵢ) e^{2iakᵢ} sin(2aγᵢ) / D(kᵢ)
            let coef: Vec<Complex64> = modes
                .iter()
                .zip(&s.grid.weights)
                .zip(&s.amplitudes)
                .map(|((m, &w), &amp)| w * amp * barrier_factor(m, 1.0) / m.denominator())
                .collect();
            let integrand = |y: f64| {
                let mut z = Complex64::new(0.0, 0.0);
                for (c, &k) in coef.iter().zip(&s.grid.nodes) {
                    z += c * Complex64::from_polar(1.0, k * (y - s.x_bar) - 0.5 * k * k * t);
                }
                z.norm_sqr()
            };
            let spacing = (PI / s.grid.k_max).min(packet.width(t));
            integrate_panels(integrand, &panel_breaks(x, hi, spacing), &packet.tolerances)?.value
        }
    };

    let lambda_rule = |n: usize| -> (f64, f64) {
        let (nodes, weights) = gauss_legendre(n).on_interval(0.0, 1.0);
        nodes
            .iter()
            .zip(&weights)
            .map(|(&l, &w)| {
                let (a1, a2) = lambda_terms(l);
                (w * a1, w * a2)
            })
            .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1))
    };
    let mut n = n_lambda;
    let (mut term1, mut term2) = lambda_rule(n);
    let mut total = combine(term1, term2, term3);
    while n < MAX_LAMBDA_NODES {
        let (t1, t2) = lambda_rule(2 * n);
        let refined = combine(t1, t2, term3);
        n *= 2;
        let change = (refined - total).abs();
        term1 = t1;
        term2 = t2;
        total = refined;
        if change <= 1e-3 * total.abs() || change <= 1e-15 {
            break;
        }
    }
    Ok(DeltaPTerms {
        term1,
        term2,
        term3,
        total,
        lambda_nodes: n,
    })
}

/// e^{2iaλk} sin(2aλγ).
fn barrier_factor(m: &ScatteringMode, lambda: f64) -> Complex64 {
    let arg = 2.0 * m.barrier.half_width * lambda;
    Complex64::from_polar(1.0, arg * m.k) * (m.gamma() * arg).sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPRow {
    pub x: f64,
    pub t: f64,
    pub dp_direct: f64,
    pub terms: DeltaPTerms,
    /// |direct − decomposition| / max(|direct|, floor)
    pub agreement_rel: f64,
    pub positivity_ok: bool,
}

impl DeltaPRow {
    /// Agreement within 1 % relative or `POSITIVITY_TOL` absolute.
    pub fn agrees(&self) -> bool {
        let diff = (self.dp_direct - self.terms.total).abs();
        self.agreement_rel <= 0.01 || diff <= POSITIVITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPReport {
    pub rows: Vec<DeltaPRow>,
}

impl DeltaPReport {
    pub fn all_positive(&self) -> bool {
        self.rows.iter().all(|r| r.positivity_ok)
    }

    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(DeltaPRow::agrees)
    }

    pub fn worst_agreement(&self) -> f64 {
        self.rows.iter().map(|r| r.agreement_rel).fold(0.0, f64::max)
    }
}

/// Default evaluation grid: 12 positions from a + 0.2 to a + 5.
pub fn default_x_grid(barrier: &BarrierSpec) -> Vec<f64> {
    let a = barrier.half_width;
    (0..12).map(|i| a + 0.2 + (4.8 * i as f64) / 11.0).collect()
}

/// Both forms of ΔP on the grid xs × ts (rows ordered by t, then x).
pub fn delta_p_report(scenario: &TunnelScenario, xs: &[f64], ts: &[f64], n_lambda: usize) -> Result<DeltaPReport> {
    let barrier = scenario.barrier();
    for &x in xs {
        check_transmission_point(&barrier, x)?;
    }
    let points: Vec<(f64, f64)> = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect();
    let rows = points
        .par_iter()
        .map(|&(x, t)| {
            let dp_direct = delta_p_direct(&scenario.free, &scenario.tunneling, x, t)?;
            let terms = delta_p_decomposition(&scenario.tunneling, x, t, n_lambda)?;
            let agreement_rel = (dp_direct - terms.total).abs() / dp_direct.abs().max(AGREEMENT_FLOOR);
            let positivity_ok =
                dp_direct >= -POSITIVITY_TOL && terms.term1 >= 0.0 && terms.term2 >= 0.0 && terms.term3 >= 0.0;
            Ok(DeltaPRow {
                x,
                t,
                dp_direct,
                terms,
                agreement_rel,
                positivity_ok,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaPReport { rows })
}

/// Σ wᵢ |T(kᵢ)|² |ψ̃(kᵢ)|², the probability eventually transmitted.
pub fn packet_transmission_probability(spectral: &SpectralFunction, barrier: &BarrierSpec) -> Result<f64> {
    let mut total = 0.0;
    for ((&k, &w), &amp) in spectral
        .grid
        .nodes
        .iter()
        .zip(&spectral.grid.weights)
        .zip(&spectral.amplitudes)
    {
        total += w * amp * amp * scattering_mode(k, *barrier)?.transmission_probability();
    }
    Ok(total)
}

/// Retardation check of one P: tunneled versus free quantile positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardationVerdict {
    pub p: f64,
    /// Times where both quantiles exist.
    pub compared: usize,
    /// Of those, times with the tunneled quantile beyond the barrier.
    pub transmitted: usize,
    /// min(x_free − x_tunnel) over all compared times.
    pub worst_lag: f64,
    /// min(x_free − x_tunnel) over transmitted times (+∞ if none).
    pub worst_lag_transmitted: f64,
    /// worst_lag ≥ −tol.
    pub holds_everywhere: bool,
    /// worst_lag_transmitted ≥ −tol.
    pub holds_transmitted: bool,
}

/// Compares trajectory sets traced on the same time grid, pairwise by P.
pub fn retardation_scan(
    free: &[QuantileTrajectory],
    tunneling: &[QuantileTrajectory],
    barrier: &BarrierSpec,
    tol: f64,
) -> Result<Vec<RetardationVerdict>> {
    if free.len() != tunneling.len() {
        return Err(Error::invalid("free and tunneling trajectory sets differ in length"));
    }
    free.iter()
        .zip(tunneling)
        .map(|(f, tr)| {
            if f.p != tr.p {
                return Err(Error::invalid(format!("P mismatch: {} vs {}", f.p, tr.p)));
            }
            let mut v = RetardationVerdict {
                p: f.p,
                compared: 0,
                transmitted: 0,
                worst_lag: f64::INFINITY,
                worst_lag_transmitted: f64::INFINITY,
                holds_everywhere: true,
                holds_transmitted: true,
            };
            for s in &tr.samples {
                let Some(xf) = f.position_at(s.t) else { continue };
                let lag = xf - s.x;
                v.compared += 1;
                v.worst_lag = v.worst_lag.min(lag);
                if s.x > barrier.half_width {
                    v.transmitted += 1;
                    v.worst_lag_transmitted = v.worst_lag_transmitted.min(lag);
                }
            }
            v.holds_everywhere = v.worst_lag >= -tol;
            v.holds_transmitted = v.worst_lag_transmitted >= -tol;
            Ok(v)
        })
        .collect()
}

/// Whether the trajectory ends beyond the barrier.
pub fn crosses_barrier(trajectory: &QuantileTrajectory, barrier: &BarrierSpec) -> bool {
    trajectory.final_sample().is_some_and(|s| s.x > barrier.half_width)
}

/// Checks that exactly the P-values below `t_pkt` cross, allowing a
/// mismatch for P within `p_step` of the threshold.
pub fn threshold_consistent(
    trajectories: &[QuantileTrajectory],
    barrier: &BarrierSpec,
    t_pkt: f64,
    p_step: f64,
) -> bool {
    trajectories.iter().all(|tr| {
        let expected = tr.p < t_pkt;
        crosses_barrier(tr, barrier) == expected || (tr.p - t_pkt).abs() <= p_step
    })
}

/// Largest |v_P| inside the barrier and far outside it (|x| > a + margin).
/// `None` when the trajectory has no samples in one of the regions.
pub fn interior_speeds(trajectory: &QuantileTrajectory, barrier: &BarrierSpec, margin: f64) -> Option<(f64, f64)> {
    let a = barrier.half_width;
    let mut inside: Option<f64> = None;
    let mut outside: Option<f64> = None;
    for s in &trajectory.samples {
        let speed = s.v.abs();
        if s.x.abs() < a {
            inside = Some(inside.map_or(speed, |m: f64| m.max(speed)));
        } else if s.x.abs() > a + margin {
            outside = Some(outside.map_or(speed, |m: f64| m.max(speed)));
        }
    }
    Some((inside?, outside?))
}

#[cfg(test)]
mod tests;
