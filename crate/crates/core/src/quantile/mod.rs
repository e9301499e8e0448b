//! Quantile positions x_P(t), defined by ∫_{x_P}^∞ ρ(x, t) dx = P, and their
//! trajectories traced either by inverting the tail probability at every
//! time or by integrating dx_P/dt = v_P.

mod flow3d;

pub use flow3d::{probability_in_volume, sphere_seeds, trace_flowmap_3d, FlowMap3D, SphereSeeds};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{expand_bracket, find_root_monotone, integrate_ode, OdeOutcome, Tolerances};
use crate::wavepacket::PacketModel;

/// Velocity evaluation gives up below this fraction of the peak density.
pub const DENSITY_FLOOR: f64 = 1e-14;

/// Relative margin under which P counts as exhausting the norm.
const NORM_MARGIN: f64 = 1e-12;

pub fn tail_probability<M: PacketModel + ?Sized>(model: &M, x: f64, t: f64) -> Result<f64> {
    model.check_time(t)?;
    model.tail(x, t)
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("P must lie in (0, 1), got {p}")))
    }
}

pub fn quantile_position<M: PacketModel + ?Sized>(model: &M, p: f64, t: f64) -> Result<f64> {
    quantile_position_near(model, p, t, None, &Tolerances::default())
}

/// Quantile position with the root bracket seeded around `hint` (typically
/// the position at the previous time step).
pub fn quantile_position_near<M: PacketModel + ?Sized>(
    model: &M,
    p: f64,
    t: f64,
    hint: Option<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    check_p(p)?;
    model.check_time(t)?;
    let norm = model.norm(t);
    if norm - p <= NORM_MARGIN * norm {
        return Err(Error::NormBelowP { p, t, norm });
    }
    let w = model.width(t);
    let (lo, hi) = model.support_hint(t);
    let cheap = model.tail_is_cheap();
    let limits = if cheap {
        (lo - 100.0 * w, hi + 100.0 * w)
    } else {
        (lo, hi)
    };
    let center = hint
        .filter(|h| h.is_finite())
        .unwrap_or(0.5 * (lo + hi))
        .clamp(limits.0, limits.1);

    // Expensive tails are advanced from the last evaluated point so that
    // every new evaluation only integrates over a short interval.
    let mut anchor: Option<(f64, f64)> = None;
    let mut g = |x: f64| -> Result<f64> {
        let tail = if cheap {
            model.tail(x, t)?
        } else {
            match anchor {
                None => model.tail(x, t)?,
                Some((xa, ta)) => ta - model.mass_between(xa, x, t)?,
            }
        };
        if !cheap {
            anchor = Some((x, tail));
        }
        Ok(tail - p)
    };
    let bracket = expand_bracket(&mut g, center, 4.0 * w, limits)?;
    find_root_monotone(&mut g, bracket, tol)
}

/// dx_P/dt at (x, t): j/ρ, minus (1/ρ)∫ₓ^∞ l dx′ when probability is lost.
pub fn quantile_velocity<M: PacketModel + ?Sized>(model: &M, x: f64, t: f64) -> Result<f64> {
    let (rho, j) = model.density_and_current(x, t);
    let floor = DENSITY_FLOOR * model.peak_density(t);
    if !(rho > floor) {
        return Err(Error::VelocitySingular { t, x, rho });
    }
    let loss = if model.is_conserved() {
        0.0
    } else {
        model.loss_tail(x, t)?
    };
    Ok((j - loss) / rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    Ok,
    /// Position taken from tail inversion because the ODE step failed.
    CdfFallback,
}

impl SampleStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::CdfFallback => "cdf-fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The norm fell to P at `t_end`; no quantile exists afterwards.
    NormBelowP {
        t_end: f64,
    },
    VelocitySingular {
        t: f64,
        x: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTrajectory {
    pub p: f64,
    pub samples: Vec<TrajectorySample>,
    pub termination: Termination,
}

impl QuantileTrajectory {
    pub fn final_sample(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn position_at(&self, t: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.t == t).map(|s| s.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    Cdf,
    Ode,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidRange("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid[0] < 0.0 {
        return Err(Error::InvalidRange("times must be finite and >= 0".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidRange("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Time in [t_lo, t_hi] where the norm F(t) falls to `p`.
pub fn norm_crossing<M: PacketModel + ?Sized>(model: &M, p: f64, t_lo: f64, t_hi: f64) -> Result<f64> {
    let tol = Tolerances {
        root_abs: 1e-12,
        ..Tolerances::default()
    };
    find_root_monotone(|t| Ok(model.norm(t) - p), (t_lo, t_hi), &tol)
}

/// Termination record when P is no longer available after `t_prev`.
fn exhausted<M: PacketModel + ?Sized>(model: &M, p: f64, t_prev: f64, t: f64) -> Result<Termination> {
    let t_end = if model.norm(t) > p {
        t
    } else {
        norm_crossing(model, p, t_prev, t)?
    };
    Ok(Termination::NormBelowP { t_end })
}

/// Traces x_P(t) by tail inversion at every grid time.
pub fn trace_trajectory_cdf<M: PacketModel + ?Sized>(
    model: &M,
    p: f64,
    t_grid: &[f64],
    tol: &Tolerances,
) -> Result<QuantileTrajectory> {
    check_p(p)?;
    check_grid(t_grid)?;
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(t_grid.len());
    let mut termination = Termination::Completed;
    for &t in t_grid {
        let hint = samples.last().map(|s| s.x);
        let x = match quantile_position_near(model, p, t, hint, tol) {
            Ok(x) => x,
            Err(Error::NormBelowP { .. }) if !samples.is_empty() => {
                termination = exhausted(model, p, samples.last().unwrap().t, t)?;
                break;
            }
            Err(e) => return Err(e),
        };
        match quantile_velocity(model, x, t) {
            Ok(v) => samples.push(TrajectorySample {
                t,
                x,
                v,
                status: SampleStatus::Ok,
            }),
            Err(Error::VelocitySingular { .. }) => {
                termination = Termination::VelocitySingular { t, x };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(QuantileTrajectory {
        p,
        samples,
        termination,
    })
}

/// Traces x_P(t) by integrating dx_P/dt = v_P from x_P(t₀).
///
/// Integration proceeds grid interval by grid interval. Where the step
/// size collapses (density nodes) the position at the end of the interval
/// is taken from tail inversion instead and integration restarts there.
pub fn trace_trajectory_ode<M: PacketModel + ?Sized>(
    model: &M,
    p: f64,
    t_grid: &[f64],
    tol: &Tolerances,
) -> Result<QuantileTrajectory> {
    check_p(p)?;
    check_grid(t_grid)?;
    for &t in t_grid {
        model.check_time(t)?;
    }
    let t0 = t_grid[0];
    let x0 = quantile_position_near(model, p, t0, None, tol)?;
    let v0 = match quantile_velocity(model, x0, t0) {
        Ok(v) => v,
        Err(Error::VelocitySingular { .. }) => {
            return Ok(QuantileTrajectory {
                p,
                samples: Vec::new(),
                termination: Termination::VelocitySingular { t: t0, x: x0 },
            })
        }
        Err(e) => return Err(e),
    };
    let mut samples = vec![TrajectorySample {
        t: t0,
        x: x0,
        v: v0,
        status: SampleStatus::Ok,
    }];
    let mut termination = Termination::Completed;
    for w in t_grid.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let norm = model.norm(tb);
        if norm - p <= NORM_MARGIN * norm {
            termination = exhausted(model, p, ta, tb)?;
            break;
        }
        let xa = samples.last().unwrap().x;
        let path = integrate_ode(
            |t, x| quantile_velocity(model, x, t).ok(),
            xa,
            &[ta, tb],
            tol,
            |_, _| None::<()>,
        )?;
        let (x, status) = match path.outcome {
            OdeOutcome::Completed => (path.x_last, SampleStatus::Ok),
            _ => (
                quantile_position_near(model, p, tb, Some(xa), tol)?,
                SampleStatus::CdfFallback,
            ),
        };
        match quantile_velocity(model, x, tb) {
            Ok(v) => samples.push(TrajectorySample { t: tb, x, v, status }),
            Err(Error::VelocitySingular { .. }) => {
                termination = Termination::VelocitySingular { t: tb, x };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(QuantileTrajectory {
        p,
        samples,
        termination,
    })
}

/// Traces every P in parallel; results keep the order of `p_list`.
pub fn trace_set<M: PacketModel + ?Sized>(
    model: &M,
    p_list: &[f64],
    t_grid: &[f64],
    method: TraceMethod,
    tol: &Tolerances,
) -> Result<Vec<QuantileTrajectory>> {
    p_list
        .par_iter()
        .map(|&p| match method {
            TraceMethod::Cdf => trace_trajectory_cdf(model, p, t_grid, tol),
            TraceMethod::Ode => trace_trajectory_ode(model, p, t_grid, tol),
        })
        .collect()
}

/// Largest |x_a − x_b| over times sampled by both trajectories.
pub fn max_discrepancy(a: &QuantileTrajectory, b: &QuantileTrajectory) -> f64 {
    let mut worst = 0.0f64;
    let mut j = 0;
    for s in &a.samples {
        while j < b.samples.len() && b.samples[j].t < s.t {
            j += 1;
        }
        if j < b.samples.len() && b.samples[j].t == s.t {
            worst = worst.max((s.x - b.samples[j].x).abs());
        }
    }
    worst
}

/// Uniform grid t₀, t₀ + Δt, … up to and including `t_max` (within rounding).
pub fn time_grid(t0: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && t0.is_finite() && t_max.is_finite() && t_max >= t0) {
        return Err(Error::InvalidRange(format!(
            "bad time grid: t0 = {t0}, t_max = {t_max}, step = {step}"
        )));
    }
    let n = ((t_max - t0) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| t0 + step * i as f64).collect())
}
