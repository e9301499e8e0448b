//! Dormand–Prince 5(4) with FSAL and the 4th-order continuous extension.

use super::Tolerances;
use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Relative step size below which the integrator gives up.
const UNDERFLOW: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum OdeOutcome<R> {
    /// Reached the last output time.
    Completed,
    /// The stop predicate fired after an accepted step.
    Stopped(R),
    /// The required step fell below machine scale (or the field was
    /// undefined on every trial step).
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdePath<X, R> {
    /// Solution at each requested output time that was reached, starting
    /// with the initial condition.
    pub samples: Vec<(f64, X)>,
    /// Last accepted state.
    pub t_last: f64,
    pub x_last: X,
    pub accepted: usize,
    pub rejected: usize,
    pub outcome: OdeOutcome<R>,
}

impl<R> OdePath<f64, R> {
    /// Turns a step underflow into [`Error::StepUnderflow`].
    pub fn into_result(self) -> Result<Self> {
        if matches!(self.outcome, OdeOutcome::StepUnderflow) {
            return Err(Error::StepUnderflow {
                t: self.t_last,
                x: self.x_last,
                h: UNDERFLOW * self.t_last.abs().max(1.0),
            });
        }
        Ok(self)
    }
}

/// Scalar adaptive integration of `dx/dt = rhs(t, x)` sampled at `t_out`.
///
/// `rhs` returns `None` where the field is undefined; the step is retried
/// with a smaller size. `stop` is consulted after every accepted step.
pub fn integrate_ode<F, S, R>(
    mut rhs: F,
    x0: f64,
    t_out: &[f64],
    tol: &Tolerances,
    mut stop: S,
) -> Result<OdePath<f64, R>>
where
    F: FnMut(f64, f64) -> Option<f64>,
    S: FnMut(f64, f64) -> Option<R>,
{
    let path = integrate_ode_n(
        |t, x: &[f64; 1]| rhs(t, x[0]).map(|v| [v]),
        [x0],
        t_out,
        tol,
        |t, x: &[f64; 1]| stop(t, x[0]),
    )?;
    Ok(OdePath {
        samples: path.samples.into_iter().map(|(t, x)| (t, x[0])).collect(),
        t_last: path.t_last,
        x_last: path.x_last[0],
        accepted: path.accepted,
        rejected: path.rejected,
        outcome: path.outcome,
    })
}

/// Vector version of [`integrate_ode`] for `N`-component states.
pub fn integrate_ode_n<const N: usize, F, S, R>(
    mut rhs: F,
    x0: [f64; N],
    t_out: &[f64],
    tol: &Tolerances,
    mut stop: S,
) -> Result<OdePath<[f64; N], R>>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> Option<R>,
{
    tol.validate()?;
    if t_out.is_empty() {
        return Err(Error::invalid("output time grid is empty"));
    }
    if t_out.windows(2).any(|w| !(w[1] > w[0])) || t_out.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("output times must be finite and strictly increasing"));
    }
    let t0 = t_out[0];
    let t_end = *t_out.last().unwrap();
    let mut path = OdePath {
        samples: vec![(t0, x0)],
        t_last: t0,
        x_last: x0,
        accepted: 0,
        rejected: 0,
        outcome: OdeOutcome::Completed,
    };
    if t_out.len() == 1 {
        return Ok(path);
    }
    let Some(mut k1) = rhs(t0, &x0) else {
        path.outcome = OdeOutcome::StepUnderflow;
        return Ok(path);
    };
    let mut t = t0;
    let mut x = x0;
    let mut h = initial_step(&mut rhs, t0, &x0, &k1, t_end - t0, tol);
    let mut next_out = 1;
    let mut last_rejected = false;

    while next_out < t_out.len() {
        let remaining = t_end - t;
        if h >= remaining {
            h = remaining;
        }
        if h <= UNDERFLOW * t.abs().max(1.0) {
            path.outcome = OdeOutcome::StepUnderflow;
            break;
        }

        let Some((x_new, k, err)) = dp_step(&mut rhs, t, &x, &k1, h, tol) else {
            path.rejected += 1;
            last_rejected = true;
            h *= 0.25;
            continue;
        };

        if err <= 1.0 {
            let t_new = t + h;
            let at_end = h == remaining;
            while next_out < t_out.len() && (t_out[next_out] <= t_new || at_end) {
                let to = t_out[next_out];
                let xo = if to >= t_new || (at_end && next_out + 1 == t_out.len()) {
                    x_new
                } else {
                    dense(&x, &x_new, &k, h, (to - t) / h)
                };
                path.samples.push((to, xo));
                next_out += 1;
            }
            t = if at_end { t_end } else { t_new };
            x = x_new;
            k1 = k[6];
            path.accepted += 1;
            path.t_last = t;
            path.x_last = x;
            if let Some(reason) = stop(t, &x) {
                path.outcome = OdeOutcome::Stopped(reason);
                break;
            }
            let mut fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            path.rejected += 1;
            last_rejected = true;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    Ok(path)
}

type Stages<const N: usize> = [[f64; N]; 7];

fn dp_step<const N: usize, F>(
    rhs: &mut F,
    t: f64,
    x: &[f64; N],
    k1: &[f64; N],
    h: f64,
    tol: &Tolerances,
) -> Option<([f64; N], Stages<N>, f64)>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut xs = *x;
        for (i, xi) in xs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..s {
                acc += A[s][j] * k[j][i];
            }
            *xi += h * acc;
        }
        k[s] = rhs(t + C[s] * h, &xs)?;
        if k[s].iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    // Stage 7 is evaluated at the 5th-order solution (FSAL).
    let mut x_new = *x;
    for (i, xi) in x_new.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..6 {
            acc += A[6][j] * k[j][i];
        }
        *xi += h * acc;
    }
    let mut err2 = 0.0;
    for i in 0..N {
        let mut e = 0.0;
        for j in 0..7 {
            e += E[j] * k[j][i];
        }
        let scale = tol.ode_abs + tol.ode_rel * x[i].abs().max(x_new[i].abs());
        err2 += (h * e / scale).powi(2);
    }
    Some((x_new, k, (err2 / N as f64).sqrt()))
}

fn dense<const N: usize>(x: &[f64; N], x_new: &[f64; N], k: &Stages<N>, h: f64, theta: f64) -> [f64; N] {
    let mut out = [0.0; N];
    let th1 = 1.0 - theta;
    for i in 0..N {
        let ydiff = x_new[i] - x[i];
        let bspl = h * k[0][i] - ydiff;
        let c4 = ydiff - h * k[6][i] - bspl;
        let mut c5 = 0.0;
        for j in 0..7 {
            c5 += D[j] * k[j][i];
        }
        c5 *= h;
        out[i] = x[i] + theta * (ydiff + th1 * (bspl + theta * (c4 + th1 * c5)));
    }
    out
}

fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    x0: &[f64; N],
    f0: &[f64; N],
    span: f64,
    tol: &Tolerances,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let n = N as f64;
    let sk: Vec<f64> = x0.iter().map(|xi| tol.ode_abs + tol.ode_rel * xi.abs()).collect();
    let dnf = (0..N).map(|i| (f0[i] / sk[i]).powi(2)).sum::<f64>() / n;
    let dny = (0..N).map(|i| (x0[i] / sk[i]).powi(2)).sum::<f64>() / n;
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h = h.min(span);
    let mut x1 = *x0;
    for i in 0..N {
        x1[i] += h * f0[i];
    }
    let Some(f1) = rhs(t0 + h, &x1) else {
        return h * 0.01;
    };
    let der2 = ((0..N).map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2)).sum::<f64>() / n).sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    // A near-zero state makes the first guess meaningless; oversized steps
    // are cheap to reject, undersized ones can trip the underflow guard.
    (100.0 * h).min(h1).max(1e-8 * span).min(span)
}
