use super::Tolerances;
use crate::error::{Error, Result};

/// Root of a monotone function on a sign-changing bracket.
///
/// Brent's method: inverse quadratic interpolation and secant steps,
/// falling back to bisection whenever they fail to shrink the bracket, so
/// convergence is guaranteed. Stops once the bracket is narrower than
/// `tol.root_abs` (or an exact zero is hit).
pub fn find_root_monotone<G: FnMut(f64) -> Result<f64>>(
    mut g: G,
    bracket: (f64, f64),
    tol: &Tolerances,
) -> Result<f64> {
    let (mut a, mut b) = bracket;
    let mut fa = g(a)?;
    let mut fb = g(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange {
            lo: a,
            hi: b,
            g_lo: fa,
            g_hi: fb,
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.root_abs;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = g(b)?;
    }
    Ok(b)
}

/// Grow `[center − half, center + half]` geometrically (×2 per round) until
/// `g` changes sign across it or the bracket leaves `limits`.
pub fn expand_bracket<G: FnMut(f64) -> Result<f64>>(
    mut g: G,
    center: f64,
    half_width: f64,
    limits: (f64, f64),
) -> Result<(f64, f64)> {
    let (lim_lo, lim_hi) = limits;
    let mut half = half_width.max(f64::EPSILON);
    let mut lo = (center - half).max(lim_lo);
    let mut hi = (center + half).min(lim_hi);
    let mut g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    loop {
        if g_lo.signum() != g_hi.signum() || g_lo == 0.0 || g_hi == 0.0 {
            return Ok((lo, hi));
        }
        if lo <= lim_lo && hi >= lim_hi {
            return Err(Error::NoSignChange { lo, hi, g_lo, g_hi });
        }
        half *= 2.0;
        let new_lo = (center - half).max(lim_lo);
        let new_hi = (center + half).min(lim_hi);
        if new_lo < lo {
            lo = new_lo;
            g_lo = g(lo)?;
        }
        if new_hi > hi {
            hi = new_hi;
            g_hi = g(hi)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::erfc;
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn linear_root() {
        let x = find_root_monotone(|x| Ok(x - 3.0), (0.0, 10.0), &tol()).unwrap();
        assert!((x - 3.0).abs() < 1e-11);
    }

    #[test]
    fn erfc_symmetry_point() {
        let x = find_root_monotone(|x| Ok(erfc(x) - 1.0), (-5.0, 5.0), &tol()).unwrap();
        assert!(x.abs() < 1e-11);
    }

    #[test]
    fn upper_quartile_of_standard_normal() {
        let g = |x: f64| Ok(0.5 * erfc(x / std::f64::consts::SQRT_2) - 0.25);
        let x = find_root_monotone(g, (-10.0, 10.0), &tol()).unwrap();
        assert!((x - 0.674_489_750_196_081_7).abs() < 1e-10);
    }

    #[test]
    fn reports_missing_sign_change() {
        let r = find_root_monotone(|x| Ok(x * x + 1.0), (-1.0, 1.0), &tol());
        assert!(matches!(r, Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn expands_towards_root() {
        let g = |x: f64| Ok(5.0 - x);
        let (lo, hi) = expand_bracket(g, 0.0, 0.5, (-100.0, 100.0)).unwrap();
        assert!(lo <= 5.0 && 5.0 <= hi);
        let g = |x: f64| Ok(-40.0 - x);
        let (lo, hi) = expand_bracket(g, 0.0, 0.5, (-100.0, 100.0)).unwrap();
        assert!(lo <= -40.0 && -40.0 <= hi);
        assert!(expand_bracket(|x: f64| Ok(500.0 - x), 0.0, 1.0, (-100.0, 100.0)).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_on_monotone_family(
            root in -20.0f64..20.0,
            scale in 0.01f64..100.0,
            kind in 0usize..3,
        ) {
            let g = move |x: f64| -> Result<f64> {
                let u = x - root;
                Ok(scale * match kind {
                    0 => u,
                    1 => u.powi(3) + u,
                    _ => u.tanh(),
                })
            };
            let x = find_root_monotone(g, (-50.0, 50.0), &tol()).unwrap();
            let gx = g(x).unwrap();
            prop_assert!(gx.abs() <= scale * 1e-8, "g({x}) = {gx}");
        }
    }
}
