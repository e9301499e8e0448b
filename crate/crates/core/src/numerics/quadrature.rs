use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Tolerances;
use crate::error::{Error, Result};

const MAX_SUBDIVISIONS: usize = 4000;

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights mapped onto [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let nodes = self.nodes.iter().map(|&s| mid + half * s).collect();
        let weights = self.weights.iter().map(|&w| half * w).collect();
        (nodes, weights)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(mid + half * s))
            .sum::<f64>()
    }
}

/// `n`-point Gauss–Legendre rule, nodes ascending.
///
/// Roots of P_n by Newton iteration from the Tricomi-style initial guess.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pnm1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
    (pn, d)
}

/// Discretized wave-number axis for spectral superpositions.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub k_min: f64,
    pub k_max: f64,
}

impl KGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes needed for eight nodes per period of the dispersive phase
    /// k_max² t / 2 at time `t`.
    pub fn required_nodes(&self, t: f64) -> usize {
        let phase = 0.5 * self.k_max * self.k_max * t.abs();
        (8.0 * phase / (2.0 * std::f64::consts::PI)).ceil() as usize
    }
}

/// Gauss–Legendre grid on `[max(0, k̄ − n_sigma σ_k), k̄ + n_sigma σ_k]`.
pub fn build_kgrid(k_bar: f64, sigma_k: f64, n_sigma: f64, n_nodes: usize) -> Result<KGrid> {
    let k_max = k_bar + n_sigma * sigma_k;
    if !(k_max > 0.0) {
        return Err(Error::InvalidRange(format!(
            "upper wave number k̄ + n_sigma σ_k = {k_max} must be > 0"
        )));
    }
    if !(k_bar > 0.0 && sigma_k > 0.0 && n_sigma > 0.0) {
        return Err(Error::invalid(format!(
            "need k̄ > 0, σ_k > 0, n_sigma > 0 (got {k_bar}, {sigma_k}, {n_sigma})"
        )));
    }
    if n_nodes < 64 {
        return Err(Error::invalid(format!("k-grid needs at least 64 nodes, got {n_nodes}")));
    }
    let k_min = (k_bar - n_sigma * sigma_k).max(0.0);
    let (nodes, weights) = gauss_legendre(n_nodes).on_interval(k_min, k_max);
    Ok(KGrid {
        nodes,
        weights,
        k_min,
        k_max,
    })
}

/// Integration domain for [`integrate_adaptive`]. Infinite limits are mapped
/// onto finite ones with the supplied decay length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval {
    Finite(f64, f64),
    /// [from, +∞)
    UpperTail {
        from: f64,
        decay: f64,
    },
    /// (−∞, to]
    LowerTail {
        to: f64,
        decay: f64,
    },
    /// (−∞, +∞)
    WholeLine {
        center: f64,
        decay: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with global error control:
/// the panel with the largest error estimate is bisected until the summed
/// estimate drops below `max(quad_abs, quad_rel·|value|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, interval: Interval, tol: &Tolerances) -> Result<QuadResult> {
    match interval {
        Interval::Finite(a, b) => integrate_panels(f, &[a, b], tol),
        Interval::UpperTail { from, decay } => {
            check_decay(decay)?;
            let g = |u: f64| {
                let s = 1.0 - u;
                let x = from + decay * u / s;
                finite_or_zero(f(x) * decay / (s * s))
            };
            integrate_panels(g, &[0.0, 0.5, 1.0], tol)
        }
        Interval::LowerTail { to, decay } => {
            check_decay(decay)?;
            let g = |u: f64| {
                let s = 1.0 - u;
                let x = to - decay * u / s;
                finite_or_zero(f(x) * decay / (s * s))
            };
            integrate_panels(g, &[0.0, 0.5, 1.0], tol)
        }
        Interval::WholeLine { center, decay } => {
            check_decay(decay)?;
            let g = |u: f64| {
                let s = 1.0 - u * u;
                let x = center + decay * u / s;
                finite_or_zero(f(x) * decay * (1.0 + u * u) / (s * s))
            };
            integrate_panels(g, &[-1.0, -0.5, 0.0, 0.5, 1.0], tol)
        }
    }
}

fn check_decay(decay: f64) -> Result<()> {
    if decay.is_finite() && decay > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("decay length must be > 0, got {decay}")))
    }
}

#[inline]
fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Adaptive quadrature over consecutive panels `[b0,b1], [b1,b2], …`.
///
/// Breakpoints must be monotone (either direction); a reversed sequence
/// yields the negated integral.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: &Tolerances) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::invalid("need at least two breakpoints"));
    }
    if breakpoints.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidRange("non-finite breakpoint".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let p = Panel::new(&f, w[0], w[1]);
        evaluations += 15;
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    let mut subdivisions = heap.len();
    while error > tol.quad_target(value) {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        // Panel too narrow to split further: accept the remaining error.
        if mid == worst.a || mid == worst.b || subdivisions >= MAX_SUBDIVISIONS {
            if subdivisions >= MAX_SUBDIVISIONS {
                return Err(Error::NonConvergence {
                    subdivisions,
                    estimate: value,
                    abs_error: error,
                });
            }
            heap.push(worst);
            break;
        }
        let left = Panel::new(&f, worst.a, mid);
        let right = Panel::new(&f, mid, worst.b);
        evaluations += 30;
        subdivisions += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        abs_error: error,
        evaluations,
    })
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Self {
        let (value, error) = kronrod15(f, a, b);
        Panel { a, b, value, error }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64, 256] {
            let rule = gauss_legendre(n);
            assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            // x^(2n-2) over [-1,1] = 2/(2n-1)
            let deg = 2 * n - 2;
            let got = rule.integrate(|x| x.powi(deg as i32), -1.0, 1.0);
            let want = 2.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn kronrod_is_exact_for_degree_22() {
        // K15 integrates polynomials up to degree 22 exactly.
        let (v, _) = kronrod15(&|x: f64| x.powi(22) + x.powi(21), -1.0, 1.0);
        assert!((v - 2.0 / 23.0).abs() < 1e-15);
        let (v, _) = kronrod15(&|x: f64| 3.0 * x * x, 0.0, 2.0);
        assert!((v - 8.0).abs() < 1e-14);
    }

    #[test]
    fn constant_on_unit_interval() {
        let r = integrate_adaptive(|_| 1.0, Interval::Finite(0.0, 1.0), &tol()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standard_normal_over_whole_line() {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let r = integrate_adaptive(
            pdf,
            Interval::WholeLine {
                center: 0.0,
                decay: 1.0,
            },
            &tol(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn gaussian_cosine_closed_form() {
        // ∫ exp(-x²) cos(10x) dx = √π exp(-25)
        let exact = 2.461_573_958_461_511_417e-11;
        let r = integrate_adaptive(
            |x| (-x * x).exp() * (10.0 * x).cos(),
            Interval::WholeLine {
                center: 0.0,
                decay: 1.0,
            },
            &tol(),
        )
        .unwrap();
        assert!((r.value - exact).abs() < 1e-14, "{} vs {}", r.value, exact);
    }

    #[test]
    fn tails_and_reversed_limits() {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let upper = integrate_adaptive(pdf, Interval::UpperTail { from: 1.0, decay: 1.0 }, &tol()).unwrap();
        // ½ erfc(1/√2)
        assert!((upper.value - 0.158_655_253_931_457_05).abs() < 1e-12);
        let lower = integrate_adaptive(pdf, Interval::LowerTail { to: -1.0, decay: 1.0 }, &tol()).unwrap();
        assert!((lower.value - upper.value).abs() < 1e-12);
        let rev = integrate_adaptive(|x| x, Interval::Finite(2.0, 0.0), &tol()).unwrap();
        assert!((rev.value + 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate_adaptive(
            |x: f64| (1.0 / x).sin() / x,
            Interval::Finite(1e-9, 1.0),
            &Tolerances {
                quad_abs: 1e-15,
                quad_rel: 1e-15,
                ..tol()
            },
        );
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn kgrid_bounds_and_weights() {
        let g = build_kgrid(2.0, 0.2, 6.0, 256).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.k_min - 0.8).abs() < 1e-15 && (g.k_max - 3.2).abs() < 1e-15);
        assert!((g.weights.iter().sum::<f64>() - 2.4).abs() < 1e-13);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes.iter().all(|&k| k >= 0.0));
        assert!(g.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn kgrid_truncates_at_zero() {
        let g = build_kgrid(0.5, 0.2, 6.0, 64).unwrap();
        assert_eq!(g.k_min, 0.0);
        assert!(g.nodes[0] > 0.0);
    }

    #[test]
    fn kgrid_errors() {
        assert!(matches!(build_kgrid(-3.0, 0.2, 6.0, 128), Err(Error::InvalidRange(_))));
        assert!(matches!(
            build_kgrid(2.0, 0.2, 6.0, 32),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn phase_resolution_requirement() {
        let g = build_kgrid(2.0, 0.2, 6.0, 256).unwrap();
        // k_max² t / 2 = 51.2 rad at t = 10 → 8.15 periods → 66 nodes
        assert_eq!(g.required_nodes(10.0), 66);
        assert_eq!(g.required_nodes(0.0), 0);
    }
}
