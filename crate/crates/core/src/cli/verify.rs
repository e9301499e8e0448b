use std::path::Path;
use std::time::Instant;

use super::commands::{tunnel_scenario, EQUIVALENCE_TOL, LAG_TOL};
use super::config::{Preset, ScenarioConfig};
use super::output::{write_manifest, Csv, Field, Verdict};
use super::CliError;
use crate::error::Result;
use crate::numerics::Tolerances;
use crate::quantile::{
    max_discrepancy, probability_in_volume, sphere_seeds, time_grid, trace_flowmap_3d, trace_set, QuantileTrajectory,
    SampleStatus, Termination, TraceMethod,
};
use crate::tunneling::{delta_p_report, retardation_scan};
use crate::wavepacket::{
    continuity_residual, dissipative_gaussian_model, free_gaussian_model, gaussian3d_model, presets, scattering_mode,
    PacketModel,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Reduced grids.
    pub quick: bool,
    /// Negate j in every 1D model (harness self-test).
    pub flip_current: bool,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity compared against `limit`.
    pub value: f64,
    pub limit: f64,
    pub detail: String,
    pub seconds: f64,
}

/// Wraps a model, optionally with the sign of the current flipped.
struct Probe<'a> {
    inner: &'a dyn PacketModel,
    sign: f64,
}

impl PacketModel for Probe<'_> {
    fn rho(&self, x: f64, t: f64) -> f64 {
        self.inner.rho(x, t)
    }
    fn current(&self, x: f64, t: f64) -> f64 {
        self.sign * self.inner.current(x, t)
    }
    fn density_and_current(&self, x: f64, t: f64) -> (f64, f64) {
        let (r, j) = self.inner.density_and_current(x, t);
        (r, self.sign * j)
    }
    fn loss(&self, x: f64, t: f64) -> f64 {
        self.inner.loss(x, t)
    }
    fn is_conserved(&self) -> bool {
        self.inner.is_conserved()
    }
    fn norm(&self, t: f64) -> f64 {
        self.inner.norm(t)
    }
    fn tail(&self, x: f64, t: f64) -> Result<f64> {
        self.inner.tail(x, t)
    }
    fn mass_between(&self, from: f64, to: f64, t: f64) -> Result<f64> {
        self.inner.mass_between(from, to, t)
    }
    fn tail_is_cheap(&self) -> bool {
        self.inner.tail_is_cheap()
    }
    fn loss_tail(&self, x: f64, t: f64) -> Result<f64> {
        self.inner.loss_tail(x, t)
    }
    fn support_hint(&self, t: f64) -> (f64, f64) {
        self.inner.support_hint(t)
    }
    fn width(&self, t: f64) -> f64 {
        self.inner.width(t)
    }
    fn peak_density(&self, t: f64) -> f64 {
        self.inner.peak_density(t)
    }
    fn check_time(&self, t: f64) -> Result<()> {
        self.inner.check_time(t)
    }
}

struct Sizes {
    t_step_1d: f64,
    tunnel_ps: Vec<f64>,
    tunnel_step: f64,
    retard_ps: Vec<f64>,
    retard_step: f64,
    dp_xs: usize,
    dp_ts: Vec<f64>,
    step_3d: f64,
    cont_step: f64,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Sizes {
                t_step_1d: 0.5,
                tunnel_ps: vec![0.1, 0.4, 0.7],
                tunnel_step: 0.5,
                retard_ps: vec![0.005, 0.01, 0.1],
                retard_step: 1.0,
                dp_xs: 3,
                dp_ts: vec![2.0, 6.0, 10.0],
                step_3d: 1.0,
                cont_step: 3.0,
            }
        } else {
            Sizes {
                t_step_1d: 0.1,
                tunnel_ps: ScenarioConfig::preset(Preset::Fig2).p_list,
                tunnel_step: 0.1,
                retard_ps: vec![0.005, 0.01, 0.015, 0.02, 0.1, 0.3, 0.5, 0.7],
                retard_step: 0.25,
                dp_xs: 12,
                dp_ts: (0..=10).map(f64::from).collect(),
                step_3d: 0.5,
                cont_step: 1.0,
            }
        }
    }
}

/// Local-scale floor of the continuity check, relative to the peak density.
pub const CONTINUITY_FLOOR: f64 = 1e-6;
pub const CONTINUITY_TOL: f64 = 1e-4;

/// Worst ratio residual / (1e-4 · local scale) over the grid; ≤ 1 passes.
pub fn continuity_ratio<M: PacketModel + ?Sized>(model: &M, xs: &[f64], ts: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &t in ts {
        let floor = CONTINUITY_FLOOR * model.peak_density(t);
        for &x in xs {
            let (r, scale) = continuity_residual(model, x, t, 1e-4);
            worst = worst.max(r / (CONTINUITY_TOL * scale.max(floor)));
        }
    }
    worst
}

fn timed(name: &'static str, limit: f64, f: impl FnOnce() -> Result<(bool, f64, String)>) -> CheckResult {
    let start = Instant::now();
    let (passed, value, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, f64::NAN, format!("error: {e}")),
    };
    CheckResult {
        name,
        passed,
        value,
        limit,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn worst_equivalence(cdf: &[QuantileTrajectory], ode: &[QuantileTrajectory]) -> f64 {
    cdf.iter()
        .zip(ode)
        .map(|(c, o)| max_discrepancy(c, o))
        .fold(0.0, f64::max)
}

/// Re-inverts every 100th emitted row: |tail(x) − P|.
fn round_trip<M: PacketModel + ?Sized>(model: &M, trajs: &[QuantileTrajectory]) -> Result<(usize, f64)> {
    let mut worst = 0.0f64;
    let mut n = 0;
    for (i, (tr, s)) in trajs
        .iter()
        .flat_map(|tr| tr.samples.iter().map(move |s| (tr, s)))
        .enumerate()
    {
        if i % 100 == 0 {
            worst = worst.max((model.tail(s.x, s.t)? - tr.p).abs());
            n += 1;
        }
    }
    Ok((n, worst))
}

/// Runs the invariant suite; a check that errors counts as failed.
pub fn run_verify(opts: &VerifyOptions) -> Vec<CheckResult> {
    let sz = Sizes::new(opts.quick);
    let sign = if opts.flip_current { -1.0 } else { 1.0 };
    let tol = Tolerances::default();
    let fig1 = ScenarioConfig::preset(Preset::Fig1);
    let fig2 = ScenarioConfig::preset(Preset::Fig2);
    let free = free_gaussian_model(presets::packet());
    let lossy = dissipative_gaussian_model(presets::packet(), presets::LOSS_RATE).expect("preset loss rate");
    let sc = tunnel_scenario(&fig2).expect("fig2 preset");
    let free_p = Probe { inner: &free, sign };
    let lossy_p = Probe { inner: &lossy, sign };
    let tun_p = Probe {
        inner: &sc.tunneling,
        sign,
    };
    let mut out = Vec::new();
    let mut emitted: Vec<(usize, Vec<QuantileTrajectory>)> = Vec::new();

    out.push(timed("method_equivalence_free", 1e-5, || {
        let grid = time_grid(0.0, 20.0, sz.t_step_1d)?;
        let cdf = trace_set(&free_p, &fig1.p_list, &grid, TraceMethod::Cdf, &tol)?;
        let ode = trace_set(&free_p, &fig1.p_list, &grid, TraceMethod::Ode, &tol)?;
        let mut closed = 0.0f64;
        for tr in cdf.iter().chain(&ode) {
            for s in &tr.samples {
                closed = closed.max((s.x - free.closed_form_quantile(tr.p, s.t)?).abs());
            }
        }
        let w = worst_equivalence(&cdf, &ode).max(closed);
        emitted.push((0, cdf));
        Ok((
            w <= EQUIVALENCE_TOL,
            w,
            format!("max gap to closed form or between methods {w:.3e}"),
        ))
    }));

    out.push(timed("dissipative_termination", 1e-6, || {
        let grid = time_grid(0.0, 25.0, sz.t_step_1d)?;
        let cdf = trace_set(&lossy_p, &fig1.p_list, &grid, TraceMethod::Cdf, &tol)?;
        let ode = trace_set(&lossy_p, &fig1.p_list, &grid, TraceMethod::Ode, &tol)?;
        let mut worst_end = 0.0f64;
        let mut missing = 0;
        for tr in cdf.iter().chain(&ode) {
            let want = -tr.p.ln() / presets::LOSS_RATE;
            match tr.termination {
                Termination::NormBelowP { t_end } if want <= 25.0 => worst_end = worst_end.max((t_end - want).abs()),
                Termination::Completed if want > 25.0 => {}
                _ => missing += 1,
            }
        }
        let gap = worst_equivalence(&cdf, &ode);
        let ok = missing == 0 && worst_end <= 1e-6 && gap <= EQUIVALENCE_TOL;
        emitted.push((1, cdf));
        Ok((
            ok,
            worst_end,
            format!(
                "max |t_end - (-ln P)/lambda| {worst_end:.3e}, wrong terminations {missing}, CDF/ODE gap {gap:.3e}"
            ),
        ))
    }));

    out.push(timed("method_equivalence_tunnel", EQUIVALENCE_TOL, || {
        let grid = time_grid(0.0, 10.0, sz.tunnel_step)?;
        let cdf = trace_set(&tun_p, &sz.tunnel_ps, &grid, TraceMethod::Cdf, &tol)?;
        let ode = trace_set(&tun_p, &sz.tunnel_ps, &grid, TraceMethod::Ode, &tol)?;
        let fallbacks = ode
            .iter()
            .flat_map(|o| &o.samples)
            .filter(|s| s.status == SampleStatus::CdfFallback)
            .count();
        let w = worst_equivalence(&cdf, &ode);
        emitted.push((2, cdf));
        Ok((
            w <= EQUIVALENCE_TOL,
            w,
            format!("max |x_cdf - x_ode| {w:.3e} ({fallbacks} cdf-fallback samples)"),
        ))
    }));

    out.push(timed("unitarity", 1e-6, || {
        let mut flux = 0.0f64;
        for &k in &sc.tunneling.spectral.grid.nodes {
            let m = scattering_mode(k, sc.barrier())?;
            flux = flux.max((m.transmission_probability() + m.reflection_probability() - 1.0).abs());
        }
        let mut norm = 0.0f64;
        for t in [0.0, 5.0, 10.0] {
            let lo = sc.tunneling.support_hint(t).0;
            norm = norm.max((sc.tunneling.tail(lo, t)? - 1.0).abs());
        }
        Ok((
            flux <= 1e-12 && norm <= 1e-6,
            norm,
            format!("max ||R|^2 + |T|^2 - 1| {flux:.3e}; max |norm - 1| {norm:.3e}"),
        ))
    }));

    out.push(timed("continuity", 1.0, || {
        let n = (30.0 / sz.cont_step).round() as usize;
        let xs: Vec<f64> = (0..=n).map(|i| -15.0 + sz.cont_step * i as f64).collect();
        let ts = [1.0, 3.0, 5.0, 7.0, 9.0];
        let r_free = continuity_ratio(&free_p, &xs.iter().map(|x| x - 5.0).collect::<Vec<_>>(), &ts);
        let r_lossy = continuity_ratio(&lossy_p, &xs.iter().map(|x| x - 5.0).collect::<Vec<_>>(), &ts);
        let r_tun = continuity_ratio(&tun_p, &xs, &ts);
        let w = r_free.max(r_lossy).max(r_tun);
        Ok((
            w <= 1.0,
            w,
            format!("residual / (1e-4 local scale): free {r_free:.2e}, dissipative {r_lossy:.2e}, tunnel {r_tun:.2e}"),
        ))
    }));

    out.push(timed("retardation", LAG_TOL, || {
        let grid = time_grid(0.0, 12.0, sz.retard_step)?;
        let t = trace_set(&tun_p, &sz.retard_ps, &grid, TraceMethod::Cdf, &tol)?;
        let f = trace_set(&sc.free, &sz.retard_ps, &grid, TraceMethod::Cdf, &tol)?;
        let scan = retardation_scan(&f, &t, &sc.barrier(), LAG_TOL)?;
        let n: usize = scan.iter().map(|v| v.transmitted).sum();
        let worst = scan
            .iter()
            .map(|v| v.worst_lag_transmitted)
            .fold(f64::INFINITY, f64::min);
        Ok((
            n > 0 && scan.iter().all(|v| v.holds_transmitted),
            worst,
            format!("min lag x_free - x_tunnel over {n} samples beyond the barrier: {worst:.3e}"),
        ))
    }));

    out.push(timed("delta_p_decomposition", 0.01, || {
        let xs: Vec<f64> = fig2.dp_x_grid.iter().step_by(12 / sz.dp_xs).copied().collect();
        let rep = delta_p_report(&sc, &xs, &sz.dp_ts, fig2.n_lambda)?;
        Ok((
            rep.all_positive() && rep.all_agree(),
            rep.worst_agreement(),
            format!(
                "{} points, all positive: {}, worst relative agreement {:.3e}",
                rep.rows.len(),
                rep.all_positive(),
                rep.worst_agreement()
            ),
        ))
    }));

    out.push(timed("conservation_3d", 1e-4, || {
        let field = gaussian3d_model([0.0; 3], [0.0; 3], presets::SIGMA_P, 1.0)?;
        let seeds = sphere_seeds([0.0; 3], 7.5)?;
        let times = time_grid(0.0, 10.0, sz.step_3d)?;
        let map = trace_flowmap_3d(&field, &seeds.points(), &times, &tol)?;
        let mut drift = 0.0f64;
        let mut spread = 0.0f64;
        let mut p0 = None;
        for n in 0..times.len() {
            let pts: Vec<[f64; 3]> = map.paths.iter().map(|p| p[n]).collect();
            let p = probability_in_volume(&field, times[n], &pts[0], &pts[1..], &seeds.weights, &tol)?;
            let p0 = *p0.get_or_insert(p);
            drift = drift.max((p - p0).abs());
            spread = spread.max(map.radius_spread(n));
        }
        Ok((
            drift <= 1e-4 && spread <= 1e-5,
            drift,
            format!("max |P(t) - P(0)| {drift:.3e}, radius spread {spread:.3e}"),
        ))
    }));

    out.push(timed("inversion_round_trip", 1e-8, || {
        let mut worst = 0.0f64;
        let mut n = 0;
        for (which, trajs) in &emitted {
            let model: &dyn PacketModel = match which {
                0 => &free,
                1 => &lossy,
                _ => &sc.tunneling,
            };
            let (k, w) = round_trip(model, trajs)?;
            n += k;
            worst = worst.max(w);
        }
        Ok((
            n > 0 && worst <= 1e-8,
            worst,
            format!("{n} rows re-inverted, max |tail(x) - P| {worst:.3e}"),
        ))
    }));
    out
}

/// `verify` subcommand: report to stdout and CSV, exit 1 naming failures.
pub fn cmd_verify(
    opts: &VerifyOptions,
    cfg: &ScenarioConfig,
    out: &Path,
    start: Instant,
) -> std::result::Result<(), CliError> {
    let results = run_verify(opts);
    let mut csv = Csv::new(&["check", "passed", "value", "limit", "seconds", "detail"]);
    for r in &results {
        println!(
            "{} {:<28} {:>7.2}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.detail
        );
        let detail = r.detail.replace(',', ";");
        csv.row(&[
            Field::S(r.name),
            Field::B(r.passed),
            Field::F(r.value),
            Field::F(r.limit),
            Field::F(r.seconds),
            Field::S(&detail),
        ]);
    }
    csv.write(out)?;
    let verdicts: Vec<Verdict> = results
        .iter()
        .map(|r| Verdict {
            name: r.name.into(),
            passed: r.passed,
            detail: r.detail.clone(),
        })
        .collect();
    let mut notes = vec![format!("quick = {}", opts.quick)];
    if opts.flip_current {
        notes.push("fault injected: flip-current".into());
    }
    write_manifest(out, "verify", cfg, start.elapsed(), &verdicts, &notes)?;
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.to_string())
        .collect();
    if failed.is_empty() {
        println!("all {} checks passed", results.len());
        Ok(())
    } else {
        Err(CliError::Verification(failed))
    }
}
