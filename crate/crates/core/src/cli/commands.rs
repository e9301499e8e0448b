use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Method, ScenarioConfig};
use super::output::{sibling, Csv, Field, Verdict};
use super::CliError;
use crate::quantile::{
    probability_in_volume, sphere_seeds, trace_flowmap_3d, trace_set, QuantileTrajectory, Termination, TraceMethod,
};
use crate::tunneling::{delta_p_report, retardation_scan, TunnelScenario};
use crate::wavepacket::{
    dissipative_gaussian_model, free_gaussian_model, gaussian3d_model, PacketModel, SpectralFunction,
};

/// Largest CDF/ODE gap accepted as agreement.
pub const EQUIVALENCE_TOL: f64 = 1e-5;
/// Lag tolerance of the retardation check.
pub const LAG_TOL: f64 = 1e-5;

pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

fn verdict(name: &str, passed: bool, detail: String) -> Verdict {
    Verdict {
        name: name.into(),
        passed,
        detail,
    }
}

pub fn termination_note(method: &str, tr: &QuantileTrajectory) -> String {
    let end = match tr.termination {
        Termination::Completed => "completed".to_string(),
        Termination::NormBelowP { t_end } => format!("norm-below-P t_end={t_end:?}"),
        Termination::VelocitySingular { t, x } => format!("velocity-singular t={t:?} x={x:?}"),
    };
    format!("termination P={:?} {method}: {end}", tr.p)
}

/// Sample pairs of two trajectories at common times.
fn paired<'a>(
    a: &'a QuantileTrajectory,
    b: &'a QuantileTrajectory,
) -> impl Iterator<
    Item = (
        &'a crate::quantile::TrajectorySample,
        &'a crate::quantile::TrajectorySample,
    ),
> {
    a.samples
        .iter()
        .filter_map(move |s| b.samples.iter().find(|o| o.t == s.t).map(|o| (s, o)))
}

fn trajectory_table<M: PacketModel + ?Sized>(
    model: &M,
    cfg: &ScenarioConfig,
    out: &Path,
) -> Result<RunReport, CliError> {
    cfg.validate_p_list()?;
    let times = cfg.times()?;
    let tol = cfg.tolerances;
    let cdf = trace_set(model, &cfg.p_list, &times, TraceMethod::Cdf, &tol)?;
    let ode = trace_set(model, &cfg.p_list, &times, TraceMethod::Ode, &tol)?;
    let mut csv = Csv::new(&["P", "t", "x_cdf", "v_cdf", "x_ode", "v_ode", "discrepancy", "status"]);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (c, o) in cdf.iter().zip(&ode) {
        for (a, b) in paired(c, o) {
            let d = (a.x - b.x).abs();
            if b.status == crate::quantile::SampleStatus::Ok {
                worst = worst.max(d);
            }
            csv.row(&[
                Field::F(c.p),
                Field::F(a.t),
                Field::F(a.x),
                Field::F(a.v),
                Field::F(b.x),
                Field::F(b.v),
                Field::F(d),
                Field::S(b.status.as_str()),
            ]);
        }
        notes.push(termination_note("cdf", c));
        notes.push(termination_note("ode", o));
    }
    csv.write(out)?;
    Ok(RunReport {
        files: vec![out.to_path_buf()],
        verdicts: vec![verdict(
            "method_equivalence",
            worst <= EQUIVALENCE_TOL,
            format!("max |x_cdf - x_ode| = {worst:.3e} (limit {EQUIVALENCE_TOL:e})"),
        )],
        notes,
    })
}

pub fn cmd_free(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let model = free_gaussian_model(cfg.packet()?);
    trajectory_table(&model, cfg, out)
}

pub fn cmd_dissipative(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let model = dissipative_gaussian_model(cfg.packet()?, cfg.lambda).map_err(|e| CliError::config(e.to_string()))?;
    trajectory_table(&model, cfg, out)
}

pub fn tunnel_scenario(cfg: &ScenarioConfig) -> Result<TunnelScenario, CliError> {
    let spectral = SpectralFunction::from_packet(&cfg.packet()?, cfg.n_sigma, cfg.k_nodes)
        .map_err(|e| CliError::config(e.to_string()))?;
    TunnelScenario::new(spectral, cfg.barrier()?).map_err(|e| CliError::config(e.to_string()))
}

fn trace_method(cfg: &ScenarioConfig) -> TraceMethod {
    match cfg.method {
        Method::Cdf => TraceMethod::Cdf,
        Method::Ode => TraceMethod::Ode,
    }
}

/// x-grid on multiples of `dx` covering both models' support at time `t`.
fn snapshot_grid<A: PacketModel, B: PacketModel>(a: &A, b: &B, t: f64, dx: f64) -> Vec<f64> {
    let (lo_a, hi_a) = a.support_hint(t);
    let (lo_b, hi_b) = b.support_hint(t);
    let lo = (lo_a.min(lo_b) / dx).floor() as i64;
    let hi = (hi_a.max(hi_b) / dx).ceil() as i64;
    (lo..=hi).map(|i| i as f64 * dx).collect()
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

pub fn cmd_tunnel(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    cfg.validate_p_list()?;
    let sc = tunnel_scenario(cfg)?;
    let times = cfg.times()?;
    let tol = cfg.tolerances;
    let method = trace_method(cfg);
    let tun = trace_set(&sc.tunneling, &cfg.p_list, &times, method, &tol)?;
    let free = trace_set(&sc.free, &cfg.p_list, &times, method, &tol)?;

    let mut csv = Csv::new(&["P", "t", "x_tunnel", "x_free", "lag", "v_tunnel", "v_free", "status"]);
    let mut notes = Vec::new();
    for (tr, fr) in tun.iter().zip(&free) {
        for (a, b) in paired(tr, fr) {
            csv.row(&[
                Field::F(tr.p),
                Field::F(a.t),
                Field::F(a.x),
                Field::F(b.x),
                Field::F(b.x - a.x),
                Field::F(a.v),
                Field::F(b.v),
                Field::S(a.status.as_str()),
            ]);
        }
        notes.push(termination_note("tunnel", tr));
        notes.push(termination_note("free", fr));
    }
    csv.write(out)?;

    let barrier = sc.barrier();
    let scan = retardation_scan(&free, &tun, &barrier, LAG_TOL)?;
    let worst_all = scan.iter().map(|v| v.worst_lag).fold(f64::INFINITY, f64::min);
    let worst_tr = scan
        .iter()
        .map(|v| v.worst_lag_transmitted)
        .fold(f64::INFINITY, f64::min);
    let n_tr: usize = scan.iter().map(|v| v.transmitted).sum();
    let mut verdicts = vec![
        verdict(
            "retardation_transmission_region",
            scan.iter().all(|v| v.holds_transmitted),
            if n_tr == 0 {
                "no tunneled samples beyond the barrier".to_string()
            } else {
                format!("min lag over {n_tr} samples with x_tunnel > a: {worst_tr:.3e}")
            },
        ),
        verdict(
            "lag_all_points",
            scan.iter().all(|v| v.holds_everywhere),
            format!("min lag over all samples: {worst_all:.3e}"),
        ),
    ];

    // density snapshots
    let density_path = sibling(out, "density");
    let blocks: Vec<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> = cfg
        .snapshot_times
        .par_iter()
        .map(|&t| -> Result<_, CliError> {
            sc.tunneling.check_time(t)?;
            let xs = snapshot_grid(&sc.tunneling, &sc.free, t, cfg.snapshot_dx);
            let st = sc.tunneling.snapshot(t);
            let sf = sc.free.snapshot(t);
            let rt = xs.iter().map(|&x| st.rho(x)).collect();
            let rf = xs.iter().map(|&x| sf.rho(x)).collect();
            Ok((t, xs, rt, rf))
        })
        .collect::<Result<_, _>>()?;
    let mut dcsv = Csv::new(&["t", "x", "rho_tunnel", "rho_free"]);
    let mut worst_norm = 0.0f64;
    for (t, xs, rt, rf) in &blocks {
        for i in 0..xs.len() {
            dcsv.row(&[Field::F(*t), Field::F(xs[i]), Field::F(rt[i]), Field::F(rf[i])]);
        }
        worst_norm = worst_norm
            .max((trapezoid(xs, rt) - 1.0).abs())
            .max((trapezoid(xs, rf) - 1.0).abs());
    }
    dcsv.write(&density_path)?;
    if !blocks.is_empty() {
        verdicts.push(verdict(
            "snapshot_norm",
            worst_norm <= 1e-6,
            format!(
                "max |integral rho - 1| over {} snapshots: {worst_norm:.3e}",
                blocks.len()
            ),
        ));
    }
    notes.push(format!(
        "packet transmission probability = {:?}",
        sc.tunneling.transmission_probability()
    ));
    Ok(RunReport {
        files: vec![out.to_path_buf(), density_path],
        verdicts,
        notes,
    })
}

pub fn cmd_delta_p(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let sc = tunnel_scenario(cfg)?;
    if cfg.dp_x_grid.is_empty() || cfg.dp_t_grid.is_empty() {
        return Err(CliError::config("delta-p grids must not be empty"));
    }
    let a = sc.barrier().half_width;
    if cfg.dp_x_grid.iter().any(|&x| !(x > a)) {
        return Err(CliError::config(format!(
            "delta-p positions must lie beyond the barrier (x > {a})"
        )));
    }
    let report = delta_p_report(&sc, &cfg.dp_x_grid, &cfg.dp_t_grid, cfg.n_lambda)?;
    let mut csv = Csv::new(&[
        "x",
        "t",
        "dp_direct",
        "term1",
        "term2",
        "term3",
        "dp_eq9_total",
        "agreement_rel",
        "positivity_ok",
    ]);
    for r in &report.rows {
        csv.row(&[
            Field::F(r.x),
            Field::F(r.t),
            Field::F(r.dp_direct),
            Field::F(r.terms.term1),
            Field::F(r.terms.term2),
            Field::F(r.terms.term3),
            Field::F(r.terms.total),
            Field::F(r.agreement_rel),
            Field::B(r.positivity_ok),
        ]);
    }
    csv.write(out)?;
    let bad_agree = report.rows.iter().filter(|r| !r.agrees()).count();
    Ok(RunReport {
        files: vec![out.to_path_buf()],
        verdicts: vec![
            verdict(
                "positivity",
                report.all_positive(),
                format!(
                    "{} of {} points positive",
                    report.rows.iter().filter(|r| r.positivity_ok).count(),
                    report.rows.len()
                ),
            ),
            verdict(
                "decomposition_agreement",
                bad_agree == 0,
                format!(
                    "{bad_agree} points outside 1% / 1e-6; worst relative {:.3e}",
                    report.worst_agreement()
                ),
            ),
        ],
        notes: Vec::new(),
    })
}

pub fn cmd_sphere3d(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let field = gaussian3d_model(cfg.center_3d, cfg.drift_3d, cfg.sigma_p, cfg.mass)
        .map_err(|e| CliError::config(e.to_string()))?;
    let seeds = sphere_seeds(cfg.center_3d, cfg.sphere_radius).map_err(|e| CliError::config(e.to_string()))?;
    let times = cfg.times()?;
    let tol = cfg.tolerances;
    let map = trace_flowmap_3d(&field, &seeds.points(), &times, &tol)?;
    let probs = (0..times.len())
        .into_par_iter()
        .map(|n| {
            let pts: Vec<[f64; 3]> = map.paths.iter().map(|p| p[n]).collect();
            probability_in_volume(&field, times[n], &pts[0], &pts[1..], &seeds.weights, &tol)
        })
        .collect::<crate::Result<Vec<f64>>>()?;
    let mut csv = Csv::new(&["seed_id", "t", "x", "y", "z", "radius", "enclosed_probability"]);
    for (n, &t) in times.iter().enumerate() {
        let c = map.paths[0][n];
        for (id, path) in map.paths.iter().enumerate() {
            let p = path[n];
            let r = (0..3).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>().sqrt();
            csv.row(&[
                Field::I(id),
                Field::F(t),
                Field::F(p[0]),
                Field::F(p[1]),
                Field::F(p[2]),
                Field::F(r),
                Field::F(probs[n]),
            ]);
        }
    }
    csv.write(out)?;
    let drift = probs.iter().map(|p| (p - probs[0]).abs()).fold(0.0, f64::max);
    let spread = (0..times.len()).map(|n| map.radius_spread(n)).fold(0.0, f64::max);
    Ok(RunReport {
        files: vec![out.to_path_buf()],
        verdicts: vec![
            verdict(
                "enclosed_probability_constant",
                drift <= 1e-4,
                format!("P(0) = {:.10}, max |P(t) - P(0)| = {drift:.3e}", probs[0]),
            ),
            verdict(
                "sphere_shape",
                spread <= 1e-5,
                format!("max relative radius spread {spread:.3e}"),
            ),
        ],
        notes: Vec::new(),
    })
}
