use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::numerics::Tolerances;
use crate::quantile::time_grid;
use crate::tunneling::default_x_grid;
use crate::wavepacket::{presets, BarrierSpec, GaussianPacketParams};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            other => Err(CliError::config(format!(
                "unknown preset '{other}' (expected fig1, fig2 or fig3)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cdf,
    Ode,
}

/// Everything a run depends on. Written back verbatim into the manifest so
/// that `--config <out>.manifest` reproduces a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Preset,
    pub x_bar: f64,
    pub p_bar: f64,
    pub sigma_p: f64,
    pub mass: f64,
    pub lambda: f64,
    pub barrier_height: f64,
    pub barrier_halfwidth: f64,
    pub p_list: Vec<f64>,
    pub t_max: f64,
    pub t_step: f64,
    pub k_nodes: usize,
    pub n_sigma: f64,
    pub method: Method,
    pub snapshot_times: Vec<f64>,
    pub snapshot_dx: f64,
    pub dp_x_grid: Vec<f64>,
    pub dp_t_grid: Vec<f64>,
    pub n_lambda: usize,
    pub center_3d: [f64; 3],
    pub drift_3d: [f64; 3],
    pub sphere_radius: f64,
    pub tolerances: Tolerances,
}

fn p_range(from: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| round12(from + step * i as f64)).collect()
}

// keeps preset grids at their decimal values (0.15, not 0.15000000000000002)
fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let barrier = presets::barrier();
        let mut c = ScenarioConfig {
            preset,
            x_bar: presets::X_BAR,
            p_bar: presets::P_BAR,
            sigma_p: presets::SIGMA_P,
            mass: 1.0,
            lambda: 0.0,
            barrier_height: presets::BARRIER_HEIGHT,
            barrier_halfwidth: presets::BARRIER_HALF_WIDTH,
            p_list: Vec::new(),
            t_max: 10.0,
            t_step: 0.1,
            k_nodes: 256,
            n_sigma: 6.0,
            method: Method::Cdf,
            snapshot_times: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            snapshot_dx: 0.05,
            dp_x_grid: default_x_grid(&barrier),
            dp_t_grid: p_range(0.0, 1.0, 11),
            n_lambda: 64,
            center_3d: [0.0; 3],
            drift_3d: [0.0; 3],
            sphere_radius: 7.5,
            tolerances: Tolerances::default(),
        };
        match preset {
            Preset::Fig1 => {
                c.lambda = presets::LOSS_RATE;
                c.p_list = p_range(0.1, 0.2, 5);
                c.t_max = 20.0;
            }
            Preset::Fig2 => {
                c.p_list = p_range(0.1, 0.05, 13);
            }
            Preset::Fig3 => {
                c.p_bar = 0.0;
                c.x_bar = 0.0;
                c.t_step = 0.5;
            }
        }
        c
    }

    /// Coarser grids for smoke runs.
    pub fn make_quick(&mut self) {
        self.t_step = self.t_step.max(0.5);
        if self.p_list.len() > 3 {
            self.p_list = self.p_list.iter().step_by(3).copied().collect();
        }
        if self.dp_x_grid.len() > 4 {
            self.dp_x_grid = self.dp_x_grid.iter().step_by(4).copied().collect();
        }
        if self.dp_t_grid.len() > 3 {
            self.dp_t_grid = self.dp_t_grid.iter().step_by(5).copied().collect();
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "preset" => *self = ScenarioConfig::preset(Preset::parse(v)?),
            "x_bar" => self.x_bar = num(key, v)?,
            "p_bar" => self.p_bar = num(key, v)?,
            "sigma_p" => self.sigma_p = num(key, v)?,
            "mass" => self.mass = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "barrier_height" => self.barrier_height = num(key, v)?,
            "barrier_halfwidth" => self.barrier_halfwidth = num(key, v)?,
            "p_list" => self.p_list = list(key, v)?,
            "t_max" => self.t_max = num(key, v)?,
            "t_step" => self.t_step = num(key, v)?,
            "k_nodes" => self.k_nodes = int(key, v)?,
            "n_sigma" => self.n_sigma = num(key, v)?,
            "method" => {
                self.method = match v {
                    "cdf" => Method::Cdf,
                    "ode" => Method::Ode,
                    _ => return Err(CliError::config(format!("method must be cdf or ode, got '{v}'"))),
                }
            }
            "snapshot_times" => self.snapshot_times = list(key, v)?,
            "snapshot_dx" => self.snapshot_dx = num(key, v)?,
            "dp_x_grid" => self.dp_x_grid = list(key, v)?,
            "dp_t_grid" => self.dp_t_grid = list(key, v)?,
            "n_lambda" => self.n_lambda = int(key, v)?,
            "center_3d" => self.center_3d = triple(key, v)?,
            "drift_3d" => self.drift_3d = triple(key, v)?,
            "sphere_radius" => self.sphere_radius = num(key, v)?,
            "quad_rel" => self.tolerances.quad_rel = num(key, v)?,
            "quad_abs" => self.tolerances.quad_abs = num(key, v)?,
            "root_abs" => self.tolerances.root_abs = num(key, v)?,
            "ode_rel" => self.tolerances.ode_rel = num(key, v)?,
            "ode_abs" => self.tolerances.ode_abs = num(key, v)?,
            other => return Err(CliError::config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies settings read by [`read_config_file`]. A `preset` entry is
    /// skipped here: the caller picks the base preset before applying.
    pub fn apply_entries(&mut self, entries: &[(String, String)]) -> Result<(), CliError> {
        for (k, v) in entries.iter().filter(|(k, _)| k != "preset") {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let finite = [
            ("x_bar", self.x_bar),
            ("p_bar", self.p_bar),
            ("lambda", self.lambda),
            ("t_max", self.t_max),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return Err(CliError::config(format!("{k} must be finite")));
            }
        }
        if !(self.sigma_p > 0.0 && self.sigma_p.is_finite()) {
            return Err(CliError::config("sigma_p must be > 0"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(CliError::config("mass must be > 0"));
        }
        if self.lambda < 0.0 {
            return Err(CliError::config("lambda must be >= 0"));
        }
        if !(self.t_step > 0.0 && self.t_step.is_finite()) {
            return Err(CliError::config("t-step must be > 0"));
        }
        if self.t_max < 0.0 {
            return Err(CliError::config("t-max must be >= 0"));
        }
        if !(self.barrier_height >= 0.0 && self.barrier_height.is_finite()) {
            return Err(CliError::config("barrier height must be >= 0"));
        }
        if !(self.barrier_halfwidth > 0.0 && self.barrier_halfwidth.is_finite()) {
            return Err(CliError::config("barrier half-width must be > 0"));
        }
        if self.k_nodes < 64 {
            return Err(CliError::config("k-nodes must be >= 64"));
        }
        if !(self.n_sigma > 0.0 && self.n_sigma.is_finite()) {
            return Err(CliError::config("n_sigma must be > 0"));
        }
        if self.n_lambda < 16 {
            return Err(CliError::config("n_lambda must be >= 16"));
        }
        if !(self.snapshot_dx > 0.0 && self.snapshot_dx.is_finite()) {
            return Err(CliError::config("snapshot_dx must be > 0"));
        }
        if self
            .snapshot_times
            .iter()
            .chain(&self.dp_t_grid)
            .any(|&t| !(t >= 0.0 && t.is_finite()))
        {
            return Err(CliError::config("snapshot and delta-p times must be finite and >= 0"));
        }
        if !(self.sphere_radius > 0.0 && self.sphere_radius.is_finite()) {
            return Err(CliError::config("sphere_radius must be > 0"));
        }
        if self.center_3d.iter().chain(&self.drift_3d).any(|v| !v.is_finite()) {
            return Err(CliError::config("center_3d and drift_3d must be finite"));
        }
        self.tolerances
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    }

    /// Extra checks for commands that trace trajectories.
    pub fn validate_p_list(&self) -> Result<(), CliError> {
        if self.p_list.is_empty() {
            return Err(CliError::config("P-list is empty"));
        }
        if self.p_list.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(CliError::config("P values must lie in (0, 1)"));
        }
        if self.p_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config("P-list must be strictly increasing"));
        }
        Ok(())
    }

    pub fn packet(&self) -> Result<GaussianPacketParams, CliError> {
        GaussianPacketParams::from_momentum(self.x_bar, self.p_bar, self.sigma_p, self.mass)
            .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn barrier(&self) -> Result<BarrierSpec, CliError> {
        BarrierSpec::new(self.barrier_height, self.barrier_halfwidth).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        time_grid(0.0, self.t_max, self.t_step).map_err(|e| CliError::config(e.to_string()))
    }

    /// The config as `key = value` lines, floats in round-trip form.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("preset", self.preset.name().into());
        kv("x_bar", format!("{:?}", self.x_bar));
        kv("p_bar", format!("{:?}", self.p_bar));
        kv("sigma_p", format!("{:?}", self.sigma_p));
        kv("mass", format!("{:?}", self.mass));
        kv("lambda", format!("{:?}", self.lambda));
        kv("barrier_height", format!("{:?}", self.barrier_height));
        kv("barrier_halfwidth", format!("{:?}", self.barrier_halfwidth));
        kv("p_list", join(&self.p_list));
        kv("t_max", format!("{:?}", self.t_max));
        kv("t_step", format!("{:?}", self.t_step));
        kv("k_nodes", self.k_nodes.to_string());
        kv("n_sigma", format!("{:?}", self.n_sigma));
        kv(
            "method",
            match self.method {
                Method::Cdf => "cdf".into(),
                Method::Ode => "ode".into(),
            },
        );
        kv("snapshot_times", join(&self.snapshot_times));
        kv("snapshot_dx", format!("{:?}", self.snapshot_dx));
        kv("dp_x_grid", join(&self.dp_x_grid));
        kv("dp_t_grid", join(&self.dp_t_grid));
        kv("n_lambda", self.n_lambda.to_string());
        kv("center_3d", join(&self.center_3d));
        kv("drift_3d", join(&self.drift_3d));
        kv("sphere_radius", format!("{:?}", self.sphere_radius));
        kv("quad_rel", format!("{:?}", self.tolerances.quad_rel));
        kv("quad_abs", format!("{:?}", self.tolerances.quad_abs));
        kv("root_abs", format!("{:?}", self.tolerances.root_abs));
        kv("ode_rel", format!("{:?}", self.tolerances.ode_rel));
        kv("ode_abs", format!("{:?}", self.tolerances.ode_abs));
        s
    }
}

fn num(key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .map_err(|_| CliError::config(format!("{key}: cannot parse '{v}' as a number")))
}

fn int(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse::<usize>()
        .map_err(|_| CliError::config(format!("{key}: cannot parse '{v}' as an integer")))
}

/// Comma-separated numbers; an empty string is an empty list.
pub fn list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn triple(key: &str, v: &str) -> Result<[f64; 3], CliError> {
    let xs = list(key, v)?;
    xs.try_into()
        .map_err(|_| CliError::config(format!("{key}: expected three comma-separated numbers")))
}

/// Reads a flat `key = value` file; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(entries)
}

/// The `preset` entry of a config file, if any.
pub fn entries_preset(entries: &[(String, String)]) -> Result<Option<Preset>, CliError> {
    entries
        .iter()
        .rev()
        .find(|(k, _)| k == "preset")
        .map(|(_, v)| Preset::parse(v))
        .transpose()
}

pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from(format!("{command}.csv"))
}
