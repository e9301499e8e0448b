//! Command-line front end: presets, scenario configuration, figure runs,
//! the verification suite and CSV emission.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod output;
mod verify;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{entries_preset, read_config_file, Method, Preset, ScenarioConfig};
pub use output::{fmt_f64, manifest_path, sibling, UNITS};
pub use verify::{run_verify, CheckResult, VerifyOptions};

use crate::error::Error;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(Error),
    /// Named failing checks.
    Verification(Vec<String>),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Verification(names) => write!(f, "verification failed: {}", names.join(", ")),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "quantile-motion", version, about = "Quantile trajectories of wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free Gaussian packet (loss rate ignored): CDF and ODE trajectories.
    Free(RunArgs),
    /// Gaussian packet with uniform loss rate λ.
    Dissipative(RunArgs),
    /// Packet scattering off a square barrier, against the free packet.
    Tunnel(RunArgs),
    /// ΔP beyond the barrier, direct and by the positive decomposition.
    DeltaP(RunArgs),
    /// Flow map of seeds on a sphere for a 3D Gaussian packet.
    Sphere3d(RunArgs),
    /// Runs the invariant suite; exit 1 names the failing checks.
    Verify(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Negates the probability current of every 1D model.
    FlipCurrent,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Built-in parameter set (fig1, fig2, fig3).
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` file applied over the preset (a manifest works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; a `.manifest` file is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated P values in (0, 1), strictly increasing.
    #[arg(long, allow_hyphen_values = true)]
    p_list: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_step: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    barrier_height: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    barrier_halfwidth: Option<f64>,
    #[arg(long)]
    k_nodes: Option<usize>,
    /// Trajectory method for `tunnel`: cdf or ode.
    #[arg(long)]
    method: Option<String>,
    /// Reduced grids.
    #[arg(long)]
    quick: bool,
    #[arg(long, hide = true, value_enum)]
    inject_fault: Option<Fault>,
}

impl RunArgs {
    /// Preset < config file < flags.
    fn resolve(&self, default: Preset) -> Result<ScenarioConfig, CliError> {
        let entries = match &self.config {
            Some(p) => read_config_file(p)?,
            None => Vec::new(),
        };
        let preset = match &self.preset {
            Some(s) => Preset::parse(s)?,
            None => entries_preset(&entries)?.unwrap_or(default),
        };
        let mut c = ScenarioConfig::preset(preset);
        c.apply_entries(&entries)?;
        if let Some(v) = &self.p_list {
            c.set("p_list", v)?;
        }
        let nums = [
            ("t_max", self.t_max),
            ("t_step", self.t_step),
            ("lambda", self.lambda),
            ("barrier_height", self.barrier_height),
            ("barrier_halfwidth", self.barrier_halfwidth),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                c.set(k, &format!("{v:?}"))?;
            }
        }
        if let Some(n) = self.k_nodes {
            c.k_nodes = n;
        }
        if let Some(m) = &self.method {
            c.set("method", m)?;
        }
        if self.quick {
            c.make_quick();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let start = Instant::now();
    let (name, args, default) = match &command {
        Command::Free(a) => ("free", a, Preset::Fig1),
        Command::Dissipative(a) => ("dissipative", a, Preset::Fig1),
        Command::Tunnel(a) => ("tunnel", a, Preset::Fig2),
        Command::DeltaP(a) => ("delta-p", a, Preset::Fig2),
        Command::Sphere3d(a) => ("sphere3d", a, Preset::Fig3),
        Command::Verify(a) => ("verify", a, Preset::Fig2),
    };
    let out = args.out.clone().unwrap_or_else(|| config::default_out(name));
    let cfg = args.resolve(default)?;
    let report = match command {
        Command::Free(_) => commands::cmd_free(&cfg, &out)?,
        Command::Dissipative(_) => commands::cmd_dissipative(&cfg, &out)?,
        Command::Tunnel(_) => commands::cmd_tunnel(&cfg, &out)?,
        Command::DeltaP(_) => commands::cmd_delta_p(&cfg, &out)?,
        Command::Sphere3d(_) => commands::cmd_sphere3d(&cfg, &out)?,
        Command::Verify(ref a) => {
            let opts = VerifyOptions {
                quick: a.quick,
                flip_current: a.inject_fault == Some(Fault::FlipCurrent),
            };
            return verify::cmd_verify(&opts, &cfg, &out, start);
        }
    };
    output::write_manifest(&out, name, &cfg, start.elapsed(), &report.verdicts, &report.notes)?;
    for v in &report.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    println!(
        "wrote {}",
        report
            .files
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
