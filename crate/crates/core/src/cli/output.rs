use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::config::ScenarioConfig;
use super::CliError;

pub const UNITS: &str =
    "# units: hbar = m = 1; x in hbar/sqrt(eV*m), t in hbar/eV, v in sqrt(eV/m), probabilities dimensionless";

pub enum Field<'a> {
    F(f64),
    I(usize),
    S(&'a str),
    B(bool),
}

/// CSV assembled in memory: unit comment, header, rows; LF line endings.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = String::new();
        text.push_str(UNITS);
        text.push('\n');
        text.push_str(&header.join(","));
        text.push('\n');
        Csv {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[Field<'_>]) {
        debug_assert_eq!(fields.len(), self.columns);
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = match f {
                Field::F(v) => write!(self.text, "{}", fmt_f64(*v)),
                Field::I(v) => write!(self.text, "{v}"),
                Field::S(s) => write!(self.text, "{s}"),
                Field::B(b) => write!(self.text, "{b}"),
            };
        }
        self.text.push('\n');
    }

    #[cfg(test)]
    fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, &self.text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `<stem>_<suffix>.csv` next to `out`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// One verdict recorded in a manifest.
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Header lines are comments, the body is the config echo, so the manifest
/// itself is a valid `--config` file.
pub fn write_manifest(
    out: &Path,
    command: &str,
    config: &ScenarioConfig,
    elapsed: Duration,
    verdicts: &[Verdict],
    notes: &[String],
) -> Result<PathBuf, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "# quantile-motion {} run manifest", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# command = {command}");
    let _ = writeln!(s, "# data = {}", out.display());
    let _ = writeln!(s, "{UNITS}");
    let _ = writeln!(s, "# wall_clock_s = {:.3}", elapsed.as_secs_f64());
    for v in verdicts {
        let _ = writeln!(
            s,
            "# check {} = {} ({})",
            v.name,
            if v.passed { "pass" } else { "fail" },
            v.detail
        );
    }
    for n in notes {
        let _ = writeln!(s, "# {n}");
    }
    s.push_str(&config.to_text());
    let path = manifest_path(out);
    std::fs::write(&path, s).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
