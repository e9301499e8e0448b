use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(
        "quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {abs_error:e})"
    )]
    NonConvergence {
        subdivisions: usize,
        estimate: f64,
        abs_error: f64,
    },

    #[error("no sign change on bracket [{lo}, {hi}]: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}")]
    NoSignChange { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("ODE step size underflow at t = {t}, x = {x} (h = {h:e})")]
    StepUnderflow { t: f64, x: f64, h: f64 },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("scattering mode requires k > 0, got {0}")]
    DegenerateK(f64),

    #[error("k-grid too coarse at t = {t}: {required} nodes required, {available} available")]
    GridTooCoarse { t: f64, required: usize, available: usize },

    #[error("quantile P = {p} does not exist at t = {t}: total norm {norm} <= P")]
    NormBelowP { p: f64, t: f64, norm: f64 },

    #[error("quantile velocity singular at t = {t}, x = {x}: density {rho:e} below floor")]
    VelocitySingular { t: f64, x: f64, rho: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
