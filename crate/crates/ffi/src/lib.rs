//! C interface to the quantile-motion library.
//!
//! Models and trajectories are opaque handles created by `qm_*_new` /
//! `qm_trace` and released with the matching `*_free`. Every fallible call
//! returns a [`QmStatus`]; on failure `qm_last_error_message` describes the
//! last error raised on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use quantile_motion::numerics::Tolerances;
use quantile_motion::quantile::{
    quantile_position, quantile_velocity, tail_probability, trace_trajectory_cdf, trace_trajectory_ode,
    QuantileTrajectory, SampleStatus, Termination,
};
use quantile_motion::wavepacket::{
    dissipative_gaussian_model, free_gaussian_model, free_reference_model, tunneling_packet_model, BarrierSpec,
    DissipativeGaussian, FreeGaussian, GaussianPacketParams, PacketModel, ScatteringPacket, SpectralFunction,
};
use quantile_motion::Error;

/// Spectral truncation used by the wave-number grid of scattering packets.
const N_SIGMA: f64 = 6.0;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    NoSignChange = 4,
    StepUnderflow = 5,
    GridTooCoarse = 6,
    NormBelowP = 7,
    VelocitySingular = 8,
    /// The model does not support the operation.
    Unsupported = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmMethod {
    Cdf = 0,
    Ode = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmTermination {
    Completed = 0,
    NormBelowP = 1,
    VelocitySingular = 2,
}

enum Inner {
    Free(FreeGaussian),
    Dissipative(DissipativeGaussian),
    Scattering(ScatteringPacket),
}

/// Opaque 1D packet model.
pub struct QmModel {
    inner: Inner,
}

impl QmModel {
    fn model(&self) -> &dyn PacketModel {
        match &self.inner {
            Inner::Free(m) => m,
            Inner::Dissipative(m) => m,
            Inner::Scattering(m) => m,
        }
    }
}

/// Opaque traced trajectory.
pub struct QmTrajectory {
    inner: QuantileTrajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QmStatus {
    match e {
        Error::NonConvergence { .. } => QmStatus::NonConvergence,
        Error::NoSignChange { .. } => QmStatus::NoSignChange,
        Error::StepUnderflow { .. } => QmStatus::StepUnderflow,
        Error::InvalidRange(_) | Error::DegenerateK(_) | Error::InvalidParameter(_) => QmStatus::InvalidArgument,
        Error::GridTooCoarse { .. } => QmStatus::GridTooCoarse,
        Error::NormBelowP { .. } => QmStatus::NormBelowP,
        Error::VelocitySingular { .. } => QmStatus::VelocitySingular,
    }
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (QmStatus, String)>) -> QmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QmStatus::Panic
        }
    }
}

fn lib<T>(r: quantile_motion::Result<T>) -> Result<T, (QmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QmStatus, String) {
    (QmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(m: *const QmModel) -> Result<&'a QmModel, (QmStatus, String)> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (QmStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn emit_model(out: *mut *mut QmModel, inner: Inner) -> Result<(), (QmStatus, String)> {
    write_out(out, Box::into_raw(Box::new(QmModel { inner })))
}

fn packet(x_bar: f64, p_bar: f64, sigma_p: f64, mass: f64) -> Result<GaussianPacketParams, (QmStatus, String)> {
    lib(GaussianPacketParams::from_momentum(x_bar, p_bar, sigma_p, mass))
}

/// Free Gaussian packet with mean position `x_bar`, momentum `p_bar`,
/// momentum width `sigma_p` and mass `mass` (ħ = 1).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qm_free_gaussian_new(
    x_bar: f64,
    p_bar: f64,
    sigma_p: f64,
    mass: f64,
    out: *mut *mut QmModel,
) -> QmStatus {
    guard(|| {
        let p = packet(x_bar, p_bar, sigma_p, mass)?;
        emit_model(out, Inner::Free(free_gaussian_model(p)))
    })
}

/// Gaussian packet losing probability at the uniform rate `lambda`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qm_dissipative_gaussian_new(
    x_bar: f64,
    p_bar: f64,
    sigma_p: f64,
    mass: f64,
    lambda: f64,
    out: *mut *mut QmModel,
) -> QmStatus {
    guard(|| {
        let p = packet(x_bar, p_bar, sigma_p, mass)?;
        emit_model(out, Inner::Dissipative(lib(dissipative_gaussian_model(p, lambda))?))
    })
}

/// Gaussian packet (m = ħ = 1) scattering off the barrier of height
/// `barrier_height` on |x| ≤ `barrier_halfwidth`, superposed over `k_nodes`
/// wave numbers.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qm_tunneling_packet_new(
    x_bar: f64,
    p_bar: f64,
    sigma_p: f64,
    barrier_height: f64,
    barrier_halfwidth: f64,
    k_nodes: usize,
    out: *mut *mut QmModel,
) -> QmStatus {
    guard(|| {
        let p = packet(x_bar, p_bar, sigma_p, 1.0)?;
        let s = lib(SpectralFunction::from_packet(&p, N_SIGMA, k_nodes))?;
        let b = lib(BarrierSpec::new(barrier_height, barrier_halfwidth))?;
        emit_model(out, Inner::Scattering(lib(tunneling_packet_model(s, b))?))
    })
}

/// The free packet with the same truncated spectrum as
/// `qm_tunneling_packet_new`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qm_free_reference_new(
    x_bar: f64,
    p_bar: f64,
    sigma_p: f64,
    k_nodes: usize,
    out: *mut *mut QmModel,
) -> QmStatus {
    guard(|| {
        let p = packet(x_bar, p_bar, sigma_p, 1.0)?;
        let s = lib(SpectralFunction::from_packet(&p, N_SIGMA, k_nodes))?;
        emit_model(out, Inner::Scattering(free_reference_model(s)))
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from a `qm_*_new` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qm_model_free(model: *mut QmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Density ρ and current j at (x, t).
///
/// # Safety
/// `model` must be a live handle; `rho` and `current` valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn qm_density(
    model: *const QmModel,
    x: f64,
    t: f64,
    rho: *mut f64,
    current: *mut f64,
) -> QmStatus {
    guard(|| {
        let m = model_ref(model)?.model();
        lib(m.check_time(t))?;
        let (r, j) = m.density_and_current(x, t);
        write_out(rho, r)?;
        write_out(current, j)
    })
}

/// Tail probability ∫ₓ^∞ ρ(x′, t) dx′.
///
/// # Safety
/// `model` must be a live handle; `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_tail_probability(model: *const QmModel, x: f64, t: f64, out: *mut f64) -> QmStatus {
    guard(|| {
        let m = model_ref(model)?.model();
        write_out(out, lib(tail_probability(m, x, t))?)
    })
}

/// Position x with tail probability `p` at time `t`.
///
/// # Safety
/// `model` must be a live handle; `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_quantile_position(model: *const QmModel, p: f64, t: f64, out: *mut f64) -> QmStatus {
    guard(|| {
        let m = model_ref(model)?.model();
        write_out(out, lib(quantile_position(m, p, t))?)
    })
}

/// Quantile velocity at (x, t).
///
/// # Safety
/// `model` must be a live handle; `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_quantile_velocity(model: *const QmModel, x: f64, t: f64, out: *mut f64) -> QmStatus {
    guard(|| {
        let m = model_ref(model)?.model();
        write_out(out, lib(quantile_velocity(m, x, t))?)
    })
}

/// Σ |T(k)|² |ψ̃(k)|² over the grid; `Unsupported` for Gaussian models.
///
/// # Safety
/// `model` must be a live handle; `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qm_transmission_probability(model: *const QmModel, out: *mut f64) -> QmStatus {
    guard(|| match &model_ref(model)?.inner {
        Inner::Scattering(s) => write_out(out, s.transmission_probability()),
        _ => Err((QmStatus::Unsupported, "model has no barrier".into())),
    })
}

/// Traces the quantile `p` over the strictly increasing `times`.
///
/// # Safety
/// `model` must be a live handle, `times` must point to `n_times` doubles
/// and `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qm_trace(
    model: *const QmModel,
    p: f64,
    times: *const f64,
    n_times: usize,
    method: QmMethod,
    out: *mut *mut QmTrajectory,
) -> QmStatus {
    guard(|| {
        let m = model_ref(model)?.model();
        if times.is_null() {
            return Err(null("times"));
        }
        let grid = std::slice::from_raw_parts(times, n_times);
        let tol = Tolerances::default();
        let tr = lib(match method {
            QmMethod::Cdf => trace_trajectory_cdf(m, p, grid, &tol),
            QmMethod::Ode => trace_trajectory_ode(m, p, grid, &tol),
        })?;
        write_out(out, Box::into_raw(Box::new(QmTrajectory { inner: tr })))
    })
}

/// Number of samples; 0 for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qm_trajectory_len(traj: *const QmTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.samples.len())
}

/// Sample `i`: time, position, velocity and status (0 ok, 1 cdf-fallback).
///
/// # Safety
/// `traj` must be a live handle; output pointers valid and writable.
#[no_mangle]
pub unsafe extern "C" fn qm_trajectory_sample(
    traj: *const QmTrajectory,
    i: usize,
    t: *mut f64,
    x: *mut f64,
    v: *mut f64,
    status: *mut c_int,
) -> QmStatus {
    guard(|| {
        let tr = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let s = tr.inner.samples.get(i).ok_or_else(|| {
            (
                QmStatus::InvalidArgument,
                format!("sample {i} out of range ({} samples)", tr.inner.samples.len()),
            )
        })?;
        write_out(t, s.t)?;
        write_out(x, s.x)?;
        write_out(v, s.v)?;
        write_out(
            status,
            match s.status {
                SampleStatus::Ok => 0,
                SampleStatus::CdfFallback => 1,
            },
        )
    })
}

/// How the trajectory ended; `time` receives t_end (NormBelowP), the time
/// of the singularity (VelocitySingular) or the last sample time.
///
/// # Safety
/// `traj` must be a live handle; output pointers valid and writable.
#[no_mangle]
pub unsafe extern "C" fn qm_trajectory_termination(
    traj: *const QmTrajectory,
    kind: *mut QmTermination,
    time: *mut f64,
) -> QmStatus {
    guard(|| {
        let tr = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let (k, t) = match tr.inner.termination {
            Termination::Completed => (
                QmTermination::Completed,
                tr.inner.final_sample().map_or(f64::NAN, |s| s.t),
            ),
            Termination::NormBelowP { t_end } => (QmTermination::NormBelowP, t_end),
            Termination::VelocitySingular { t, .. } => (QmTermination::VelocitySingular, t),
        };
        write_out(kind, k)?;
        write_out(time, t)
    })
}

/// Releases a trajectory; null is ignored.
///
/// # Safety
/// `traj` must come from `qm_trace` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qm_trajectory_free(traj: *mut QmTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Message of the last failed call on this thread (empty if none). The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn qm_status_message(status: QmStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        QmStatus::Ok => b"ok\0",
        QmStatus::NullPointer => b"null pointer argument\0",
        QmStatus::InvalidArgument => b"invalid argument\0",
        QmStatus::NonConvergence => b"quadrature did not converge\0",
        QmStatus::NoSignChange => b"root not bracketed\0",
        QmStatus::StepUnderflow => b"ODE step size underflow\0",
        QmStatus::GridTooCoarse => b"wave-number grid too coarse for this time\0",
        QmStatus::NormBelowP => b"norm below P: quantile does not exist\0",
        QmStatus::VelocitySingular => b"quantile velocity singular\0",
        QmStatus::Unsupported => b"operation not supported by this model\0",
        QmStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Library version, NUL-terminated.
#[no_mangle]
pub extern "C" fn qm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
