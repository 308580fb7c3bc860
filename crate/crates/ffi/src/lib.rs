//! C ABI over `dimer_optics`.
//!
//! Every fallible call returns a [`DoptStatus`]; on failure the message is
//! available from [`dopt_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Rate matrices are
//! row-major `[from][to]`, in eV.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dimer_optics::bath::BathSpec;
use dimer_optics::dynamics::{self, RateMatrix};
use dimer_optics::eigen::{self, CaseTag, EigenSystem};
use dimer_optics::model::{CouplingMatrix, DimerConfig, DipoleSet, Monomer};
use dimer_optics::polaron::{self, PolaronKernels, RateFrequency};
use dimer_optics::{cli, Error, ErrorCategory, Vec3};

/// Status codes; the non-zero values match the command-line exit codes
/// where a category exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoptStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    Numeric = 3,
    Secular = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoptCase {
    DirectA = 0,
    IndirectB = 1,
    MixedC = 2,
    Numeric = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoptVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Monomer in eV and Debye.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoptMonomer {
    pub energy: f64,
    pub mu: DoptVec3,
    pub perm_ground: DoptVec3,
    pub perm_excited: DoptVec3,
}

/// Symmetric electrostatic couplings, eV.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoptCoupling {
    pub q00: f64,
    pub q11: f64,
    pub q22: f64,
    pub q01: f64,
    pub q02: f64,
    pub q12: f64,
}

/// Opaque dimer configuration.
pub struct DoptDimer {
    cfg: DimerConfig,
}

/// Opaque eigen-decomposition of a dimer.
pub struct DoptEigen {
    es: EigenSystem,
    cfg: DimerConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

macro_rules! lib_err {
    ($e:expr) => {
        $e.map_err(|e| Failure::Lib(Error::from(e)))
    };
}

fn status_of(cat: ErrorCategory) -> DoptStatus {
    match cat {
        ErrorCategory::Io => DoptStatus::Io,
        ErrorCategory::Config => DoptStatus::Config,
        ErrorCategory::Numeric => DoptStatus::Numeric,
        ErrorCategory::Secular => DoptStatus::Secular,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            DoptStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(e.category())
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            DoptStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DoptStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn vec3(v: DoptVec3) -> Vec3 {
    Vec3::new(v.x, v.y, v.z)
}

fn monomer(m: &DoptMonomer) -> Result<Monomer, Failure> {
    lib_err!(Monomer::new(m.energy, DipoleSet::new(vec3(m.mu), vec3(m.perm_ground), vec3(m.perm_excited))))
}

fn rate_matrix(rates: &[f64; 9]) -> RateMatrix {
    RateMatrix::from_rates([
        [rates[0], rates[1], rates[2]],
        [rates[3], rates[4], rates[5]],
        [rates[6], rates[7], rates[8]],
    ])
}

// ---------------------------------------------------------------------------

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn dopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn dopt_dimer_new(
    monomer1: *const DoptMonomer,
    monomer2: *const DoptMonomer,
    coupling: *const DoptCoupling,
    out: *mut *mut DoptDimer,
) -> DoptStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let (m1, m2, q) = (deref(monomer1, "monomer1")?, deref(monomer2, "monomer2")?, deref(coupling, "coupling")?);
        let q = CouplingMatrix::from_entries(q.q00, q.q11, q.q22, q.q01, q.q02, q.q12);
        let cfg = lib_err!(DimerConfig::new(monomer(m1)?, monomer(m2)?, q))?;
        *out = Box::into_raw(Box::new(DoptDimer { cfg }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dopt_dimer_free(dimer: *mut DoptDimer) {
    if !dimer.is_null() {
        drop(Box::from_raw(dimer));
    }
}

/// Refractive index `n` and cutoff energy `nu_c` (eV) of the medium.
#[no_mangle]
pub unsafe extern "C" fn dopt_dimer_set_medium(dimer: *mut DoptDimer, n: f64, nu_c: f64) -> DoptStatus {
    guard(|| {
        let d = deref_mut(dimer, "dimer")?;
        d.cfg = lib_err!(d.cfg.clone().with_medium(n, nu_c))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dopt_dimer_set_self_dipole(dimer: *mut DoptDimer, on: bool) -> DoptStatus {
    guard(|| {
        let d = deref_mut(dimer, "dimer")?;
        d.cfg = d.cfg.clone().with_self_dipole(on);
        Ok(())
    })
}

/// Replaces the derived λ; a NaN argument restores the derived value.
#[no_mangle]
pub unsafe extern "C" fn dopt_dimer_set_lambda(dimer: *mut DoptDimer, lambda: f64) -> DoptStatus {
    guard(|| {
        let d = deref_mut(dimer, "dimer")?;
        let value = if lambda.is_nan() { None } else { Some(lambda) };
        d.cfg = lib_err!(d.cfg.clone().with_lambda_override(value))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dopt_dimer_lambda(dimer: *const DoptDimer, out: *mut f64) -> DoptStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(dimer, "dimer")?.cfg.lambda();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dopt_diagonalize(dimer: *const DoptDimer, out: *mut *mut DoptEigen) -> DoptStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let cfg = deref(dimer, "dimer")?.cfg.clone();
        let es = lib_err!(eigen::diagonalize(&cfg))?;
        *out = Box::into_raw(Box::new(DoptEigen { es, cfg }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dopt_eigen_free(eigen: *mut DoptEigen) {
    if !eigen.is_null() {
        drop(Box::from_raw(eigen));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dopt_eigen_case(eigen: *const DoptEigen, out: *mut DoptCase) -> DoptStatus {
    guard(|| {
        *deref_mut(out, "out")? = match deref(eigen, "eigen")?.es.case_tag {
            CaseTag::DirectA => DoptCase::DirectA,
            CaseTag::IndirectB => DoptCase::IndirectB,
            CaseTag::MixedC => DoptCase::MixedC,
            CaseTag::Numeric => DoptCase::Numeric,
        };
        Ok(())
    })
}

/// Ascending eigenenergies, eV, into `out[3]`.
#[no_mangle]
pub unsafe extern "C" fn dopt_eigen_energies(eigen: *const DoptEigen, out: *mut f64) -> DoptStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        let out = deref_mut(out.cast::<[f64; 3]>(), "out")?;
        *out = e.es.energies;
        Ok(())
    })
}

/// Site amplitudes of eigenstate `state` into `out[3]`.
#[no_mangle]
pub unsafe extern "C" fn dopt_eigen_vector(eigen: *const DoptEigen, state: u32, out: *mut f64) -> DoptStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        let out = deref_mut(out.cast::<[f64; 3]>(), "out")?;
        if state > 2 {
            return Err(Failure::Lib(cli::ConfigError::Usage(format!("state {state} out of range")).into()));
        }
        *out = e.es.eigenvector(state as usize);
        Ok(())
    })
}

/// Eigenbasis dipole `d_ab`, Debye.
#[no_mangle]
pub unsafe extern "C" fn dopt_eigen_dipole(eigen: *const DoptEigen, a: u32, b: u32, out: *mut DoptVec3) -> DoptStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        let out = deref_mut(out, "out")?;
        if a > 2 || b > 2 {
            return Err(Failure::Lib(cli::ConfigError::Usage(format!("states ({a}, {b}) out of range")).into()));
        }
        let d = e.es.dipole(a as usize, b as usize);
        *out = DoptVec3 { x: d.x, y: d.y, z: d.z };
        Ok(())
    })
}

/// Eigenbasis rate matrix at `temperature` (K) into `out[9]`, row-major
/// `[from][to]`, eV.
#[no_mangle]
pub unsafe extern "C" fn dopt_rate_matrix(eigen: *const DoptEigen, temperature: f64, out: *mut f64) -> DoptStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        let out = deref_mut(out.cast::<[f64; 9]>(), "out")?;
        let spec = lib_err!(BathSpec::for_dimer(&e.cfg, temperature))?;
        let rm = lib_err!(dynamics::build_rate_matrix(&e.es, &spec))?;
        for (k, v) in out.iter_mut().enumerate() {
            *v = rm.rate[k / 3][k % 3];
        }
        Ok(())
    })
}

/// Fourth-order corrected rate `from -> to`; `shifted` evaluates kernels at
/// the polaron-shifted frequency.
#[no_mangle]
pub unsafe extern "C" fn dopt_corrected_rate(
    eigen: *const DoptEigen,
    temperature: f64,
    from: u32,
    to: u32,
    shifted: bool,
    out: *mut f64,
) -> DoptStatus {
    guard(|| {
        let e = deref(eigen, "eigen")?;
        let out = deref_mut(out, "out")?;
        let spec = lib_err!(BathSpec::for_dimer(&e.cfg, temperature))?;
        let frame = lib_err!(polaron::build_polaron_frame(&e.es, e.cfg.lambda()))?;
        let kernels = lib_err!(PolaronKernels::new(&spec))?;
        let freq = if shifted { RateFrequency::Shifted } else { RateFrequency::Bare };
        let c = lib_err!(polaron::corrected_rate_terms(&frame, &e.es, &kernels, from as usize, to as usize, freq))?;
        *out = c.total();
        Ok(())
    })
}

/// Populations at `n_times` ascending times (ħ/eV) into `out[3 * n_times]`.
#[no_mangle]
pub unsafe extern "C" fn dopt_evolve(
    rates: *const f64,
    initial: *const f64,
    times: *const f64,
    n_times: usize,
    out: *mut f64,
) -> DoptStatus {
    guard(|| {
        let rm = rate_matrix(deref(rates.cast::<[f64; 9]>(), "rates")?);
        let p0 = *deref(initial.cast::<[f64; 3]>(), "initial")?;
        if n_times == 0 {
            return Ok(());
        }
        deref(times, "times")?;
        deref_mut(out, "out")?;
        let times = std::slice::from_raw_parts(times, n_times);
        let out = std::slice::from_raw_parts_mut(out, 3 * n_times);
        let traj = lib_err!(dynamics::evolve(&rm, p0, times))?;
        for (chunk, p) in out.chunks_exact_mut(3).zip(&traj.populations) {
            chunk.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Unique stationary populations into `out[3]`.
#[no_mangle]
pub unsafe extern "C" fn dopt_steady_state(rates: *const f64, out: *mut f64) -> DoptStatus {
    guard(|| {
        let rm = rate_matrix(deref(rates.cast::<[f64; 9]>(), "rates")?);
        let out = deref_mut(out.cast::<[f64; 3]>(), "out")?;
        *out = lib_err!(dynamics::steady_state(&rm))?;
        Ok(())
    })
}

/// Runs a TOML run configuration. With a null `out_dir` the artifact is
/// returned in `*contents` (free with [`dopt_string_free`]); otherwise it is
/// written under `out_dir` and `*contents` receives its path.
#[no_mangle]
pub unsafe extern "C" fn dopt_run_config(
    config_toml: *const c_char,
    out_dir: *const c_char,
    contents: *mut *mut c_char,
) -> DoptStatus {
    guard(|| {
        let contents = deref_mut(contents, "contents")?;
        let text = CStr::from_ptr(deref(config_toml, "config_toml")?).to_string_lossy();
        let mut cfg = cli::parse_config(&text).map_err(Error::from)?;
        let result = if out_dir.is_null() {
            cli::render(&cfg)?.1
        } else {
            let dir = CStr::from_ptr(out_dir).to_string_lossy().into_owned();
            cfg.apply(&cli::RunOptions { out: Some(dir.into()), ..Default::default() }).map_err(Error::from)?;
            cli::run(&cfg)?.display().to_string()
        };
        *contents = CString::new(result).expect("no interior nul").into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
