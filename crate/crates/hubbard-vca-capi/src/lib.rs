//! C ABI for the hubbard-vca solver.
//!
//! The surface is handle-based: a solver context is created from the same
//! JSON run configuration the CLI consumes, stages run against the handle,
//! and scalar results are fetched into caller-owned structs. All functions
//! return an [`HvStatus`] code; the last error message is retrievable per
//! handle. The generated header lives in `include/hubbard_vca.h`.

use hubbard_vca::config::RunConfig;
use hubbard_vca::ed::solve_cluster;
use hubbard_vca::error::VcaError;
use hubbard_vca::observables::{scalar_observables, spectra_and_distributions};
use hubbard_vca::vca::{find_saddle, OmegaEvaluator};
use libc::{c_char, c_double, size_t};
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvStatus {
    Ok = 0,
    Error = 1,
    ConfigError = 2,
    NonConverged = 3,
    ResourceError = 4,
    NullPointer = 5,
    Panic = 6,
}

fn status_of(e: &VcaError) -> HvStatus {
    match e {
        VcaError::Config(_) | VcaError::Domain(_) => HvStatus::ConfigError,
        VcaError::Resource(_) => HvStatus::ResourceError,
        _ => HvStatus::Error,
    }
}

/// Opaque solver context.
pub struct HvSolver {
    config: RunConfig,
    last_error: Option<CString>,
    saddle: Option<hubbard_vca::vca::VcaResult>,
}

impl HvSolver {
    fn set_error(&mut self, msg: String) {
        self.last_error = CString::new(msg).ok();
    }
}

/// Saddle-point result in plain C layout.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HvSaddleResult {
    pub mu_prime: c_double,
    pub delta_prime: c_double,
    pub delta_d_prime: c_double,
    pub m_prime: c_double,
    pub omega_per_site: c_double,
    pub gradient_norm: c_double,
    pub iterations: size_t,
    pub converged: bool,
}

/// Scalar lattice observables in plain C layout. `xi` is negative when the
/// coherence length is undefined (vanishing condensate).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HvObservables {
    pub density: c_double,
    pub pairing: c_double,
    pub xi: c_double,
}

/// Create a solver context from a JSON run configuration.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated UTF-8 string and `out` a
/// valid pointer; the returned handle must be released with
/// [`hv_solver_free`].
#[no_mangle]
pub unsafe extern "C" fn hv_solver_new(
    config_json: *const c_char,
    out: *mut *mut HvSolver,
) -> HvStatus {
    if config_json.is_null() || out.is_null() {
        return HvStatus::NullPointer;
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => return HvStatus::ConfigError,
    };
    match RunConfig::from_json(text) {
        Ok(config) => {
            let solver = Box::new(HvSolver {
                config,
                last_error: None,
                saddle: None,
            });
            *out = Box::into_raw(solver);
            HvStatus::Ok
        }
        Err(_) => HvStatus::ConfigError,
    }
}

/// Release a solver context.
///
/// # Safety
/// `solver` must be a handle obtained from [`hv_solver_new`] (or null).
#[no_mangle]
pub unsafe extern "C" fn hv_solver_free(solver: *mut HvSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Copy the last error message into a caller buffer (always NUL-terminated;
/// truncates).
///
/// # Safety
/// `solver` must be a live handle, `buf` valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hv_last_error(
    solver: *const HvSolver,
    buf: *mut c_char,
    len: size_t,
) -> HvStatus {
    if solver.is_null() || buf.is_null() || len == 0 {
        return HvStatus::NullPointer;
    }
    let solver = &*solver;
    let msg = solver
        .last_error
        .as_deref()
        .map(|c| c.to_bytes())
        .unwrap_or(b"");
    let n = msg.len().min(len - 1);
    ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
    *buf.add(n) = 0;
    HvStatus::Ok
}

/// Grand potential per site at explicit Weiss fields (d-wave and Néel
/// fields are taken from the configuration).
///
/// # Safety
/// `solver` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hv_grand_potential(
    solver: *mut HvSolver,
    mu_prime: c_double,
    delta_prime: c_double,
    out: *mut c_double,
) -> HvStatus {
    if solver.is_null() || out.is_null() {
        return HvStatus::NullPointer;
    }
    let solver = &mut *solver;
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<f64, VcaError> {
        let model = solver.config.cluster_model()?;
        let ev = OmegaEvaluator::new(&model, solver.config.time_grid(), solver.config.gf_route());
        let mut v = solver.config.variational_params();
        v.mu_prime = mu_prime;
        v.delta_prime = delta_prime;
        ev.grand_potential(&v)
    }));
    match result {
        Ok(Ok(value)) => {
            *out = value;
            HvStatus::Ok
        }
        Ok(Err(e)) => {
            let code = status_of(&e);
            solver.set_error(e.to_string());
            code
        }
        Err(_) => HvStatus::Panic,
    }
}

/// Run the saddle search with the configured solver block.
///
/// # Safety
/// `solver` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hv_find_saddle(
    solver: *mut HvSolver,
    out: *mut HvSaddleResult,
) -> HvStatus {
    if solver.is_null() || out.is_null() {
        return HvStatus::NullPointer;
    }
    let solver = &mut *solver;
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<_, VcaError> {
        let cfg = &solver.config;
        let model = cfg.cluster_model()?;
        let ev = OmegaEvaluator::new(&model, cfg.time_grid(), cfg.gf_route());
        find_saddle(
            &ev,
            &cfg.variational_params(),
            &cfg.variational.active,
            cfg.solver.h,
            cfg.solver.eps_omega,
            cfg.solver.max_iter,
            &cfg.variational.bounds,
        )
    }));
    match result {
        Ok(Ok(res)) => {
            *out = HvSaddleResult {
                mu_prime: res.params_star.mu_prime,
                delta_prime: res.params_star.delta_prime,
                delta_d_prime: res.params_star.delta_d_prime,
                m_prime: res.params_star.m_prime,
                omega_per_site: res.omega_value,
                gradient_norm: res.gradient_norm,
                iterations: res.iterations,
                converged: res.converged,
            };
            let converged = res.converged;
            solver.saddle = Some(res);
            if converged {
                HvStatus::Ok
            } else {
                HvStatus::NonConverged
            }
        }
        Ok(Err(e)) => {
            let code = status_of(&e);
            solver.set_error(e.to_string());
            code
        }
        Err(_) => HvStatus::Panic,
    }
}

/// Lattice observables at the stored saddle (or at the configured Weiss
/// fields when no saddle has been run).
///
/// # Safety
/// `solver` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hv_observables(
    solver: *mut HvSolver,
    out: *mut HvObservables,
) -> HvStatus {
    if solver.is_null() || out.is_null() {
        return HvStatus::NullPointer;
    }
    let solver = &mut *solver;
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<_, VcaError> {
        let cfg = &solver.config;
        let model = cfg.cluster_model()?;
        let v = match &solver.saddle {
            Some(s) => s.params_star,
            None => cfg.variational_params(),
        };
        let grid = cfg.time_grid();
        let (_, poles) = solve_cluster(&model, &v)?;
        let gf = hubbard_vca::ed::lehmann_green(&poles, &grid.omega_points(), grid.eta)?;
        let spectra = spectra_and_distributions(&model, &v, &gf)?;
        Ok(scalar_observables(&model, &spectra))
    }));
    match result {
        Ok(Ok(obs)) => {
            *out = HvObservables {
                density: obs.n,
                pairing: obs.delta,
                xi: obs.xi.unwrap_or(-1.0),
            };
            HvStatus::Ok
        }
        Ok(Err(e)) => {
            let code = status_of(&e);
            solver.set_error(e.to_string());
            code
        }
        Err(_) => HvStatus::Panic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "model": {"dimension": 1, "l_c": 2, "n_c": 6, "t": 1.0, "u": 0.0, "mu": 0.0, "temperature": 1.0},
        "variational": {"mu_prime": 0.1, "delta_prime": 0.05},
        "grid": {"dtau": 0.05, "n_max": 400, "eta": 0.06283185307179587},
        "backend": {"kind": "ed"},
        "solver": {"h": 1e-3, "eps_omega": 1e-4, "max_iter": 30},
        "output_dir": "out",
        "seed": 7
    }"#;

    #[test]
    fn handle_lifecycle_and_calls() {
        let ctext = CString::new(CONFIG).unwrap();
        let mut handle: *mut HvSolver = ptr::null_mut();
        let st = unsafe { hv_solver_new(ctext.as_ptr(), &mut handle) };
        assert_eq!(st, HvStatus::Ok);
        assert!(!handle.is_null());

        let mut omega = 0.0f64;
        let st = unsafe { hv_grand_potential(handle, 0.1, 0.0, &mut omega) };
        assert_eq!(st, HvStatus::Ok);
        assert!(omega.is_finite());

        let mut obs = HvObservables {
            density: 0.0,
            pairing: 0.0,
            xi: 0.0,
        };
        let st = unsafe { hv_observables(handle, &mut obs) };
        assert_eq!(st, HvStatus::Ok);
        assert!((obs.density - 0.5).abs() < 0.02);

        unsafe { hv_solver_free(handle) };
    }

    #[test]
    fn bad_config_is_rejected() {
        let ctext = CString::new("{\"nope\": 1}").unwrap();
        let mut handle: *mut HvSolver = ptr::null_mut();
        let st = unsafe { hv_solver_new(ctext.as_ptr(), &mut handle) };
        assert_eq!(st, HvStatus::ConfigError);
        assert!(handle.is_null());
    }

    #[test]
    fn null_pointers_are_caught() {
        let st = unsafe { hv_solver_new(ptr::null(), ptr::null_mut()) };
        assert_eq!(st, HvStatus::NullPointer);
    }
}
