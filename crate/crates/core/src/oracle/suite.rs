//! The verification table behind `jlmqt verify`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{analytic_psi_sigma, bounce_action, cubic_fit, harmonic_spectrum};
use crate::dynamics::{self, PhaseState};
use crate::error::Result;
use crate::escape;
use crate::model::{self, JunctionParams};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the check could not be evaluated.
    pub note: Option<String>,
}

impl Check {
    /// Passes when `|computed - reference| <= tolerance * |reference|`.
    fn relative(name: &'static str, computed: f64, reference: f64, tolerance: f64) -> Self {
        let passed = (computed - reference).abs() <= tolerance * reference.abs();
        Self {
            name,
            computed,
            reference,
            tolerance,
            passed,
            note: None,
        }
    }

    /// Passes when `computed <= tolerance`; the reference is the ideal value 0.
    fn bounded(name: &'static str, computed: f64, tolerance: f64) -> Self {
        Self {
            name,
            computed,
            reference: 0.0,
            tolerance,
            passed: computed <= tolerance,
            note: None,
        }
    }

    fn failed(name: &'static str, tolerance: f64, err: impl std::fmt::Display) -> Self {
        Self {
            name,
            computed: f64::NAN,
            reference: f64::NAN,
            tolerance,
            passed: false,
            note: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub spectrum_points: usize,
    /// Box half-width in units of the analytic `psi` standard deviation.
    pub spectrum_width_sigmas: f64,
    pub spectrum_levels: usize,
    pub bounce_tol: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub amplitude: f64,
    /// Mutation hook: negate `g+` in the product route of the eps check.
    pub flip_g_plus: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            spectrum_points: 2000,
            spectrum_width_sigmas: 10.0,
            spectrum_levels: 6,
            bounce_tol: 1e-12,
            dt: 1e-3,
            n_steps: 10_000,
            amplitude: 0.01,
            flip_g_plus: false,
        }
    }
}

pub const EPSILON_IDENTITY_TOL: f64 = 1e-12;
pub const GROUND_ENERGY_TOL: f64 = 1e-3;
pub const GROUND_VARIANCE_TOL: f64 = 1e-3;
pub const LADDER_TOL: f64 = 5e-3;
pub const BOUNCE_TOL: f64 = 1e-8;
pub const CUBIC_BARRIER_TOL: f64 = 1e-10;
pub const GRADIENT_FD_TOL: f64 = 1e-6;
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;

/// Runs every oracle against `params`. Errors only for invalid parameters;
/// numerical failures are reported as failed checks.
pub fn run(params: &JunctionParams, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let scales = model::derive(params)?;
    let mut checks = Vec::new();

    let mut product_scales = scales;
    if opts.flip_g_plus {
        product_scales.g_plus = -product_scales.g_plus;
    }
    let renorm = escape::epsilon_from_scales(params, &product_scales);
    checks.push(Check::relative(
        "epsilon_dual_form",
        renorm.epsilon,
        renorm.epsilon_closed_form,
        EPSILON_IDENTITY_TOL,
    ));

    let sigma = analytic_psi_sigma(params)?;
    match harmonic_spectrum(
        params,
        opts.spectrum_width_sigmas * sigma,
        opts.spectrum_points,
        opts.spectrum_levels,
    ) {
        Ok(spec) => {
            let w = scales.omega_jl;
            checks.push(Check::bounded(
                "spectrum_resolution",
                spec.spacing_change,
                super::SPACING_RESOLUTION_TOL,
            ));
            checks.push(Check::relative(
                "spectrum_ground_energy",
                spec.eigenvalues[0],
                0.5 * w,
                GROUND_ENERGY_TOL,
            ));
            let ladder = spec
                .spacings()
                .iter()
                .take(5)
                .map(|g| (g - w).abs() / w)
                .fold(0.0, f64::max);
            checks.push(Check::bounded("spectrum_ladder", ladder, LADDER_TOL));
            checks.push(Check::relative(
                "ground_psi_variance",
                spec.ground_psi_variance,
                escape::zero_point_variance(params)?,
                GROUND_VARIANCE_TOL,
            ));
        }
        Err(e) => checks.push(Check::failed(
            "spectrum_resolution",
            super::SPACING_RESOLUTION_TOL,
            e,
        )),
    }

    let eps = escape::epsilon(params)?.epsilon;
    match cubic_fit(params, eps).and_then(|fit| {
        let closed = escape::escape_rate_ln(params, eps)?;
        let bounce = bounce_action(|t| fit.eval(t), scales.m_cm, fit.theta_min, opts.bounce_tol)?;
        Ok((fit, closed, bounce))
    }) {
        Ok((fit, closed, bounce)) => {
            checks.push(Check::relative(
                "bounce_vs_closed_form",
                bounce.action_b,
                closed.exponent_b,
                BOUNCE_TOL,
            ));
            checks.push(Check::relative(
                "cubic_barrier_height",
                fit.barrier_height,
                closed.v0,
                CUBIC_BARRIER_TOL,
            ));
        }
        Err(e) => {
            checks.push(Check::failed("bounce_vs_closed_form", BOUNCE_TOL, &e));
            checks.push(Check::failed("cubic_barrier_height", CUBIC_BARRIER_TOL, e));
        }
    }

    checks.push(Check::bounded(
        "gradient_fd",
        max_gradient_fd_error(params, 50),
        GRADIENT_FD_TOL,
    ));

    let mut unbiased = *params;
    unbiased.bias = 0.0;
    let start = PhaseState::at_rest(opts.amplitude, 0.0);
    match dynamics::integrate(start, opts.dt, opts.n_steps, &unbiased) {
        Ok(traj) => checks.push(Check::bounded(
            "energy_drift",
            traj.max_relative_energy_drift(),
            ENERGY_DRIFT_TOL,
        )),
        Err(e) => checks.push(Check::failed("energy_drift", ENERGY_DRIFT_TOL, e)),
    }

    Ok(checks)
}

/// Largest deviation between the analytic gradient and a central difference
/// (step 1e-5) over an `n x n` grid on `[-pi, pi]^2`, relative to
/// `max(|grad|, 1)`.
pub fn max_gradient_fd_error(params: &JunctionParams, n: usize) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = -PI + 2.0 * PI * i as f64 / (n - 1) as f64;
            let s = -PI + 2.0 * PI * j as f64 / (n - 1) as f64;
            let (gt, gp) = model::potential_gradient(t, s, params);
            let ft = (model::potential(t + h, s, params) - model::potential(t - h, s, params))
                / (2.0 * h);
            let fp = (model::potential(t, s + h, params) - model::potential(t, s - h, params))
                / (2.0 * h);
            worst = worst
                .max((gt - ft).abs() / gt.abs().max(1.0))
                .max((gp - fp).abs() / gp.abs().max(1.0));
        }
    }
    worst
}
