//! Classical phase dynamics of the coupled (theta, psi) system.
//!
//! Equations of motion, in reduced units:
//!
//! ```text
//! theta'' = Lambda [ w_tilt^2 I - w_p1^2 sin(theta1) - w_p2^2 sin(theta2) ]
//! psi''   = -kappa w_jl^2 sin(psi) - a1 w_p1^2 sin(theta1) + a2 w_p2^2 sin(theta2)
//! ```
//!
//! with `w_tilt^2 = 2 ej_tilt`. Both follow from the Lagrangian with kinetic
//! energy `theta'^2 / (4 Lambda) + psi'^2 / (4 (a1 + a2))`, so the total
//! energy returned by [`energy`] is conserved when the bias vanishes.

use std::f64::consts::TAU;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, JunctionParams};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: f64,
    pub psi: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub tau: f64,
}

impl PhaseState {
    pub fn at_rest(theta: f64, psi: f64) -> Self {
        Self {
            theta,
            psi,
            ..Self::default()
        }
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite()
            && self.psi.is_finite()
            && self.theta_dot.is_finite()
            && self.psi_dot.is_finite()
            && self.tau.is_finite()
    }
}

/// Precomputed coefficients of the equations of motion.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    lambda_cap: f64,
    alpha_sum: f64,
    w1: f64,
    w2: f64,
    drive: f64,
    wp1_sq: f64,
    wp2_sq: f64,
    kappa_wjl_sq: f64,
    alpha1: f64,
    alpha2: f64,
}

impl Coefficients {
    fn new(params: &JunctionParams) -> Result<Self> {
        let s = model::derive(params)?;
        let alpha_sum = params.alpha1 + params.alpha2;
        Ok(Self {
            lambda_cap: s.lambda_cap,
            alpha_sum,
            w1: params.alpha1 / alpha_sum,
            w2: params.alpha2 / alpha_sum,
            drive: 2.0 * s.ej_tilt * params.bias,
            wp1_sq: 2.0 * params.ej1,
            wp2_sq: 2.0 * params.ej2,
            kappa_wjl_sq: params.kappa * s.omega_jl * s.omega_jl,
            alpha1: params.alpha1,
            alpha2: params.alpha2,
        })
    }

    #[inline]
    fn accel(&self, theta: f64, psi: f64) -> (f64, f64) {
        let s1 = (theta + self.w1 * psi).sin();
        let s2 = (theta - self.w2 * psi).sin();
        let theta_ddot = self.lambda_cap * (self.drive - self.wp1_sq * s1 - self.wp2_sq * s2);
        let psi_ddot = -self.kappa_wjl_sq * psi.sin() - self.alpha1 * self.wp1_sq * s1
            + self.alpha2 * self.wp2_sq * s2;
        (theta_ddot, psi_ddot)
    }

    fn kinetic(&self, theta_dot: f64, psi_dot: f64) -> f64 {
        theta_dot * theta_dot / (4.0 * self.lambda_cap) + psi_dot * psi_dot / (4.0 * self.alpha_sum)
    }
}

/// (theta'', psi'') at the given state.
pub fn acceleration(state: &PhaseState, params: &JunctionParams) -> Result<(f64, f64)> {
    Ok(Coefficients::new(params)?.accel(state.theta, state.psi))
}

/// Kinetic plus tilted potential energy.
pub fn energy(state: &PhaseState, params: &JunctionParams) -> Result<f64> {
    let c = Coefficients::new(params)?;
    Ok(
        c.kinetic(state.theta_dot, state.psi_dot)
            + model::potential(state.theta, state.psi, params),
    )
}

/// Junction voltage in reduced form, `2 e v / hbar = theta' / Lambda`.
/// The relative phase carries no voltage.
pub fn reduced_voltage(state: &PhaseState, params: &JunctionParams) -> f64 {
    let lambda_cap = 1.0 + params.alpha1 * params.alpha2 / (params.alpha1 + params.alpha2);
    state.theta_dot / lambda_cap
}

/// Time series produced by [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: JunctionParams,
    /// Integration step.
    pub dt: f64,
    /// Number of integration steps between stored samples.
    pub stride: usize,
    pub states: Vec<PhaseState>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Spacing between stored samples.
    pub fn sample_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn last(&self) -> &PhaseState {
        self.states
            .last()
            .expect("trajectory always holds the initial state")
    }

    /// Largest `|E(t) - E(0)| / |E(0)|` (absolute drift if `E(0) == 0`).
    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        self.energies
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.theta).collect()
    }

    pub fn psis(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.psi).collect()
    }
}

/// Fixed-step classical RK4 integration storing every step.
pub fn integrate(
    initial: PhaseState,
    dt: f64,
    n_steps: usize,
    params: &JunctionParams,
) -> Result<Trajectory> {
    integrate_strided(initial, dt, n_steps, 1, params)
}

/// Like [`integrate`] but keeps only every `stride`-th step (the initial
/// state is always kept).
pub fn integrate_strided(
    initial: PhaseState,
    dt: f64,
    n_steps: usize,
    stride: usize,
    params: &JunctionParams,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    if !initial.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let c = Coefficients::new(params)?;
    let energy_of = |s: &PhaseState| {
        c.kinetic(s.theta_dot, s.psi_dot) + model::potential(s.theta, s.psi, params)
    };

    let capacity = n_steps / stride + 1;
    let mut states = Vec::with_capacity(capacity);
    let mut energies = Vec::with_capacity(capacity);
    states.push(initial);
    energies.push(energy_of(&initial));

    let mut y = [
        initial.theta,
        initial.psi,
        initial.theta_dot,
        initial.psi_dot,
    ];
    let deriv = |y: &[f64; 4]| {
        let (a_t, a_p) = c.accel(y[0], y[1]);
        [y[2], y[3], a_t, a_p]
    };
    for step in 1..=n_steps {
        let k1 = deriv(&y);
        let k2 = deriv(&axpy(&y, 0.5 * dt, &k1));
        let k3 = deriv(&axpy(&y, 0.5 * dt, &k2));
        let k4 = deriv(&axpy(&y, dt, &k3));
        for i in 0..4 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step % stride == 0 {
            let state = PhaseState {
                theta: y[0],
                psi: y[1],
                theta_dot: y[2],
                psi_dot: y[3],
                // recomputed from the step count so the grid stays exactly uniform
                tau: initial.tau + step as f64 * dt,
            };
            if !state.is_finite() {
                return Err(Error::NonFinite { step });
            }
            energies.push(energy_of(&state));
            states.push(state);
        } else if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
    }

    Ok(Trajectory {
        params: *params,
        dt,
        stride,
        states,
        energies,
    })
}

#[inline]
fn axpy(y: &[f64; 4], a: f64, k: &[f64; 4]) -> [f64; 4] {
    [
        y[0] + a * k[0],
        y[1] + a * k[1],
        y[2] + a * k[2],
        y[3] + a * k[3],
    ]
}

/// Static solution of the equations of motion by Newton iteration on the
/// potential gradient, started from `(asin(min(I_eff, 1)), 0)`.
///
/// `I_eff = bias * ej_tilt / ej_sum`; for `kappa = +1` this is the bias itself.
pub fn equilibrium(params: &JunctionParams) -> Result<(f64, f64)> {
    let s = model::derive(params)?;
    let tilt = params.bias * s.ej_tilt / s.ej_sum;
    if tilt >= 1.0 {
        return Err(Error::NoEquilibrium(format!(
            "tilt {tilt} reaches the classical critical value 1"
        )));
    }
    let scale = (s.ej_sum + params.ein).max(1.0);
    let tol = 1e-12 * (scale / 100.0).max(1.0);
    let grad_norm = |t: f64, p: f64| {
        let (gt, gp) = model::potential_gradient(t, p, params);
        gt.hypot(gp)
    };

    // Modified Newton descent on V: the Hessian is shifted to be positive
    // definite, steps are capped to stay inside the starting well and an
    // Armijo backtrack keeps V decreasing.
    let (mut theta, mut psi) = (tilt.min(1.0).asin(), 0.0);
    let mut norm = grad_norm(theta, psi);
    for _ in 0..200 {
        if norm < tol {
            break;
        }
        let (gt, gp) = model::potential_gradient(theta, psi, params);
        let [[a, b], [_, d]] = model::potential_hessian(theta, psi, params);
        let lambda_min = 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let shift = if lambda_min > 0.0 {
            0.0
        } else {
            1e-3 * scale - lambda_min
        };
        let (a, d) = (a + shift, d + shift);
        let det = a * d - b * b;
        let mut dt = -(d * gt - b * gp) / det;
        let mut dp = -(a * gp - b * gt) / det;
        let len = dt.hypot(dp);
        if len > MAX_NEWTON_STEP {
            dt *= MAX_NEWTON_STEP / len;
            dp *= MAX_NEWTON_STEP / len;
        }
        let v0 = model::potential(theta, psi, params);
        let slope = gt * dt + gp * dp;
        let mut step = 1.0;
        while step > 1e-12 {
            let (nt, np) = (theta + step * dt, psi + step * dp);
            if model::potential(nt, np, params) <= v0 + 1e-4 * step * slope
                || grad_norm(nt, np) < norm
            {
                break;
            }
            step *= 0.5;
        }
        theta += step * dt;
        psi += step * dp;
        norm = grad_norm(theta, psi);
    }

    if !(norm < tol) {
        return Err(Error::NoEquilibrium(format!(
            "Newton iteration stalled with gradient norm {norm:e}"
        )));
    }
    let [[a, b], [_, d]] = model::potential_hessian(theta, psi, params);
    if !(a > 0.0 && a * d - b * b > 0.0) {
        return Err(Error::NoEquilibrium(format!(
            "stationary point ({theta}, {psi}) is not a minimum"
        )));
    }
    Ok((theta, psi))
}

/// Normal-mode angular frequencies `(low, high)` of small oscillations
/// around [`equilibrium`].
pub fn small_oscillation_frequencies(params: &JunctionParams) -> Result<(f64, f64)> {
    let (theta, psi) = equilibrium(params)?;
    let s = model::derive(params)?;
    let h = model::potential_hessian(theta, psi, params);
    // Linearized flow is x'' = -D H x with D = diag(2 Lambda, 2 (a1 + a2));
    // D^(1/2) H D^(1/2) is symmetric with the same spectrum.
    let d_theta = 2.0 * s.lambda_cap;
    let d_psi = 2.0 * (params.alpha1 + params.alpha2);
    let a = d_theta * h[0][0];
    let b = (d_theta * d_psi).sqrt() * h[0][1];
    let d = d_psi * h[1][1];
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (lo, hi) = (mean - radius, mean + radius);
    if !(lo > 0.0) {
        return Err(Error::NoEquilibrium(format!(
            "unstable mode, omega^2 = {lo}"
        )));
    }
    Ok((lo.sqrt(), hi.sqrt()))
}

/// Earliest time at which theta has advanced more than `window` past its
/// value in the first sample.
pub fn detect_switching(trajectory: &Trajectory, window: f64) -> Option<f64> {
    let start = trajectory.states.first()?.theta;
    trajectory
        .states
        .iter()
        .find(|s| s.theta - start > window)
        .map(|s| s.tau)
}

const MAX_NEWTON_STEP: f64 = 0.5;

/// Default switching window: one washboard period.
pub const DEFAULT_SWITCH_WINDOW: f64 = TAU;

/// Angular frequencies of the `count` strongest spectral peaks of a
/// uniformly sampled signal, in ascending order.
///
/// The mean is removed and a Hann window applied; each peak position is
/// refined by a parabola through the log-magnitudes of the three bins
/// around the local maximum.
pub fn spectral_peaks(signal: &[f64], sample_dt: f64, count: usize) -> Vec<f64> {
    let n = signal.len();
    if n < 8 || count == 0 {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (TAU * i as f64 / (n - 1) as f64).cos();
            Complex::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let mag: Vec<f64> = buf[..n / 2]
        .iter()
        .map(|c| c.norm().max(1e-300).ln())
        .collect();
    let mut peaks: Vec<(f64, f64)> = (1..mag.len() - 1)
        .filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])
        .map(|k| {
            let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
            let denom = l - 2.0 * c + r;
            let shift = if denom != 0.0 {
                0.5 * (l - r) / denom
            } else {
                0.0
            };
            let freq = (k as f64 + shift) * TAU / (n as f64 * sample_dt);
            (c, freq)
        })
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<f64> = peaks.into_iter().take(count).map(|p| p.1).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(bias: f64) -> JunctionParams {
        JunctionParams::symmetric(100.0, 0.1, 2.0, bias)
    }

    fn asym(bias: f64) -> JunctionParams {
        JunctionParams {
            ej1: 70.0,
            ej2: 30.0,
            ein: 12.0,
            alpha1: 0.15,
            alpha2: 0.05,
            kappa: 1.0,
            bias,
        }
    }

    #[test]
    fn acceleration_examples() {
        let rest = PhaseState::default();
        assert_eq!(acceleration(&rest, &sym(0.0)).unwrap(), (0.0, 0.0));
        let (tdd, pdd) = acceleration(&rest, &sym(0.5)).unwrap();
        assert!((tdd - 1.05 * 200.0 * 0.5).abs() < 1e-12);
        assert_eq!(pdd, 0.0);
    }

    #[test]
    fn acceleration_is_minus_mass_weighted_gradient() {
        let p = asym(0.4);
        let s = model::derive(&p).unwrap();
        for &(t, q) in &[(0.3, -0.2), (2.0, 1.0), (-4.0, 0.5)] {
            let (tdd, pdd) = acceleration(&PhaseState::at_rest(t, q), &p).unwrap();
            let (gt, gp) = model::potential_gradient(t, q, &p);
            assert!((tdd + 2.0 * s.lambda_cap * gt).abs() < 1e-10);
            assert!((pdd + 2.0 * 0.2 * gp).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_psi_stays_zero_off_equilibrium() {
        let p = sym(0.3);
        for &t in &[-2.0, 0.4, 1.3, 5.0] {
            let (_, pdd) = acceleration(&PhaseState::at_rest(t, 0.0), &p).unwrap();
            assert_eq!(pdd, 0.0);
        }
    }

    #[test]
    fn reduced_voltage_examples() {
        let p = sym(0.0);
        assert_eq!(reduced_voltage(&PhaseState::default(), &p), 0.0);
        let s = PhaseState {
            theta_dot: 2.1,
            ..Default::default()
        };
        assert!((reduced_voltage(&s, &p) - 2.0).abs() < 1e-14);
        let s = PhaseState {
            psi_dot: 7.0,
            ..Default::default()
        };
        assert_eq!(reduced_voltage(&s, &p), 0.0);
    }

    #[test]
    fn integrate_rejects_bad_arguments() {
        let p = sym(0.0);
        let s = PhaseState::default();
        assert!(matches!(
            integrate(s, 0.0, 10, &p),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            integrate(s, 1e-3, 0, &p),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            integrate_strided(s, 1e-3, 10, 0, &p),
            Err(Error::InvalidArgument(_))
        ));
        let bad = PhaseState {
            theta: f64::NAN,
            ..s
        };
        assert_eq!(
            integrate(bad, 1e-3, 10, &p),
            Err(Error::NonFinite { step: 0 })
        );
    }

    #[test]
    fn non_finite_blowup_reports_step() {
        let start = PhaseState {
            theta_dot: 1e308,
            ..Default::default()
        };
        match integrate(start, 10.0, 100, &sym(0.0)) {
            Err(Error::NonFinite { step }) => assert!(step >= 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn energy_conserved_without_bias() {
        let traj = integrate(PhaseState::at_rest(0.01, 0.0), 1e-3, 10_000, &sym(0.0)).unwrap();
        assert_eq!(traj.len(), 10_001);
        assert!(traj.max_relative_energy_drift() < 1e-8);
        let traj = integrate(PhaseState::at_rest(0.1, 0.05), 1e-3, 10_000, &asym(0.0)).unwrap();
        assert!(traj.max_relative_energy_drift() < 1e-8);
    }

    #[test]
    fn time_grid_is_uniform() {
        let traj = integrate_strided(PhaseState::default(), 1e-3, 1000, 10, &sym(0.2)).unwrap();
        assert_eq!(traj.len(), 101);
        for w in traj.states.windows(2) {
            assert!((w[1].tau - w[0].tau - 1e-2).abs() < 1e-12);
        }
    }

    #[test]
    fn equilibrium_examples() {
        assert_eq!(equilibrium(&sym(0.0)).unwrap(), (0.0, 0.0));
        let (t, p) = equilibrium(&sym(0.5)).unwrap();
        assert!((t - 0.5f64.asin()).abs() < 1e-12);
        assert!(p.abs() < 1e-14);
        assert!(matches!(
            equilibrium(&sym(1.2)),
            Err(Error::NoEquilibrium(_))
        ));
        assert!(matches!(
            equilibrium(&sym(1.0)),
            Err(Error::NoEquilibrium(_))
        ));
    }

    #[test]
    fn asymmetric_equilibrium_shifts_psi() {
        let p = asym(0.3);
        let (t, q) = equilibrium(&p).unwrap();
        let (gt, gp) = model::potential_gradient(t, q, &p);
        assert!(gt.hypot(gp) < 1e-12);
        // root-finder reference: (0.5095, -0.4382)
        assert!(
            (t - 0.5095).abs() < 1e-4 && (q + 0.4382).abs() < 1e-4,
            "{t} {q}"
        );
        // the psi-coupled well disappears well below bias 1 for these couplings
        assert!(matches!(
            equilibrium(&asym(0.6)),
            Err(Error::NoEquilibrium(_))
        ));
    }

    #[test]
    fn symmetric_modes_decouple() {
        let p = sym(0.0);
        let (lo, hi) = small_oscillation_frequencies(&p).unwrap();
        // psi mode: 2 (a1 + a2) (E_J / 4 + E_in), theta mode: 2 Lambda E_J
        let s = model::derive(&p).unwrap();
        let psi_sq = s.omega_jl * s.omega_jl + 0.4 * 25.0;
        assert!((lo * lo - psi_sq).abs() < 1e-10);
        assert!((hi * hi - 210.0).abs() < 1e-10);
    }

    #[test]
    fn frequencies_positive_below_critical() {
        for &b in &[0.0, 0.1, 0.3, 0.4] {
            let (lo, hi) = small_oscillation_frequencies(&asym(b)).unwrap();
            assert!(lo > 0.0 && hi >= lo);
        }
    }

    #[test]
    fn switching_detection() {
        let quiet = integrate(PhaseState::at_rest(0.05, 0.0), 1e-3, 5000, &sym(0.0)).unwrap();
        assert_eq!(detect_switching(&quiet, DEFAULT_SWITCH_WINDOW), None);
        let run = integrate(PhaseState::default(), 1e-3, 5000, &sym(1.2)).unwrap();
        let tau = detect_switching(&run, DEFAULT_SWITCH_WINDOW).expect("running state");
        assert!(tau.is_finite() && tau > 0.0);
    }

    #[test]
    fn switching_time_decreases_with_bias() {
        let mut last = f64::INFINITY;
        for &b in &[1.01, 1.03, 1.06, 1.1, 1.2] {
            let run = integrate(PhaseState::default(), 1e-3, 20_000, &sym(b)).unwrap();
            let tau = detect_switching(&run, DEFAULT_SWITCH_WINDOW).unwrap();
            assert!(tau < last, "bias {b}: {tau} !< {last}");
            last = tau;
        }
    }

    #[test]
    fn spectral_peak_of_pure_tone() {
        let dt = 0.01;
        let omega = 3.7;
        let x: Vec<f64> = (0..8192).map(|i| (omega * i as f64 * dt).sin()).collect();
        let peaks = spectral_peaks(&x, dt, 1);
        assert!((peaks[0] - omega).abs() / omega < 1e-3, "{peaks:?}");
    }
}
