//! Zero-point renormalization of the washboard and the instanton escape rate.
//!
//! At zero temperature the Josephson-Leggett mode sits in its ground state
//! with `<psi> = 0` and `<psi^2> = (a1 + a2) / w_jl`. Replacing `psi^2` by its
//! mean in the `g+ E_J psi^2 cos(theta)` coupling reduces the effective
//! Josephson energy to `(1 - eps) E_J` with `eps = g+ <psi^2>`. The escape rate
//! out of the renormalized, tilted well then follows from the cubic-barrier
//! instanton:
//!
//! ```text
//! Gamma = 12 w(I) sqrt(3 V0 / (2 pi w(I))) exp(-36 V0 / (5 w(I)))
//! w(I)  = w_p ((1 - eps)^2 - I^2)^(1/4)
//! V0    = w(I)^2 cot^2(theta0) / 3,   (1 - eps) sin(theta0) = I
//! ```
//!
//! Rates are carried as natural logs throughout.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, DerivedScales, JunctionParams};

/// `eps` above which the quadratic expansion in `psi` is considered strained.
pub const EPSILON_STRAIN_THRESHOLD: f64 = 0.2;

/// Zero-point fluctuation of the relative phase and the resulting reduction
/// of the Josephson coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRenorm {
    /// `<psi^2>` at T = 0.
    pub psi_variance: f64,
    /// `g+ <psi^2>`.
    pub epsilon: f64,
    /// The same quantity from `(g+/sqrt2)(a1 + a2)(w_p/w_jl) sqrt(E_C/E_J)`,
    /// evaluated independently from the raw parameters.
    pub epsilon_closed_form: f64,
}

impl FluctuationRenorm {
    /// The renormalized barrier exists only for `eps < 1`.
    pub fn is_valid(&self) -> bool {
        self.epsilon < 1.0
    }

    pub fn is_strained(&self) -> bool {
        self.epsilon > EPSILON_STRAIN_THRESHOLD
    }

    pub fn relative_mismatch(&self) -> f64 {
        (self.epsilon - self.epsilon_closed_form).abs() / self.epsilon_closed_form.abs()
    }
}

/// `<psi^2>` of the harmonic Josephson-Leggett ground state, `1 / (2 m_rlt w_jl)`.
pub fn zero_point_variance(params: &JunctionParams) -> Result<f64> {
    let s = model::derive(params)?;
    Ok(1.0 / (2.0 * s.m_rlt * s.omega_jl))
}

pub fn epsilon(params: &JunctionParams) -> Result<FluctuationRenorm> {
    let scales = model::derive(params)?;
    Ok(epsilon_from_scales(params, &scales))
}

/// [`epsilon`] with the product route taken from caller-supplied scales.
/// The closed-form route never reads `scales`, so a corrupted scale set
/// shows up as a mismatch between the two.
pub fn epsilon_from_scales(params: &JunctionParams, scales: &DerivedScales) -> FluctuationRenorm {
    let psi_variance = 1.0 / (2.0 * scales.m_rlt * scales.omega_jl);
    let epsilon = scales.g_plus * psi_variance;

    let JunctionParams {
        ej1,
        ej2,
        ein,
        alpha1,
        alpha2,
        ..
    } = *params;
    let alpha_sum = alpha1 + alpha2;
    let ej = ej1 + ej2;
    let g_plus =
        (ej1 * alpha1 * alpha1 + ej2 * alpha2 * alpha2) / (2.0 * ej * alpha_sum * alpha_sum);
    let frequency_ratio = (ej / (alpha_sum * ein)).sqrt();
    let epsilon_closed_form = g_plus * FRAC_1_SQRT_2 * alpha_sum * frequency_ratio / ej.sqrt();

    FluctuationRenorm {
        psi_variance,
        epsilon,
        epsilon_closed_form,
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(eps))
    }
}

/// Renormalized center-of-mass washboard `-E_J [(1 - eps) cos(theta) + I theta]`.
pub fn effective_potential(theta: f64, params: &JunctionParams, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let ej = params.ej1 + params.ej2;
    Ok(-ej * ((1.0 - eps) * theta.cos() + params.bias * theta))
}

/// Samples of the bare and renormalized washboard on `[from, to]`.
pub fn potential_profile(
    params: &JunctionParams,
    eps: f64,
    from: f64,
    to: f64,
    count: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    check_eps(eps)?;
    if count < 2 || !(from < to) {
        return Err(Error::InvalidArgument(format!(
            "profile needs count >= 2 and from < to (got {count}, [{from}, {to}])"
        )));
    }
    (0..count)
        .map(|i| {
            let theta = from + (to - from) * i as f64 / (count - 1) as f64;
            Ok((
                theta,
                effective_potential(theta, params, 0.0)?,
                effective_potential(theta, params, eps)?,
            ))
        })
        .collect()
}

/// Height of the full (non-cubic) renormalized barrier, from the well
/// minimum at `theta0` to the maximum at `pi - theta0`.
pub fn exact_barrier_height(params: &JunctionParams, eps: f64) -> Result<f64> {
    let b = barrier_params(params, eps)?;
    let ej = params.ej1 + params.ej2;
    Ok(ej * (2.0 * (1.0 - eps) * b.theta0.cos() - params.bias * (PI - 2.0 * b.theta0)))
}

/// Geometry of the renormalized well in the cubic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    /// Well minimum, `(1 - eps) sin(theta0) = I`.
    pub theta0: f64,
    /// Small-oscillation frequency at the bottom of the tilted well.
    pub omega_p_i: f64,
    /// Cubic barrier height.
    pub v0: f64,
}

pub fn barrier_params(params: &JunctionParams, eps: f64) -> Result<BarrierParams> {
    let s = model::derive(params)?;
    check_eps(eps)?;
    let bias = params.bias;
    let critical = 1.0 - eps;
    if bias >= critical {
        return Err(Error::NoBarrier { bias, critical });
    }
    if bias <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "bias",
            reason: "the cubic barrier needs a strictly positive bias".into(),
        });
    }
    let theta0 = (bias / critical).asin();
    let omega_p_i = s.omega_p * (critical * critical - bias * bias).sqrt().sqrt();
    let cot = theta0.cos() / theta0.sin();
    let v0 = omega_p_i * omega_p_i * cot * cot / 3.0;
    Ok(BarrierParams {
        theta0,
        omega_p_i,
        v0,
    })
}

/// Escape rate out of the renormalized well, all in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub epsilon: f64,
    pub omega_p_i: f64,
    pub theta0: f64,
    pub v0: f64,
    /// Instanton exponent `36 V0 / (5 w(I))`.
    pub exponent_b: f64,
    /// `ln(12 w(I) sqrt(3 V0 / (2 pi w(I))))`.
    pub ln_prefactor: f64,
    /// `ln Gamma` in units of E_C / hbar.
    pub ln_gamma: f64,
}

impl EscapeResult {
    /// `V0 / (hbar w(I))`, the barrier in units of the well's quantum.
    pub fn barrier_ratio(&self) -> f64 {
        self.v0 / self.omega_p_i
    }
}

pub fn escape_rate_ln(params: &JunctionParams, eps: f64) -> Result<EscapeResult> {
    let b = barrier_params(params, eps)?;
    let exponent_b = 36.0 * b.v0 / (5.0 * b.omega_p_i);
    let ln_prefactor =
        12f64.ln() + b.omega_p_i.ln() + 0.5 * (3.0 * b.v0 / (2.0 * PI * b.omega_p_i)).ln();
    Ok(EscapeResult {
        epsilon: eps,
        omega_p_i: b.omega_p_i,
        theta0: b.theta0,
        v0: b.v0,
        exponent_b,
        ln_prefactor,
        ln_gamma: ln_prefactor - exponent_b,
    })
}

/// `ln(Gamma / Gamma_0)` with `eps` taken from the parameters.
pub fn enhancement_ratio_ln(params: &JunctionParams) -> Result<f64> {
    let eps = epsilon(params)?.epsilon;
    enhancement_ratio_ln_at(params, eps)
}

/// `ln(Gamma(eps) / Gamma(0))` at the same bias and Josephson energy.
pub fn enhancement_ratio_ln_at(params: &JunctionParams, eps: f64) -> Result<f64> {
    let corrected = escape_rate_ln(params, eps)?;
    let bare = escape_rate_ln(params, 0.0)?;
    Ok(corrected.ln_gamma - bare.ln_gamma)
}

/// Parameter that a sweep axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Reduced bias I_ex / I_c.
    Bias,
    /// `w_p / w_jl`, realized by rescaling `ein` at fixed Josephson energies.
    OmegaRatio,
    /// Total Josephson energy `E_J / E_C` at fixed channel ratio.
    EjOverEc,
    /// `alpha1`; `alpha2` follows at fixed `alpha2 / alpha1`.
    Alpha,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Bias => "bias",
            SweepAxis::OmegaRatio => "omega_ratio",
            SweepAxis::EjOverEc => "ej_over_ec",
            SweepAxis::Alpha => "alpha",
        }
    }

    /// Application order inside a cell; `omega_ratio` must come after the
    /// axes that change `w_p` or `a1 + a2`.
    fn rank(&self) -> u8 {
        match self {
            SweepAxis::Alpha => 0,
            SweepAxis::EjOverEc => 1,
            SweepAxis::OmegaRatio => 2,
            SweepAxis::Bias => 3,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bias" => Ok(SweepAxis::Bias),
            "omega_ratio" => Ok(SweepAxis::OmegaRatio),
            "ej_over_ec" => Ok(SweepAxis::EjOverEc),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::InvalidAxis(format!(
                "unknown axis `{other}` (expected bias, omega_ratio, ej_over_ec or alpha)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(axis: SweepAxis, min: f64, max: f64, count: usize) -> Self {
        Self {
            axis,
            min,
            max,
            count,
        }
    }

    fn validate(&self) -> Result<()> {
        let name = self.axis.name();
        if self.count < 2 {
            return Err(Error::InvalidAxis(format!("{name}: count must be >= 2")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidAxis(format!("{name}: range must be finite")));
        }
        if self.min > self.max {
            return Err(Error::InvalidAxis(format!(
                "{name}: inverted range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Grid point `i`, with both ends hit exactly.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Where each sweep cell takes its `eps` from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// `g+ <psi^2>` of the cell's parameters.
    FromParams,
    /// The same value in every cell.
    Fixed(f64),
}

/// Rectangular grid of `ln(Gamma/Gamma_0)`, stored row-major with `axis1`
/// as the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub base: JunctionParams,
    pub epsilon_mode: EpsilonMode,
    /// `ln(Gamma/Gamma_0)`; NaN where the cell is invalid.
    pub ln_ratio: Vec<f64>,
    pub valid: Vec<bool>,
}

impl SweepGrid {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.axis2.count + j;
        self.valid[k].then_some(self.ln_ratio[k])
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.axis2.count;
        &self.ln_ratio[i * n..(i + 1) * n]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Parameters of one sweep cell.
pub fn cell_params(
    base: &JunctionParams,
    assignments: &[(SweepAxis, f64)],
) -> Result<JunctionParams> {
    let base_scales = model::derive(base)?;
    let base_ratio = base_scales.omega_p / base_scales.omega_jl;
    let mut ordered = assignments.to_vec();
    ordered.sort_by_key(|(axis, _)| axis.rank());
    let sets_ratio = ordered.iter().any(|(a, _)| *a == SweepAxis::OmegaRatio);

    let mut p = *base;
    for (axis, value) in ordered {
        match axis {
            SweepAxis::Alpha => {
                let ratio = base.alpha2 / base.alpha1;
                p.alpha1 = value;
                p.alpha2 = value * ratio;
            }
            SweepAxis::EjOverEc => {
                let share = base.ej1 / (base.ej1 + base.ej2);
                p.ej1 = value * share;
                p.ej2 = value - p.ej1;
            }
            SweepAxis::OmegaRatio => p.set_omega_ratio(value)?,
            SweepAxis::Bias => p.bias = value,
        }
    }
    if !sets_ratio && p != *base {
        // hold the base plasma/Leggett ratio while E_J or alpha move
        p.set_omega_ratio(base_ratio)?;
    }
    p.validate()?;
    Ok(p)
}

fn evaluate_cell(params: &JunctionParams, mode: EpsilonMode) -> Result<f64> {
    let eps = match mode {
        EpsilonMode::FromParams => epsilon(params)?.epsilon,
        EpsilonMode::Fixed(e) => e,
    };
    enhancement_ratio_ln_at(params, eps)
}

/// Evaluates `ln(Gamma/Gamma_0)` on the `axis1 x axis2` grid. Cells without
/// a barrier (or with otherwise invalid parameters) are flagged, not fatal.
pub fn sweep_grid(
    base: &JunctionParams,
    axis1: AxisSpec,
    axis2: AxisSpec,
    epsilon_mode: EpsilonMode,
) -> Result<SweepGrid> {
    use rayon::prelude::*;

    axis1.validate()?;
    axis2.validate()?;
    if axis1.axis == axis2.axis {
        return Err(Error::InvalidAxis(format!(
            "both axes sweep `{}`",
            axis1.axis.name()
        )));
    }
    model::derive(base)?;

    let n2 = axis2.count;
    let cells: Vec<Option<f64>> = (0..axis1.count * n2)
        .into_par_iter()
        .map(|k| {
            let assignments = [
                (axis1.axis, axis1.value(k / n2)),
                (axis2.axis, axis2.value(k % n2)),
            ];
            cell_params(base, &assignments)
                .and_then(|p| evaluate_cell(&p, epsilon_mode))
                .ok()
                .filter(|v| v.is_finite())
        })
        .collect();

    Ok(SweepGrid {
        axis1,
        axis2,
        base: *base,
        epsilon_mode,
        valid: cells.iter().map(Option::is_some).collect(),
        ln_ratio: cells.into_iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
    })
}
