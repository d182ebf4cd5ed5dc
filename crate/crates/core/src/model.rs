//! Junction parameters, derived scales and the tilted two-phase potential.
//!
//! Units throughout: hbar = E_C = 1. Energies are in units of the charging
//! energy, frequencies in E_C/hbar, time in hbar/E_C, phases in radians.
//!
//! The two channel phases `theta1`, `theta2` are mapped onto the
//! center-of-mass phase `theta` (alpha-weighted average, the only coordinate
//! that carries voltage and bias) and the relative phase `psi`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameter set of a two-channel hetero junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams {
    /// Josephson energy of channel 1.
    pub ej1: f64,
    /// Josephson energy of channel 2.
    pub ej2: f64,
    /// Inter-band coupling magnitude inside the two-gap electrode.
    pub ein: f64,
    /// Charge-screening constant of band 1.
    pub alpha1: f64,
    /// Charge-screening constant of band 2.
    pub alpha2: f64,
    /// Gap-symmetry sign of the inter-band coupling, +1 or -1.
    pub kappa: f64,
    /// Reduced bias current I_ex / I_c.
    pub bias: f64,
}

impl JunctionParams {
    /// Symmetric two-channel junction: `ej1 = ej2 = ej_total / 2`,
    /// `alpha1 = alpha2 = alpha`, `kappa = +1`, with `ein` chosen so that
    /// `omega_p / omega_jl = omega_ratio`.
    pub fn symmetric(ej_total: f64, alpha: f64, omega_ratio: f64, bias: f64) -> Self {
        let half = 0.5 * ej_total;
        Self {
            ej1: half,
            ej2: half,
            ein: ej_total / (2.0 * alpha * omega_ratio * omega_ratio),
            alpha1: alpha,
            alpha2: alpha,
            kappa: 1.0,
            bias,
        }
    }

    /// Builds parameters from the contour-map style inputs: total Josephson
    /// energy, plasma-to-Leggett frequency ratio and channel ratio
    /// `j_ratio = ej2 / ej1`.
    pub fn from_ratio_form(
        ej_total: f64,
        omega_ratio: f64,
        j_ratio: f64,
        alpha1: f64,
        alpha2: f64,
        kappa: f64,
        bias: f64,
    ) -> Result<Self> {
        if !(ej_total.is_finite() && ej_total > 0.0) {
            return Err(invalid("ej_over_ec", "must be finite and > 0", ej_total));
        }
        if !(omega_ratio.is_finite() && omega_ratio > 0.0) {
            return Err(invalid(
                "omega_ratio",
                "must be finite and > 0",
                omega_ratio,
            ));
        }
        if !(j_ratio.is_finite() && j_ratio > 0.0) {
            return Err(invalid("j_ratio", "must be finite and > 0", j_ratio));
        }
        let ej1 = ej_total / (1.0 + j_ratio);
        let ej2 = ej_total - ej1;
        let mut params = Self {
            ej1,
            ej2,
            ein: 1.0,
            alpha1,
            alpha2,
            kappa,
            bias,
        };
        params.set_omega_ratio(omega_ratio)?;
        Ok(params)
    }

    /// Rescales `ein` so that `omega_p / omega_jl` equals `ratio`, keeping
    /// the Josephson energies fixed.
    pub fn set_omega_ratio(&mut self, ratio: f64) -> Result<()> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(invalid("omega_ratio", "must be finite and > 0", ratio));
        }
        let alpha_sum = self.alpha1 + self.alpha2;
        if !(alpha_sum.is_finite() && alpha_sum > 0.0) {
            return Err(invalid("alpha1", "alpha1 + alpha2 must be > 0", alpha_sum));
        }
        // omega_jl^2 = 2 (a1 + a2) ein = omega_p^2 / ratio^2 = 2 ej / ratio^2
        self.ein = (self.ej1 + self.ej2) / (alpha_sum * ratio * ratio);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        positive("ej1", self.ej1)?;
        positive("ej2", self.ej2)?;
        positive("ein", self.ein)?;
        positive("alpha1", self.alpha1)?;
        positive("alpha2", self.alpha2)?;
        if self.kappa != 1.0 && self.kappa != -1.0 {
            return Err(invalid("kappa", "must be exactly +1 or -1", self.kappa));
        }
        if !(self.bias.is_finite() && self.bias >= 0.0) {
            return Err(invalid("bias", "must be finite and >= 0", self.bias));
        }
        Ok(())
    }

    #[inline]
    fn weights(&self) -> (f64, f64) {
        let s = self.alpha1 + self.alpha2;
        (self.alpha1 / s, self.alpha2 / s)
    }
}

fn invalid(name: &'static str, what: &str, value: f64) -> Error {
    Error::InvalidParameter {
        name,
        reason: format!("{what} (got {value})"),
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, "must be finite and > 0", value))
    }
}

/// Secondary quantities computed once from a [`JunctionParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Lambda = 1 + a1 a2 / (a1 + a2).
    pub lambda_cap: f64,
    /// E_J = E_J1 + E_J2, the scale of the washboard expansion.
    pub ej_sum: f64,
    /// |E_J1 + kappa E_J2|, the scale of the bias tilt term.
    pub ej_tilt: f64,
    pub omega_p: f64,
    pub omega_p1: f64,
    pub omega_p2: f64,
    /// Josephson-Leggett frequency sqrt(2 (a1 + a2) E_in).
    pub omega_jl: f64,
    pub m_cm: f64,
    pub m_rlt: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

/// Computes every derived scale after validating `params`.
pub fn derive(params: &JunctionParams) -> Result<DerivedScales> {
    params.validate()?;
    let JunctionParams {
        ej1,
        ej2,
        ein,
        alpha1,
        alpha2,
        kappa,
        ..
    } = *params;
    let alpha_sum = alpha1 + alpha2;
    let ej_sum = ej1 + ej2;
    let (w1, w2) = params.weights();

    let g_plus = (ej1 / (2.0 * ej_sum)) * w1 * w1 + (ej2 / (2.0 * ej_sum)) * w2 * w2;
    // Written over a common denominator so that ej1 a1 == ej2 a2 gives an exact zero.
    let g_minus = (ej1 * alpha1 - ej2 * alpha2) / (ej_sum * alpha_sum);

    Ok(DerivedScales {
        lambda_cap: 1.0 + alpha1 * alpha2 / alpha_sum,
        ej_sum,
        ej_tilt: (ej1 + kappa * ej2).abs(),
        omega_p: (2.0 * ej_sum).sqrt(),
        omega_p1: (2.0 * ej1).sqrt(),
        omega_p2: (2.0 * ej2).sqrt(),
        omega_jl: (2.0 * alpha_sum * ein).sqrt(),
        m_cm: 0.5,
        m_rlt: 1.0 / (2.0 * alpha_sum),
        g_plus,
        g_minus,
    })
}

/// (theta, psi) -> (theta1, theta2).
pub fn split_phases(theta: f64, psi: f64, params: &JunctionParams) -> (f64, f64) {
    let (w1, w2) = params.weights();
    (theta + w1 * psi, theta - w2 * psi)
}

/// (theta1, theta2) -> (theta, psi); exact inverse of [`split_phases`].
pub fn combine_phases(theta1: f64, theta2: f64, params: &JunctionParams) -> (f64, f64) {
    let (w1, w2) = params.weights();
    (w2 * theta1 + w1 * theta2, theta1 - theta2)
}

/// Tilted two-phase potential
/// `-E_J1 cos(theta1) - E_J2 cos(theta2) - kappa E_in cos(psi) - ej_tilt * bias * theta`.
pub fn potential(theta: f64, psi: f64, params: &JunctionParams) -> f64 {
    let (t1, t2) = split_phases(theta, psi, params);
    -params.ej1 * t1.cos()
        - params.ej2 * t2.cos()
        - params.kappa * params.ein * psi.cos()
        - tilt_energy(params) * params.bias * theta
}

/// Analytic (dV/dtheta, dV/dpsi).
pub fn potential_gradient(theta: f64, psi: f64, params: &JunctionParams) -> (f64, f64) {
    let (w1, w2) = params.weights();
    let (t1, t2) = split_phases(theta, psi, params);
    let (s1, s2) = (params.ej1 * t1.sin(), params.ej2 * t2.sin());
    let d_theta = s1 + s2 - tilt_energy(params) * params.bias;
    let d_psi = w1 * s1 - w2 * s2 + params.kappa * params.ein * psi.sin();
    (d_theta, d_psi)
}

/// Hessian `[[V_tt, V_tp], [V_tp, V_pp]]` of [`potential`].
pub fn potential_hessian(theta: f64, psi: f64, params: &JunctionParams) -> [[f64; 2]; 2] {
    let (w1, w2) = params.weights();
    let (t1, t2) = split_phases(theta, psi, params);
    let (c1, c2) = (params.ej1 * t1.cos(), params.ej2 * t2.cos());
    let v_tt = c1 + c2;
    let v_tp = w1 * c1 - w2 * c2;
    let v_pp = w1 * w1 * c1 + w2 * w2 * c2 + params.kappa * params.ein * psi.cos();
    [[v_tt, v_tp], [v_tp, v_pp]]
}

fn tilt_energy(params: &JunctionParams) -> f64 {
    (params.ej1 + params.kappa * params.ej2).abs()
}
