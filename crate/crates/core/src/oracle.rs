//! Independent numerical checks of the closed-form results.
//!
//! - [`harmonic_spectrum`]: finite-difference quantization of the relative
//!   phase in its harmonic well; recovers the Leggett ladder and `<psi^2>`.
//! - [`bounce_action`]: WKB under-barrier integral `2 int sqrt(2 m (V - V_min))`
//!   by adaptive Gauss-Kronrod quadrature, for any 1D profile.
//! - [`cubic_fit`]: Taylor expansion of the renormalized washboard at its
//!   well minimum, the bridge between the exact and cubic barriers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escape;
use crate::model::{self, JunctionParams};

pub mod suite;

/// Largest relative change of a level spacing tolerated when the grid is refined.
pub const SPACING_RESOLUTION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Second moment of the normalized ground-state eigenvector.
    pub ground_psi_variance: f64,
    pub half_width: f64,
    pub points: usize,
    /// Largest relative change of a level spacing between `points` and `2 points`.
    pub spacing_change: f64,
}

impl SpectrumResult {
    pub fn spacings(&self) -> Vec<f64> {
        self.eigenvalues.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Analytic standard deviation of `psi` in the Leggett ground state.
pub fn analytic_psi_sigma(params: &JunctionParams) -> Result<f64> {
    Ok(escape::zero_point_variance(params)?.sqrt())
}

/// Lowest `n_levels` states of
/// `H = -(1/(2 m_rlt)) d^2/dpsi^2 + E_in psi^2 / 2` on `[-L, L]` with
/// Dirichlet ends and `points` interior grid points.
///
/// The calculation is repeated on a grid with `2 points` and fails with
/// [`Error::Convergence`] if any level spacing moves by more than
/// [`SPACING_RESOLUTION_TOL`].
pub fn harmonic_spectrum(
    params: &JunctionParams,
    half_width: f64,
    points: usize,
    n_levels: usize,
) -> Result<SpectrumResult> {
    let sigma = analytic_psi_sigma(params)?;
    if !(half_width >= 8.0 * sigma) {
        return Err(Error::InvalidArgument(format!(
            "half width {half_width} is below 8 sigma = {}",
            8.0 * sigma
        )));
    }
    if n_levels < 2 || points < n_levels + 2 {
        return Err(Error::InvalidArgument(format!(
            "need n_levels >= 2 and points > n_levels + 1 (got {n_levels}, {points})"
        )));
    }
    let coarse = fd_levels(params, half_width, points, n_levels, true)?;
    let fine = fd_levels(params, half_width, 2 * points, n_levels, false)?;

    let spacing_change = coarse
        .0
        .windows(2)
        .zip(fine.0.windows(2))
        .map(|(c, f)| ((c[1] - c[0]) - (f[1] - f[0])).abs() / (f[1] - f[0]).abs())
        .fold(0.0, f64::max);
    if !(spacing_change <= SPACING_RESOLUTION_TOL) {
        return Err(Error::Convergence(format!(
            "level spacing changed by {:.3e} on refining {points} -> {} points",
            spacing_change,
            2 * points
        )));
    }

    Ok(SpectrumResult {
        eigenvalues: coarse.0,
        ground_psi_variance: coarse.1,
        half_width,
        points,
        spacing_change,
    })
}

/// Eigenvalues (and optionally the ground-state variance) on one grid.
fn fd_levels(
    params: &JunctionParams,
    half_width: f64,
    points: usize,
    n_levels: usize,
    with_variance: bool,
) -> Result<(Vec<f64>, f64)> {
    let s = model::derive(params)?;
    let kinetic = 1.0 / (2.0 * s.m_rlt);
    let h = 2.0 * half_width / (points + 1) as f64;
    let grid: Vec<f64> = (1..=points).map(|i| -half_width + h * i as f64).collect();
    let diag: Vec<f64> = grid
        .iter()
        .map(|x| 2.0 * kinetic / (h * h) + 0.5 * params.ein * x * x)
        .collect();
    let off = -kinetic / (h * h);
    let tri = SymTridiagonal { diag, off };

    let eigenvalues: Vec<f64> = (0..n_levels).map(|k| tri.eigenvalue(k)).collect();
    let variance = if with_variance {
        let v = tri.eigenvector(eigenvalues[0]);
        let norm: f64 = v.iter().map(|c| c * c).sum();
        grid.iter().zip(&v).map(|(x, c)| x * x * c * c).sum::<f64>() / norm
    } else {
        f64::NAN
    };
    Ok((eigenvalues, variance))
}

/// Observed convergence order of the finite-difference ground energy from
/// three grids whose spacing halves each time.
pub fn spectrum_convergence_order(
    params: &JunctionParams,
    half_width: f64,
    points: usize,
) -> Result<f64> {
    let e = |n: usize| -> Result<f64> { Ok(fd_levels(params, half_width, n, 1, false)?.0[0]) };
    // (n + 1) doubles so the spacing 2L/(n+1) halves exactly
    let n1 = points;
    let n2 = 2 * (n1 + 1) - 1;
    let n3 = 2 * (n2 + 1) - 1;
    let (e1, e2, e3) = (e(n1)?, e(n2)?, e(n3)?);
    Ok(((e1 - e2) / (e2 - e3)).log2())
}

/// Symmetric tridiagonal matrix with constant off-diagonal.
struct SymTridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl SymTridiagonal {
    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let off_sq = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0;
        for (i, d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - off_sq / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + self.off.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// k-th smallest eigenvalue by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let r = 2.0 * self.off.abs();
        let mut lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min) - r;
        let mut hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + r;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for an accurate eigenvalue by inverse iteration.
    fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + self.off.abs();
        let shift = lambda + 1e-13 * scale;
        let tiny = f64::EPSILON * scale;
        let mut x = vec![1.0; n];
        for _ in 0..4 {
            // Thomas algorithm on (T - shift) y = x
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            let mut pivot = self.diag[0] - shift;
            if pivot.abs() < tiny {
                pivot = tiny;
            }
            c[0] = self.off / pivot;
            d[0] = x[0] / pivot;
            for i in 1..n {
                let mut p = self.diag[i] - shift - self.off * c[i - 1];
                if p.abs() < tiny {
                    p = tiny;
                }
                c[i] = self.off / p;
                d[i] = (x[i] - self.off * d[i - 1]) / p;
            }
            let mut y = vec![0.0; n];
            y[n - 1] = d[n - 1];
            for i in (0..n - 1).rev() {
                y[i] = d[i] - c[i] * y[i + 1];
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / norm).collect();
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceResult {
    /// `2 int sqrt(2 m (V - V_min)) dtheta` between the turning points.
    pub action_b: f64,
    /// Inner (well minimum) and outer turning points.
    pub turning_points: (f64, f64),
    /// Quadrature error estimate on `action_b`.
    pub error_estimate: f64,
}

/// Points per washboard period in the outward turning-point scan.
const TURNING_SCAN_STEPS: usize = 8192;

/// Under-barrier action of `profile` for escape in the `+theta` direction
/// from the minimum at `theta_min`.
///
/// The outer turning point is the first point within one period
/// (`2 pi`) past the barrier where the profile returns to `V(theta_min)`.
/// Its square-root zero is removed with `theta = theta_b - s^2` before
/// the integral is handed to adaptive Gauss-Kronrod quadrature.
pub fn bounce_action<F>(profile: F, mass: f64, theta_min: f64, tol: f64) -> Result<BounceResult>
where
    F: Fn(f64) -> f64,
{
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mass must be > 0, got {mass}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    let v_min = profile(theta_min);
    let lift = |theta: f64| profile(theta) - v_min;

    let step = TAU / TURNING_SCAN_STEPS as f64;
    let mut prev = theta_min;
    let mut crossing = None;
    for i in 1..=TURNING_SCAN_STEPS {
        let theta = theta_min + step * i as f64;
        let v = lift(theta);
        if !v.is_finite() {
            break;
        }
        if v <= 0.0 {
            if i > 1 {
                crossing = Some((prev, theta));
            }
            break;
        }
        prev = theta;
    }
    let (mut lo, mut hi) = crossing.ok_or_else(|| {
        Error::NoTurningPoint(format!(
            "profile does not return to V({theta_min}) within one period"
        ))
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lift(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_b = lo;

    let momentum = |theta: f64| (2.0 * mass * lift(theta).max(0.0)).sqrt();
    let split = 0.5 * (theta_min + theta_b);
    let inner = gauss_kronrod(&momentum, theta_min, split, 0.5 * tol);
    let s_max = (theta_b - split).sqrt();
    let outer = gauss_kronrod(
        &|s: f64| 2.0 * s * momentum(theta_b - s * s),
        0.0,
        s_max,
        0.5 * tol,
    );

    Ok(BounceResult {
        action_b: 2.0 * (inner.0 + outer.0),
        turning_points: (theta_min, theta_b),
        error_estimate: 2.0 * (inner.1 + outer.1),
    })
}

// 15-point Kronrod nodes/weights and the embedded 7-point Gauss weights.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let pair = f(center - half * x) + f(center + half * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7-K15 quadrature; returns (value, error estimate).
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (value, error) = qk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total_err = error;
    for _ in 0..2000 {
        if total_err <= tol {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (lv, le) = qk15(f, worst.a, mid);
        let (rv, re) = qk15(f, mid, worst.b);
        total_err += le + re - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    (value, error)
}

/// Cubic Taylor model `V(theta0 + x) - V(theta0) = q x^2 + r x^3` of the
/// renormalized washboard around its well minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicFit {
    /// Well minimum.
    pub theta_min: f64,
    /// `q = V''(theta0) / 2`.
    pub quadratic: f64,
    /// `r = V'''(theta0) / 6` (negative: the barrier lies at `+x`).
    pub cubic: f64,
    /// `4 q^3 / (27 r^2)`.
    pub barrier_height: f64,
    /// Where the cubic returns to the well-minimum energy, `theta0 - q / r`.
    pub exit_point: f64,
}

impl CubicFit {
    /// Cubic model measured from the well minimum energy.
    pub fn eval(&self, theta: f64) -> f64 {
        let x = theta - self.theta_min;
        x * x * (self.quadratic + self.cubic * x)
    }
}

pub fn cubic_fit(params: &JunctionParams, eps: f64) -> Result<CubicFit> {
    // existence check only; the expansion is rebuilt from derivatives below
    escape::barrier_params(params, eps)?;
    let ej = params.ej1 + params.ej2;
    let strength = ej * (1.0 - eps);
    // V = -E_J[(1-eps) cos + I theta]: V' = 0 at sin(theta0) = I/(1-eps)
    let sin0 = params.bias / (1.0 - eps);
    let cos0 = (1.0 - sin0 * sin0).sqrt();
    let theta_min = sin0.atan2(cos0);
    let quadratic = 0.5 * strength * cos0;
    let cubic = -strength * sin0 / 6.0;
    Ok(CubicFit {
        theta_min,
        quadratic,
        cubic,
        barrier_height: 4.0 * quadratic.powi(3) / (27.0 * cubic * cubic),
        exit_point: theta_min - quadratic / cubic,
    })
}
