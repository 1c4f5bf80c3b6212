//! The Bochner–Riesz kernel on `C(S¹_σ)`:
//!
//! ```text
//! S(x, y) = Σ_j w_j K(d_j) − (1/πσ) ∫_0^∞ K(d_s) A_σ(s, θ₁ − θ₂) ds
//! ```
//!
//! with `K = K_λ^δ` the planar kernel. Everything is computed at `λ = 1`
//! on the radii `λr₁, λr₂` and multiplied by `λ²` at the end.
//!
//! Each of the two terms of `A_σ` is handled separately. Near `s = 0` a term
//! may be a narrow Lorentzian of width `σ|ā|`; its exact integral is
//! subtracted against the profile value at `d₀ = r₁ + r₂`, leaving a bounded
//! difference for the adaptive engine. Once `d_s ≥ d₀ + 20` the integral is
//! continued in the variable `d` on half-period panels, summed with Wynn's
//! epsilon algorithm and stopped either by convergence of the accelerated
//! sums or by an explicit bound on the remaining tail.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cone_geom::{
    a_sigma_angles, a_sigma_term, a_sigma_term_integral, diffraction_distance, weighted_images_dtheta, ConeParams,
    ConePoint,
};
use crate::error::{domain, Error, Result};
use crate::euclid::{kernel_constant, main_plus_unit_c, unit_kernel_c, BrParams};
use crate::quadrature::{integrate_with, PoleFlag, QuadratureConfig, Target};

/// Landau's uniform bound `|J_ν(x)| ≤ 0.7858·x^{−1/3}`, `ν > 0`.
const LANDAU: f64 = 0.785_746_870_4;
/// Distance beyond `d₀` at which the integral switches to the `d` variable.
const TAIL_OFFSET: f64 = 20.0;
const TAIL_MAX_PANELS: usize = 20_000;

/// Everything needed to evaluate the cone kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeKernelConfig {
    pub cone: ConeParams,
    pub br: BrParams,
    pub quad: QuadratureConfig,
}

impl ConeKernelConfig {
    pub fn new(sigma: f64, lambda: f64, delta: f64) -> Result<Self> {
        Ok(Self {
            cone: ConeParams::new(sigma)?,
            br: BrParams::new(lambda, delta)?,
            quad: QuadratureConfig { tol: 1e-12, ..Default::default() },
        })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Ok(Self { cone: ConeParams::new(sigma)?, ..*self })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Ok(Self { br: BrParams::new(lambda, self.br.delta)?, ..*self })
    }
}

/// Geometric and diffractive parts of the kernel; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBreakdown {
    pub geometric: f64,
    pub diffractive: f64,
    pub total: f64,
    /// Quadrature error estimate of `diffractive` (and hence `total`).
    pub err_est: f64,
}

/// A radial profile `f(d)` with a bound `env(D) ≥ sup_{d ≥ D} |f(d)|`.
trait Profile {
    fn at(&self, d: f64) -> f64;
    fn envelope(&self, d: f64) -> f64;
}

struct Exact {
    delta: f64,
    c: f64,
}

impl Profile for Exact {
    fn at(&self, d: f64) -> f64 {
        unit_kernel_c(d, self.delta, self.c)
    }
    fn envelope(&self, d: f64) -> f64 {
        self.c * LANDAU * d.powf(-4.0 / 3.0 - self.delta)
    }
}

/// Bound on `|main₊(d)|` for `d ≥ 2`: the Hankel amplitude is at most one
/// plus the moduli of its correction terms, which decrease in `d`.
fn main_envelope(d: f64, delta: f64, c: f64) -> f64 {
    let mu = 1.0 + delta;
    let m4 = 4.0 * mu * mu;
    let d = d.max(1.0);
    let mut t: f64 = 1.0;
    let mut amp = 1.0;
    for k in 1..5 {
        let odd = 2.0 * k as f64 - 1.0;
        t *= (m4 - odd * odd).abs() / (k as f64 * 8.0 * d);
        amp += t;
    }
    c * (2.0 / PI).sqrt() * 0.5 * amp * d.powf(-1.5 - delta)
}

struct MainPart {
    delta: f64,
    c: f64,
    imag: bool,
}

impl Profile for MainPart {
    fn at(&self, d: f64) -> f64 {
        let z = main_plus_unit_c(d, self.delta, self.c);
        if self.imag {
            z.im
        } else {
            z.re
        }
    }
    fn envelope(&self, d: f64) -> f64 {
        main_envelope(d, self.delta, self.c)
    }
}

struct Remainder {
    delta: f64,
    c: f64,
}

impl Profile for Remainder {
    fn at(&self, d: f64) -> f64 {
        unit_kernel_c(d, self.delta, self.c) - 2.0 * main_plus_unit_c(d, self.delta, self.c).re
    }
    fn envelope(&self, d: f64) -> f64 {
        self.c * LANDAU * d.powf(-4.0 / 3.0 - self.delta) + 2.0 * main_envelope(d, self.delta, self.c)
    }
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    if n < 3 {
        return *sums.last().unwrap_or(&0.0);
    }
    // e[k] holds column k of the table for the current diagonal.
    let mut prev2 = vec![0.0; n + 1];
    let mut prev: Vec<f64> = sums.to_vec();
    let mut best = *sums.last().unwrap();
    for col in 1..n {
        let len = n - col;
        let mut cur = vec![0.0; len];
        for i in 0..len {
            let diff = prev[i + 1] - prev[i];
            let base = if col == 1 { 0.0 } else { prev2[i + 1] };
            if diff == 0.0 {
                // Converged exactly; the sequence is constant from here.
                return prev[i + 1];
            }
            cur[i] = base + 1.0 / diff;
        }
        if col % 2 == 0 {
            best = cur[len - 1];
        }
        prev2 = prev;
        prev = cur;
    }
    best
}

/// `∫_{s_start}^∞ f(d_s) T(s; ā) ds` with `T = ½ sin ā / (cosh(s/σ) − cos ā)`.
///
/// `p1, p2` are radii at unit frequency. Returns `(value, err_est)`.
#[allow(clippy::too_many_arguments)]
fn diffraction_term<P: Profile>(
    prof: &P,
    p1: f64,
    p2: f64,
    a_bar: f64,
    sigma: f64,
    s_start: f64,
    tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let sin_a = a_bar.sin();
    if sin_a == 0.0 || a_bar == 0.0 {
        return Ok((0.0, 0.0));
    }
    let d0 = p1 + p2;
    let p = p1 * p2;
    if p == 0.0 {
        // d_s ≡ d₀: the integral is the profile value times the closed form.
        let full = a_sigma_term_integral(f64::INFINITY, a_bar, sigma) - a_sigma_term_integral(s_start, a_bar, sigma);
        return Ok((prof.at(d0) * full, 0.0));
    }

    // Switch point: d_s ≥ d₀ + 20 and ∂_s d_s ≥ 1.
    let d_target = d0 + TAIL_OFFSET;
    let mut s1 = 2.0 * (((d_target * d_target - d0 * d0) / (4.0 * p)).sqrt()).asinh();
    loop {
        let d = diffraction_distance(p1, p2, s1);
        if p * s1.sinh() >= d {
            break;
        }
        s1 += 0.5;
    }
    s1 = s1.max(s_start).max(2.0 * sigma);

    let subtract = s_start == 0.0;
    let f0 = if subtract { prof.at(d0) } else { 0.0 };
    let integrand = |s: f64| (prof.at(diffraction_distance(p1, p2, s)) - f0) * a_sigma_term(s, a_bar, sigma);
    let eps = sigma * a_bar.abs();
    let poles = if subtract && eps < sigma { vec![PoleFlag { at: 0.0, width: eps }] } else { vec![] };
    let mut breaks = vec![2.0 * sigma];
    let mut b = 1.0;
    while b < s1 {
        breaks.push(b);
        b *= 2.0;
    }
    let head_tol = 0.5 * tol;
    let head = integrate_with(
        &integrand,
        s_start,
        s1,
        &breaks,
        &poles,
        Target { abs: head_tol, rel: 0.0, max_panels },
    )?;
    let mut value = head.value;
    if subtract {
        value += f0 * a_sigma_term_integral(s1, a_bar, sigma);
    }

    let (tail, tail_err) = diffraction_tail(prof, p1, p2, a_bar, sigma, s1, 0.5 * tol)?;
    Ok((value + tail, head.err_est + tail_err))
}

/// `∫_{s1}^∞ f(d_s) T(s) ds` in the variable `d`, on panels of length π.
fn diffraction_tail<P: Profile>(
    prof: &P,
    p1: f64,
    p2: f64,
    a_bar: f64,
    sigma: f64,
    s1: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let d0 = p1 + p2;
    let p = p1 * p2;
    let half_sin = 0.5 * a_bar.sin().abs();
    let s_of_d = |d: f64| 2.0 * (((d - d0) * (d + d0) / (4.0 * p)).sqrt()).asinh();
    // ∫_s^∞ |T| ≤ ½|sin ā|·σ(coth(s/2σ) − 1).
    let tail_bound = |d: f64| {
        let s = s_of_d(d);
        let x = s / (2.0 * sigma);
        let coth_minus_one = 2.0 / ((2.0 * x).exp() - 1.0);
        prof.envelope(d) * half_sin * sigma * coth_minus_one
    };
    let g = |d: f64| {
        let s = s_of_d(d);
        prof.at(d) * a_sigma_term(s, a_bar, sigma) * d / (p * s.sinh())
    };
    let d_start = diffraction_distance(p1, p2, s1);
    if tail_bound(d_start) <= 0.1 * tol {
        return Ok((0.0, tail_bound(d_start)));
    }
    let panel_target = Target { abs: 1e-3 * tol, rel: 0.0, max_panels: 200 };
    let mut sums = Vec::new();
    let mut total = 0.0;
    let mut panel_err = 0.0;
    let mut last_est = f64::NAN;
    let mut streak = 0;
    for n in 0..TAIL_MAX_PANELS {
        let a = d_start + n as f64 * PI;
        let r = integrate_with(&g, a, a + PI, &[], &[], panel_target)?;
        total += r.value;
        panel_err += r.err_est;
        sums.push(total);
        let bound = tail_bound(a + PI);
        if bound <= 0.1 * tol {
            return Ok((total, panel_err + bound));
        }
        if sums.len() >= 8 {
            let window = &sums[sums.len().saturating_sub(24)..];
            let est = wynn_epsilon(window);
            let change = (est - last_est).abs();
            if change <= 0.05 * tol {
                streak += 1;
                if streak >= 3 {
                    return Ok((est, panel_err + change.max(1e-3 * tol) + (est - total).abs() * 1e-6));
                }
            } else {
                streak = 0;
            }
            last_est = est;
        }
    }
    Err(Error::Quadrature { value: total, err_est: tail_bound(d_start + TAIL_MAX_PANELS as f64 * PI), target: tol })
}

/// Weighted sum over the two `A_σ` terms of `∫_{s_start}^∞ f(d_s) T ds`.
#[allow(clippy::too_many_arguments)]
fn diffraction_pair<P: Profile>(
    prof: &P,
    p1: f64,
    p2: f64,
    dtheta: f64,
    cone: &ConeParams,
    s_start: f64,
    tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let mut v = 0.0;
    let mut e = 0.0;
    for a in a_sigma_angles(dtheta, cone) {
        let (vi, ei) = diffraction_term(prof, p1, p2, a, cone.sigma, s_start, 0.5 * tol, max_panels)?;
        v += vi;
        e += ei;
    }
    Ok((v, e))
}

fn check_radii(r1: f64, r2: f64) -> Result<()> {
    if !(r1 >= 0.0 && r2 >= 0.0) || !(r1 + r2 > 0.0) || !r1.is_finite() || !r2.is_finite() {
        return domain(format!("kernel needs r1, r2 >= 0 with r1 + r2 > 0, got ({r1}, {r2})"));
    }
    Ok(())
}

/// Kernel as a function of the radii and the angle difference `θ₁ − θ₂`.
pub fn kernel_dtheta(r1: f64, r2: f64, dtheta: f64, cfg: &ConeKernelConfig) -> Result<KernelBreakdown> {
    check_radii(r1, r2)?;
    let l = cfg.br.lambda;
    let l2 = l * l;
    let (p1, p2) = (l * r1, l * r2);
    let delta = cfg.br.delta;
    let c = kernel_constant(delta);
    let sigma = cfg.cone.sigma;

    let geometric: f64 = weighted_images_dtheta(p1, p2, dtheta, &cfg.cone)
        .iter()
        .map(|t| t.weight * unit_kernel_c(t.distance, delta, c))
        .sum();
    let (diff_int, err) = if sigma == 1.0 {
        (0.0, 0.0)
    } else {
        let tol = cfg.quad.tol * PI * sigma;
        diffraction_pair(&Exact { delta, c }, p1, p2, dtheta, &cfg.cone, 0.0, tol, cfg.quad.max_panels)?
    };
    let diffractive = -diff_int / (PI * sigma);
    Ok(KernelBreakdown {
        geometric: l2 * geometric,
        diffractive: l2 * diffractive,
        total: l2 * (geometric + diffractive),
        err_est: l2 * err / (PI * sigma),
    })
}

/// `S_λ^δ(x, y)` on the cone `cfg.cone`.
pub fn kernel(x: &ConePoint, y: &ConePoint, cfg: &ConeKernelConfig) -> Result<KernelBreakdown> {
    kernel_dtheta(x.r, y.r, x.theta - y.theta, cfg)
}

/// The six-way split `G_m^± + D_m^± + G_e + D_e` from the asymptotic
/// decomposition `K = main₊ + main₋ + b` of the planar kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelComponents {
    pub g_m_plus: Complex64,
    pub g_m_minus: Complex64,
    pub g_e: f64,
    pub d_m_plus: Complex64,
    pub d_m_minus: Complex64,
    pub d_e: f64,
    pub err_est: f64,
}

impl KernelComponents {
    pub fn sum(&self) -> f64 {
        (self.g_m_plus + self.g_m_minus + self.d_m_plus + self.d_m_minus).re + self.g_e + self.d_e
    }
}

pub fn kernel_components(x: &ConePoint, y: &ConePoint, cfg: &ConeKernelConfig) -> Result<KernelComponents> {
    check_radii(x.r, y.r)?;
    let l = cfg.br.lambda;
    let l2 = l * l;
    let (p1, p2) = (l * x.r, l * y.r);
    let dtheta = x.theta - y.theta;
    let delta = cfg.br.delta;
    let c = kernel_constant(delta);
    let sigma = cfg.cone.sigma;

    let mut g_m = Complex64::new(0.0, 0.0);
    let mut g_e = 0.0;
    for t in weighted_images_dtheta(p1, p2, dtheta, &cfg.cone) {
        g_m += t.weight * main_plus_unit_c(t.distance, delta, c);
        g_e += t.weight * Remainder { delta, c }.at(t.distance);
    }
    let (mut d_m, mut d_e, mut err) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    if sigma != 1.0 {
        let tol = cfg.quad.tol * PI * sigma;
        let mp = cfg.quad.max_panels;
        let (re, e1) = diffraction_pair(&MainPart { delta, c, imag: false }, p1, p2, dtheta, &cfg.cone, 0.0, tol, mp)?;
        let (im, e2) = diffraction_pair(&MainPart { delta, c, imag: true }, p1, p2, dtheta, &cfg.cone, 0.0, tol, mp)?;
        let (de, e3) = diffraction_pair(&Remainder { delta, c }, p1, p2, dtheta, &cfg.cone, 0.0, tol, mp)?;
        d_m = -Complex64::new(re, im) / (PI * sigma);
        d_e = -de / (PI * sigma);
        err = (e1 + e2 + e3) / (PI * sigma);
    }
    Ok(KernelComponents {
        g_m_plus: l2 * g_m,
        g_m_minus: l2 * g_m.conj(),
        g_e: l2 * g_e,
        d_m_plus: l2 * d_m,
        d_m_minus: l2 * d_m.conj(),
        d_e: l2 * d_e,
        err_est: l2 * err,
    })
}

/// Angle-shift conventions for the reduction from `C(S¹_σ)` to `C(S¹_{σ/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftConvention {
    /// `½[K_σ(θ₁, θ₂) + K_σ(θ₁ + σ/2, θ₂ + σ/2)]`, the shift read literally.
    HalfSigma,
    /// `½[K_σ(θ₁, θ₂) + K_σ(θ₁ + πσ, θ₂ + πσ)]`, both points moved by half
    /// the circumference.
    HalfCircumference,
    /// `K_σ(θ₁, θ₂) + K_σ(θ₁ + πσ, θ₂)`: the sum over the orbit of the
    /// half-turn acting on one point.
    OrbitSum,
}

impl ShiftConvention {
    pub const ALL: [ShiftConvention; 3] =
        [ShiftConvention::HalfSigma, ShiftConvention::HalfCircumference, ShiftConvention::OrbitSum];

    pub fn name(self) -> &'static str {
        match self {
            ShiftConvention::HalfSigma => "half-sigma",
            ShiftConvention::HalfCircumference => "half-circumference",
            ShiftConvention::OrbitSum => "orbit-sum",
        }
    }
}

/// Right-hand side of the reduction identity built from kernels on the
/// cone `cfg.cone` (radius σ).
pub fn reduction_rhs(x: &ConePoint, y: &ConePoint, cfg: &ConeKernelConfig, conv: ShiftConvention) -> Result<f64> {
    let sigma = cfg.cone.sigma;
    let base = kernel_dtheta(x.r, y.r, x.theta - y.theta, cfg)?.total;
    let shifted = match conv {
        ShiftConvention::HalfSigma => kernel_dtheta(x.r, y.r, (x.theta + sigma / 2.0) - (y.theta + sigma / 2.0), cfg)?,
        ShiftConvention::HalfCircumference => {
            kernel_dtheta(x.r, y.r, (x.theta + PI * sigma) - (y.theta + PI * sigma), cfg)?
        }
        ShiftConvention::OrbitSum => kernel_dtheta(x.r, y.r, (x.theta + PI * sigma) - y.theta, cfg)?,
    }
    .total;
    Ok(match conv {
        ShiftConvention::OrbitSum => base + shifted,
        _ => 0.5 * (base + shifted),
    })
}

/// `|K_{σ/2}(x, y) − RHS_σ(x, y)|` where `cfg.cone` has radius σ and the
/// points are read on the cone of radius σ/2.
pub fn reduction_identity_residual(
    x: &ConePoint,
    y: &ConePoint,
    cfg: &ConeKernelConfig,
    conv: ShiftConvention,
) -> Result<f64> {
    let small = cfg.with_sigma(cfg.cone.sigma / 2.0)?;
    let lhs = kernel_dtheta(x.r, y.r, x.theta - y.theta, &small)?.total;
    Ok((lhs - reduction_rhs(x, y, cfg, conv)?).abs())
}

/// `|K̃¹_{D,k}(r₁, r₂, Δθ)| / [2^{−k(3/2+δ)} (1 + 2^k r₁r₂)^{−1/2}]` where
/// `K̃¹_{D,k} = ∫_{2σ}^∞ main₊(d_s(2^k r₁, 2^k r₂)) Σ_± sin ā_± / (cosh(s/σ) − cos ā_±) ds`
/// at unit frequency with the radial cutoff taken as 1.
pub fn diffraction_bound_ratio(r1: f64, r2: f64, dtheta: f64, k: u32, cfg: &ConeKernelConfig) -> Result<f64> {
    if !(0.75..=8.0 / 3.0).contains(&(r1 + r2)) || r1 < 0.0 || r2 < 0.0 {
        return domain(format!("r1 + r2 must lie in [3/4, 8/3], got {}", r1 + r2));
    }
    if k == 0 {
        return domain("k must be at least 1");
    }
    let delta = cfg.br.delta;
    let c = kernel_constant(delta);
    let scale = 2f64.powi(k as i32);
    let (p1, p2) = (scale * r1, scale * r2);
    let tol = cfg.quad.tol * 2f64.powf(-(k as f64) * (1.5 + delta));
    let mp = cfg.quad.max_panels;
    let (re, _) = diffraction_pair(&MainPart { delta, c, imag: false }, p1, p2, dtheta, &cfg.cone, 2.0 * cfg.cone.sigma, tol, mp)?;
    let (im, _) = diffraction_pair(&MainPart { delta, c, imag: true }, p1, p2, dtheta, &cfg.cone, 2.0 * cfg.cone.sigma, tol, mp)?;
    // Σ_± sin/(cosh − cos) is twice the sum of the ½-normalized terms.
    let k1 = 2.0 * Complex64::new(re, im).norm();
    let denom = 2f64.powf(-(k as f64) * (1.5 + delta)) * (1.0 + scale * r1 * r2).powf(-0.5);
    Ok(k1 / denom)
}
