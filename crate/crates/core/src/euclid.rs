//! The planar Bochner–Riesz kernel
//! `K_λ^δ(x) = (2π)^{−2} ∫ e^{ix·ξ} (1 − |ξ|²/λ²)₊^δ dξ`
//! and its large-distance split into two oscillatory main terms and a
//! remainder.
//!
//! Radially, `K_λ^δ(r) = λ² C_δ (λr)^{−1−δ} J_{1+δ}(λr)` with
//! `C_δ = 2^δ Γ(δ+1) / (2π)`, and `K_λ^δ(0) = λ² / (4π(δ+1))`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::specfun::{j_over_power, jv};

/// Frequency cutoff `λ > 0` and order `δ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrParams {
    pub lambda: f64,
    pub delta: f64,
}

impl BrParams {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("lambda must be positive, got {lambda}"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return domain(format!("delta must be positive, got {delta}"));
        }
        Ok(Self { lambda, delta })
    }
}

/// `C_δ = 2^δ Γ(δ+1) / (2π)`.
pub fn kernel_constant(delta: f64) -> f64 {
    2f64.powf(delta) * statrs::function::gamma::gamma(delta + 1.0) / (2.0 * PI)
}

/// `K_1^δ(z)`: the kernel at unit frequency.
pub(crate) fn unit_kernel_c(z: f64, delta: f64, c: f64) -> f64 {
    let mu = 1.0 + delta;
    if z < 1.0 {
        c * j_over_power(mu, z)
    } else {
        c * jv(mu, z) / z.powf(mu)
    }
}

pub(crate) fn unit_kernel(z: f64, delta: f64) -> f64 {
    unit_kernel_c(z, delta, kernel_constant(delta))
}

/// `K_λ^δ(dist)`.
pub fn k_euclid_exact(dist: f64, p: &BrParams) -> f64 {
    p.lambda * p.lambda * unit_kernel(p.lambda * dist, p.delta)
}

/// Number of Hankel terms kept in the main parts.
const HANKEL_TERMS: usize = 5;

/// `C^∞` step: 0 for `z ≤ 1`, 1 for `z ≥ 2`.
pub(crate) fn smooth_step(z: f64) -> f64 {
    let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = h(z - 1.0);
    let b = h(2.0 - z);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Truncated Hankel amplitudes `P(z) + iQ(z)` for order `mu`.
fn hankel_amplitude(mu: f64, z: f64) -> Complex64 {
    let m4 = 4.0 * mu * mu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut t = 1.0;
    for k in 1..HANKEL_TERMS {
        let odd = 2.0 * k as f64 - 1.0;
        t *= (m4 - odd * odd) / (k as f64 * 8.0 * z);
        match k % 4 {
            0 => p += t,
            1 => q += t,
            2 => p -= t,
            _ => q -= t,
        }
    }
    Complex64::new(p, q)
}

/// `main₊` at unit frequency:
/// `χ(z) C_δ z^{−1−δ} √(2/(πz)) · ½(P + iQ) e^{i(z − (1+δ)π/2 − π/4)}`.
pub(crate) fn main_plus_unit_c(z: f64, delta: f64, c: f64) -> Complex64 {
    let chi = smooth_step(z);
    if chi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mu = 1.0 + delta;
    let amp = chi * c * (2.0 / PI).sqrt() * z.powf(-1.5 - delta) * 0.5;
    let phase = Complex64::from_polar(1.0, z - (0.5 * mu + 0.25) * PI);
    amp * hankel_amplitude(mu, z) * phase
}

pub(crate) fn main_plus_unit(z: f64, delta: f64) -> Complex64 {
    main_plus_unit_c(z, delta, kernel_constant(delta))
}

/// The remainder `b(z) = K_1^δ(z) − 2 Re main₊(z)` at unit frequency.
pub(crate) fn remainder_unit(z: f64, delta: f64) -> f64 {
    unit_kernel(z, delta) - 2.0 * main_plus_unit(z, delta).re
}

/// Main terms and the remainder bound of the asymptotic split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSplit {
    pub main_plus: Complex64,
    pub main_minus: Complex64,
    /// `C(δ) λ² (1 + λ·dist)^{−3}`, bounding `|exact − main₊ − main₋|`.
    pub remainder_bound: f64,
}

/// Split `K_λ^δ(dist) = main₊ + main₋ + remainder`.
pub fn k_euclid_asymptotic(dist: f64, p: &BrParams) -> AsymptoticSplit {
    let l2 = p.lambda * p.lambda;
    let z = p.lambda * dist;
    let mp = main_plus_unit(z, p.delta) * l2;
    AsymptoticSplit {
        main_plus: mp,
        main_minus: mp.conj(),
        remainder_bound: remainder_constant(p.delta) * l2 * (1.0 + z).powi(-3),
    }
}

/// `a₊(r) = main₊(r)·(1 + r)^{3/2+δ} / e^{ir}` at unit frequency.
pub fn envelope_a(r: f64, delta: f64) -> Complex64 {
    main_plus_unit(r, delta) * (1.0 + r).powf(1.5 + delta) * Complex64::from_polar(1.0, -r)
}

fn remainder_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fitted `C(δ) = 1.1 · max |b(z)|(1 + z)³` over a dense grid on
/// `[0, 40]` and a logarithmic grid up to `10⁴`, memoized per `δ`.
pub fn remainder_constant(delta: f64) -> f64 {
    let key = delta.to_bits();
    if let Some(&c) = remainder_cache().lock().expect("cache lock").get(&key) {
        return c;
    }
    let mut m: f64 = 0.0;
    let mut probe = |z: f64| {
        m = m.max(remainder_unit(z, delta).abs() * (1.0 + z).powi(3));
    };
    for i in 0..=4000 {
        probe(i as f64 * 0.01);
    }
    let mut z = 40.0;
    while z <= 1e4 {
        probe(z);
        z *= 1.01;
    }
    let c = 1.1 * m;
    remainder_cache().lock().expect("cache lock").insert(key, c);
    c
}
