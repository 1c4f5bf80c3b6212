//! Brute-force Bochner–Riesz kernel from the angular mode expansion
//!
//! ```text
//! S(x, y) = Σ_k e^{−ikΔθ/σ}/(2πσ) ∫_0^λ (1 − ρ²/λ²)^δ J_{|k|/σ}(r₁ρ) J_{|k|/σ}(r₂ρ) ρ dρ.
//! ```
//!
//! Shares nothing with the image/diffraction formula except the Bessel
//! functions, which makes it the referee for every formula-level choice in
//! [`crate::cone_kernel`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cone_geom::{ConeParams, ConePoint};
use crate::error::{domain, Error, Result};
use crate::euclid::BrParams;
use crate::quadrature::gauss_legendre;
use crate::specfun::{jv, BesselOrder};

/// Mode truncation and radial quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeSumConfig {
    /// Highest `|k|`; `None` applies `⌈σ(2λ r_max + 30)⌉`.
    pub k_max: Option<usize>,
    /// Gauss–Legendre nodes per radial panel.
    pub radial_quad_points: usize,
    /// Allowed contribution of the last five modes, in units of `λ²`.
    pub tol: f64,
}

impl Default for ModeSumConfig {
    fn default() -> Self {
        Self { k_max: None, radial_quad_points: 20, tol: 1e-13 }
    }
}

impl ModeSumConfig {
    /// The truncation rule `k_max = ⌈σ(2λ r_max + 30)⌉`.
    pub fn rule_k_max(cone: &ConeParams, br: &BrParams, r_max: f64) -> usize {
        (cone.sigma * (2.0 * br.lambda * r_max + 30.0)).ceil() as usize
    }
}

/// Panel grading ratio and depth at each end of `[0, π/2]`.
const GRADE_Q: f64 = 0.15;
const GRADE_LEVELS: usize = 10;

/// Breakpoints on `[0, π/2]`: uniform interior panels resolving the
/// oscillation, refined geometrically towards both endpoints.
fn phi_breakpoints(r_sum_lambda: f64) -> Vec<f64> {
    let half = 0.5 * PI;
    let interior = (2.0 * (r_sum_lambda / PI).ceil()).max(4.0) as usize;
    let h = half / interior as f64;
    let mut pts = Vec::with_capacity(interior + 2 * GRADE_LEVELS + 1);
    let mut w = h;
    let mut left = Vec::new();
    for _ in 0..GRADE_LEVELS {
        w *= GRADE_Q;
        left.push(w);
    }
    pts.push(0.0);
    pts.extend(left.iter().rev().copied());
    for i in 1..interior {
        pts.push(i as f64 * h);
    }
    pts.extend(left.iter().map(|w| half - w));
    pts.push(half);
    pts
}

pub(crate) struct RadialRule {
    pub(crate) nodes: Vec<f64>,
    pub(crate) weights: Vec<f64>,
}

/// Composite rule in `φ` for `∫_0^{π/2} g(φ) dφ`.
pub(crate) fn radial_rule(r_sum_lambda: f64, n_points: usize) -> RadialRule {
    let (x, w) = gauss_legendre(n_points);
    let br = phi_breakpoints(r_sum_lambda);
    let mut nodes = Vec::with_capacity((br.len() - 1) * n_points);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for p in br.windows(2) {
        let (c, h) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + h * xi);
            weights.push(h * wi);
        }
    }
    RadialRule { nodes, weights }
}

/// `∫_0^λ (1 − ρ²/λ²)^δ J_ν(r₁ρ) J_ν(r₂ρ) ρ dρ` after `ρ = λ sin φ`.
pub fn radial_br_integral(nu: BesselOrder, r1: f64, r2: f64, br: &BrParams, n_points: usize) -> Result<f64> {
    if !(r1 >= 0.0 && r2 >= 0.0) {
        return domain(format!("radii must be nonnegative, got ({r1}, {r2})"));
    }
    if n_points == 0 {
        return domain("n_points must be positive");
    }
    let rule = radial_rule((r1 + r2) * br.lambda, n_points);
    let weight = radial_weights(&rule, br);
    Ok(mode_integral(nu.value(), r1, r2, br.lambda, &rule, &weight))
}

/// `λ² cos^{2δ+1}φ sin φ` times the panel weights.
pub(crate) fn radial_weights(rule: &RadialRule, br: &BrParams) -> Vec<f64> {
    let l2 = br.lambda * br.lambda;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&phi, &w)| w * l2 * phi.cos().powf(2.0 * br.delta + 1.0) * phi.sin())
        .collect()
}

fn mode_integral(nu: f64, r1: f64, r2: f64, lambda: f64, rule: &RadialRule, weight: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&phi, &w) in rule.nodes.iter().zip(weight) {
        let rho = lambda * phi.sin();
        let a = jv(nu, r1 * rho);
        if a == 0.0 {
            continue;
        }
        s += w * a * jv(nu, r2 * rho);
    }
    s
}

/// The mode-sum value of `S_λ^δ(x, y)`.
pub fn oracle_kernel(
    x: &ConePoint,
    y: &ConePoint,
    cone: &ConeParams,
    br: &BrParams,
    cfg: &ModeSumConfig,
) -> Result<f64> {
    let r_max = x.r.max(y.r);
    let rule_k = ModeSumConfig::rule_k_max(cone, br, r_max);
    let k_max = cfg.k_max.unwrap_or(rule_k);
    if cfg.radial_quad_points == 0 {
        return Err(Error::Config("radial_quad_points must be positive".into()));
    }
    let rule = radial_rule((x.r + y.r) * br.lambda, cfg.radial_quad_points);
    let weight = radial_weights(&rule, br);
    let dtheta = x.theta - y.theta;
    let sigma = cone.sigma;
    // Ascending |k| with ±k paired: e^{−ikφ} + e^{ikφ} = 2 cos kφ.
    let mut sum = mode_integral(0.0, x.r, y.r, br.lambda, &rule, &weight);
    let mut tail = 0.0;
    for k in 1..=k_max {
        let nu = k as f64 / sigma;
        let term = 2.0 * (k as f64 * dtheta / sigma).cos() * mode_integral(nu, x.r, y.r, br.lambda, &rule, &weight);
        sum += term;
        if k + 5 > k_max {
            tail += term.abs();
        }
    }
    let scale = 1.0 / (2.0 * PI * sigma);
    let tail = tail * scale;
    let l2 = br.lambda * br.lambda;
    if tail > cfg.tol * l2 {
        return Err(Error::TruncationNotConverged { tail, tol: cfg.tol * l2 });
    }
    Ok(sum * scale)
}
