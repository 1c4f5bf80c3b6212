//! Adaptive Gauss–Kronrod integration with error estimates.
//!
//! Panels are integrated with the 15-point Kronrod rule and its embedded
//! 7-point Gauss rule; the difference feeds the QUADPACK error heuristic.
//! The panel with the largest error estimate is bisected until the summed
//! estimate meets the target. Final sums are accumulated in left-to-right
//! panel order so results do not depend on the refinement history.
//!
//! Callers that know where an integrand has a Lorentzian peak pass a
//! [`PoleFlag`]; panel boundaries are then inserted at `at ± {1, 3, 10}·width`
//! before refinement starts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and budgets for the adaptive engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Target relative error; the contract is `err_est ≤ tol·(1 + |value|)`.
    pub tol: f64,
    /// Maximum number of panels before giving up.
    pub max_panels: usize,
    /// Panels per oscillation period used by [`oscillation_panel_hint`].
    pub osc_points_per_period: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_panels: 2000, osc_points_per_period: 8 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-14..=1e-2).contains(&self.tol) {
            return Err(Error::Config(format!("quadrature tol must lie in [1e-14, 1e-2], got {}", self.tol)));
        }
        if self.max_panels == 0 {
            return Err(Error::Config("max_panels must be positive".into()));
        }
        if self.osc_points_per_period < 8 {
            return Err(Error::Config(format!(
                "osc_points_per_period must be >= 8, got {}",
                self.osc_points_per_period
            )));
        }
        Ok(())
    }
}

/// An integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub panels: usize,
}

/// A near-singular peak of approximate half-width `width` centred at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFlag {
    pub at: f64,
    pub width: f64,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15/7 Gauss–Kronrod panel: `(value, err_est)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * h;
    resabs *= h.abs();
    resasc *= h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    // Abscissae carry a rounding error of about ε·max(|a|, |b|); against a
    // steep integrand that shifts the sum by roughly that times the total
    // variation of f over the panel.
    let mut tv = 0.0;
    let mut prev = fv1[0];
    for &v in fv1[1..].iter().chain(std::iter::once(&fc)).chain(fv2.iter().rev()) {
        tv += (v - prev).abs();
        prev = v;
    }
    err += tv * f64::EPSILON * a.abs().max(b.abs());
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by position so the order is total.
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Error target for [`integrate_with`]: stop once
/// `err_est ≤ max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Target {
    /// The `tol·(1 + |value|)` contract of a [`QuadratureConfig`].
    pub fn from_config(cfg: &QuadratureConfig) -> Self {
        Self { abs: cfg.tol, rel: cfg.tol, max_panels: cfg.max_panels }
    }

    fn bound(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// `∫_a^b f` with the `tol·(1 + |value|)` contract of `cfg`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    integrate_with(&f, a, b, &[], &[], Target::from_config(cfg))
}

/// `∫_a^b f` with extra panel boundaries and flagged peaks.
///
/// Breakpoints and pole-derived boundaries outside `(a, b)` are ignored.
/// On budget exhaustion the error carries the best value and its estimate.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    poles: &[PoleFlag],
    target: Target,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, err_est: 0.0, panels: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo, hi];
    cuts.extend(breakpoints.iter().copied());
    for p in poles {
        for m in [0.0, 1.0, 3.0, 10.0] {
            cuts.push(p.at - m * p.width);
            cuts.push(p.at + m * p.width);
        }
    }
    cuts.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        value += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }
    let mut frozen = Vec::new();
    while err > target.bound(value) && heap.len() + frozen.len() < target.max_panels {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Too narrow to split in floating point; keep it as it is.
            frozen.push(worst);
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        value += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum in positional order so the result is independent of the
    // refinement order and free of running-sum drift.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let err_est: f64 = panels.iter().map(|p| p.err).sum();
    if !value.is_finite() || !err_est.is_finite() {
        return Err(Error::Quadrature { value, err_est, target: target.bound(value) });
    }
    if err_est > target.bound(value) {
        return Err(Error::Quadrature { value: sign * value, err_est, target: target.bound(value) });
    }
    Ok(QuadResult { value: sign * value, err_est, panels: panels.len() })
}

/// `∫_a^∞ f` for integrands bounded by `M·e^{−rate·s}`, via the map
/// `s = a − ln(1 − u)/rate`, `u ∈ [0, 1)`.
pub fn integrate_semi_infinite_decay<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    decay_rate: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    if !(decay_rate > 0.0) || !decay_rate.is_finite() {
        return Err(Error::Domain(format!("decay_rate must be positive, got {decay_rate}")));
    }
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        if one_minus <= 0.0 {
            return 0.0;
        }
        let s = a - one_minus.ln() / decay_rate;
        let v = f(s) / (decay_rate * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_with(&g, 0.0, 1.0, &[], &[], Target::from_config(cfg))
}

/// Initial panel width so one panel spans at most `1/osc_points_per_period`
/// of an oscillation with phase derivative `phase_deriv_max`, capped by the
/// interval length.
pub fn oscillation_panel_hint(phase_deriv_max: f64, interval: f64, cfg: &QuadratureConfig) -> f64 {
    let w = 2.0 * PI / (cfg.osc_points_per_period as f64 * phase_deriv_max.max(f64::MIN_POSITIVE));
    w.min(interval)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}
