//! Discretized cone, operator application, `L^p` norms, norm probes,
//! convergence experiments and sector kernels.
//!
//! Two application routes are provided. [`apply_br`] is a Nyström
//! discretization of the kernel integral; the kernel depends on `θ₁ − θ₂`
//! only, so each pair of radial nodes needs one kernel row and the angular
//! part is a circular convolution. [`apply_br_spectral`] transforms `f`
//! mode by mode (FFT in `θ`, Hankel transform of order `|k|/σ` in `r`) and
//! applies the multiplier `(1 − ρ²/λ²)₊^δ` exactly; it has no kernel-tail
//! truncation and is what the experiments use at large `λ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cone_geom::{geodesic_distance, ConeParams, ConePoint};
use crate::cone_kernel::{kernel_dtheta, ConeKernelConfig};
use crate::error::{domain, Result};
use crate::euclid::BrParams;
use crate::quadrature::{gauss_legendre, QuadratureConfig};
use crate::specfun::{bessel_j_ladder, jv};
use crate::spectral_oracle::{radial_rule, radial_weights};

/// Tensor grid on the cone: Gauss–Legendre in `r` (weights include `r`),
/// uniform in `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeGrid {
    pub cone: ConeParams,
    pub r_nodes: Vec<f64>,
    /// Radial weights with the `r dr` factor folded in.
    pub r_weights: Vec<f64>,
    /// Uniform angular nodes `θ_j = j·2πσ/n_theta`.
    pub n_theta: usize,
}

impl ConeGrid {
    /// `n_r` Gauss–Legendre nodes on `(0, radius]`.
    pub fn new(cone: ConeParams, radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        Self::with_panels(cone, &[0.0, radius], n_r, n_theta)
    }

    /// The default grid for frequency `λ`: 96 radial nodes on `(0, 8/λ]`.
    pub fn default_for(cone: ConeParams, lambda: f64, n_theta: usize) -> Result<Self> {
        Self::new(cone, 8.0 / lambda, 96, n_theta)
    }

    /// Composite Gauss–Legendre with `points_per_panel` nodes on each
    /// `[b_i, b_{i+1}]`.
    pub fn with_panels(cone: ConeParams, breakpoints: &[f64], points_per_panel: usize, n_theta: usize) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints[0] < 0.0 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("radial breakpoints must be nonnegative and strictly increasing");
        }
        if points_per_panel == 0 || n_theta == 0 {
            return domain("grid sizes must be positive");
        }
        let (x, w) = gauss_legendre(points_per_panel);
        let mut r_nodes = Vec::new();
        let mut r_weights = Vec::new();
        for p in breakpoints.windows(2) {
            let (c, h) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (xi, wi) in x.iter().zip(&w) {
                let r = c + h * xi;
                r_nodes.push(r);
                r_weights.push(h * wi * r);
            }
        }
        Ok(Self { cone, r_nodes, r_weights, n_theta })
    }

    /// Grid for functions supported in `r ≤ support` under frequencies up
    /// to `lambda`: uniform panels of width `min(1/4, 3/λ)` out to
    /// `support + 1 + 24/λ`, ten nodes each.
    pub fn for_support(cone: ConeParams, support: f64, lambda: f64, n_theta: usize) -> Result<Self> {
        let outer = support + 1.0 + 24.0 / lambda;
        let h = (3.0 / lambda).min(0.25);
        let n = (outer / h).ceil() as usize;
        let bp: Vec<f64> = (0..=n).map(|i| i as f64 * outer / n as f64).collect();
        Self::with_panels(cone, &bp, 10, n_theta)
    }

    pub fn n_r(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn radius(&self) -> f64 {
        self.r_nodes.last().copied().unwrap_or(0.0)
    }

    pub fn dtheta(&self) -> f64 {
        self.cone.period() / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    /// `Σ_i w_i · 2πσ`, the measure of the covered disc.
    pub fn area(&self) -> f64 {
        self.r_weights.iter().sum::<f64>() * self.cone.period()
    }
}

/// Complex samples on a [`ConeGrid`], row-major `(r index, θ index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: ConeGrid,
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn zeros(grid: &ConeGrid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.n_r() * grid.n_theta] }
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: &ConeGrid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.n_r() * grid.n_theta);
        for &r in &grid.r_nodes {
            for j in 0..grid.n_theta {
                values.push(f(r, grid.theta(j)));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &ConeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_r() * grid.n_theta {
            return domain(format!("{} values for a {}x{} grid", values.len(), grid.n_r(), grid.n_theta));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_theta + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.grid.n_theta;
        &self.values[i * n..(i + 1) * n]
    }

    /// `a·self + b·other` on the same grid.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return domain("functions live on different grids");
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// Rotation by `shift` angular grid steps: `g(θ_j) = f(θ_{j−shift})`.
    pub fn rotate(&self, shift: usize) -> Self {
        let n = self.grid.n_theta;
        let mut values = self.values.clone();
        for i in 0..self.grid.n_r() {
            for j in 0..n {
                values[i * n + (j + shift) % n] = self.values[i * n + j];
            }
        }
        Self { grid: self.grid.clone(), values }
    }
}

/// Discrete `L^p` norm with the `r dr dθ` weights; `p = ∞` is the max.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("p must be in [1, inf], got {p}"));
    }
    if p.is_infinite() {
        return Ok(f.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let h = f.grid.dtheta();
    let mut s = 0.0;
    for (i, w) in f.grid.r_weights.iter().enumerate() {
        let row: f64 = f.row(i).iter().map(|v| v.norm().powf(p)).sum();
        s += w * h * row;
    }
    Ok(s.powf(1.0 / p))
}

/// `⟨f, g⟩ = ∫ f ḡ`.
pub fn inner(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    if f.grid != g.grid {
        return domain("functions live on different grids");
    }
    let h = f.grid.dtheta();
    let mut s = Complex64::new(0.0, 0.0);
    for (i, w) in f.grid.r_weights.iter().enumerate() {
        let row: Complex64 = f.row(i).iter().zip(g.row(i)).map(|(a, b)| a * b.conj()).sum();
        s += row * (w * h);
    }
    Ok(s)
}

fn fft_rows(f: &SampledFunction, inverse: bool) -> Vec<Vec<Complex64>> {
    let n = f.grid.n_theta;
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    (0..f.grid.n_r())
        .map(|i| {
            let mut row = f.row(i).to_vec();
            plan.process(&mut row);
            row
        })
        .collect()
}

/// Nyström application of `S_λ^δ` on `f.grid`.
///
/// The kernel tail beyond the grid radius is not seen; the grid must cover
/// the support of `f` (outputs are exact up to quadrature for compactly
/// supported `f`).
pub fn apply_br(f: &SampledFunction, br: &BrParams, quad: &QuadratureConfig) -> Result<SampledFunction> {
    quad.validate()?;
    let grid = &f.grid;
    let cfg = ConeKernelConfig { cone: grid.cone, br: *br, quad: *quad };
    let n = grid.n_theta;
    let h = grid.dtheta();
    let f_hat = fft_rows(f, false);
    let active: Vec<usize> = (0..grid.n_r()).filter(|&j| f.row(j).iter().any(|v| v.norm() > 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let rows: Vec<Vec<Complex64>> = (0..grid.n_r())
        .into_par_iter()
        .map(|i| -> Result<Vec<Complex64>> {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut kappa = vec![Complex64::new(0.0, 0.0); n];
            for &j in &active {
                for m in 0..=n / 2 {
                    let k = kernel_dtheta(grid.r_nodes[i], grid.r_nodes[j], m as f64 * h, &cfg)?.total;
                    kappa[m] = Complex64::new(k, 0.0);
                    if m > 0 && m < n - m {
                        kappa[n - m] = kappa[m];
                    }
                }
                fwd.process(&mut kappa);
                let w = grid.r_weights[j] * h;
                for ((a, kh), fh) in acc.iter_mut().zip(&kappa).zip(&f_hat[j]) {
                    *a += kh * fh * w;
                }
            }
            inv.process(&mut acc);
            let scale = 1.0 / n as f64;
            Ok(acc.into_iter().map(|v| v * scale).collect())
        })
        .collect::<Result<_>>()?;
    Ok(SampledFunction { grid: grid.clone(), values: rows.concat() })
}

/// `J_{|k|/σ}(x)` for `|k| = 0..n_modes`, grouped into Bessel ladders by
/// the fractional part of the order.
struct ModeOrders {
    /// `(α, [(|k|, n)])` with order `α + n`.
    classes: Vec<(f64, Vec<(usize, usize)>)>,
    orders: Vec<f64>,
    use_ladders: bool,
}

impl ModeOrders {
    fn new(sigma: f64, n_modes: usize) -> Self {
        let mut classes: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
        let mut orders = Vec::with_capacity(n_modes);
        for q in 0..n_modes {
            let nu = q as f64 / sigma;
            orders.push(nu);
            let mut n = nu.floor();
            let mut alpha = nu - n;
            if alpha > 1.0 - 1e-12 {
                n += 1.0;
                alpha = 0.0;
            } else if alpha < 1e-12 {
                alpha = 0.0;
            }
            match classes.iter_mut().find(|(a, _)| (a - alpha).abs() < 1e-9) {
                Some((_, v)) => v.push((q, n as usize)),
                None => classes.push((alpha, vec![(q, n as usize)])),
            }
        }
        let use_ladders = classes.len() <= 8.max(n_modes / 8);
        Self { classes, orders, use_ladders }
    }

    fn eval(&self, x: f64, out: &mut [f64]) {
        if !self.use_ladders {
            for (o, &nu) in out.iter_mut().zip(&self.orders) {
                *o = jv(nu, x);
            }
            return;
        }
        for (alpha, members) in &self.classes {
            let top = members.iter().map(|m| m.1).max().unwrap_or(0);
            let ladder = bessel_j_ladder(*alpha, top, x);
            for &(q, n) in members {
                out[q] = ladder[n];
            }
        }
    }
}

fn mode_abs(k: usize, n: usize) -> usize {
    if k <= n / 2 {
        k
    } else {
        n - k
    }
}

/// `S_λ^δ f` sampled on `out`, computed mode by mode:
///
/// ```text
/// (S f)_k(r) = ∫_0^λ (1 − ρ²/λ²)^δ F_k(ρ) J_{|k|/σ}(rρ) ρ dρ,
/// F_k(ρ) = ∫ f_k(r') J_{|k|/σ}(r'ρ) r' dr'.
/// ```
///
/// Angular modes are those resolved by the `θ` grid; `out` must share the
/// cone and `n_theta` of `f.grid`.
pub fn apply_br_spectral(f: &SampledFunction, br: &BrParams, out: &ConeGrid) -> Result<SampledFunction> {
    let grid = &f.grid;
    if out.cone != grid.cone || out.n_theta != grid.n_theta {
        return domain("output grid must share the cone and angular resolution of the input");
    }
    let n = grid.n_theta;
    let n_modes = n / 2 + 1;
    let orders = ModeOrders::new(grid.cone.sigma, n_modes);
    let scale = 1.0 / n as f64;
    let coeffs: Vec<(usize, Vec<Complex64>)> = fft_rows(f, false)
        .into_iter()
        .enumerate()
        .filter(|(_, row)| row.iter().any(|v| v.norm() > 0.0))
        .map(|(i, row)| (i, row.into_iter().map(|v| v * scale).collect()))
        .collect();
    if coeffs.is_empty() {
        return Ok(SampledFunction::zeros(out));
    }
    let r_in = coeffs.iter().map(|(i, _)| grid.r_nodes[*i]).fold(0.0, f64::max);
    let rule = radial_rule((r_in + out.radius()) * br.lambda, 10);
    let omega = radial_weights(&rule, br);
    let rho: Vec<f64> = rule.nodes.iter().map(|phi| br.lambda * phi.sin()).collect();

    // Forward Hankel transforms at every ρ node.
    let spectrum: Vec<Vec<Complex64>> = rho
        .par_iter()
        .map(|&p| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            let mut jt = vec![0.0; n_modes];
            for (i, c) in &coeffs {
                let r = grid.r_nodes[*i];
                orders.eval(r * p, &mut jt);
                let w = grid.r_weights[*i];
                for (k, (a, ck)) in acc.iter_mut().zip(c).enumerate() {
                    *a += ck * (w * jt[mode_abs(k, n)]);
                }
            }
            acc
        })
        .collect();

    let mut planner = FftPlanner::new();
    let inv = planner.plan_fft_inverse(n);
    let rows: Vec<Vec<Complex64>> = out
        .r_nodes
        .par_iter()
        .map(|&r| {
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            let mut jt = vec![0.0; n_modes];
            for ((&p, &w), fk) in rho.iter().zip(&omega).zip(&spectrum) {
                orders.eval(r * p, &mut jt);
                for (k, (a, s)) in g.iter_mut().zip(fk).enumerate() {
                    *a += s * (w * jt[mode_abs(k, n)]);
                }
            }
            inv.process(&mut g);
            g
        })
        .collect();
    Ok(SampledFunction { grid: out.clone(), values: rows.concat() })
}

/// `exp(1 − 1/(1 − t²))` on `|t| < 1`, zero elsewhere; equals 1 at `t = 0`.
pub fn smooth_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// `ψ(d(x, center)/width)` with the cone distance.
pub fn bump_function(grid: &ConeGrid, center: &ConePoint, width: f64) -> Result<SampledFunction> {
    if !(width > 0.0) {
        return domain(format!("bump width must be positive, got {width}"));
    }
    let cone = grid.cone;
    Ok(SampledFunction::from_fn(grid, |r, th| {
        let x = ConePoint { r, theta: th };
        Complex64::new(smooth_bump(geodesic_distance(&x, center, &cone) / width), 0.0)
    }))
}

/// Random `±1` signs on polar cells of `[r_lo, r_hi] × [0, 2πσ)`, each cell
/// carrying a smooth bump profile in `r` and `θ`.
pub fn random_sign_cells(
    grid: &ConeGrid,
    r_range: (f64, f64),
    n_r_cells: usize,
    n_theta_cells: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SampledFunction> {
    let (lo, hi) = r_range;
    if !(lo > 0.0 && hi > lo) || n_r_cells == 0 || n_theta_cells == 0 {
        return domain("invalid random cell layout");
    }
    let signs: Vec<f64> = (0..n_r_cells * n_theta_cells).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let dr = (hi - lo) / n_r_cells as f64;
    let dt = grid.cone.period() / n_theta_cells as f64;
    Ok(SampledFunction::from_fn(grid, |r, th| {
        if r <= lo || r >= hi {
            return Complex64::new(0.0, 0.0);
        }
        let a = (((r - lo) / dr) as usize).min(n_r_cells - 1);
        let b = ((th / dt) as usize).min(n_theta_cells - 1);
        let tr = 2.0 * (r - lo - (a as f64 + 0.5) * dr) / dr;
        let tt = 2.0 * (th - (b as f64 + 0.5) * dt) / dt;
        Complex64::new(signs[a * n_theta_cells + b] * smooth_bump(tr) * smooth_bump(tt), 0.0)
    }))
}

/// `sup_x ∫ |K(x, y)| dy` witnessed at the tip, over `r ≤ radius`.
///
/// At the tip the kernel is radial, so this is `2πσ ∫_0^R |K(0, r)| r dr`,
/// which equals `‖S f‖_∞/‖f‖_∞` for `f = sign K(0, ·)` on the disc.
pub fn tip_kernel_l1(cone: &ConeParams, br: &BrParams, radius: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(radius > 0.0) {
        return domain(format!("radius must be positive, got {radius}"));
    }
    let cfg = ConeKernelConfig { cone: *cone, br: *br, quad: *quad };
    let (x, w) = gauss_legendre(20);
    let panels = (4.0 * br.lambda * radius / PI).ceil() as usize;
    let h = radius / panels as f64;
    let partial: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let c = (p as f64 + 0.5) * h;
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let r = c + 0.5 * h * xi;
                s += wi * kernel_dtheta(0.0, r, 0.0, &cfg)?.total.abs() * r;
            }
            Ok(0.5 * h * s)
        })
        .collect::<Result<_>>()?;
    Ok(cone.period() * partial.iter().sum::<f64>())
}

/// Test-function family for [`operator_norm_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeFamily {
    /// Smooth bumps at the tip and off the tip, at scales `2/λ` and `O(1)`.
    Bumps,
    /// Smooth cells with seeded random signs.
    Randomized,
}

/// Settings shared by the norm probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub cone: ConeParams,
    pub n_theta: usize,
    /// Random draws for [`ProbeFamily::Randomized`].
    pub n_random: usize,
    pub seed: u64,
    /// Radius of the `p = ∞` tip witness.
    pub tip_radius: f64,
    pub quad: QuadratureConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            cone: ConeParams { sigma: 2.0 },
            n_theta: 64,
            n_random: 4,
            seed: 0,
            tip_radius: 64.0,
            quad: QuadratureConfig { tol: 1e-10, ..Default::default() },
        }
    }
}

fn probe_functions(br: &BrParams, cfg: &ProbeConfig, family: ProbeFamily) -> Result<Vec<SampledFunction>> {
    let cone = cfg.cone;
    let support = 2.5;
    let grid = ConeGrid::for_support(cone, support, br.lambda, cfg.n_theta)?;
    let mut out = Vec::new();
    match family {
        ProbeFamily::Bumps => {
            let narrow = (2.0 / br.lambda).min(1.0);
            let tip = ConePoint { r: 0.0, theta: 0.0 };
            let off = ConePoint { r: 1.5, theta: 0.0 };
            for (c, w) in [(tip, narrow), (tip, 1.0), (off, narrow.max(4.0 * grid.dtheta() * off.r)), (off, 1.0)] {
                out.push(bump_function(&grid, &c, w)?);
            }
        }
        ProbeFamily::Randomized => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for _ in 0..cfg.n_random {
                let n_t = (cfg.n_theta / 8).max(2);
                out.push(random_sign_cells(&grid, (0.25, support), 4, n_t, &mut rng)?);
            }
        }
    }
    Ok(out)
}

/// Lower-bound witness for `‖S_λ^δ‖_{p→p}`: the largest `‖S f‖_p/‖f‖_p`
/// over the family. For `p = ∞` the witness is [`tip_kernel_l1`].
pub fn operator_norm_probe(br: &BrParams, cfg: &ProbeConfig, p: f64, family: ProbeFamily) -> Result<f64> {
    if !(p >= 1.0) {
        return domain(format!("p must be in [1, inf], got {p}"));
    }
    if p.is_infinite() {
        return tip_kernel_l1(&cfg.cone, br, cfg.tip_radius, &cfg.quad);
    }
    let mut best: f64 = 0.0;
    for f in probe_functions(br, cfg, family)? {
        let sf = apply_br_spectral(&f, br, &f.grid)?;
        best = best.max(lp_norm(&sf, p)? / lp_norm(&f, p)?);
    }
    Ok(best)
}

/// Boundary condition on the sector edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Sector `{0 ≤ θ ≤ α}` with a boundary condition; it doubles to the cone
/// of radius `σ = α/π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorParams {
    pub alpha: f64,
    pub bc: BoundaryCondition,
}

impl SectorParams {
    pub fn new(alpha: f64, bc: BoundaryCondition) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0 * PI) {
            return domain(format!("sector angle must lie in (0, 2pi), got {alpha}"));
        }
        Ok(Self { alpha, bc })
    }

    pub fn doubled_cone(&self) -> ConeParams {
        ConeParams { sigma: self.alpha / PI }
    }

    fn sign(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => -1.0,
            BoundaryCondition::Neumann => 1.0,
        }
    }
}

/// Angle difference folded to `[0, πσ]`; the kernel is even and
/// `2πσ`-periodic in it.
fn fold_angle(dt: f64, cone: &ConeParams) -> f64 {
    let p = cone.period();
    let t = dt.abs().rem_euclid(p);
    t.min(p - t)
}

/// Sector kernel `K(θ₁ − θ₂) + ε K(θ₁ + θ₂)` on the doubled cone, with
/// `ε = −1` for Dirichlet and `+1` for Neumann. Points are `(r, θ)` with
/// `0 ≤ θ ≤ α`.
pub fn sector_kernel(x: (f64, f64), y: (f64, f64), sp: &SectorParams, br: &BrParams, quad: &QuadratureConfig) -> Result<f64> {
    for &(r, t) in &[x, y] {
        if !(r >= 0.0) || !(0.0..=sp.alpha).contains(&t) {
            return domain(format!("point (r={r}, theta={t}) lies outside the sector of angle {}", sp.alpha));
        }
    }
    let cone = sp.doubled_cone();
    let cfg = ConeKernelConfig { cone, br: *br, quad: *quad };
    let direct = kernel_dtheta(x.0, y.0, fold_angle(x.1 - y.1, &cone), &cfg)?.total;
    let mirror = kernel_dtheta(x.0, y.0, fold_angle(x.1 + y.1, &cone), &cfg)?.total;
    Ok(direct + sp.sign() * mirror)
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub rel_err: f64,
}

/// `‖S_λ^δ f − f‖_p / ‖f‖_p` for each `λ`, evaluated on `f.grid`.
pub fn convergence_experiment(f: &SampledFunction, p: f64, delta: f64, lambdas: &[f64]) -> Result<Vec<ConvergenceRow>> {
    let dc = crate::critical_index(p);
    if !(delta > dc) {
        return domain(format!("delta = {delta} must exceed the critical index {dc} for p = {p}"));
    }
    let norm = lp_norm(f, p)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let br = BrParams::new(lambda, delta)?;
            let rel_err = if norm == 0.0 {
                0.0
            } else {
                let sf = apply_br_spectral(f, &br, &f.grid)?;
                let one = Complex64::new(1.0, 0.0);
                lp_norm(&sf.combine(one, f, -one)?, p)? / norm
            };
            Ok(ConvergenceRow { lambda, rel_err })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclid::k_euclid_exact;
    use crate::cone_geom::chord;

    fn cone(s: f64) -> ConeParams {
        ConeParams::new(s).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn grid_measure() {
        for &s in &[1.0, 2.0, 0.7] {
            let g = ConeGrid::new(cone(s), 3.0, 12, 16).unwrap();
            let want = PI * s * 9.0;
            assert!((g.area() - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn lp_norms() {
        let g = ConeGrid::with_panels(cone(1.0), &[0.0, 1.0, 2.0], 16, 8).unwrap();
        let ind = SampledFunction::from_fn(&g, |r, _| c(if r <= 1.0 { 1.0 } else { 0.0 }));
        assert!((lp_norm(&ind, 1.0).unwrap() - PI).abs() < 1e-12);
        let f = SampledFunction::from_fn(&g, |r, t| Complex64::new(r.cos(), t.sin()));
        let two = f.combine(c(2.0), &f, c(0.0)).unwrap();
        for &p in &[1.0, 2.0, 3.5, f64::INFINITY] {
            let a = lp_norm(&f, p).unwrap();
            assert!((lp_norm(&two, p).unwrap() - 2.0 * a).abs() < 1e-12 * a);
        }
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn parseval_in_theta() {
        let g = ConeGrid::new(cone(1.5), 2.0, 10, 32).unwrap();
        let f = SampledFunction::from_fn(&g, |r, t| Complex64::new((r * t).sin(), r * (t / 1.5).cos()));
        let rows = fft_rows(&f, false);
        let n = g.n_theta as f64;
        let mut s = 0.0;
        for (i, w) in g.r_weights.iter().enumerate() {
            let e: f64 = rows[i].iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
            s += w * g.dtheta() * e;
        }
        let l2 = lp_norm(&f, 2.0).unwrap();
        assert!((s.sqrt() - l2).abs() < 1e-12 * l2);
    }

    fn small_problem(sigma: f64) -> SampledFunction {
        let g = ConeGrid::with_panels(cone(sigma), &[0.0, 0.5, 1.0, 1.5, 2.0], 12, 32).unwrap();
        bump_function(&g, &ConePoint { r: 1.0, theta: 0.5 }, 0.9).unwrap()
    }

    #[test]
    fn nystrom_linear_equivariant_self_adjoint() {
        let br = BrParams::new(1.0, 1.0).unwrap();
        let quad = QuadratureConfig { tol: 1e-11, ..Default::default() };
        let f = small_problem(2.0);
        let g = SampledFunction::from_fn(&f.grid, |r, t| Complex64::new((-(r - 1.2).powi(2)).exp() * (t / 2.0).cos(), 0.3 * r));
        let af = apply_br(&f, &br, &quad).unwrap();
        let ag = apply_br(&g, &br, &quad).unwrap();
        let (a, b) = (Complex64::new(0.7, -0.2), Complex64::new(-1.3, 0.5));
        let lin = apply_br(&f.combine(a, &g, b).unwrap(), &br, &quad).unwrap();
        let want = af.combine(a, &ag, b).unwrap();
        let scale = lp_norm(&want, f64::INFINITY).unwrap();
        for (x, y) in lin.values.iter().zip(&want.values) {
            assert!((x - y).norm() < 1e-12 * scale);
        }
        let lhs = inner(&af, &g).unwrap();
        let rhs = inner(&f, &ag).unwrap();
        assert!((lhs - rhs).norm() < 1e-8 * lhs.norm());
        let rot = apply_br(&f.rotate(3), &br, &quad).unwrap();
        let want = af.rotate(3);
        for (x, y) in rot.values.iter().zip(&want.values) {
            assert!((x - y).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn spectral_matches_nystrom() {
        let br = BrParams::new(1.0, 0.5).unwrap();
        let quad = QuadratureConfig { tol: 1e-11, ..Default::default() };
        for &sigma in &[2.0, 1.5] {
            let f = small_problem(sigma);
            let a = apply_br(&f, &br, &quad).unwrap();
            let b = apply_br_spectral(&f, &br, &f.grid).unwrap();
            let scale = lp_norm(&a, f64::INFINITY).unwrap();
            let diff = a.combine(c(1.0), &b, c(-1.0)).unwrap();
            let err = lp_norm(&diff, f64::INFINITY).unwrap();
            assert!(err < 1e-6 * scale, "sigma={sigma} err={err:e} scale={scale:e}");
        }
    }

    #[test]
    fn spectral_single_mode() {
        // f = e^{iθ/σ} ∫ g(ρ) J_ν(rρ) ρ dρ with g concentrated well inside
        // [0, λ/2]; S multiplies g by (1 − ρ²/λ²)^δ.
        let sigma = 2.0;
        let nu = 1.0 / sigma;
        let br = BrParams::new(4.0, 0.4).unwrap();
        let (x, w) = gauss_legendre(40);
        let g = |p: f64| (-(p - 1.0).powi(2) / (2.0 * 0.15f64.powi(2))).exp();
        let profile = |r: f64, mult: bool| -> f64 {
            let (a, b) = (0.0, 2.0);
            let mut s = 0.0;
            for k in 0..16 {
                let (lo, hi) = (a + (b - a) * k as f64 / 16.0, a + (b - a) * (k + 1) as f64 / 16.0);
                for (xi, wi) in x.iter().zip(&w) {
                    let p = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi;
                    let m = if mult { (1.0 - p * p / 16.0).powf(0.4) } else { 1.0 };
                    s += 0.5 * (hi - lo) * wi * m * g(p) * jv(nu, r * p) * p;
                }
            }
            s
        };
        let input = ConeGrid::with_panels(cone(sigma), &(0..=80).map(|i| i as f64 * 0.5).collect::<Vec<_>>(), 10, 8).unwrap();
        let f = SampledFunction::from_fn(&input, |r, t| Complex64::from_polar(profile(r, false), t / sigma));
        let out = ConeGrid::new(cone(sigma), 5.0, 24, 8).unwrap();
        let sf = apply_br_spectral(&f, &br, &out).unwrap();
        let want = SampledFunction::from_fn(&out, |r, t| Complex64::from_polar(profile(r, true), t / sigma));
        let scale = lp_norm(&want, f64::INFINITY).unwrap();
        let err = lp_norm(&sf.combine(c(1.0), &want, c(-1.0)).unwrap(), f64::INFINITY).unwrap();
        assert!(err < 1e-7 * scale, "{err:e}");
    }

    #[test]
    fn l2_contraction_and_zero() {
        let br = BrParams::new(4.0, 0.2).unwrap();
        let cfg = ProbeConfig { n_random: 2, n_theta: 32, ..Default::default() };
        for fam in [ProbeFamily::Bumps, ProbeFamily::Randomized] {
            let v = operator_norm_probe(&br, &cfg, 2.0, fam).unwrap();
            assert!(v <= 1.0 + 1e-6 && v > 0.5, "{v}");
        }
        let g = ConeGrid::new(cone(2.0), 1.0, 8, 8).unwrap();
        let z = SampledFunction::zeros(&g);
        let rows = convergence_experiment(&z, 2.0, 0.5, &[4.0, 8.0]).unwrap();
        assert!(rows.iter().all(|r| r.rel_err == 0.0));
        assert!(convergence_experiment(&z, 6.0, 0.1, &[4.0]).is_err());
    }

    #[test]
    fn tip_witness_matches_euclidean_l1() {
        let br = BrParams::new(2.0, 0.7).unwrap();
        let q = QuadratureConfig::default();
        let a = tip_kernel_l1(&cone(1.0), &br, 5.0, &q).unwrap();
        let b = tip_kernel_l1(&cone(2.0), &br, 5.0, &q).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
        // L¹ norm of the kernel exceeds its integral, which is 1.
        assert!(a > 1.0);
    }

    #[test]
    fn sector_boundaries_and_half_plane() {
        let br = BrParams::new(2.0, 0.6).unwrap();
        let q = QuadratureConfig { tol: 1e-12, ..Default::default() };
        for &alpha in &[PI / 2.0, 1.2, PI] {
            let d = SectorParams::new(alpha, BoundaryCondition::Dirichlet).unwrap();
            for &(r1, r2, t2) in &[(1.0, 0.7, 0.3 * alpha), (0.4, 1.6, 0.9 * alpha)] {
                assert_eq!(sector_kernel((r1, 0.0), (r2, t2), &d, &br, &q).unwrap(), 0.0);
                let v = sector_kernel((r1, alpha), (r2, t2), &d, &br, &q).unwrap();
                let k = sector_kernel((r1, t2), (r2, t2), &d, &br, &q).unwrap();
                assert!(v.abs() <= 1e-8 * k.abs(), "{v:e}");
            }
        }
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let s = SectorParams::new(PI, bc).unwrap();
            let eps = if bc == BoundaryCondition::Dirichlet { -1.0 } else { 1.0 };
            let (x, y) = ((1.0, 0.4), (1.3, 2.2));
            let got = sector_kernel(x, y, &s, &br, &q).unwrap();
            let want = k_euclid_exact(chord(x.0, y.0, x.1 - y.1), &br) + eps * k_euclid_exact(chord(x.0, y.0, x.1 + y.1), &br);
            assert!((got - want).abs() < 1e-8 * want.abs().max(1e-3));
        }
        let s = SectorParams::new(1.2, BoundaryCondition::Neumann).unwrap();
        assert!(sector_kernel((1.0, 1.3), (1.0, 0.1), &s, &br, &q).is_err());
        assert!(SectorParams::new(2.0 * PI, BoundaryCondition::Neumann).is_err());
    }
}
