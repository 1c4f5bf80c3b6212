//! The subcommands, each turning an effective config into output bytes.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use conebr::bounds_lab::{check_de_decay, check_diffraction_halfpower, check_ge_decay, BoundReport, LabConfig};
use conebr::cone_kernel::{reduction_identity_residual, ShiftConvention};
use conebr::cone_operator::{
    bump_function, convergence_experiment, operator_norm_probe, sector_kernel, ConeGrid, ProbeConfig, SectorParams,
};
use conebr::spectral_oracle::{oracle_kernel, ModeSumConfig};
use conebr::{kernel, BrParams, ConeKernelConfig, ConeParams, ConePoint, QuadratureConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::*;
use crate::output::{csv_table, float, json_report};

/// A bad request from the user; exits with code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// A computation that finished but missed its tolerance; exits with code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct NumericFailure(pub String);

/// What a command produced.
pub struct Outputs {
    /// CSV or JSON for `--out` (stdout by default).
    pub primary: Vec<u8>,
    /// JSON side report for `--report` (stderr by default).
    pub report: Option<Vec<u8>>,
    /// Set when a tolerance was missed; outputs are still written.
    pub failure: Option<NumericFailure>,
}

impl Outputs {
    fn plain(primary: Vec<u8>) -> Self {
        Self { primary, report: None, failure: None }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn quad(tol: f64) -> QuadratureConfig {
    QuadratureConfig { tol, ..Default::default() }
}

/// `n` seeded pairs `[r₁, θ₁, r₂, θ₂]` with `r₁ + r₂ ∈ [lo, hi]` and `Δθ`
/// spread over the circle; every fifth pair has `Δθ` within `1e-2` of `π`,
/// where the geometric terms switch on and off.
pub fn sample_pairs(seed: u64, n: usize, sigma: f64, lo: f64, hi: f64) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = 2.0 * PI * sigma;
    (0..n)
        .map(|i| {
            let s = rng.gen_range(lo..hi);
            let f = rng.gen_range(0.1..0.9);
            let t2 = rng.gen_range(0.0..period);
            let dt = if i % 5 == 4 { PI + rng.gen_range(-1e-2..1e-2) } else { period * (i as f64 + rng.gen::<f64>()) / n as f64 };
            [s * f, (t2 + dt).rem_euclid(period), s * (1.0 - f), t2]
        })
        .collect()
}

fn points(p: &Pair, cone: &ConeParams) -> Result<(ConePoint, ConePoint)> {
    Ok((ConePoint::new(p[0], p[1], cone)?, ConePoint::new(p[2], p[3], cone)?))
}

fn pair_cells(p: &Pair) -> Vec<String> {
    p.iter().map(|&v| float(v)).collect()
}

pub fn kernel_cmd(cfg: &KernelConfig, digest: &str) -> Result<Outputs> {
    if cfg.pairs.is_empty() {
        return usage("no point pairs given (use --pair r1,theta1,r2,theta2)");
    }
    let kc = ConeKernelConfig { quad: quad(cfg.tol), ..ConeKernelConfig::new(cfg.sigma, cfg.lambda, cfg.delta)? };
    let rows = cfg
        .pairs
        .par_iter()
        .map(|p| {
            let (x, y) = points(p, &kc.cone)?;
            let k = kernel(&x, &y, &kc)?;
            let mut row = pair_cells(p);
            row.extend([k.geometric, k.diffractive, k.total].map(float));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let header = ["r1", "theta1", "r2", "theta2", "geometric", "diffractive", "total"];
    Ok(Outputs::plain(csv_table(digest, &header, &rows)?))
}

#[derive(Serialize)]
struct CrossvalPoint {
    r1: f64,
    theta1: f64,
    r2: f64,
    theta2: f64,
    kernel: f64,
    oracle: f64,
    rel_err: f64,
}

#[derive(Serialize)]
struct CrossvalReport {
    n_points: usize,
    max_rel_err: f64,
    threshold: f64,
    per_point: Vec<CrossvalPoint>,
}

/// `|a − b| / max(|b|, 1e-3·λ²)`: the kernel oscillates through zero, so
/// the reference is floored at a small fraction of its peak scale.
fn rel_err(a: f64, b: f64, lambda: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3 * lambda * lambda)
}

pub fn crossval_cmd(cfg: &CrossvalConfig, digest: &str) -> Result<Outputs> {
    let pairs = if cfg.pairs.is_empty() { sample_pairs(cfg.seed, cfg.n_points, cfg.sigma, 0.5, 3.0) } else { cfg.pairs.clone() };
    if pairs.is_empty() {
        return usage("empty point list: set n_points > 0 or give --pair");
    }
    let kc = ConeKernelConfig { quad: quad(cfg.tol), ..ConeKernelConfig::new(cfg.sigma, cfg.lambda, cfg.delta)? };
    let mode = ModeSumConfig { radial_quad_points: cfg.radial_quad_points, ..Default::default() };
    let per_point = pairs
        .par_iter()
        .map(|p| {
            let (x, y) = points(p, &kc.cone)?;
            let a = kernel(&x, &y, &kc)?.total;
            let b = oracle_kernel(&x, &y, &kc.cone, &kc.br, &mode)?;
            Ok(CrossvalPoint { r1: p[0], theta1: p[1], r2: p[2], theta2: p[3], kernel: a, oracle: b, rel_err: rel_err(a, b, cfg.lambda) })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel_err = per_point.iter().map(|p| p.rel_err).fold(0.0, f64::max);
    let report = CrossvalReport { n_points: per_point.len(), max_rel_err, threshold: cfg.max_rel_err, per_point };
    let failure = (max_rel_err > cfg.max_rel_err)
        .then(|| NumericFailure(format!("max_rel_err {max_rel_err:e} exceeds {:e}", cfg.max_rel_err)));
    Ok(Outputs { primary: json_report(digest, &report)?, report: None, failure })
}

#[derive(Serialize)]
struct GrowthFit {
    p: String,
    delta: f64,
    /// Least-squares slope of `log probe_norm` against `log λ`.
    exponent: f64,
    /// `max/min − 1` over the probe values.
    variation: f64,
    lambdas: Vec<f64>,
    probe_norms: Vec<f64>,
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn normgrowth_cmd(cfg: &NormgrowthConfig, digest: &str) -> Result<Outputs> {
    if cfg.lambdas.len() < 2 {
        return usage("normgrowth needs at least two lambdas to fit an exponent");
    }
    let pc = ProbeConfig {
        cone: ConeParams::new(cfg.sigma)?,
        n_theta: cfg.n_theta,
        n_random: cfg.n_random,
        seed: cfg.seed,
        tip_radius: cfg.tip_radius,
        quad: quad(cfg.tol),
    };
    let norms = cfg
        .lambdas
        .iter()
        .map(|&l| Ok(operator_norm_probe(&BrParams::new(l, cfg.delta)?, &pc, cfg.p, cfg.family)?))
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<Vec<String>> = cfg.lambdas.iter().zip(&norms).map(|(&l, &n)| vec![float(l), float(n)]).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let fit = GrowthFit {
        p: if cfg.p.is_infinite() { "inf".into() } else { cfg.p.to_string() },
        delta: cfg.delta,
        exponent: log_log_slope(&cfg.lambdas, &norms),
        variation: hi / lo - 1.0,
        lambdas: cfg.lambdas.clone(),
        probe_norms: norms,
    };
    Ok(Outputs {
        primary: csv_table(digest, &["lambda", "probe_norm"], &rows)?,
        report: Some(json_report(digest, &fit)?),
        failure: None,
    })
}

pub fn converge_cmd(cfg: &ConvergeConfig, digest: &str) -> Result<Outputs> {
    let Some(delta) = cfg.delta else { bail!("delta was not resolved") };
    let lmax = cfg.lambdas.iter().cloned().fold(f64::NAN, f64::max);
    if cfg.lambdas.is_empty() || lmax.is_nan() || lmax <= 0.0 {
        return usage("converge needs at least one positive lambda");
    }
    let cone = ConeParams::new(cfg.sigma)?;
    let grid = ConeGrid::for_support(cone, cfg.center_r + cfg.width, lmax, cfg.n_theta)?;
    let f = bump_function(&grid, &ConePoint::new(cfg.center_r, cfg.center_theta, &cone)?, cfg.width)?;
    let rows: Vec<Vec<String>> = convergence_experiment(&f, cfg.p, delta, &cfg.lambdas)?
        .iter()
        .map(|r| vec![float(r.lambda), float(r.rel_err)])
        .collect();
    Ok(Outputs::plain(csv_table(digest, &["lambda", "rel_err"], &rows)?))
}

/// Pairs with the first point on either edge and in the interior.
fn default_sector_pairs(alpha: f64) -> Vec<Pair> {
    let mut out = Vec::new();
    for &r1 in &[0.5, 1.2] {
        for &t1 in &[0.0, 0.25 * alpha, 0.5 * alpha, alpha] {
            out.push([r1, t1, 0.8, alpha / 3.0]);
        }
    }
    out
}

pub fn sector_cmd(cfg: &SectorConfig, digest: &str) -> Result<Outputs> {
    let sp = SectorParams::new(cfg.alpha, cfg.bc)?;
    let br = BrParams::new(cfg.lambda, cfg.delta)?;
    let q = quad(cfg.tol);
    let pairs = if cfg.pairs.is_empty() { default_sector_pairs(cfg.alpha) } else { cfg.pairs.clone() };
    let rows = pairs
        .par_iter()
        .map(|p| {
            let k = sector_kernel((p[0], p[1]), (p[2], p[3]), &sp, &br, &q)?;
            let mut row = pair_cells(p);
            row.push(float(k));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Outputs::plain(csv_table(digest, &["r1", "theta1", "r2", "theta2", "kernel"], &rows)?))
}

#[derive(Serialize)]
struct BoundsReport {
    reports: Vec<BoundReport>,
}

pub fn bounds_cmd(cfg: &BoundsConfig, digest: &str) -> Result<Outputs> {
    if cfg.samples == 0 {
        return usage("samples must be positive");
    }
    let lab = LabConfig {
        kernel: ConeKernelConfig { quad: quad(cfg.tol), ..ConeKernelConfig::new(cfg.sigma, cfg.lambda, cfg.delta)? },
        seed: cfg.seed,
    };
    let all = cfg.check == BoundCheck::All;
    let mut reports = Vec::new();
    if all || cfg.check == BoundCheck::Ge {
        reports.push(check_ge_decay(&lab, cfg.samples)?);
    }
    if all || cfg.check == BoundCheck::De {
        reports.push(check_de_decay(&lab, cfg.samples)?);
    }
    if all || cfg.check == BoundCheck::Halfpower {
        reports.push(check_diffraction_halfpower(&lab, cfg.k_min..=cfg.k_max, cfg.samples)?);
    }
    Ok(Outputs::plain(json_report(digest, &BoundsReport { reports })?))
}

pub fn reduction_cmd(cfg: &ReductionConfig, digest: &str) -> Result<Outputs> {
    if cfg.n_points == 0 {
        return usage("n_points must be positive");
    }
    let big = ConeKernelConfig { quad: quad(cfg.tol), ..ConeKernelConfig::new(cfg.sigma, cfg.lambda, cfg.delta)? };
    let small = ConeParams::new(cfg.sigma / 2.0)?;
    let convs: Vec<ShiftConvention> = match cfg.convention {
        ConventionChoice::HalfSigma => vec![ShiftConvention::HalfSigma],
        ConventionChoice::HalfCircumference => vec![ShiftConvention::HalfCircumference],
        ConventionChoice::OrbitSum => vec![ShiftConvention::OrbitSum],
        ConventionChoice::All => ShiftConvention::ALL.to_vec(),
    };
    let pairs = sample_pairs(cfg.seed, cfg.n_points, small.sigma, 0.5, 3.0);
    let jobs: Vec<(ShiftConvention, Pair)> = convs.iter().flat_map(|&c| pairs.iter().map(move |&p| (c, p))).collect();
    let rows = jobs
        .par_iter()
        .map(|(conv, p)| {
            let (x, y) = points(p, &small)?;
            let res = reduction_identity_residual(&x, &y, &big, *conv)?;
            let mut row = pair_cells(p);
            row.push(conv.name().to_string());
            row.push(float(res));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let header = ["r1", "theta1", "r2", "theta2", "convention", "residual"];
    Ok(Outputs::plain(csv_table(digest, &header, &rows)?))
}
