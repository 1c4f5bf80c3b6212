//! Shared fixtures: a closed-form integral corpus and seeded point pairs.

#![allow(dead_code)]

use std::f64::consts::PI;

use conebr::quadrature::{integrate_semi_infinite_decay, integrate_with, PoleFlag, QuadratureConfig, Target};
use conebr::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub enum Domain {
    Finite { a: f64, b: f64, poles: Vec<PoleFlag> },
    HalfLine { a: f64, rate: f64 },
}

pub struct Case {
    pub name: String,
    pub f: Box<dyn Fn(f64) -> f64 + Sync>,
    pub domain: Domain,
    pub truth: f64,
}

fn finite(name: String, f: impl Fn(f64) -> f64 + Sync + 'static, a: f64, b: f64, truth: f64) -> Case {
    Case { name, f: Box::new(f), domain: Domain::Finite { a, b, poles: vec![] }, truth }
}

/// Fifty integrals with known values: polynomials, Lorentzian peaks,
/// damped oscillations, half-line decays and a few classical constants.
pub fn corpus() -> Vec<Case> {
    let mut v = Vec::new();
    for n in 0..10 {
        v.push(finite(format!("x^{n} on [0,1]"), move |x: f64| x.powi(n), 0.0, 1.0, 1.0 / (n as f64 + 1.0)));
    }
    for (i, &eps) in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5].iter().enumerate() {
        let sigma = 2.0;
        let len = 2.0 * sigma;
        v.push(Case {
            name: format!("4 sigma eps/(s^2+eps^2), eps={eps:e}"),
            f: Box::new(move |s: f64| 4.0 * sigma * eps / (s * s + eps * eps)),
            domain: Domain::Finite { a: 0.0, b: len, poles: vec![PoleFlag { at: 0.0, width: eps }] },
            truth: 4.0 * sigma * (len / eps).atan(),
        });
        let c = 0.3 + 0.2 * i as f64;
        v.push(Case {
            name: format!("centred Lorentzian at {c}, eps={eps:e}"),
            f: Box::new(move |s: f64| eps / ((s - c) * (s - c) + eps * eps)),
            domain: Domain::Finite { a: -1.0, b: 2.0, poles: vec![PoleFlag { at: c, width: eps }] },
            truth: ((2.0 - c) / eps).atan() - ((-1.0 - c) / eps).atan(),
        });
    }
    for &w in &[1.0f64, 5.0, 20.0, 50.0, 100.0] {
        for &t in &[5.0f64, 20.0] {
            // Re ∫_0^T e^{(−1+iω)s} ds = Re[(e^{(−1+iω)T} − 1)/(−1 + iω)]
            let e = (-t).exp();
            let (re, im) = (e * (w * t).cos() - 1.0, e * (w * t).sin());
            let truth = (-re + w * im) / (1.0 + w * w);
            v.push(finite(format!("cos({w}s)e^-s on [0,{t}]"), move |s: f64| (w * s).cos() * (-s).exp(), 0.0, t, truth));
        }
    }
    for &(a, r) in &[(0.0, 1.0), (2.0, 0.5), (1.0, 3.0), (-1.0, 2.0), (5.0, 0.1)] {
        v.push(Case {
            name: format!("exp(-{r}s) on [{a},inf)"),
            f: Box::new(move |s: f64| (-r * s).exp()),
            domain: Domain::HalfLine { a, rate: r },
            truth: (-r * a).exp() / r,
        });
    }
    for &w in &[0.5, 2.0, 7.0] {
        v.push(Case {
            name: format!("exp(-s)cos({w}s) on [0,inf)"),
            f: Box::new(move |s: f64| (-s).exp() * (w * s).cos()),
            domain: Domain::HalfLine { a: 0.0, rate: 1.0 },
            truth: 1.0 / (1.0 + w * w),
        });
    }
    v.push(Case {
        name: "s exp(-s) on [0,inf)".into(),
        f: Box::new(|s: f64| s * (-s).exp()),
        domain: Domain::HalfLine { a: 0.0, rate: 0.5 },
        truth: 1.0,
    });
    v.push(Case {
        name: "1/cosh(s) on [0,inf)".into(),
        f: Box::new(|s: f64| 1.0 / s.cosh()),
        domain: Domain::HalfLine { a: 0.0, rate: 1.0 },
        truth: PI / 2.0,
    });
    v.push(finite("sin on [0,pi]".into(), f64::sin, 0.0, PI, 2.0));
    v.push(finite("e^x on [0,1]".into(), f64::exp, 0.0, 1.0, std::f64::consts::E - 1.0));
    v.push(finite("1/(1+x^2) on [0,1]".into(), |x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, PI / 4.0));
    v.push(finite("sqrt(x) on [0,1]".into(), f64::sqrt, 0.0, 1.0, 2.0 / 3.0));
    v.push(finite("x^1.5 on [0,2]".into(), |x: f64| x.powf(1.5), 0.0, 2.0, 0.4 * 2f64.powf(2.5)));
    v.push(finite("ln(1+x) on [0,1]".into(), |x: f64| (1.0 + x).ln(), 0.0, 1.0, 2.0 * 2f64.ln() - 1.0));
    v.push(finite("exp(cos x) on [0,2pi]".into(), |x: f64| x.cos().exp(), 0.0, 2.0 * PI, 2.0 * PI * 1.266_065_877_752_008_4));
    v.push(finite("cos(100x) on [0,1]".into(), |x: f64| (100.0 * x).cos(), 0.0, 1.0, 100f64.sin() / 100.0));
    v.push(finite("exp(-x^2) on [0,1]".into(), |x: f64| (-x * x).exp(), 0.0, 1.0, 0.5 * PI.sqrt() * 0.842_700_792_949_714_9));
    v.push(finite("x sin(x) on [0,10]".into(), |x: f64| x * x.sin(), 0.0, 10.0, 10f64.sin() - 10.0 * 10f64.cos()));
    v
}

/// `(value, err_est)` for a corpus case at the given tolerance.
pub fn run_case(c: &Case, tol: f64) -> Result<(f64, f64)> {
    let cfg = QuadratureConfig { tol, max_panels: 4000, ..Default::default() };
    let r = match &c.domain {
        Domain::Finite { a, b, poles } => integrate_with(&c.f, *a, *b, &[], poles, Target::from_config(&cfg))?,
        Domain::HalfLine { a, rate } => integrate_semi_infinite_decay(&c.f, *a, *rate, &cfg)?,
    };
    Ok((r.value, r.err_est))
}

/// A seeded point pair `(r₁, θ₁, r₂, θ₂)`.
pub type Pair = (f64, f64, f64, f64);

/// `n` pairs with `r₁ + r₂ ∈ [lo, hi]` and `Δθ` spread over `[0, 2πσ)`;
/// every fifth pair has `Δθ` within `1e-2` of `π`.
pub fn sample_pairs(seed: u64, n: usize, sigma: f64, lo: f64, hi: f64) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = 2.0 * PI * sigma;
    (0..n)
        .map(|i| {
            let s = rng.gen_range(lo..hi);
            let f = rng.gen_range(0.1..0.9);
            let t2 = rng.gen_range(0.0..period);
            let dt = if i % 5 == 4 { PI + rng.gen_range(-1e-2..1e-2) } else { period * (i as f64 + rng.gen::<f64>()) / n as f64 };
            (s * f, (t2 + dt).rem_euclid(period), s * (1.0 - f), t2)
        })
        .collect()
}
