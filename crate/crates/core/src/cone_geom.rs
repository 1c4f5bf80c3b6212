//! Geometry of the flat cone `C(S¹_σ) = (0, ∞) × (ℝ/2πσℤ)`.
//!
//! Image distances `d_j`, the diffraction distance `d_s`, the diffraction
//! weight `A_σ` and the geodesic distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Angles within this distance of the image-window edge `±π` are treated as
/// lying on it.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Cone radius `σ > 0`; the cross-section circle has circumference `2πσ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub sigma: f64,
}

impl ConeParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return domain(format!("cone radius sigma must be positive, got {sigma}"));
        }
        Ok(Self { sigma })
    }

    /// `2πσ`.
    pub fn period(&self) -> f64 {
        2.0 * PI * self.sigma
    }

    /// Representative of `theta` in `[0, 2πσ)`.
    pub fn reduce(&self, theta: f64) -> f64 {
        let p = self.period();
        let t = theta.rem_euclid(p);
        if t >= p {
            0.0
        } else {
            t
        }
    }
}

/// Polar point `(r, θ)` with `θ` reduced to `[0, 2πσ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub r: f64,
    pub theta: f64,
}

impl ConePoint {
    pub fn new(r: f64, theta: f64, cone: &ConeParams) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() || !theta.is_finite() {
            return domain(format!("invalid cone point (r={r}, theta={theta})"));
        }
        Ok(Self { r, theta: cone.reduce(theta) })
    }
}

/// One geometric image of the source point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageTerm {
    pub j: i64,
    /// `d_j = √(r₁² + r₂² − 2 r₁ r₂ cos Δθ_j)`.
    pub distance: f64,
    /// `Δθ_j = θ₁ − θ₂ + 2jσπ`.
    pub delta_theta: f64,
    /// 1 inside the window, ½ on its edge `|Δθ_j| = π`.
    pub weight: f64,
}

/// Law-of-cosines distance, written to stay accurate when `Δθ` is small.
pub fn chord(r1: f64, r2: f64, dtheta: f64) -> f64 {
    let h = (0.5 * dtheta).sin();
    ((r1 - r2) * (r1 - r2) + 4.0 * r1 * r2 * h * h).sqrt()
}

fn image_range(dtheta: f64, cone: &ConeParams) -> (i64, i64) {
    let p = cone.period();
    let lo = ((-PI - dtheta) / p).floor() as i64 - 1;
    let hi = ((PI - dtheta) / p).ceil() as i64 + 1;
    (lo, hi)
}

fn dtheta(x: &ConePoint, y: &ConePoint) -> f64 {
    x.theta - y.theta
}

/// Images with `−π < Δθ_j ≤ π`, each counted once with weight 1.
pub fn image_terms(x: &ConePoint, y: &ConePoint, cone: &ConeParams) -> Vec<ImageTerm> {
    let dt = dtheta(x, y);
    let (lo, hi) = image_range(dt, cone);
    (lo..=hi)
        .filter_map(|j| {
            let a = dt + j as f64 * cone.period();
            let on_lower = (a + PI).abs() <= BOUNDARY_EPS;
            let on_upper = (a - PI).abs() <= BOUNDARY_EPS;
            let inside = (a > -PI && a <= PI && !on_lower) || on_upper;
            inside.then(|| ImageTerm { j, distance: chord(x.r, y.r, a), delta_theta: a, weight: 1.0 })
        })
        .collect()
}

/// Images with `|Δθ_j| ≤ π`; an image on the edge `|Δθ_j| = π` has weight ½.
///
/// This is the set the kernel uses: at the edge the diffraction integral
/// takes its principal value, which sits halfway across the jump that an
/// image makes when it enters the window, so the edge image contributes half.
pub fn weighted_image_terms(x: &ConePoint, y: &ConePoint, cone: &ConeParams) -> Vec<ImageTerm> {
    weighted_images_dtheta(x.r, y.r, dtheta(x, y), cone)
}

pub(crate) fn weighted_images_dtheta(r1: f64, r2: f64, dt: f64, cone: &ConeParams) -> Vec<ImageTerm> {
    let (lo, hi) = image_range(dt, cone);
    (lo..=hi)
        .filter_map(|j| {
            let a = dt + j as f64 * cone.period();
            if (a.abs() - PI).abs() <= BOUNDARY_EPS {
                let a = PI.copysign(a);
                Some(ImageTerm { j, distance: chord(r1, r2, a), delta_theta: a, weight: 0.5 })
            } else if a.abs() < PI {
                Some(ImageTerm { j, distance: chord(r1, r2, a), delta_theta: a, weight: 1.0 })
            } else {
                None
            }
        })
        .collect()
}

/// `d_s = √(r₁² + r₂² + 2 r₁ r₂ cosh s)`.
pub fn diffraction_distance(r1: f64, r2: f64, s: f64) -> f64 {
    let sh = (0.5 * s).sinh();
    // (r₁ + r₂)² + 4 r₁ r₂ sinh²(s/2), free of cancellation.
    ((r1 + r2) * (r1 + r2) + 4.0 * r1 * r2 * sh * sh).sqrt()
}

/// `(d_s, ∂_s d_s, ∂²_s d_s)`.
pub fn diffraction_phase_derivs(r1: f64, r2: f64, s: f64) -> (f64, f64, f64) {
    let d = diffraction_distance(r1, r2, s);
    if d == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let p = r1 * r2;
    let d1 = p * s.sinh() / d;
    let d2 = p * s.cosh() / d - d1 * d1 / d;
    (d, d1, d2)
}

/// Value of `A_σ(s, Δθ)`, or a marker at its poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffractionWeight {
    Finite(f64),
    /// `s = 0` with `cos((π ± Δθ)/σ) = 1`; `sign` is the side the peak
    /// approaches from (0 when the peak sits exactly on the edge).
    Pole { sign: f64 },
}

/// Representative of `a` in `(−π, π]`.
pub fn reduce_pi(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

/// The two reduced angles `ā₁ = (π − Δθ)/σ`, `ā₂ = (π + Δθ)/σ` mod 2π.
pub fn a_sigma_angles(dtheta: f64, cone: &ConeParams) -> [f64; 2] {
    [reduce_pi((PI - dtheta) / cone.sigma), reduce_pi((PI + dtheta) / cone.sigma)]
}

/// One Lorentzian-type term `½ sin ā / (cosh(s/σ) − cos ā)`.
///
/// The denominator is rewritten as `2 sinh²(s/2σ) + 2 sin²(ā/2)` so the
/// peak near `s = 0, ā = 0` keeps full relative precision.
#[inline]
pub fn a_sigma_term(s: f64, a_bar: f64, sigma: f64) -> f64 {
    let sh = (0.5 * s / sigma).sinh();
    let sa = (0.5 * a_bar).sin();
    let den = 2.0 * (sh * sh + sa * sa);
    if den == 0.0 {
        return 0.0;
    }
    0.5 * a_bar.sin() / den
}

/// `A_σ(s, θ₁, θ₂)` with `dtheta = θ₁ − θ₂`.
///
/// At `σ = 1` the two terms cancel identically and `0` is returned directly.
pub fn a_sigma(s: f64, dtheta: f64, cone: &ConeParams) -> DiffractionWeight {
    if cone.sigma == 1.0 {
        return DiffractionWeight::Finite(0.0);
    }
    let angles = a_sigma_angles(dtheta, cone);
    if s == 0.0 {
        for a in angles {
            if a.abs() <= BOUNDARY_EPS {
                return DiffractionWeight::Pole { sign: if a == 0.0 { 0.0 } else { a.signum() } };
            }
        }
    }
    DiffractionWeight::Finite(angles.iter().map(|&a| a_sigma_term(s, a, cone.sigma)).sum())
}

/// `∫_0^S ½ sin ā / (cosh(s/σ) − cos ā) ds = σ·atan(tanh(S/2σ)/tan(ā/2))`
/// for `ā ∈ (−π, π]`; `S = ∞` is allowed.
pub fn a_sigma_term_integral(upper: f64, a_bar: f64, sigma: f64) -> f64 {
    if a_bar == 0.0 || a_bar.abs() >= PI {
        return 0.0;
    }
    let t = if upper.is_infinite() { 1.0 } else { (0.5 * upper / sigma).tanh() };
    sigma * (t / (0.5 * a_bar).tan()).atan()
}

/// Geodesic distance: straight chord when the folded angle is at most π,
/// otherwise the path through the tip, `r₁ + r₂`.
pub fn geodesic_distance(x: &ConePoint, y: &ConePoint, cone: &ConeParams) -> f64 {
    let p = cone.period();
    let mut dt = (x.theta - y.theta).abs().rem_euclid(p);
    if dt > 0.5 * p {
        dt = p - dt;
    }
    if dt <= PI {
        chord(x.r, y.r, dt)
    } else {
        x.r + y.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(r: f64, t: f64, c: &ConeParams) -> ConePoint {
        ConePoint::new(r, t, c).unwrap()
    }

    #[test]
    fn cone_and_point_validation() {
        assert!(ConeParams::new(0.0).is_err());
        assert!(ConeParams::new(-1.0).is_err());
        let c = ConeParams::new(2.0).unwrap();
        assert!(ConePoint::new(-1.0, 0.0, &c).is_err());
        let p = pt(1.0, -0.5, &c);
        assert!((p.theta - (4.0 * PI - 0.5)).abs() < 1e-14);
        let p = pt(1.0, 4.0 * PI, &c);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn image_examples() {
        let c1 = ConeParams::new(1.0).unwrap();
        let t = image_terms(&pt(2.0, 0.3, &c1), &pt(1.0, 0.3, &c1), &c1);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].j, 0);
        assert!((t[0].distance - 1.0).abs() < 1e-15);

        let t = image_terms(&pt(1.0, PI, &c1), &pt(1.0, 0.0, &c1), &c1);
        assert_eq!(t.len(), 1);
        assert!((t[0].distance - 2.0).abs() < 1e-15);

        let c2 = ConeParams::new(2.0).unwrap();
        let t = image_terms(&pt(1.0, 3.0 * PI, &c2), &pt(2.0, 0.0, &c2), &c2);
        assert!(t.is_empty());
    }

    #[test]
    fn image_examples_against_brute_force() {
        for &sigma in &[0.5, 0.75, 1.0, 2.0, 3.3] {
            let c = ConeParams::new(sigma).unwrap();
            for i in 0..50 {
                let t1 = 0.37 * i as f64;
                let t2 = 1.91 * i as f64;
                let (x, y) = (pt(1.0, t1, &c), pt(1.5, t2, &c));
                let dt = x.theta - y.theta;
                let mut want: Vec<i64> = (-50..=50)
                    .filter(|&j| {
                        let a = dt + 2.0 * j as f64 * sigma * PI;
                        a > -PI && a <= PI
                    })
                    .collect();
                want.sort();
                let got: Vec<i64> = image_terms(&x, &y, &c).iter().map(|t| t.j).collect();
                assert_eq!(got, want, "sigma={sigma} i={i}");
                assert!(got.len() as f64 <= 1.0 + (1.0 / sigma).ceil());
                if sigma <= 1.0 {
                    // A half-open window of length 2π always meets a lattice of spacing 2πσ ≤ 2π.
                    assert!(!got.is_empty());
                }
            }
        }
    }

    #[test]
    fn weighted_images_on_edge() {
        let c2 = ConeParams::new(2.0).unwrap();
        let t = weighted_image_terms(&pt(1.0, 3.0 * PI, &c2), &pt(2.0, 0.0, &c2), &c2);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].j, -1);
        assert_eq!(t[0].weight, 0.5);
        assert!((t[0].distance - 3.0).abs() < 1e-14);

        let c1 = ConeParams::new(1.0).unwrap();
        let t = weighted_image_terms(&pt(1.0, PI, &c1), &pt(1.0, 0.0, &c1), &c1);
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|i| i.weight == 0.5));
    }

    #[test]
    fn diffraction_distance_examples() {
        assert_eq!(diffraction_distance(1.0, 1.0, 0.0), 2.0);
        assert_eq!(diffraction_distance(1.0, 0.0, 5.0), 1.0);
        let want = (5.0 + 4.0 * 1.0f64.cosh()).sqrt();
        assert!((diffraction_distance(1.0, 2.0, 1.0) - want).abs() < 1e-14);
    }

    #[test]
    fn phase_derivative_examples() {
        let (d, d1, d2) = diffraction_phase_derivs(1.0, 1.0, 0.0);
        assert_eq!((d, d1), (2.0, 0.0));
        assert!((d2 - 0.5).abs() < 1e-15);
        let (d, d1, d2) = diffraction_phase_derivs(1.0, 2.0, 0.0);
        assert_eq!((d, d1), (3.0, 0.0));
        assert!((d2 - 2.0 / 3.0).abs() < 1e-15);

        let h = 1e-5;
        let f = |s| diffraction_distance(1.0, 1.0, s);
        let (_, d1, d2) = diffraction_phase_derivs(1.0, 1.0, 2.0);
        let fd1 = (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        let fd2 = (f(2.0 + h) - 2.0 * f(2.0) + f(2.0 - h)) / (h * h);
        assert!((d1 - fd1).abs() < 1e-6);
        assert!((d2 - fd2).abs() < 1e-4);
    }

    #[test]
    fn a_sigma_examples() {
        let c1 = ConeParams::new(1.0).unwrap();
        for i in 0..20 {
            let s = 0.1 + 0.3 * i as f64;
            let dt = -3.0 + 0.29 * i as f64;
            match a_sigma(s, dt, &c1) {
                DiffractionWeight::Finite(v) => assert!(v.abs() <= 1e-14, "{v}"),
                w => panic!("unexpected {w:?}"),
            }
        }
        let c2 = ConeParams::new(2.0).unwrap();
        let want = 1.0 / 1.0f64.cosh();
        match a_sigma(2.0, 0.0, &c2) {
            DiffractionWeight::Finite(v) => assert!((v - want).abs() < 1e-15),
            w => panic!("unexpected {w:?}"),
        }
        assert!(matches!(a_sigma(0.0, PI, &c2), DiffractionWeight::Pole { .. }));
        match a_sigma(1.0, PI, &c2) {
            DiffractionWeight::Finite(v) => assert!(v.abs() < 1e-15),
            w => panic!("unexpected {w:?}"),
        }
    }

    #[test]
    fn a_sigma_closed_form_integral() {
        let sigma = 1.7;
        for &a in &[0.3, -1.1, 2.9, 1e-4, -2e-3] {
            let cfg = crate::quadrature::QuadratureConfig { tol: 1e-13, ..Default::default() };
            let pole = [crate::quadrature::PoleFlag { at: 0.0, width: sigma * f64::abs(a) }];
            let num = crate::quadrature::integrate_with(
                &|s| a_sigma_term(s, a, sigma),
                0.0,
                5.0,
                &[],
                &pole,
                crate::quadrature::Target::from_config(&cfg),
            )
            .unwrap();
            let cf = a_sigma_term_integral(5.0, a, sigma);
            assert!((num.value - cf).abs() < 1e-11, "a={a} {} {}", num.value, cf);
        }
        let full = a_sigma_term_integral(f64::INFINITY, 1.0, 2.0);
        assert!((full - 2.0 * (PI - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn geodesic_examples() {
        let c2 = ConeParams::new(2.0).unwrap();
        assert!((geodesic_distance(&pt(1.0, 0.0, &c2), &pt(1.0, 3.0 * PI, &c2), &c2) - 2.0).abs() < 1e-14);
        let c1 = ConeParams::new(1.0).unwrap();
        let d = geodesic_distance(&pt(1.0, 0.0, &c1), &pt(2.0, PI / 2.0, &c1), &c1);
        assert!((d - 5.0f64.sqrt()).abs() < 1e-14);
        let c3 = ConeParams::new(3.0).unwrap();
        assert_eq!(geodesic_distance(&pt(1.0, 0.0, &c3), &pt(1.0, 2.0 * PI, &c3), &c3), 2.0);
    }

    #[test]
    fn a_sigma_tail_decay() {
        for &sigma in &[1.5f64, 2.0, 3.0] {
            let c = ConeParams::new(sigma).unwrap();
            for i in 0..40 {
                let dt = i as f64 * c.period() / 40.0;
                let mut s = 2.0 * sigma;
                while s < 60.0 {
                    if let DiffractionWeight::Finite(v) = a_sigma(s, dt, &c) {
                        // cosh(s/σ) − cos ā ≥ e^{s/σ}/2 − 1 ≥ e^{s/σ}/4 for s ≥ 2σ
                        assert!(v.abs() <= 4.0 * (-s / sigma).exp() * 1.0001);
                    }
                    s += 0.7;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn images_symmetric(sigma in 0.5f64..4.0, t1 in 0.0f64..30.0, t2 in 0.0f64..30.0, r1 in 0.0f64..5.0, r2 in 0.0f64..5.0) {
            let c = ConeParams::new(sigma).unwrap();
            let (x, y) = (pt(r1, t1, &c), pt(r2, t2, &c));
            let mut a: Vec<(u64, u64)> = weighted_image_terms(&x, &y, &c).iter().map(|t| (t.distance.to_bits() >> 8, t.weight.to_bits())).collect();
            let mut b: Vec<(u64, u64)> = weighted_image_terms(&y, &x, &c).iter().map(|t| (t.distance.to_bits() >> 8, t.weight.to_bits())).collect();
            a.sort(); b.sort();
            prop_assert_eq!(a.len(), b.len());
            let g = geodesic_distance(&x, &y, &c);
            for t in weighted_image_terms(&x, &y, &c) {
                prop_assert!(t.distance >= g - 1e-12);
            }
        }

        #[test]
        fn geodesic_attained_by_nearest_image(sigma in 0.5f64..4.0, t1 in 0.0f64..30.0, t2 in 0.0f64..30.0, r1 in 0.01f64..5.0, r2 in 0.01f64..5.0) {
            let c = ConeParams::new(sigma).unwrap();
            let (x, y) = (pt(r1, t1, &c), pt(r2, t2, &c));
            let g = geodesic_distance(&x, &y, &c);
            prop_assert!((geodesic_distance(&y, &x, &c) - g).abs() < 1e-12);
            let imgs = weighted_image_terms(&x, &y, &c);
            if let Some(m) = imgs.iter().map(|t| t.distance).reduce(f64::min) {
                prop_assert!((m - g).abs() < 1e-12 * (1.0 + g));
            } else {
                prop_assert!((g - (r1 + r2)).abs() < 1e-12);
            }
        }

        #[test]
        fn a_sigma_vanishes_at_sigma_one(s in 0.0f64..20.0, dt in -20.0f64..20.0) {
            let c = ConeParams::new(1.0).unwrap();
            if let DiffractionWeight::Finite(v) = a_sigma(s, dt, &c) {
                prop_assert!(v.abs() <= 1e-14);
            }
        }
    }
}
