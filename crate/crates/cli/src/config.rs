//! Effective configuration of each subcommand.
//!
//! Values come from built-in defaults, then the subcommand's table in the
//! `--config` file, then command-line flags.

use conebr::cone_operator::{BoundaryCondition, ProbeFamily};
use serde::{Deserialize, Serialize};

/// A point pair `[r₁, θ₁, r₂, θ₂]`.
pub type Pair = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub sigma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub tol: f64,
    pub pairs: Vec<Pair>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { sigma: 2.0, lambda: 1.0, delta: 1.0, tol: 1e-12, pairs: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalConfig {
    pub sigma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub tol: f64,
    /// Seeded pairs drawn when `pairs` is empty.
    pub n_points: usize,
    pub seed: u64,
    pub pairs: Vec<Pair>,
    pub radial_quad_points: usize,
    /// Largest acceptable relative error; exceeding it is a numeric failure.
    pub max_rel_err: f64,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            lambda: 1.0,
            delta: 1.0,
            tol: 1e-12,
            n_points: 50,
            seed: 0,
            pairs: vec![],
            radial_quad_points: 20,
            max_rel_err: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormgrowthConfig {
    pub sigma: f64,
    pub delta: f64,
    /// Exponent `p`; `inf` selects the `L^∞` witness.
    pub p: f64,
    pub lambdas: Vec<f64>,
    pub family: ProbeFamily,
    pub n_theta: usize,
    pub n_random: usize,
    pub seed: u64,
    pub tip_radius: f64,
    pub tol: f64,
}

impl Default for NormgrowthConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            delta: 0.1,
            p: f64::INFINITY,
            lambdas: vec![8.0, 16.0, 32.0, 64.0],
            family: ProbeFamily::Bumps,
            n_theta: 64,
            n_random: 4,
            seed: 0,
            tip_radius: 64.0,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub sigma: f64,
    pub p: f64,
    /// Defaults to the critical index for `p` plus 0.2.
    pub delta: Option<f64>,
    pub lambdas: Vec<f64>,
    pub center_r: f64,
    pub center_theta: f64,
    pub width: f64,
    pub n_theta: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            p: 2.0,
            delta: None,
            lambdas: vec![4.0, 8.0, 16.0, 32.0],
            center_r: 1.5,
            center_theta: 0.0,
            width: 1.0,
            n_theta: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorConfig {
    pub alpha: f64,
    pub bc: BoundaryCondition,
    pub lambda: f64,
    pub delta: f64,
    pub tol: f64,
    /// Pairs `[r₁, θ₁, r₂, θ₂]` inside the sector; empty selects a built-in
    /// set with rows on both edges.
    pub pairs: Vec<Pair>,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self { alpha: 1.2, bc: BoundaryCondition::Dirichlet, lambda: 2.0, delta: 0.6, tol: 1e-12, pairs: vec![] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundCheck {
    Ge,
    De,
    Halfpower,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub sigma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub check: BoundCheck,
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            lambda: 1.0,
            delta: 0.3,
            tol: 1e-12,
            samples: 100,
            seed: 0,
            check: BoundCheck::All,
            k_min: 1,
            k_max: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionChoice {
    HalfSigma,
    HalfCircumference,
    OrbitSum,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// Radius of the larger cone; the identity lands on `sigma/2`.
    pub sigma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub tol: f64,
    pub n_points: usize,
    pub seed: u64,
    pub convention: ConventionChoice,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            lambda: 1.0,
            delta: 0.7,
            tol: 1e-12,
            n_points: 20,
            seed: 0,
            convention: ConventionChoice::OrbitSum,
        }
    }
}
