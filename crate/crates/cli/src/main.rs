//! `conebr`: batch experiments for Bochner–Riesz means on flat cones.
//!
//! Exit codes: 0 on success, 1 when a computation misses its tolerance,
//! 2 on usage errors (bad flags, malformed pairs, invalid parameters).

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use conebr::cone_operator::{BoundaryCondition, ProbeFamily};
use serde::{de::DeserializeOwned, Serialize};

use commands::{NumericFailure, Outputs, UsageError};
use config::*;

#[derive(Parser)]
#[command(name = "conebr", version, about = "Bochner–Riesz means on flat cones: kernels, cross-checks and experiments")]
struct Cli {
    /// TOML file with one table per subcommand (`[kernel]`, `[crossval]`, ...).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Main output file; stdout when absent.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Side report file (normgrowth fit); stderr when absent.
    #[arg(long, global = true, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "CONEBR_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the cone kernel at point pairs (CSV).
    Kernel(KernelArgs),
    /// Compare the kernel against the mode-sum oracle (JSON).
    Crossval(CrossvalArgs),
    /// Operator-norm probes against λ with a fitted exponent (CSV + JSON).
    Normgrowth(NormgrowthArgs),
    /// Relative error of S_λ f against f as λ grows (CSV).
    Converge(ConvergeArgs),
    /// Dirichlet or Neumann sector kernel (CSV).
    Sector(SectorArgs),
    /// Sampled decay-bound reports (JSON).
    Bounds(BoundsArgs),
    /// Residuals of the σ → σ/2 reduction identity (CSV).
    Reduction(ReductionArgs),
}

/// `r1,theta1,r2,theta2` as four finite numbers.
fn parse_pair(s: &str) -> std::result::Result<Pair, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected r1,theta1,r2,theta2 but got {} fields", parts.len()));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| format!("'{p}': {e}"))?;
        if !o.is_finite() {
            return Err(format!("'{p}' is not finite"));
        }
    }
    Ok(out)
}

/// Copies each flag that was given onto the config field of the same name.
macro_rules! overlay {
    ($args:expr, $cfg:expr; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct KernelArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Point pair `r1,theta1,r2,theta2`; repeatable, replaces config pairs.
    #[arg(long = "pair", value_parser = parse_pair, allow_hyphen_values = true)]
    pairs: Vec<Pair>,
}

impl KernelArgs {
    fn apply(&self, c: &mut KernelConfig) {
        overlay!(self, c; sigma, lambda, delta, tol);
        if !self.pairs.is_empty() {
            c.pairs = self.pairs.clone();
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CrossvalArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    radial_quad_points: Option<usize>,
    #[arg(long)]
    max_rel_err: Option<f64>,
    /// Explicit pair; repeatable, replaces the seeded sample.
    #[arg(long = "pair", value_parser = parse_pair, allow_hyphen_values = true)]
    pairs: Vec<Pair>,
}

impl CrossvalArgs {
    fn apply(&self, c: &mut CrossvalConfig) {
        overlay!(self, c; sigma, lambda, delta, tol, n_points, seed, radial_quad_points, max_rel_err);
        if !self.pairs.is_empty() {
            c.pairs = self.pairs.clone();
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct NormgrowthArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Exponent p in [1, inf]; `inf` probes the L^∞ norm.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated frequencies.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    n_theta: Option<usize>,
    #[arg(long)]
    n_random: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tip_radius: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FamilyArg {
    Bumps,
    Randomized,
}

impl NormgrowthArgs {
    fn apply(&self, c: &mut NormgrowthConfig) {
        overlay!(self, c; sigma, delta, p, lambdas, n_theta, n_random, seed, tip_radius, tol);
        if let Some(f) = self.family {
            c.family = match f {
                FamilyArg::Bumps => ProbeFamily::Bumps,
                FamilyArg::Randomized => ProbeFamily::Randomized,
            };
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ConvergeArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Order δ; defaults to the critical index for p plus 0.2.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    center_r: Option<f64>,
    #[arg(long)]
    center_theta: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    n_theta: Option<usize>,
}

impl ConvergeArgs {
    fn apply(&self, c: &mut ConvergeConfig) {
        overlay!(self, c; sigma, p, lambdas, center_r, center_theta, width, n_theta);
        if self.delta.is_some() {
            c.delta = self.delta;
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SectorArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "pair", value_parser = parse_pair, allow_hyphen_values = true)]
    pairs: Vec<Pair>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BcArg {
    Dirichlet,
    Neumann,
}

impl SectorArgs {
    fn apply(&self, c: &mut SectorConfig) {
        overlay!(self, c; alpha, lambda, delta, tol);
        if let Some(bc) = self.bc {
            c.bc = match bc {
                BcArg::Dirichlet => BoundaryCondition::Dirichlet,
                BcArg::Neumann => BoundaryCondition::Neumann,
            };
        }
        if !self.pairs.is_empty() {
            c.pairs = self.pairs.clone();
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BoundsArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    check: Option<BoundCheck>,
    #[arg(long)]
    k_min: Option<u32>,
    #[arg(long)]
    k_max: Option<u32>,
}

impl BoundsArgs {
    fn apply(&self, c: &mut BoundsConfig) {
        overlay!(self, c; sigma, lambda, delta, tol, samples, seed, check, k_min, k_max);
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ReductionArgs {
    /// Radius of the larger cone.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    convention: Option<ConventionChoice>,
}

impl ReductionArgs {
    fn apply(&self, c: &mut ReductionConfig) {
        overlay!(self, c; sigma, lambda, delta, tol, n_points, seed, convention);
    }
}

/// Top-level keys of the config file besides the subcommand tables.
const FILE_KEYS: [&str; 3] = ["threads", "out", "report"];
const TABLES: [&str; 7] = ["kernel", "crossval", "normgrowth", "converge", "sector", "bounds", "reduction"];

fn usage_err(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_config_file(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| usage_err(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| usage_err(format!("{}: {e}", path.display())))?;
    for key in table.keys() {
        if !FILE_KEYS.contains(&key.as_str()) && !TABLES.contains(&key.as_str()) {
            return Err(usage_err(format!("{}: unknown key '{key}'", path.display())));
        }
    }
    Ok(table)
}

/// Defaults overlaid with the file's `[name]` table.
fn from_file<T: DeserializeOwned + Default>(file: &toml::Table, name: &str) -> Result<T> {
    match file.get(name) {
        None => Ok(T::default()),
        Some(v) => v.clone().try_into().map_err(|e| usage_err(format!("[{name}]: {e}"))),
    }
}

/// Effective config rendered as TOML under its subcommand table.
fn render<T: Serialize>(name: &str, cfg: &T) -> Result<String> {
    let mut t = toml::Table::new();
    t.insert(name.to_string(), toml::Value::try_from(cfg)?);
    Ok(toml::to_string(&t)?)
}

/// Where outputs go and how many threads to use, after flags and file.
struct Runtime {
    out: Option<PathBuf>,
    report: Option<PathBuf>,
    threads: Option<usize>,
}

fn file_path(file: &toml::Table, key: &str) -> Result<Option<PathBuf>> {
    match file.get(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(PathBuf::from(s))),
        Some(_) => Err(usage_err(format!("'{key}' must be a string path"))),
    }
}

fn runtime(cli: &Cli, file: &toml::Table) -> Result<Runtime> {
    let threads = match (cli.threads, file.get("threads")) {
        (Some(n), _) => Some(n),
        (None, None) => None,
        (None, Some(v)) => Some(v.as_integer().and_then(|n| usize::try_from(n).ok()).ok_or_else(|| usage_err("'threads' must be a non-negative integer"))?),
    };
    Ok(Runtime {
        out: cli.out.clone().map(Some).unwrap_or(file_path(file, "out")?),
        report: cli.report.clone().map(Some).unwrap_or(file_path(file, "report")?),
        threads,
    })
}

fn write_to(path: Option<&Path>, bytes: &[u8], fallback: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(fallback.write_all(bytes)?),
    }
}

/// Resolves the config, then dumps it or runs the command.
fn prepare<T, A>(cli: &Cli, file: &toml::Table, name: &str, args: &A, apply: fn(&A, &mut T), run: fn(&T, &str) -> Result<Outputs>, finish: fn(&mut T)) -> Result<Option<Outputs>>
where
    T: DeserializeOwned + Default + Serialize,
{
    let mut cfg: T = from_file(file, name)?;
    apply(args, &mut cfg);
    finish(&mut cfg);
    let text = render(name, &cfg)?;
    if cli.dump_config {
        print!("{text}");
        return Ok(None);
    }
    let digest = conebr::bounds_lab::config_digest(&format!("conebr {}\n{text}", output::VERSION));
    run(&cfg, &digest).map(Some)
}

fn no_finish<T>(_: &mut T) {}

fn resolve_converge_delta(c: &mut ConvergeConfig) {
    if c.delta.is_none() {
        c.delta = Some(conebr::critical_index(c.p) + 0.2);
    }
}

fn run(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => toml::Table::new(),
    };
    let rt = runtime(cli, &file)?;
    if let Some(n) = rt.threads {
        if n == 0 {
            return Err(usage_err("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let outputs = match &cli.command {
        Command::Kernel(a) => prepare(cli, &file, "kernel", a, KernelArgs::apply, commands::kernel_cmd, no_finish)?,
        Command::Crossval(a) => prepare(cli, &file, "crossval", a, CrossvalArgs::apply, commands::crossval_cmd, no_finish)?,
        Command::Normgrowth(a) => prepare(cli, &file, "normgrowth", a, NormgrowthArgs::apply, commands::normgrowth_cmd, no_finish)?,
        Command::Converge(a) => prepare(cli, &file, "converge", a, ConvergeArgs::apply, commands::converge_cmd, resolve_converge_delta)?,
        Command::Sector(a) => prepare(cli, &file, "sector", a, SectorArgs::apply, commands::sector_cmd, no_finish)?,
        Command::Bounds(a) => prepare(cli, &file, "bounds", a, BoundsArgs::apply, commands::bounds_cmd, no_finish)?,
        Command::Reduction(a) => prepare(cli, &file, "reduction", a, ReductionArgs::apply, commands::reduction_cmd, no_finish)?,
    };
    let Some(out) = outputs else { return Ok(()) };
    write_to(rt.out.as_deref(), &out.primary, &mut std::io::stdout().lock())?;
    if let Some(rep) = &out.report {
        write_to(rt.report.as_deref(), rep, &mut std::io::stderr().lock())?;
    }
    match out.failure {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}

/// 1 for numeric trouble, 2 for anything the user can fix by changing the
/// request.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<NumericFailure>() {
        return 1;
    }
    if let Some(ce) = e.downcast_ref::<conebr::Error>() {
        return match ce {
            conebr::Error::Domain(_) | conebr::Error::Config(_) => 2,
            _ => 1,
        };
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("conebr: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
