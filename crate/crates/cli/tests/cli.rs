//! End-to-end runs of the `conebr` binary.

use std::path::Path;
use std::process::{Command, Output};

use conebr::spectral_oracle::{oracle_kernel, ModeSumConfig};
use conebr::{BrParams, ConeParams, ConePoint};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/kernel_sigma2.csv");

/// Pairs of the σ = 2 golden file, including two near `Δθ = π`.
const GOLDEN_PAIRS: [[f64; 4]; 8] = [
    [1.0, 0.0, 2.0, 0.0],
    [0.5, 1.0, 1.0, 2.0],
    [1.5, 3.0, 0.7, 0.0],
    [1.2, 3.1, 1.1, 0.0],
    [0.3, 6.0, 2.2, 0.5],
    [2.0, 9.0, 0.9, 1.0],
    [0.8, 3.15, 0.6, 0.0],
    [1.7, 12.0, 1.3, 0.2],
];

fn conebr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conebr")).args(args).env_remove("CONEBR_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV document, after the provenance line and header.
fn rows(csv: &str) -> Vec<Vec<String>> {
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# conebr "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

fn pair_arg(p: &[f64; 4]) -> String {
    p.map(|v| v.to_string()).join(",")
}

fn oracle_rows() -> String {
    let cone = ConeParams::new(2.0).unwrap();
    let br = BrParams::new(1.0, 1.0).unwrap();
    let mut s = String::from("r1,theta1,r2,theta2,oracle\n");
    for p in &GOLDEN_PAIRS {
        let x = ConePoint::new(p[0], p[1], &cone).unwrap();
        let y = ConePoint::new(p[2], p[3], &cone).unwrap();
        let v = oracle_kernel(&x, &y, &cone, &br, &ModeSumConfig::default()).unwrap();
        s += &format!("{},{:.16e}\n", pair_arg(p), v);
    }
    s
}

#[test]
fn golden_file_is_current() {
    let fresh = oracle_rows();
    if std::env::var_os("CONEBR_REGEN_GOLDEN").is_some() {
        std::fs::write(GOLDEN, &fresh).unwrap();
    }
    let stored = std::fs::read_to_string(GOLDEN).unwrap();
    for (a, b) in stored.lines().zip(fresh.lines()).skip(1) {
        let (va, vb) = (num(a.rsplit(',').next().unwrap()), num(b.rsplit(',').next().unwrap()));
        assert!((va - vb).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn kernel_sigma2_matches_golden() {
    let mut args = vec!["kernel", "--sigma", "2", "--lambda", "1", "--delta", "1"];
    let pairs: Vec<String> = GOLDEN_PAIRS.iter().map(pair_arg).collect();
    for p in &pairs {
        args.extend(["--pair", p.as_str()]);
    }
    let got = rows(&stdout(&conebr(&args)));
    let golden = std::fs::read_to_string(GOLDEN).unwrap();
    let want: Vec<f64> = golden.lines().skip(1).map(|l| num(l.rsplit(',').next().unwrap())).collect();
    assert_eq!(got.len(), want.len());
    for (row, w) in got.iter().zip(&want) {
        let total = num(&row[6]);
        assert!((total - w).abs() <= 1e-8 * w.abs().max(1e-3), "{row:?} vs {w}");
    }
}

#[test]
fn kernel_sigma1_has_no_diffraction() {
    let out = stdout(&conebr(&["kernel", "--sigma", "1", "--lambda", "1", "--delta", "1", "--pair", "1,0,2,0", "--pair", "0.4,2,1.3,5"]));
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    for row in &r {
        assert_eq!(num(&row[5]), 0.0);
        assert_eq!(row[4], row[6]);
    }
}

#[test]
fn malformed_pair_is_a_usage_error() {
    for bad in ["1,0,2", "1,0,2,x", "1,0,2,0,5", "1,0,2,nan"] {
        let o = conebr(&["kernel", "--pair", bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(!o.stderr.is_empty());
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn invalid_parameters_are_usage_errors() {
    assert_eq!(conebr(&["kernel", "--sigma", "-1", "--pair", "1,0,2,0"]).status.code(), Some(2));
    assert_eq!(conebr(&["kernel", "--pair", "-1,0,2,0"]).status.code(), Some(2));
    assert_eq!(conebr(&["kernel"]).status.code(), Some(2));
    assert_eq!(conebr(&["crossval", "--n-points", "0"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_conebr"))
        .args(["kernel", "--pair", "1,0,2,0"])
        .env("CONEBR_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missed_tolerance_is_a_numeric_failure() {
    let o = conebr(&["crossval", "--n-points", "5", "--max-rel-err", "1e-300"]);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(report["n_points"], 5);
}

#[test]
fn crossval_suites() {
    let def = json(&stdout(&conebr(&["crossval"])));
    assert_eq!(def["n_points"], 50);
    assert!(def["max_rel_err"].as_f64().unwrap() <= 1e-6);
    assert_eq!(def["per_point"].as_array().unwrap().len(), 50);
    let flat = json(&stdout(&conebr(&["crossval", "--sigma", "1", "--n-points", "30", "--seed", "3"])));
    assert!(flat["max_rel_err"].as_f64().unwrap() <= 1e-8);
    assert!(def["config_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, args: &[&str]| {
        let path = dir.path().join(name);
        let mut full = vec!["--out", path.to_str().unwrap()];
        full.extend_from_slice(args);
        stdout(&conebr(&full));
        std::fs::read(&path).unwrap()
    };
    let args = ["crossval", "--n-points", "8", "--seed", "5"];
    assert_eq!(run("a.json", &args), run("b.json", &args));
    let args = ["bounds", "--samples", "10", "--seed", "2"];
    assert_eq!(run("a.json", &args), run("b.json", &args));
    let args = ["reduction", "--n-points", "6", "--convention", "all"];
    assert_eq!(run("a.csv", &args), run("b.csv", &args));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[kernel]\nsigma = 1.0\nlambda = 3.0\npairs = [[1.0, 0.0, 2.0, 0.0]]\n").unwrap();
    let c = cfg.to_str().unwrap();
    let dump = stdout(&conebr(&["--config", c, "kernel", "--lambda", "2", "--dump-config"]));
    let t: toml::Table = dump.parse().unwrap();
    let k = t["kernel"].as_table().unwrap();
    assert_eq!(k["sigma"].as_float(), Some(1.0));
    assert_eq!(k["lambda"].as_float(), Some(2.0));
    assert_eq!(k["delta"].as_float(), Some(1.0));
    // The dumped config reproduces the run exactly.
    let again = dir.path().join("dump.toml");
    std::fs::write(&again, &dump).unwrap();
    let a = stdout(&conebr(&["--config", c, "kernel", "--lambda", "2"]));
    let b = stdout(&conebr(&["--config", again.to_str().unwrap(), "kernel"]));
    assert_eq!(a, b);
    assert_eq!(rows(&a).len(), 1);
    std::fs::write(&cfg, "[kernel]\nsigmaa = 1.0\n").unwrap();
    assert_eq!(conebr(&["--config", c, "kernel"]).status.code(), Some(2));
}

#[test]
fn reduction_residuals_vanish_at_sigma2() {
    let r = rows(&stdout(&conebr(&["reduction", "--sigma", "2"])));
    assert_eq!(r.len(), 20);
    for row in &r {
        assert_eq!(row[4], "orbit-sum");
        assert!(num(&row[5]) <= 1e-8, "{row:?}");
    }
}

#[test]
fn dirichlet_sector_vanishes_on_edges() {
    let r = rows(&stdout(&conebr(&["sector", "--bc", "dirichlet", "--alpha", "1.2"])));
    let peak = r.iter().map(|row| num(&row[4]).abs()).fold(0.0, f64::max);
    assert!(peak > 0.0);
    let mut edges = 0;
    for row in &r {
        let t1 = num(&row[1]);
        if t1 == 0.0 || t1 == 1.2 {
            edges += 1;
            assert!(num(&row[4]).abs() <= 1e-8 * peak, "{row:?}");
        }
    }
    assert_eq!(edges, 4);
}

fn growth(args: &[&str], dir: &Path) -> serde_json::Value {
    let rep = dir.join("fit.json");
    let mut full = vec!["normgrowth", "--report", rep.to_str().unwrap()];
    full.extend_from_slice(args);
    let csv = stdout(&conebr(&full));
    let fit = json(&std::fs::read_to_string(&rep).unwrap());
    assert_eq!(rows(&csv).len(), fit["lambdas"].as_array().unwrap().len());
    fit
}

#[test]
fn normgrowth_tip_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let low = growth(&["--delta", "0.1", "--p", "inf"], dir.path());
    let e = low["exponent"].as_f64().unwrap();
    assert!((e - 0.4).abs() <= 0.1, "{e}");
    let high = growth(&["--delta", "0.8", "--p", "inf"], dir.path());
    assert!(high["variation"].as_f64().unwrap() <= 0.1, "{high}");
}

#[test]
fn normgrowth_l2_probes_stay_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let fit = growth(&["--delta", "0.3", "--p", "2", "--lambdas", "4,8", "--family", "randomized", "--n-random", "2"], dir.path());
    for v in fit["probe_norms"].as_array().unwrap() {
        assert!(v.as_f64().unwrap() <= 1.01, "{fit}");
    }
}

#[test]
fn converge_errors_decrease() {
    let out = stdout(&conebr(&["converge", "--lambdas", "4,8,16", "--n-theta", "64"]));
    let errs: Vec<f64> = rows(&out).iter().map(|r| num(&r[1])).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}
