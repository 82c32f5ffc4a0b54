use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(cmd: &str, config: &Value, out: &Path, extra: &[&str]) -> i32 {
    let dir = out.parent().unwrap();
    let path = dir.join(format!("{}.json", out.file_name().unwrap().to_string_lossy()));
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_hawkes-mm"))
        .arg(cmd)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    status.status.code().unwrap()
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn one_exp() -> Value {
    json!({"mu": 0.1, "k_over_sigma": 20.0, "kernel": {"weights": [0.9], "rates": [1.0]}})
}

fn small_grid() -> Value {
    json!({"i_bound": 5, "c_max": [4.0], "m_c": 9, "horizon": 0.5})
}

#[test]
fn kernel_approx_writes_kernels_with_decreasing_error() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k");
    let cfg = json!({"kernel": {"target": {"type": "powerlaw", "lam": 0.1, "alpha": 0.7, "beta": 0.4, "eps": 0.01}}});
    assert_eq!(run("kernel-approx", &cfg, &out, &[]), 0);
    for n in [16, 64, 256] {
        assert!(out.join(format!("kernel_n{n}.json")).exists());
    }
    let rows = csv(&out.join("approx_report.csv"));
    let sup: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["16", "64", "256"]);
    assert!(sup.windows(2).all(|w| w[1] <= w[0]), "{sup:?}");
    assert!(out.join("resolved_config.json").exists());
}

#[test]
fn exp_sum_kernels_pass_through() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k");
    let cfg = json!({"kernel": {"target": {"type": "expsum", "weights": [0.45, 0.45], "rates": [1.0, 1.0]}}});
    assert_eq!(run("kernel-approx", &cfg, &out, &[]), 0);
    let rows = csv(&out.join("approx_report.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn invalid_power_law_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({"kernel": {"target": {"type": "powerlaw", "lam": 0.1, "alpha": 0.7, "beta": 1.4, "eps": 0.01}}});
    assert_eq!(run("kernel-approx", &cfg, &tmp.path().join("k"), &[]), 2);
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({"intensity": one_exp(), "grid": small_grid(), "gird": {}});
    assert_eq!(run("solve", &cfg, &tmp.path().join("s"), &[]), 2);
    let mut grid = small_grid();
    grid["mc"] = json!(3);
    let cfg = json!({"intensity": one_exp(), "grid": grid});
    assert_eq!(run("solve", &cfg, &tmp.path().join("s"), &[]), 2);
}

#[test]
fn missing_kernel_file_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({"intensity": {"mu": 0.1, "kernel_file": "nowhere.json"}, "grid": small_grid()});
    assert_eq!(run("solve", &cfg, &tmp.path().join("s"), &[]), 3);
}

#[test]
fn unstable_time_step_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let mut grid = small_grid();
    grid["dt"] = json!(0.25);
    let cfg = json!({"intensity": one_exp(), "grid": grid});
    assert_eq!(run("solve", &cfg, &tmp.path().join("s"), &[]), 4);
}

#[test]
fn solve_writes_a_zero_terminal_slice() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(run("solve", &json!({"intensity": one_exp(), "grid": small_grid()}), &out, &[]), 0);
    for f in ["value.csv", "feedback.csv", "value_grid.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rows = csv(&out.join("value.csv"));
    let terminal: Vec<_> = rows.iter().filter(|r| r[0].parse::<f64>().unwrap() == 0.5).collect();
    assert_eq!(terminal.len(), 11 * 9 * 9);
    assert!(terminal.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn two_exponential_values_are_side_symmetric() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let cfg = json!({
        "intensity": {"mu": 0.1, "kernel": {"weights": [0.45, 0.45], "rates": [1.0, 1.0]}},
        "grid": {"i_bound": 3, "c_max": [2.0], "m_c": 3, "horizon": 0.3}
    });
    assert_eq!(run("solve", &cfg, &out, &[]), 0);
    let rows = csv(&out.join("value.csv"));
    let initial: Vec<_> = rows.iter().filter(|r| r[0].parse::<f64>().unwrap() == 0.0).collect();
    let key = |r: &Vec<String>| r[1..6].join(",");
    let map: std::collections::HashMap<_, _> = initial.iter().map(|r| (key(r), r[6].parse::<f64>().unwrap())).collect();
    for r in &initial {
        let i: i64 = r[1].parse().unwrap();
        let mirrored = format!("{},{},{},{},{}", -i, r[4], r[5], r[2], r[3]);
        let (a, b) = (map[&key(r)], map[&mirrored]);
        assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{r:?}: {a} vs {b}");
    }
}

fn simulate_config(kernel: Value) -> Value {
    json!({
        "seed": 3,
        "intensity": kernel,
        "grid": small_grid(),
        "simulation": {"horizon": 0.5, "initial": {"inventory": -2}, "control": {"type": "optimal"}, "n_episodes": 50}
    })
}

#[test]
fn simulate_is_reproducible_and_seeded() {
    let tmp = TempDir::new().unwrap();
    let cfg = simulate_config(one_exp());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(run("simulate", &cfg, &a, &[]), 0);
    assert_eq!(run("simulate", &cfg, &b, &["--threads", "1"]), 0);
    assert_eq!(run("simulate", &cfg, &c, &["--seed", "4"]), 0);
    for f in ["events.csv", "episodes.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("episodes.csv")).unwrap(), fs::read(c.join("episodes.csv")).unwrap());
    let resolved: Value = serde_json::from_str(&fs::read_to_string(c.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["seed"], json!(4));
    assert_eq!(csv(&a.join("episodes.csv")).len(), 50);
}

#[test]
fn approximated_kernels_feed_later_stages() {
    let tmp = TempDir::new().unwrap();
    let k = tmp.path().join("k");
    let cfg = json!({"kernel": {"target": {"type": "expsum", "weights": [0.9], "rates": [1.0]}}});
    assert_eq!(run("kernel-approx", &cfg, &k, &[]), 0);
    let file = k.join("kernel_n1.json");
    let cfg = simulate_config(json!({"mu": 0.1, "kernel_file": file}));
    assert_eq!(run("simulate", &cfg, &tmp.path().join("s"), &[]), 0);
}

fn small_comparison() -> Value {
    json!({
        "seed": 9,
        "comparison": {
            "horizon": 0.5, "mu_penalty": 0.1, "k_over_sigma": 20.0, "i_bound": 4, "snapshot_stride": 2,
            "strategies": [
                {"name": "V0", "mu": 1.0, "kernel": {"weights": [], "rates": []}, "c_max": 1.0, "m_c": 2},
                {"name": "V1", "mu": 0.1, "kernel": {"weights": [0.9], "rates": [1.0]}, "c_max": 3.0, "m_c": 7},
                {"name": "V2", "mu": 0.1, "kernel": {"weights": [0.45, 0.45], "rates": [1.0, 1.0]}, "c_max": 3.0, "m_c": 4}
            ],
            "probe": {"inventory": -3, "c_ask": [0.0, 2.0], "c_bid": [0.0, 2.0]},
            "diff_section": {"c_ask": [2.0, 0.0], "c_bid_fixed": [2.0]},
            "mc_probes": [{"inventory": -3, "c_ask": [0.0, 2.0], "c_bid": [0.0, 2.0]}],
            "n_episodes": 500
        }
    })
}

#[test]
fn compare_writes_value_series_reproducibly() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("compare", &small_comparison(), &a, &[]), 0);
    assert_eq!(run("compare", &small_comparison(), &b, &[]), 0);
    let files = ["fig1_values.csv", "fig2_diff.csv", "fig3_diff.csv", "diff_V0.csv", "diff_V1.csv", "mc_probes.csv"];
    for f in files {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let head = fs::read_to_string(a.join("fig1_values.csv")).unwrap();
    assert!(head.starts_with("t,V0,V1,V2\n"));
    assert_eq!(fs::read(a.join("fig2_diff.csv")).unwrap(), fs::read(a.join("diff_V1.csv")).unwrap());
    assert_eq!(fs::read(a.join("fig3_diff.csv")).unwrap(), fs::read(a.join("diff_V0.csv")).unwrap());
}

#[test]
fn branching_writes_the_convergence_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({
        "particle": {
            "target": {"lam": 0.1, "alpha": 0.7, "beta": 0.4, "eps": 0.01},
            "ns": [4, 8, 16], "mu": 0.1, "mu_penalty": 0.1, "k_over_sigma": 20.0, "horizon": 1.0,
            "inventories": [0, 5, -5], "excitation": 5.0, "lifetime_rate": 1.0, "n_trees": 500,
            "guide": {"i_bound": 8, "c_max": 30.0, "m_c": 31, "snapshot_stride": 10}
        }
    });
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("branching", &cfg, &a, &["--seed", "5"]), 0);
    assert_eq!(run("branching", &cfg, &b, &["--seed", "5"]), 0);
    for f in ["fig4_convergence.csv", "branching_estimates.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let text = fs::read_to_string(a.join("fig4_convergence.csv")).unwrap();
    assert!(text.starts_with("n,x0,x1,x2\n"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(csv(&a.join("branching_estimates.csv")).len(), 9);
}

#[test]
fn missing_section_and_config_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run("compare", &json!({}), &tmp.path().join("c"), &[]), 2);
    let status = Command::new(env!("CARGO_BIN_EXE_hawkes-mm")).arg("solve").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}
