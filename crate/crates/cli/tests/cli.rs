use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn microset(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microset"))
        .args(args)
        .current_dir(dir)
        .env_remove("MICROSET_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = microset(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn full_binary_tree(dir: &Path) {
    ok(
        dir,
        &[
            "seq",
            "gen",
            "--gamma",
            "1/1000",
            "--length",
            "8",
            "--out",
            "ones.json",
            "--report",
            "r.json",
        ],
    );
    let seq = json(dir.join("ones.json"));
    assert!(seq["bits"].as_array().unwrap().iter().all(|b| b == 1));
    ok(
        dir,
        &[
            "moran",
            "build",
            "--seq",
            "ones.json",
            "--rho",
            "1/2",
            "--depth",
            "8",
            "--out",
            "tree.json",
            "--report",
            "r.json",
        ],
    );
}

#[test]
fn sequence_check_and_cesaro_series() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "seq", "gen", "--gamma", "1/10", "--length", "100000", "--out", "s.json", "--report", "gen.json",
        ],
    );
    ok(
        d,
        &[
            "seq",
            "check",
            "--in",
            "s.json",
            "--m-max",
            "4",
            "--report",
            "check.json",
        ],
    );
    let report = json(d.join("check.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["result"]["zero_windows"].as_array().unwrap().len(), 4);
    ok(
        d,
        &[
            "plot",
            "--report",
            "check.json",
            "--kind",
            "cesaro",
            "--out",
            "cesaro.csv",
        ],
    );
    let csv = fs::read_to_string(d.join("cesaro.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,mean"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 100_000.0);
    assert!(last[1] > 0.8 && last[1] <= 1.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "cubes", "cloud", "--kind", "cantor", "--size", "8", "--out", "c.csv", "--report", "r.json",
        ],
    );
    for name in ["a.json", "b.json"] {
        ok(
            d,
            &["tangent", "run", "--cloud", "c.csv", "--ell-max", "3", "--report", name],
        );
    }
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());
    for name in ["a.json", "b.json"] {
        ok(
            d,
            &[
                "verify",
                "theorem-a",
                "--gamma",
                "1/20",
                "--alpha",
                "9/10",
                "--depth",
                "200",
                "--m-max",
                "1",
                "--samples",
                "3",
                "--report",
                name,
            ],
        );
    }
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_microset"))
        .args(["seq", "gen", "--gamma", "1/2", "--length", "10", "--out", "s.json"])
        .current_dir(d)
        .env("MICROSET_SEED", "77")
        .output()
        .unwrap();
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], 77);
    let out = ok(
        d,
        &["seq", "gen", "--gamma", "1/2", "--length", "10", "--out", "s.json"],
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], microset_core::DEFAULT_SEED);
}

#[test]
fn theorem_a_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "verify",
            "theorem-a",
            "--gamma",
            "1/20",
            "--alpha",
            "0.9",
            "--depth",
            "1500",
            "--m-max",
            "3",
            "--samples",
            "4",
            "--jobs",
            "2",
            "--report",
            "a.json",
        ],
    );
    let r = json(d.join("a.json"));
    let rho = r["result"]["rho_0"].as_f64().unwrap();
    assert!(rho > 0.0 && rho <= 0.5);
    assert!((r["result"]["assouad_formula"].as_f64().unwrap() - 0.9).abs() < 1e-9);
    for m in r["result"]["max_count_per_m"].as_array().unwrap() {
        assert!(m["max_count"].as_u64().unwrap() <= 9);
    }

    ok(
        d,
        &[
            "verify",
            "theorem-a",
            "--gamma",
            "1/2",
            "--alpha",
            "0",
            "--depth",
            "100",
            "--m-max",
            "2",
            "--report",
            "z.json",
        ],
    );
    assert_eq!(json(d.join("z.json"))["result"]["trivial"], true);

    // alpha = d, and a target above what gamma = 1/2 can reach
    for alpha in ["1", "0.9"] {
        let out = microset(
            d,
            &[
                "verify",
                "theorem-a",
                "--gamma",
                "1/2",
                "--alpha",
                alpha,
                "--depth",
                "2000",
                "--m-max",
                "4",
            ],
        );
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
    }
}

#[test]
fn theorem_b_on_cantor_grid_and_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "cubes",
            "cloud",
            "--kind",
            "cantor",
            "--size",
            "10",
            "--out",
            "cantor.csv",
            "--report",
            "r.json",
        ],
    );
    ok(
        d,
        &[
            "verify",
            "theorem-b",
            "--cloud",
            "cantor.csv",
            "--ell-max",
            "4",
            "--report",
            "b.json",
        ],
    );
    let r = json(d.join("b.json"));
    let t = &r["result"]["tangent"];
    assert_eq!(t["ells"].as_array().unwrap().len(), 4);
    assert_eq!(t["symbolic"]["base"], "256");
    let (c, big_c, rho, beta) = (
        t["c"].as_f64().unwrap(),
        t["C"].as_f64().unwrap(),
        t["rho"].as_f64().unwrap(),
        t["beta"].as_f64().unwrap(),
    );
    let bound = (8.0 * big_c / (c * rho)).powf(beta);
    assert!((r["result"]["final_bound"].as_f64().unwrap() - bound).abs() < 1e-9 * bound);
    ok(
        d,
        &[
            "plot",
            "--report",
            "b.json",
            "--kind",
            "scatter",
            "--out",
            "scatter.csv",
        ],
    );
    let csv = fs::read_to_string(d.join("scatter.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("ell,r,mass_ratio"));
    assert_eq!(csv.lines().count(), 1 + 4 * 100);

    ok(
        d,
        &[
            "cubes", "cloud", "--kind", "grid", "--size", "4096", "--out", "grid.csv", "--report", "r.json",
        ],
    );
    ok(
        d,
        &[
            "verify",
            "theorem-b",
            "--cloud",
            "grid.csv",
            "--ell-max",
            "2",
            "--kmax",
            "5",
            "--report",
            "g.json",
        ],
    );
    let beta = json(d.join("g.json"))["result"]["tangent"]["beta"].as_f64().unwrap();
    assert!(beta > 0.5 && beta <= 1.0, "beta {beta}");

    fs::write(d.join("point.csv"), "0.25,0.5\n").unwrap();
    ok(
        d,
        &[
            "verify",
            "theorem-b",
            "--cloud",
            "point.csv",
            "--ell-max",
            "2",
            "--report",
            "p.json",
        ],
    );
    assert_eq!(json(d.join("p.json"))["passed"], true);
}

#[test]
fn pigeonhole_ratio_series() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    full_binary_tree(d);
    ok(
        d,
        &[
            "pigeonhole",
            "find",
            "--tree",
            "tree.json",
            "--s",
            "1",
            "--t",
            "3/2",
            "--ell",
            "2",
            "--k",
            "6",
            "--report",
            "f.json",
        ],
    );
    let r = json(d.join("f.json"));
    assert_eq!(r["result"]["n"], 0);
    assert_eq!(r["result"]["ratio_profile"][2], 0.25);
    ok(
        d,
        &["plot", "--report", "f.json", "--kind", "ratio", "--out", "ratio.csv"],
    );
    let csv = fs::read_to_string(d.join("ratio.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "j,min_ratio,threshold");
    // threshold rho^(t j) at j = 2: 2^-3
    assert_eq!(rows[3], "2,0.25,0.125");

    // the series is missing from other reports
    let out = microset(d, &["plot", "--report", "r.json", "--kind", "ratio", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("x.csv").exists());
}

#[test]
fn trees_round_trip_through_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    full_binary_tree(d);
    ok(
        d,
        &[
            "tree",
            "subtree",
            "--tree",
            "tree.json",
            "--code",
            "2,1",
            "--out",
            "sub.json",
            "--report",
            "s.json",
        ],
    );
    assert_eq!(
        json(d.join("s.json"))["result"]["level_sizes"],
        serde_json::json!([1, 2, 4, 8, 16, 32, 64])
    );
    ok(
        d,
        &[
            "moran",
            "microset",
            "--tree",
            "tree.json",
            "--code",
            "1,2",
            "--depth",
            "3",
            "--out",
            "m.json",
            "--report",
            "m.json.report",
        ],
    );
    let micro = json(d.join("m.json"));
    assert_eq!(micro["geometry"][0]["side"], 1.0);
    ok(
        d,
        &[
            "tree",
            "lowerdim",
            "--tree",
            "sub.json",
            "--min-gap",
            "2",
            "--report",
            "l.json",
        ],
    );
    assert!((json(d.join("l.json"))["result"]["estimate"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn failed_inequalities_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "cubes", "cloud", "--kind", "grid", "--size", "1000", "--out", "grid.csv", "--report", "r.json",
        ],
    );
    // sum about 1, bound 2/c = 1/2
    let out = microset(
        d,
        &[
            "pack", "estimate", "--cloud", "grid.csv", "--s", "1", "--delta", "1/100", "--c", "4", "--report", "p.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let r = json(d.join("p.json"));
    assert_eq!(r["passed"], false);
    assert_eq!(r["failures"].as_array().unwrap().len(), 1);
    ok(
        d,
        &[
            "pack", "estimate", "--cloud", "grid.csv", "--s", "1", "--delta", "1/100", "--c", "1/2", "--report",
            "p.json",
        ],
    );

    ok(
        d,
        &[
            "cubes",
            "build",
            "--cloud",
            "grid.csv",
            "--kmax",
            "3",
            "--out",
            "part.json",
            "--report",
            "r.json",
        ],
    );
    ok(
        d,
        &["cubes", "validate", "--partition", "part.json", "--report", "v.json"],
    );
    // move a point from one level-3 cube to another
    let mut part = json(d.join("part.json"));
    let level = part["levels"][3].as_array_mut().unwrap();
    let moved = level[0]["members"].as_array_mut().unwrap().pop().unwrap();
    level[5]["members"].as_array_mut().unwrap().push(moved);
    fs::write(d.join("bad.json"), part.to_string()).unwrap();
    let out = microset(
        d,
        &["cubes", "validate", "--partition", "bad.json", "--report", "v.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!json(d.join("v.json"))["failures"].as_array().unwrap().is_empty());
}

#[test]
fn frostman_measure_bounds_its_packings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // uniform on the dyadic points k/8: every ball of radius 2^-j >= 1/8 holds
    // at least 2^-j of the mass, so c = 1 at s = 1
    let atoms: Vec<Value> = (0..8)
        .map(|k| serde_json::json!({ "point": [k as f64 / 8.0], "weight": "1/8" }))
        .collect();
    fs::write(
        d.join("m.json"),
        serde_json::json!({ "d": 1, "atoms": atoms }).to_string(),
    )
    .unwrap();
    ok(
        d,
        &[
            "pack",
            "frostman",
            "--measure",
            "m.json",
            "--s",
            "1",
            "--c",
            "1",
            "--j-max",
            "3",
            "--report",
            "f.json",
        ],
    );
    let r = json(d.join("f.json"));
    assert_eq!(r["result"]["estimate"]["upper_bound"], 2.0);
    assert!(r["result"]["estimate"]["lower_sum"].as_f64().unwrap() <= 2.0);
    let out = microset(
        d,
        &[
            "pack",
            "frostman",
            "--measure",
            "m.json",
            "--s",
            "1",
            "--c",
            "2",
            "--j-max",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "0,1\n2\n").unwrap();
    let out = microset(
        d,
        &["pack", "estimate", "--cloud", "bad.csv", "--s", "1", "--delta", "0.1"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = microset(
        d,
        &["seq", "gen", "--gamma", "1/0", "--length", "10", "--out", "s.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = microset(d, &["seq", "check", "--in", "missing.json", "--m-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
