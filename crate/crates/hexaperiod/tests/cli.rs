use std::path::Path;
use std::process::{Command, Output};

use hexaperiod::render::svg_lozenge_counts;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexaperiod")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexaperiod"))
        .args(args)
        .env("HEXAPERIOD_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn density_at_the_centre_is_r_plus() {
    let v = json_ok(&["density", "--alpha", "0.4", "--xi", "0", "--eta", "0"]);
    let a: f64 = 0.4;
    let c = (a / (1.0 - a + a * a)).sqrt();
    let (re, im) = (c * (1.0 + a) / 2.0, c * 3f64.sqrt() * (1.0 - a) / 2.0);
    assert_eq!(v["schema"], "hexaperiod/1");
    assert_eq!(v["liquid"], true);
    assert!((v["s"]["re"].as_f64().unwrap() - re).abs() < 1e-10);
    assert!((v["s"]["im"].as_f64().unwrap() - im).abs() < 1e-10);
    assert!(v["sum_rule_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn density_in_a_corner_is_frozen() {
    let v = json_ok(&["density", "--alpha", "0.3", "--xi", "0.97", "--eta", "0"]);
    assert_eq!(v["liquid"], false);
    assert!(v["s"].is_null());
    let f = v["frozen_family"].as_u64().unwrap();
    assert!((1..=6).contains(&f));
    for k in ["P1", "P2", "P3"] {
        for x in v["density"][k].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()) {
            let x = x.as_f64().unwrap();
            assert!(x == 0.0 || x == 1.0);
        }
    }
}

#[test]
fn enumerate_small_hexagon() {
    let v = json_ok(&["enumerate", "--n", "2", "--alpha", "1"]);
    assert_eq!(v["num_tilings_at_alpha1"], 20);
    assert_eq!(v["min_exponent"], 1);
    assert_eq!(v["metadata"]["command"], "enumerate");
    assert!(v["metadata"]["version"].is_string());
    let v = json_ok(&["enumerate", "--n", "2", "--alpha", "1/3", "--poly"]);
    assert!(v["Z_at_alpha_exact"].is_string());
    assert_eq!(v["density"].as_array().unwrap().len(), 4);
}

#[test]
fn big_counts_are_strings() {
    let v = json_ok(&["enumerate", "--n", "8", "--alpha", "1", "--x", "0", "--y", "0"]);
    assert_eq!(v["num_tilings_at_alpha1"], "5055160684040254910720");
}

#[test]
fn exit_codes() {
    // usage
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["density", "--alpha", "0.4"]), 2);
    assert_eq!(code(&["heatmap", "--alpha", "0.4", "--type", "4", "--entry", "00"]), 2);
    // domain
    assert_eq!(code(&["density", "--alpha", "1.5", "--xi", "0", "--eta", "0"]), 3);
    assert_eq!(code(&["density", "--alpha", "0", "--xi", "0", "--eta", "0"]), 3);
    assert_eq!(code(&["enumerate", "--n", "3", "--alpha", "0.5"]), 3);
    assert_eq!(code(&["sample", "--n", "4", "--alpha=-1"]), 3);
    assert_eq!(code(&["sample", "--n", "4", "--alpha", "abc"]), 2);
    // resource
    assert_eq!(code(&["sample", "--n", "100000", "--alpha", "0.5"]), 4);
    assert_eq!(code(&["heatmap", "--alpha", "0.4", "--grid", "100000", "--type", "1", "--entry", "00"]), 4);
    assert_eq!(code(&["kernel", "--N", "2", "--alpha", "0.5", "--x", "1", "--y", "1", "--nodes", "10000000"]), 4);
    // failure messages go to stderr and name the problem
    let o = run(&["density", "--alpha", "1.5", "--xi", "0", "--eta", "0"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_tiling_json_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    std::fs::write(&p, "{\"n\": 2, \"heights\": [[0, 5]]}").unwrap();
    assert_eq!(code(&["render", "--input", p.to_str().unwrap()]), 3);
    std::fs::write(&p, "not json").unwrap();
    assert_eq!(code(&["render", "--input", p.to_str().unwrap()]), 3);
    assert_eq!(code(&["render", "--input", dir.path().join("missing.json").to_str().unwrap()]), 1);
}

#[test]
fn outputs_are_reproducible_without_timing() {
    let args = ["--no-timing", "sample", "--n", "6", "--alpha", "0.3", "--sweeps", "200", "--seed", "11", "--chains", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["metadata"]["elapsed_seconds"].is_null());
    assert_eq!(v["metadata"]["rng"]["seed"], 11);
    assert_eq!(v["samples"], 600);
    let timed = json_ok(&["sample", "--n", "4", "--alpha", "0.3", "--sweeps", "10"]);
    assert!(timed["metadata"]["elapsed_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn thread_count_does_not_change_output() {
    let sample = ["--no-timing", "sample", "--n", "6", "--alpha", "0.6", "--sweeps", "100", "--seed", "3", "--chains", "5"];
    let heat = ["--no-timing", "heatmap", "--alpha", "0.4", "--grid", "40", "--type", "2", "--entry", "01"];
    for args in [&sample[..], &heat[..]] {
        let one = run(&[&["--threads", "1"], args].concat());
        let four = run(&[&["--threads", "4"], args].concat());
        let env = run_env(args, "3");
        assert_eq!(one.status.code(), Some(0));
        assert_eq!(one.stdout, four.stdout);
        assert_eq!(one.stdout, env.stdout);
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn file_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    let s = |p: &Path| p.to_str().unwrap().to_owned();

    let out = d("sample.json");
    let args = [
        "sample", "--n", "4", "--alpha", "0.5", "--sweeps", "20", "--svg", &s(&d("t.svg")), "--json", &s(&d("t.json")),
        "--out", &s(&out),
    ];
    assert_eq!(code(&args), 0);
    let v: Value = serde_json::from_slice(&read(&out)).unwrap();
    let counts: Vec<usize> = serde_json::from_value(v["final_state"]["lozenge_counts"].clone()).unwrap();
    let svg = String::from_utf8(read(&d("t.svg"))).unwrap();
    assert_eq!(svg_lozenge_counts(&svg).unwrap().to_vec(), counts);

    // the saved tiling renders to the same picture
    assert_eq!(code(&["render", "--input", &s(&d("t.json")), "--svg", &s(&d("r.svg"))]), 0);
    assert_eq!(read(&d("r.svg")), svg.as_bytes());

    let o = run(&["render", "--t-max", "2"]);
    assert_eq!(o.stdout, read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/tmax_n2.svg"))));

    let args = ["arctic", "--alpha", "0.4", "--samples", "240", "--csv", &s(&d("a.csv")), "--svg", &s(&d("a.svg"))];
    let v = json_ok(&args);
    assert_eq!(v["tangency_points"].as_array().unwrap().len(), 12);
    assert_eq!(v["cusps"].as_array().unwrap().len(), 6);
    let csv = String::from_utf8(read(&d("a.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("s,branch,xi,eta"));
    assert_eq!(csv.lines().count(), 1 + v["points"].as_u64().unwrap() as usize);

    let args = [
        "heatmap", "--alpha", "0.4", "--grid", "30", "--type", "1", "--entry", "00", "--ppm", &s(&d("h.ppm")), "--csv",
        &s(&d("h.csv")), "--overlay", &s(&d("h.svg")),
    ];
    let v = json_ok(&args);
    assert_eq!(v["clamped"], 0);
    let ppm = read(&d("h.ppm"));
    assert!(ppm.starts_with(b"P6\n30 30\n255\n"));
    assert_eq!(ppm.len(), 13 + 3 * 900);
    let csv = String::from_utf8(read(&d("h.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("xi,eta,value"));
    assert_eq!(csv.lines().count(), 901);
    assert!(String::from_utf8(read(&d("h.svg"))).unwrap().contains("id=\"underlay\""));
}

#[test]
fn kernel_commands() {
    let v = json_ok(&["kernel-density", "--N", "1", "--alpha", "1/2", "--x", "1", "--y", "0", "--nodes", "128"]);
    assert!(v["metadata"]["residuals"]["sum_rule"].as_f64().unwrap() < 1e-10);
    let exact = json_ok(&["enumerate", "--n", "2", "--alpha", "1/2", "--x", "1", "--y", "0"]);
    for k in ["P1", "P2", "P3"] {
        for i in 0..2 {
            for j in 0..2 {
                let a = v["density"][k][i][j].as_f64().unwrap();
                let b = exact["density"][0][k][i][j].as_f64().unwrap();
                assert!((a - b).abs() < 1e-8, "{k}[{i}][{j}]: {a} vs {b}");
            }
        }
    }
    let v = json_ok(&["kernel", "--N", "1", "--alpha", "0.5", "--x", "1", "--y", "1", "--nodes", "128"]);
    assert_eq!(v["matrix"].as_array().unwrap().len(), 2);
    assert!(v["metadata"]["residuals"]["max_imag"].as_f64().unwrap() < 1e-8);
}

#[test]
fn selftest_passes() {
    let v = json_ok(&["--no-timing", "selftest"]);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true && c.get("seconds").is_none()));
}
