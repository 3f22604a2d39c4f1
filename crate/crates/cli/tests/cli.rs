use std::path::Path;
use std::process::{Command, Output};

use pdpml::diagnostics::{reflection_error, solve_reference};
use pdpml::integrator::{InitialCondition, OutputConfig, Simulation, SimulationConfig};
use pdpml::KernelSpec;

const SMALL: &str = r#"
[kernel]
type = "heaviside"
delta = 0.25

[grid]
h = 0.125

[time]
t_final = 0.5

[output]
snapshot_times = [0.25, 0.5]
snapshot_every = 16
"#;

fn pdpml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdpml")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, cfg: &str, sub: &[&str], out: &str) -> Output {
    let out = dir.join(out);
    let mut args: Vec<&str> = sub.to_vec();
    let out_s = out.to_str().unwrap().to_string();
    args.extend(["--config", cfg, "--out", &out_s]);
    pdpml(&args)
}

fn csv_column_max(path: &Path, col: usize) -> f64 {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn run_writes_listed_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for out in ["a", "b"] {
        let o = run_in(dir.path(), &cfg, &["run"], out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    let outputs: Vec<String> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    for name in ["u_000000.txt", "u_000064.txt", "u_000128.txt", "probe_0.csv", "config.resolved.toml"] {
        assert!(outputs.contains(&name.to_string()), "{name} missing from {outputs:?}");
    }
    for name in &outputs {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    assert_eq!(manifest["config"]["pml"]["sigma0"], 16.0);
}

#[test]
fn invalid_config_fails_with_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[pml]\nsigma0 = -1\n"));
    let o = run_in(dir.path(), &cfg, &["run"], "out");
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pml.sigma0") && err.contains("line 17"), "{err}");
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = pdpml(&["run", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn compare_matches_reflection_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for (sub, out) in [("run", "run"), ("reference", "ref")] {
        let o = run_in(dir.path(), &cfg, &[sub, "--binary"], out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(dir.path().join("run/u_000064.bin").exists());
    assert!(dir.path().join("run/u_000064.hdr").exists());
    let cmp = dir.path().join("cmp");
    let o = pdpml(&[
        "compare",
        "--run-dir",
        dir.path().join("run").to_str().unwrap(),
        "--ref-dir",
        dir.path().join("ref").to_str().unwrap(),
        "--out",
        cmp.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_csv = csv_column_max(&cmp.join("reflection.csv"), 1);

    let mut sim = SimulationConfig::standard(KernelSpec::heaviside(0.25), 0.125, 1.0, 4, 16.0, 0.5).unwrap();
    sim.initial = InitialCondition::standard_pulse();
    sim.output = OutputConfig {
        snapshot_times: vec![0.25, 0.5],
        snapshot_every: Some(16),
        probes: vec![],
    };
    let run = Simulation::new(sim.clone()).unwrap().run().unwrap();
    let reference = solve_reference(&sim, 4).unwrap();
    let direct = reflection_error(&run.snapshots, &reference, &sim.grid.physical_support()).unwrap();
    assert!(direct > 0.0);
    assert_eq!(from_csv, direct);
}

#[test]
fn verify_without_damping_is_round_off() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[pml]\nsigma0 = 0.0\n"));
    let o = run_in(dir.path(), &cfg, &["verify"], "v");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("v/verify.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let (name, v) = line.split_once(',').unwrap();
        let v: f64 = v.parse().unwrap();
        assert!(v < 1e-12, "{name} = {v}");
        rows += 1;
    }
    assert_eq!(rows, 16);
}

#[test]
fn stencil_and_bench_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run_in(dir.path(), &cfg, &["stencil"], "s");
    assert!(o.status.success());
    let st = std::fs::read_to_string(dir.path().join("s/stencil.csv")).unwrap();
    assert_eq!(st.lines().count(), 1 + 25);
    let o = run_in(dir.path(), &cfg, &["bench", "--steps", "5"], "b");
    assert!(o.status.success());
    assert!(std::fs::read_to_string(dir.path().join("b/bench.csv")).unwrap().contains("steps,"));
}

#[test]
fn strict_cfl_flag_rejects_large_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n").replace("t_final = 0.5", "t_final = 0.5\ndt = 0.5"));
    let o = run_in(dir.path(), &cfg, &["run", "--strict-cfl"], "o");
    assert!(!o.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"error\""));
}
