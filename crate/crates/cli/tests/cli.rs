// End-to-end behavior of the `arrival` binary: config diagnostics, exit
// codes, artifact layout, determinism knobs. The heavyweight physics
// gates live in the acceptance suite.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn arrival(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrival"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, body: &str) -> String {
    let p = dir.join("job.cfg");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn presets_lists_the_embedded_configs() {
    let out = arrival(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["gaussian-right", "backflow", "walled", "screen-2d"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn config_errors_name_the_key_and_line() {
    let dir = tmp("cli-errors");
    let cfg = write_cfg(
        &dir,
        "engine.kind = ideal-psi\ngrid.length = 20\ngrid.nodes = abc\ninitial.kind = gaussian\ninitial.x0 = -10\ninitial.s = 1\ninitial.k0 = 2\n",
    );
    let out = arrival(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("grid.nodes") && err.contains("line 3"), "{err}");

    let cfg = write_cfg(
        &dir,
        "engine.kind = robin\ngrid.length = 20\ngrid.nodes = 256\ninitial.kind = gaussian\ninitial.x0 = -10\ninitial.s = 1\ninitial.k0 = 2\nrobin.beta_im = -1\n",
    );
    let out = arrival(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("robin.beta_im") && err.contains(">= 0"), "{err}");

    let out = arrival(&["run", "--config", "not-a-preset", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_without_an_engine_list_is_a_usage_error() {
    let dir = tmp("cli-compare-usage");
    let out = arrival(&["compare", "--config", "walled", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("compare.engines"));
}

#[test]
fn strict_mode_turns_validity_flags_into_exit_four() {
    let dir = tmp("cli-strict");
    // the sealed box never drains, so its record is flagged truncated
    let out = arrival(&["run", "--config", "walled", "--out", dir.to_str().unwrap(), "--quiet", "--strict"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_of(&out).contains("truncated"));
    // artifacts are still written before the verdict
    assert!(dir.join("record.csv").is_file() && dir.join("manifest.json").is_file());

    let out = arrival(&["run", "--config", "walled", "--out", dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "without --strict the same run passes");
}

#[test]
fn zero_horizon_run_still_writes_artifacts() {
    let dir = tmp("cli-zero");
    let cfg = write_cfg(
        &dir,
        "engine.kind = ideal-psi\nengine.steps = 0\ngrid.length = 20\ngrid.nodes = 256\ngrid.extension = 10\ninitial.kind = gaussian\ninitial.x0 = -10\ninitial.s = 1\ninitial.k0 = 2\n",
    );
    let out = arrival(&["run", "--config", &cfg, "--out", dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let record = fs::read_to_string(dir.join("record.csv")).unwrap();
    let data_rows: Vec<&str> =
        record.lines().filter(|l| !l.starts_with('#') && !l.starts_with('t')).collect();
    assert_eq!(data_rows.len(), 1, "only the initial snapshot:\n{record}");
    let arrival_txt = fs::read_to_string(dir.join("arrival.csv")).unwrap();
    assert!(arrival_txt.lines().last().unwrap().starts_with("never,,1"), "{arrival_txt}");
}

#[test]
fn manifest_names_every_artifact_with_the_config_hash() {
    let dir = tmp("cli-manifest");
    let out = arrival(&["run", "--config", "walled", "--out", dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for name in outputs {
        let text = fs::read_to_string(dir.join(name.as_str().unwrap())).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("# config {hash}"), "{name} lacks the hash line");
    }
    // the mirrored config includes resolved defaults
    assert_eq!(manifest["config"]["engine.conservation_tol"].as_str().unwrap(), "0.0000000001");
    assert_eq!(manifest["config"]["constants.hbar"].as_str().unwrap(), "1");
}

#[test]
fn parallel_jobs_do_not_change_results() {
    let base = "engine.kind = reference\nengine.dt = 0.01\nengine.steps = 100\ngrid.length = 20\ngrid.nodes = 512\ninitial.kind = gaussian\ninitial.x0 = -10\ninitial.s = 1\ninitial.k0 = 1\nconvergence.scenario = reference-density\nconvergence.horizon = 1\nconvergence.rungs = 128:0.02,256:0.01\n";
    let d1 = tmp("cli-jobs-1");
    let d2 = tmp("cli-jobs-2");
    let cfg1 = write_cfg(&d1, base);
    let out = arrival(&["convergence", "--config", &cfg1, "--out", d1.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let cfg2 = write_cfg(&d2, base);
    let out = arrival(&["convergence", "--config", &cfg2, "--out", d2.to_str().unwrap(), "--quiet", "--jobs", "2"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    for f in ["convergence.csv", "manifest.json", "plot.gnuplot"] {
        assert_eq!(
            fs::read(d1.join(f)).unwrap(),
            fs::read(d2.join(f)).unwrap(),
            "{f} differs between --jobs 1 and --jobs 2"
        );
    }
}

#[test]
fn robin_and_hydro_runs_write_their_artifacts() {
    let dir = tmp("cli-robin");
    let cfg = write_cfg(
        &dir,
        "engine.kind = robin\nengine.dt = 0.001\nengine.steps = 500\ngrid.length = 20\ngrid.nodes = 256\ninitial.kind = gaussian\ninitial.x0 = -10\ninitial.s = 1\ninitial.k0 = 2\nrobin.beta_im = 1\n",
    );
    let out = arrival(&["run", "--config", &cfg, "--out", dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    // the robin face is lossy but not an arrival detector
    assert!(dir.join("record.csv").is_file());
    assert!(!dir.join("arrival.csv").exists());

    let dir = tmp("cli-hydro");
    let cfg = write_cfg(
        &dir,
        "engine.kind = ideal-hydro\nengine.dt = 0.0002\nengine.steps = 1000\ngrid.length = 20\ngrid.nodes = 512\ninitial.kind = gaussian\ninitial.x0 = -10\ninitial.s = 1.5\ninitial.k0 = 1\ninitial.t0 = -2\n",
    );
    let out = arrival(&["run", "--config", &cfg, "--out", dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(dir.join("arrival.csv").is_file());
}
