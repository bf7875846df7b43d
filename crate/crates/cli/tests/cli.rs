//! End-to-end behaviour of the `fluxkit` binary and library entry points.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn fluxkit(args: &[&str], root: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fluxkit"));
    cmd.args(args).env_remove(fluxkit_cli::OUTPUT_ROOT_ENV);
    if let Some(r) = root {
        cmd.env(fluxkit_cli::OUTPUT_ROOT_ENV, r);
    }
    cmd.output().unwrap()
}

fn error_line(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is one JSON line")
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn value(r: &Value, name: &str) -> f64 {
    r["parameters"][name]["value"].as_f64().unwrap()
}

#[test]
fn empty_config_names_first_missing_key() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "empty.toml", "");
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let e = error_line(&out);
    assert_eq!(e["error"], "schema");
    assert_eq!(e["path"], "task");
}

#[test]
fn missing_task_key_reports_full_path() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", "task = \"spectrum\"\n[parameters]\nenergies = { e_c = 1.0, e_j = 3.0 }\n");
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["path"], "parameters.energies.e_l");
}

#[test]
fn unknown_task_and_unknown_key_are_schema_errors() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "a.toml", "task = \"tomography\"\n");
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["path"], "task");

    let cfg = write(d.path(), "b.toml", "task = \"esr\"\n[parameters]\nfrequencies = [2.0]\ng = 2.0\n");
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["path"], "parameters.g");
}

#[test]
fn model_rejection_exits_2_without_output() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "task = \"spectrum\"\n[parameters]\nenergies = { e_c = -1.0, e_l = 1.0, e_j = 3.0 }\n",
    );
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "invalid-value");
    assert!(!d.path().join("spectrum").exists());
}

#[test]
fn spectrum_row_at_half_flux() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "s.toml",
        "task = \"spectrum\"\n[parameters]\nenergies = { e_c = 14.1, e_l = 0.454, e_j = 32.2 }\n",
    );
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.path().join("spectrum/spectrum.csv")).unwrap();
    assert!(csv.starts_with("phi_ext_phi0,f_ge_ghz,f_gf_ghz\n"));
    assert_eq!(csv.lines().count(), 202);
    let row = csv.lines().find(|l| l.starts_with("0.5,")).unwrap();
    let f_ge: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((f_ge / 2.365 - 1.0).abs() < 0.01, "{f_ge}");
}

#[test]
fn sweet_spot_only_echo_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let mut data = String::from("curve,flux_phi0,t_s,population\n");
    for c in 0..3 {
        for j in 1..=40 {
            let t = j as f64 * 0.5e-6;
            data += &format!("{c},0.5,{t},{}\n", 0.5 + 0.5 * (-6e4 * t).exp());
        }
    }
    write(d.path(), "echo.csv", &data);
    let cfg = write(
        d.path(),
        "e.toml",
        "task = \"echo-fit\"\n[parameters]\ndata = \"echo.csv\"\nenergies = { e_c = 14.1, e_l = 0.454, e_j = 32.2 }\n",
    );
    let out = fluxkit(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "non-identifiable");
}

#[test]
fn output_root_override() {
    let d = tempfile::tempdir().unwrap();
    let root = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "e.toml", "task = \"esr\"\n[output]\ndir = \"x\"\n[parameters]\nfrequencies = [2.365]\n");
    let out = fluxkit(&["run", cfg.to_str().unwrap()], Some(root.path()));
    assert!(out.status.success());
    assert!(root.path().join("x/esr.csv").exists());
    assert!(!d.path().join("x").exists());
}

#[test]
fn gen_rejects_tasks_without_generator() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "g.toml", "task = \"spectrum\"\n[synthetic]\n");
    let out = fluxkit(&["gen", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}

fn spin_gen(seed: u64, dir: &str, noise: f64) -> String {
    format!(
        "task = \"spin-freeze-fit\"\nseed = {seed}\n[output]\ndir = \"{dir}\"\n\
         [synthetic]\na0 = 9e-12\nt_s = 0.085\nfloor = 1e-12\nnoise = {noise}\n"
    )
}

#[test]
fn seeds_change_noise_but_not_truth() {
    let d = tempfile::tempdir().unwrap();
    let a = write(d.path(), "a.toml", &spin_gen(1, "a", 0.02));
    let b = write(d.path(), "b.toml", &spin_gen(2, "b", 0.02));
    fluxkit_cli::generate(&a).unwrap();
    fluxkit_cli::generate(&b).unwrap();
    let read = |dir: &str, f: &str| fs::read(d.path().join(dir).join(f)).unwrap();
    assert_ne!(read("a", "spin_freeze.csv"), read("b", "spin_freeze.csv"));
    assert_eq!(read("a", "truth.json"), read("b", "truth.json"));
}

#[test]
fn noiseless_refit_reproduces_truth() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "g.toml", &spin_gen(5, "sf", 0.0));
    let g = fluxkit_cli::generate(&cfg).unwrap();
    let run = fluxkit_cli::run(&g.output_dir.join(fluxkit_cli::FIT_CONFIG_FILE)).unwrap();
    let r = report(&run.output_dir);
    assert!((value(&r, "t_s") / 0.085 - 1.0).abs() < 1e-6, "{r}");
    assert!((value(&r, "a0") / 9e-12 - 1.0).abs() < 1e-6, "{r}");
    assert!((value(&r, "floor") / 1e-12 - 1.0).abs() < 1e-5, "{r}");

    let cfg = write(
        d.path(),
        "c.toml",
        "task = \"field-sweep\"\n[output]\ndir = \"cf\"\n[synthetic]\nmode = \"gap\"\ncritical_field = 6.8\n",
    );
    let g = fluxkit_cli::generate(&cfg).unwrap();
    let run = fluxkit_cli::run(&g.output_dir.join(fluxkit_cli::FIT_CONFIG_FILE)).unwrap();
    assert!((value(&report(&run.output_dir), "critical_field") / 6.8 - 1.0).abs() < 1e-8);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let body = "task = \"telegraph\"\nseed = 11\n[parameters]\nprocess = { gamma_up = 1e3, gamma_down = 3e3, amplitude = 1.0, samples = 100000, segments = 16 }\n";
    let mut outputs = Vec::new();
    for dir in ["one", "two"] {
        let cfg = write(d.path(), &format!("{dir}.toml"), &body.replace("[parameters]", &format!("[output]\ndir = \"{dir}\"\n[parameters]")));
        let run = fluxkit_cli::run(&cfg).unwrap();
        outputs.push((fs::read(run.output_dir.join("telegraph_psd.csv")).unwrap(), run.report));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1.parameters, outputs[1].1.parameters);
}
