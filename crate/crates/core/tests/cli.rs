use std::path::Path;
use std::process::Command;

use pencil_restore::cli::{PassivityReport, RestoreReport, StabilityReport};
use pencil_restore::experiments::{run_experiment, ExperimentConfig, ExperimentSidecar, TableKind};
use pencil_restore::io::{read_system, write_json, SystemFile};
use pencil_restore::linalg::{from_real_rows, identity, ComplexMatrix};
use pencil_restore::stability::{destabilizing_perturbation, stability_radius, StabilityOptions};
use pencil_restore::systems::{validate_ph, DescriptorSystem};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pencil-restore"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn scalar(x: f64) -> ComplexMatrix {
    from_real_rows(1, 1, &[x]).unwrap()
}

fn generate(dir: &Path, name: &str, n: usize, m: usize, seed: u64) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let (code, _, err) = run(&[
        "generate",
        "--n",
        &n.to_string(),
        "--m",
        &m.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        &p,
    ]);
    assert_eq!(code, 0, "{err}");
    p
}

fn scalar_file(dir: &Path, alpha: f64) -> String {
    let sys = DescriptorSystem::new(scalar(1.0), scalar(-alpha), scalar(1.0), scalar(1.0), scalar(1.0)).unwrap();
    let path = dir.join(format!("scalar_{alpha}.json"));
    write_json(&path, &SystemFile::from_descriptor(&sys, None)).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_is_deterministic_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let a = generate(dir.path(), "a.json", 4, 2, 7);
    let b = generate(dir.path(), "b.json", 4, 2, 7);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let file = read_system(Path::new(&a)).unwrap();
    let ph = file.ph().unwrap();
    assert!(validate_ph(&ph, 1e-10).passed);
    assert_eq!((file.n, file.m), (4, 2));
    let reparsed: SystemFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
    assert_eq!(reparsed, file);
    let c = generate(dir.path(), "c.json", 4, 2, 8);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn restore_with_zero_perturbation_gives_identity() {
    let dir = TempDir::new().unwrap();
    let sys = generate(dir.path(), "s.json", 3, 2, 1);
    let (code, out, err) = run(&["restore", &sys, "--delta", "0", "--json"]);
    assert_eq!(code, 0, "{err}");
    let report: RestoreReport = serde_json::from_str(&out).unwrap();
    let z = ComplexMatrix::try_from(&report.z).unwrap();
    assert_eq!(z, identity(8));
    assert_eq!(report.residual_history, vec![0.0]);
}

#[test]
fn restore_converges_to_rounding_level() {
    let dir = TempDir::new().unwrap();
    let sys = generate(dir.path(), "s.json", 4, 2, 3);
    let out_path = dir.path().join("report.json");
    let (code, summary, err) = run(&[
        "restore",
        &sys,
        "--delta",
        "1e-6",
        "--seed",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(summary.contains("iterations"));
    let report: RestoreReport = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(*report.residual_history.last().unwrap() <= 1e-15 * report.scale);
    assert!(report.backward_errors_descriptor.norm < 1e-4);

    // the same run through a perturbation file gives the same report
    let pert = dir.path().join("p.json");
    assert_eq!(
        run(&[
            "perturb",
            &sys,
            "--delta",
            "1e-6",
            "--seed",
            "5",
            "--out",
            pert.to_str().unwrap()
        ])
        .0,
        0
    );
    let (code, out, _) = run(&["restore", &sys, "--perturbation", pert.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    let again: RestoreReport = serde_json::from_str(&out).unwrap();
    assert_eq!(again, report);
}

#[test]
fn restore_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let sys = generate(dir.path(), "s.json", 4, 2, 7);
    let (code, _, err) = run(&["restore", &sys, "--delta", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
}

#[test]
fn stability_radius_of_scalar_systems() {
    let dir = TempDir::new().unwrap();
    let (code, out, _) = run(&["stability-radius", &scalar_file(dir.path(), 1.0), "--json"]);
    assert_eq!(code, 0);
    let r: StabilityReport = serde_json::from_str(&out).unwrap();
    assert!((r.rho - 1.0).abs() < 1e-6);

    let (code, out, _) = run(&["stability-radius", &scalar_file(dir.path(), 0.5), "--json"]);
    assert_eq!(code, 0);
    let r: StabilityReport = serde_json::from_str(&out).unwrap();
    assert!((r.rho - 0.5).abs() < 1e-6);
    assert_eq!(r.omega_star, Some(0.0));
}

#[test]
fn check_passivity_verdicts() {
    let dir = TempDir::new().unwrap();
    let sys_path = generate(dir.path(), "s.json", 4, 2, 11);
    let (code, out, _) = run(&["check-passivity", &sys_path, "--json"]);
    assert_eq!(code, 0, "{out}");
    let report: PassivityReport = serde_json::from_str(&out).unwrap();
    assert!(report.passed && report.regular && report.index_at_most_one);
    assert_eq!(report.infinite_eigenvalues, 2);

    // destabilized system
    let sys = read_system(Path::new(&sys_path)).unwrap().descriptor().unwrap();
    let rho = stability_radius(&sys.e, &sys.a, &StabilityOptions::default()).unwrap();
    let (de, da) = destabilizing_perturbation(&rho).unwrap();
    let bad = DescriptorSystem::new(&sys.e + de, &sys.a + da, sys.b.clone(), sys.c.clone(), sys.d.clone()).unwrap();
    let bad_path = dir.path().join("bad.json");
    write_json(&bad_path, &SystemFile::from_descriptor(&bad, None)).unwrap();
    let (code, out, _) = run(&["check-passivity", bad_path.to_str().unwrap(), "--json"]);
    assert_eq!(code, 2);
    let report: PassivityReport = serde_json::from_str(&out).unwrap();
    assert!(!report.state_imaginary_eigenvalues.is_empty());

    // D = 0 and B = C = 0 make the even pencil singular
    let z = ComplexMatrix::zeros(2, 1);
    let degenerate = DescriptorSystem::new(
        identity(2),
        -identity(2),
        z.clone(),
        z.transpose(),
        ComplexMatrix::zeros(1, 1),
    )
    .unwrap();
    let deg_path = dir.path().join("degenerate.json");
    write_json(&deg_path, &SystemFile::from_descriptor(&degenerate, None)).unwrap();
    let (code, out, _) = run(&["check-passivity", deg_path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.contains("singular"), "{out}");
}

#[test]
fn usage_and_parse_errors_exit_with_one() {
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["restore"]).0, 1);
    assert_eq!(run(&["restore", "/nonexistent/system.json"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
    let dir = TempDir::new().unwrap();
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"rows\": 1").unwrap();
    assert_eq!(run(&["stability-radius", junk.to_str().unwrap()]).0, 1);
}

#[test]
fn experiment_writes_csv_and_sidecar_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 4, "m": 2, "seeds": [1, 2], "perturbation_levels": [1e-2, 1e-5]}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let csv = dir.path().join(format!("t{threads}.csv"));
        let status = bin()
            .args([
                "experiment",
                "table2",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                csv.to_str().unwrap(),
            ])
            .env("PENCIL_RESTORE_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), TableKind::Table2.header().join(","));
        assert_eq!(text.lines().count(), 5);
        let sidecar: ExperimentSidecar =
            serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
        assert_eq!(sidecar.rows.len(), 4);
        outputs.push((text, sidecar.rows));
    }
    assert_eq!(outputs[0], outputs[1]);

    let bad = bin()
        .args(["experiment", "table1", "--config", cfg.to_str().unwrap()])
        .env("PENCIL_RESTORE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn table1_residuals_decrease_to_rounding_level() {
    let rows = run_experiment(TableKind::Table1, &ExperimentConfig::default()).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert_eq!(r.status, "ok");
        let h = &r.residual_history;
        let scale = r.scale.unwrap();
        for w in h.windows(2) {
            assert!(w[1] < w[0] || w[0] <= 1e-15 * scale, "{h:?}");
        }
        assert!(*h.last().unwrap() <= 1e-15 * scale, "{h:?}");
        if r.delta <= 1e-2 {
            assert!(r.iterations.unwrap() <= 4);
        }
    }
}

#[test]
fn table2_condition_ratios_are_moderate() {
    let rows = run_experiment(TableKind::Table2, &ExperimentConfig::default()).unwrap();
    for r in &rows {
        let q = r.ratio_condition.unwrap();
        assert!(q > 0.03 && q < 3.0, "{q}");
    }
}

#[test]
fn table3_single_step_suffices() {
    let rows = run_experiment(TableKind::Table3, &ExperimentConfig::default()).unwrap();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let h = &r.residual_history;
        assert_eq!(r.iterations, Some(1));
        assert!(h[1] <= 100.0 * h[0] * h[0] / r.rho.unwrap());
    }
}
