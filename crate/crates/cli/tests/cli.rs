use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gma_core::grid::band_limited_random;
use gma_core::io::{parse_csv_slice, read_scalar_field, write_scalar_field};
use gma_core::{GridSpec, ScalarField};
use serde_json::Value;

fn gma(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gma")).args(args).output().expect("spawn gma");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String) {
    let mut all = vec!["--output", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    gma(&all)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn out_dir(root: &tempfile::TempDir, name: &str) -> PathBuf {
    root.path().join(name)
}

#[test]
fn zero_forcing_gives_zero_potential() {
    let root = tempfile::tempdir().unwrap();
    let dir = out_dir(&root, "zero");
    let (code, err) = run_in(&dir, &["solve", "--grid", "4,4,4,4,4,4"]);
    assert_eq!(code, 0, "{err}");
    let phi = read_scalar_field(&dir.join("phi.bin")).unwrap();
    assert_eq!(phi.sup_norm(), 0.0);
    assert_eq!(report(&dir)["status"], "converged");
    for f in ["phi_x1_y1.csv", "phi_x1_x2.csv", "manifest.json", "config.resolved.toml", "phi.bin.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn separable_problem_reports_oracle_agreement() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("sep.toml");
    fs::write(
        &cfg,
        r#"
[grid]
sizes = [16, 2, 2, 8, 2, 2]

[problem]
a = { re = [[0.2, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, 0.2]] }

[problem.forcing]
source = "separable"
amplitude = 0.3
"#,
    )
    .unwrap();
    for cmd in ["solve", "oracle"] {
        let dir = out_dir(&root, cmd);
        let (code, err) = run_in(&dir, &[cmd, "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let r = report(&dir);
        assert!(r["oracle"]["sup_difference"].as_f64().unwrap() <= 1e-8);
        assert_eq!(r["oracle"]["passed"], true);
        assert!(dir.join("oracle.bin").exists());
    }
}

#[test]
fn oracle_rejects_non_separable_forcing() {
    let root = tempfile::tempdir().unwrap();
    let dir = out_dir(&root, "o");
    let (code, _) = run_in(
        &dir,
        &[
            "oracle",
            "--grid",
            "4,4,4,4",
            "--override",
            "problem.forcing.source=band-limited",
            "--override",
            "problem.forcing.max_mode=1",
        ],
    );
    assert_eq!(code, 4);
}

#[test]
fn missing_positivity_is_a_hypothesis_failure() {
    let root = tempfile::tempdir().unwrap();
    let dir = out_dir(&root, "hyp");
    let zero_a = "problem.a={ re = [[0.0,0.0,0.0],[0.0,0.0,0.0],[0.0,0.0,0.0]] }";
    let (code, err) = run_in(
        &dir,
        &["solve", "--grid", "2,2,2,2,2,2", "--override", zero_a, "--override", "problem.epsilon_tilde=0.1"],
    );
    assert_eq!(code, 2, "{err}");
    let r = report(&dir);
    assert_eq!(r["status"], "hypothesis-failure");
    assert!(r["hypotheses"]["strong_positivity_margin"].as_f64().unwrap() < 0.0);
    assert!(!dir.join("phi.bin").exists());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn path_failure_reports_last_good_parameter() {
    let root = tempfile::tempdir().unwrap();
    let dir = out_dir(&root, "path");
    let (code, err) = run_in(
        &dir,
        &[
            "solve",
            "--grid",
            "8,8,8,8",
            "--seed",
            "3",
            "--override",
            "problem.forcing.source=band-limited",
            "--override",
            "problem.forcing.amplitude=0.5",
            "--override",
            "settings.dt_initial=0.5",
            "--override",
            "settings.dt_min=0.2",
            "--override",
            "settings.newton.max_iters=1",
        ],
    );
    assert_eq!(code, 3, "{err}");
    let r = report(&dir);
    assert_eq!(r["status"], "path-failure");
    assert!(r["failure"]["last_t"].as_f64().unwrap() < 1.0);
    assert!(dir.join("phi_last_good.bin").exists());
}

#[test]
fn lemma_suites_and_fault_injection() {
    let root = tempfile::tempdir().unwrap();
    let ok = out_dir(&root, "ok");
    let (code, err) = run_in(&ok, &["verify-lemmas", "--seed", "11"]);
    assert_eq!(code, 0, "{err}");
    let r = report(&ok);
    assert_eq!(r["suites"][0]["samples"], 100_000);
    assert!(r["suites"].as_array().unwrap().iter().all(|s| s["counterexamples"] == 0));

    let empty = out_dir(&root, "empty");
    let (code, err) = run_in(
        &empty,
        &["verify-lemmas", "--override", "lemmas.useful=0", "--override", "lemmas.ek=0", "--override", "lemmas.rem1=0"],
    );
    assert_eq!(code, 0);
    assert!(err.contains("vacuous"));
    assert_eq!(report(&empty)["warnings"].as_array().unwrap().len(), 3);

    let bad = out_dir(&root, "bad");
    let (code, _) = run_in(
        &bad,
        &["verify-lemmas", "--override", "lemmas.useful=2000", "--override", "lemmas.corrupt_adjugate=true"],
    );
    assert_eq!(code, 1);
    assert!(report(&bad)["suites"][0]["counterexamples"].as_u64().unwrap() > 0);
}

#[test]
fn chern_weil_pipeline() {
    let root = tempfile::tempdir().unwrap();
    let trivial = out_dir(&root, "eps0");
    let (code, err) = run_in(
        &trivial,
        &[
            "chern-weil",
            "--grid",
            "4,4,4,4,4,4",
            "--override",
            "chern_weil.epsilon=0.0",
            "--override",
            "chern_weil.max_mode=1",
        ],
    );
    assert_eq!(code, 0, "{err}");
    assert!(read_scalar_field(&trivial.join("phi.bin")).unwrap().sup_norm() <= 1e-10);

    let perturbed = out_dir(&root, "eps");
    let (code, err) =
        run_in(&perturbed, &["chern-weil", "--grid", "4,4,4,4,4,4", "--override", "chern_weil.max_mode=1"]);
    assert_eq!(code, 0, "{err}");
    let r = report(&perturbed);
    assert!(r["chern"]["sup_defect"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["traces"]["cubic_margin"], 24.0);

    let surface = out_dir(&root, "surface");
    let (code, err) = run_in(&surface, &["chern-weil", "--grid", "8,8,8,8", "--override", "chern_weil.preset=surface"]);
    assert_eq!(code, 0, "{err}");

    let line = root.path().join("line.json");
    fs::write(&line, r#"{"n": 3, "k": 1, "summands": [{"re": [[1,0,0],[0,2,0],[0,0,3]]}]}"#).unwrap();
    let k1 = out_dir(&root, "k1");
    let (code, err) = run_in(
        &k1,
        &[
            "chern-weil",
            "--grid",
            "4,4,4,4,4,4",
            "--override",
            "chern_weil.max_mode=1",
            "--override",
            &format!("chern_weil.bundle=\"{}\"", line.display()),
        ],
    );
    assert_eq!(code, 2, "{err}");
    assert_eq!(report(&k1)["status"], "hypothesis-failure");

    let mismatch = out_dir(&root, "mismatch");
    assert_eq!(run_in(&mismatch, &["chern-weil", "--grid", "4,4,4,4"]).0, 4);
}

#[test]
fn export_round_trip_and_errors() {
    let root = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(2, vec![8, 4, 6, 4]).unwrap();
    let field = band_limited_random(&grid, 5, 1, 0.7).unwrap().map(|v| v + 1.0 / 3.0);
    let dump = root.path().join("f.bin");
    write_scalar_field(&dump, &field, "f", "test").unwrap();

    let dir = out_dir(&root, "exp");
    let input = format!("export.input=\"{}\"", dump.display());
    let (code, err) = run_in(
        &dir,
        &["export", "--override", &input, "--override", "export.axes=[0,2]", "--override", "export.fixed=[0,3,0,1]"],
    );
    assert_eq!(code, 0, "{err}");
    let rows = parse_csv_slice(&fs::read_to_string(dir.join("slice_x1_y1.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 8 * 6);
    for (i, row) in rows.iter().enumerate() {
        let (a, b) = (i / 6, i % 6);
        let want = field.values()[grid.flat_index(&[a, 3, b, 1])];
        assert!((row.2 - want).abs() <= 1e-15);
        assert_eq!(row.0, a as f64 / 8.0);
    }

    let zero = root.path().join("zero.bin");
    write_scalar_field(&zero, &ScalarField::zeros(&grid), "zero", "").unwrap();
    let zdir = out_dir(&root, "zero");
    let (code, _) = run_in(&zdir, &["export", "--override", &format!("export.input=\"{}\"", zero.display())]);
    assert_eq!(code, 0);
    let rows = parse_csv_slice(&fs::read_to_string(zdir.join("slice_x1_y1.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.2 == 0.0));

    let bad = out_dir(&root, "bad");
    assert_eq!(run_in(&bad, &["export", "--override", &input, "--override", "export.axes=[0,7]"]).0, 4);
    assert_eq!(
        run_in(
            &bad,
            &[
                "export",
                "--override",
                &input,
                "--override",
                "export.fixed=[9,0,0,0]",
                "--override",
                "export.axes=[1,2]"
            ]
        )
        .0,
        4
    );
    assert_eq!(run_in(&bad, &["export", "--override", "export.input=\"/nonexistent/f.bin\""]).0, 4);
    assert_eq!(run_in(&bad, &["export"]).0, 4);
}

#[test]
fn runs_are_deterministic() {
    let root = tempfile::tempdir().unwrap();
    let args = ["solve", "--grid", "8,8,8,8", "--seed", "17", "--override", "problem.forcing.source=band-limited"];
    let a = out_dir(&root, "a");
    let b = out_dir(&root, "b");
    let c = out_dir(&root, "c");
    assert_eq!(run_in(&a, &args).0, 0);
    assert_eq!(run_in(&b, &args).0, 0);
    for f in ["phi.bin", "report.json", "phi_x1_y1.csv", "config.resolved.toml"] {
        if f == "config.resolved.toml" {
            continue;
        }
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest =
        |d: &Path| -> Value { serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap() };
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["core_version"], gma_core::VERSION);
    assert!(ma["timings"].as_array().unwrap().iter().any(|t| t["stage"] == "solve"));

    let mut other = args.to_vec();
    other[4] = "18";
    assert_eq!(run_in(&c, &other).0, 0);
    assert_ne!(fs::read(a.join("phi.bin")).unwrap(), fs::read(c.join("phi.bin")).unwrap());
    assert_ne!(manifest(&c)["config_sha256"], ma["config_sha256"]);
}

#[test]
fn configuration_errors_exit_with_four() {
    let root = tempfile::tempdir().unwrap();
    let dir = out_dir(&root, "cfg");
    assert_eq!(run_in(&dir, &["--grid", "4,4,4,4"]).0, 4);
    assert_eq!(run_in(&dir, &["solve", "--override", "unknown_key=1"]).0, 4);
    assert_eq!(run_in(&dir, &["solve", "--config", "/nonexistent/run.toml"]).0, 4);
    assert_eq!(run_in(&dir, &["solve", "--grid", "4,4,4"]).0, 4);
    let cfg = root.path().join("broken.toml");
    fs::write(&cfg, "[grid\nsizes = ").unwrap();
    assert_eq!(run_in(&dir, &["solve", "--config", cfg.to_str().unwrap()]).0, 4);
    // the command may come from the config file
    let cmd = root.path().join("cmd.toml");
    fs::write(&cmd, "command = \"solve\"\n[grid]\nsizes = [2, 2, 2, 2]\n").unwrap();
    assert_eq!(run_in(&dir, &["--config", cmd.to_str().unwrap()]).0, 0);
}
