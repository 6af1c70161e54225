use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use symtorus::io::{load, read_isotopy, SplitSidecar};
use symtorus::ScalarField;

fn symtorus(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_symtorus"));
    cmd.env_remove(symtorus_cli::OUTPUT_ENV).current_dir(dir);
    if let Some(text) = config {
        fs::write(dir.join("scenario.toml"), text).unwrap();
        cmd.args(["--config", "scenario.toml"]);
    }
    cmd.args(["--output", "out"]).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&fs::read(dir.join("out").join(name)).unwrap()).unwrap()
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp").expect("timestamp present");
    v
}

const SMALL: &str = "[grid]\nn_x = 32\nn_y = 32\n[time]\nn_t = 17\nsubsteps = 2\n[weierstrass]\nn_levels = 2\n";

#[test]
fn norm_of_the_default_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = symtorus(dir.path(), None, &["norm", "norm_fixture"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    let file = report(dir.path(), "norm-norm_fixture.json");
    assert_eq!(stdout, file);
    assert!((file["norm"].as_f64().unwrap() - (3.0 + 1.0 / PI)).abs() < 2e-3);
    assert!((file["norm"].as_f64().unwrap() - 3.3183).abs() < 2e-3);
    assert_eq!(file["lambda"][1].as_f64().unwrap(), 3.0);
}

#[test]
fn distance_between_translations() {
    let dir = tempfile::tempdir().unwrap();
    let o = symtorus(dir.path(), Some(SMALL), &["distance", "translation_a", "translation_b"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "distance-translation_a-translation_b.json");
    assert!((r["total"].as_f64().unwrap() - 0.4).abs() < 1e-5);
    for key in ["d0_fwd", "d0_inv", "D", "c0"] {
        assert!((r["l1"][key].as_f64().unwrap() - 0.2).abs() < 1e-5, "{key}");
    }
    assert_eq!(r["sup"]["mode"], "sup");
}

#[test]
fn reports_are_identical_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("seed = 5\n{SMALL}");
    assert_eq!(code(&symtorus(dir.path(), Some(&cfg), &["cauchy-demo"])), 0);
    let first = fs::read(dir.path().join("out/cauchy-demo.json")).unwrap();
    let csv = fs::read_to_string(dir.path().join("out/cauchy/ladder.csv")).unwrap();
    assert_eq!(code(&symtorus(dir.path(), Some(&cfg), &["cauchy-demo"])), 0);
    let second = fs::read(dir.path().join("out/cauchy-demo.json")).unwrap();
    let strip = |b: &[u8]| {
        String::from_utf8(b.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&first), strip(&second));
    // header plus one row per increment between the two levels
    assert_eq!(csv.lines().count(), 2);
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["command"], "cauchy-demo");
}

#[test]
fn hodge_writes_snapshots_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = symtorus(dir.path(), Some(SMALL), &["hodge", "three_dx"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let base = dir.path().join("out/hodge/three_dx");
    let side: SplitSidecar = serde_json::from_slice(&fs::read(base.join("split.json")).unwrap()).unwrap();
    assert!((side.lambda[0] - 3.0).abs() < 1e-10 && side.lambda[1].abs() < 1e-10);
    assert_eq!(side.metric_tag, "flat");
    let u: ScalarField = load(&base.join("potential.sfld2")).unwrap();
    let want = ScalarField::from_fn(u.grid(), |x, _| (2.0 * PI * x).sin());
    assert!((&u - &want).max_abs() < 1e-10);
    assert!(fs::read_to_string(base.join("potential.csv")).unwrap().starts_with("x,y,comp0\n"));
    assert!(base.join("basis.json").exists());
}

#[test]
fn flow_directory_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&symtorus(dir.path(), Some(SMALL), &["flow", "shear"])), 0);
    let iso = read_isotopy(&dir.path().join("out/flow/shear")).unwrap();
    assert_eq!(iso.n_t(), 17);
    let r = report(dir.path(), "flow-shear.json");
    assert!((r["length"].as_f64().unwrap() - 1.0 / PI).abs() < 2e-3);
    assert_eq!(r["consistency_residual"].as_f64().unwrap(), iso.consistency_residual());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_symtorus"))
        .current_dir(dir.path())
        .env(symtorus_cli::OUTPUT_ENV, "from-env")
        .args(["norm", "translation_a"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&fs::read(dir.path().join("from-env/norm-translation_a.json")).unwrap()).unwrap();
    assert!((without_timestamp(r)["norm"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn configuration_errors_exit_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, args) in [
        ("[grid]\nn_q = 3\n", vec!["norm", "shear"]),
        ("", vec!["norm", "missing"]),
        ("", vec!["verify", "nonsense"]),
        ("[grid]\nn_x = 9\n", vec!["flow", "shear"]),
    ] {
        let o = symtorus(dir.path(), Some(cfg), &args);
        assert_eq!(code(&o), 1, "{cfg} {args:?}");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    }
    let o = symtorus(dir.path(), None, &["no-such-command"]);
    assert_eq!(code(&o), 1);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn numerical_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    // a zero tolerance can never certify an endpoint
    let cfg = "[grid]\nn_x = 16\nn_y = 16\n[time]\nn_t = 9\nsubsteps = 1\n[weierstrass]\nn_levels = 2\n\
               [hofer]\nn_harm_t = 0\nn_harm_xy = 1\n[hofer.opt]\nn_t = 9\ntolerance = 0.0\nmax_evals = 5\nrestarts = 0\n";
    let o = symtorus(dir.path(), Some(cfg), &["hofer", "translation_a"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn failing_check_exits_3_and_keeps_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}[thresholds]\n\"noninvariance.zero\" = -1.0\n");
    let o = symtorus(dir.path(), Some(&cfg), &["verify", "noninvariance"]);
    assert_eq!(code(&o), 3);
    let r = report(dir.path(), "verify/noninvariance.json");
    assert_eq!(r["pass"], false);
    assert_eq!(r["thresholds"]["zero"].as_f64().unwrap(), -1.0);

    let o = symtorus(dir.path(), Some(SMALL), &["verify", "noninvariance"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(dir.path(), "verify/noninvariance.json")["pass"], true);
}

#[test]
fn verify_all_writes_every_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}[verify]\nsamples = 10\nprop2_samples = 50\nprop2_cutoffs = [1, 2]\n");
    let o = symtorus(dir.path(), Some(&cfg), &["verify", "all"]);
    let summary = report(dir.path(), "verify-all.json");
    let checks = summary["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 10);
    for c in checks {
        let name = c["name"].as_str().unwrap();
        let r = report(dir.path(), &format!("verify/{name}.json"));
        assert_eq!(r["pass"], c["pass"]);
        assert_eq!(r["seed"], summary["seed"]);
    }
    let all_pass = checks.iter().all(|c| c["pass"] == true);
    assert_eq!(code(&o), if all_pass { 0 } else { 3 });
    // the flat/wavy norm gap does not close with resolution
    assert_eq!(checks[0]["name"], "theorem1");
    assert_eq!(checks[0]["pass"], false);
}
