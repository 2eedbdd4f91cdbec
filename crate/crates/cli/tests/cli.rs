use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn glmsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glmsel")).args(args).output().expect("binary runs")
}

fn write_logistic_csv(dir: &Path) -> PathBuf {
    // y = 1 exactly when 1.5 x1 − x3 plus a fixed perturbation is positive.
    let mut text = String::from("x1,x2,x3,x4,y\n");
    for i in 0..120 {
        let t = i as f64;
        let x = [(t * 0.37).sin() * 1.7, (t * 1.13).cos(), (t * 0.71).sin() * 1.3, (t * 2.9).cos() * 0.8];
        let noise = (t * 5.3).sin() * 1.2;
        let y = u8::from(1.5 * x[0] - x[2] + noise > 0.0);
        text.push_str(&format!("{},{},{},{},{y}\n", x[0], x[1], x[2], x[3]));
    }
    let path = dir.join("data.csv");
    fs::write(&path, text).unwrap();
    path
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(name: &str, report: &Path) {
    let value: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    let validator = schema(name);
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

#[test]
fn fit_is_deterministic_and_matches_schema() {
    let dir = TempDir::new().unwrap();
    let data = write_logistic_csv(dir.path());
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("fit{k}.json"))).collect();
    for out in &outs {
        let o = glmsel(&[
            "--threads", "2", "fit", "--data", data.to_str().unwrap(), "--family", "logistic", "--s-max", "3",
            "--iters", "3000", "--chains", "2", "--seed", "7", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&outs[0]).unwrap(), fs::read(&outs[1]).unwrap());
    assert_valid("fit_report", &outs[0]);
    let report: Value = serde_json::from_str(&fs::read_to_string(&outs[0]).unwrap()).unwrap();
    assert_eq!(report["top_models"][0]["indices"], serde_json::json!([0, 2]));
}

#[test]
fn fit_honours_run_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let data = write_logistic_csv(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "schema_version = 1\n[hyperparams]\ns_max = 2\n[chain]\niters = 2000\nseed = 3\n").unwrap();
    let out = dir.path().join("fit.json");
    let o = glmsel(&[
        "fit", "--data", data.to_str().unwrap(), "--family", "logistic", "--config", cfg.to_str().unwrap(),
        "--seed", "5", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["hyperparams"]["s_max"], 2);
    assert_eq!(report["chain"]["n_iter"], 2000);
    assert_eq!(report["seed"], 5);
}

#[test]
fn non_binary_response_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "a,b,y\n0.1,0.2,1\n0.3,0.4,2\n").unwrap();
    let o = glmsel(&["fit", "--data", path.to_str().unwrap(), "--family", "logistic", "--s-max", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":3:") && err.contains("'y'"), "{err}");
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = write_logistic_csv(dir.path());
    let d = data.to_str().unwrap();
    let missing = glmsel(&["fit", "--data", d, "--family", "logistic", "--response", "z"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_s_max = glmsel(&["fit", "--data", d, "--family", "logistic", "--s-max", "9"]);
    assert_eq!(bad_s_max.status.code(), Some(2));
    let gap = dir.path().join("gap.csv");
    fs::write(&gap, "a,y\n,1\n").unwrap();
    let o = glmsel(&["fit", "--data", gap.to_str().unwrap(), "--family", "poisson"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = dir.path().join("sim.toml");
    fs::write(&cfg, "schema_version = 2\n").unwrap();
    let o = glmsel(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn separated_initial_model_exits_3() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("sep.csv");
    let mut text = String::from("x,z,y\n");
    for i in 0..40 {
        let x = i as f64 - 19.5;
        text.push_str(&format!("{x},{},{}\n", (i as f64).sin(), u8::from(x > 0.0)));
    }
    fs::write(&path, text).unwrap();
    let o = glmsel(&["fit", "--data", path.to_str().unwrap(), "--family", "logistic", "--s-max", "1", "--init", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_is_deterministic_and_matches_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sim.toml");
    fs::write(
        &cfg,
        "schema_version = 1\nfamily = \"poisson\"\nn = 80\np = 6\ns0 = 2\nseed = 4\nreplications = 3\n\
         exact_when_feasible = true\n[signal]\nkind = \"values\"\nvalues = [0.8, -0.6]\n\
         [hyperparams]\nalpha = 0.999\nlambda = 0.001\na4 = 0.05\ns_max = 3\n[chain]\nn_iter = 1000\n",
    )
    .unwrap();
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("sim{k}.json"))).collect();
    for out in &outs {
        let o = glmsel(&["--threads", "1", "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&outs[0]).unwrap(), fs::read(&outs[1]).unwrap());
    assert_valid("simulate_report", &outs[0]);
}

#[test]
fn shipped_simulation_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/simulate_logistic.toml");
    glmsel_cli::commands::load_sim_config(&path).unwrap();
    let run = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/fit_run.toml");
    glmsel_cli::config::RunFile::load(&run).unwrap();
}

#[test]
fn diagnose_and_oracle_reports_match_schema() {
    let dir = TempDir::new().unwrap();
    let data = write_logistic_csv(dir.path());
    let theta = dir.path().join("theta.txt");
    fs::write(&theta, "1.5, 0, -1, 0\n").unwrap();
    let out = dir.path().join("diag.json");
    let o = glmsel(&[
        "diagnose", "--data", data.to_str().unwrap(), "--family", "logistic", "--theta0", theta.to_str().unwrap(),
        "--support", "0,2", "--support", "0,1,2", "--support", "1", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_valid("diagnose_report", &out);

    let out = dir.path().join("oracle.json");
    let o = glmsel(&[
        "oracle", "--data", data.to_str().unwrap(), "--family", "logistic", "--s-max", "2", "--iters", "40000",
        "--mc-draws", "4000", "--out", out.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("chain-vs-enumeration"), "{stdout}");
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    assert_eq!(o.status.success(), !stdout.contains("FAIL"));
    assert_valid("oracle_report", &out);
}

#[test]
fn wrong_theta_length_exits_2() {
    let dir = TempDir::new().unwrap();
    let data = write_logistic_csv(dir.path());
    let theta = dir.path().join("theta.json");
    fs::write(&theta, "[1.0, 2.0]").unwrap();
    let o = glmsel(&["diagnose", "--data", data.to_str().unwrap(), "--family", "logistic", "--theta0", theta.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
