use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn ebts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebts")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/zhangjiakou_case.toml")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

struct Inputs {
    weather: PathBuf,
    fit: PathBuf,
}

impl Inputs {
    fn model(&self) -> PathBuf {
        self.fit.join("model.toml")
    }

    fn forecast(&self) -> PathBuf {
        self.weather.join("forecast.csv")
    }
}

/// Synthetic history and a fitted model, shared by the tests in this file.
fn inputs() -> &'static Inputs {
    static INPUTS: OnceLock<Inputs> = OnceLock::new();
    INPUTS.get_or_init(|| {
        let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli_inputs");
        let _ = std::fs::remove_dir_all(&root);
        let weather = root.join("weather");
        let fit = root.join("fit");
        let out = ebts(&["synth-weather", "--n-test-days", "3", "--seed", "5", "--out", p(&weather)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let out = ebts(&["fit-copula", "--data", p(&weather.join("history.csv")), "--out", p(&fit)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        Inputs { weather, fit }
    })
}

fn schedule(out: &Path, extra: &[&str]) -> Output {
    let inp = inputs();
    let (model, forecast, config) = (inp.model(), inp.forecast(), fixture());
    let mut args = vec!["schedule", "--model", p(&model), "--config", p(&config), "--forecast", p(&forecast), "--out", p(out)];
    args.extend_from_slice(extra);
    ebts(&args)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(&dir.join("run_manifest.json"))).unwrap()
}

#[test]
fn help_version_and_usage_errors() {
    assert_eq!(code(&ebts(&["--help"])), 0);
    assert_eq!(code(&ebts(&["--version"])), 0);
    assert_eq!(code(&ebts(&["bogus"])), 1);
    assert_eq!(code(&ebts(&["schedule", "--out", "x"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let out = ebts(&["synth-weather", "--threads", "0", "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn fit_copula_writes_model_and_bic_table() {
    let inp = inputs();
    let table = read(&inp.fit.join("bic_table.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "family,log_likelihood,bic,status");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",selected")).count(), 1);
    assert!(read(&inp.model()).contains("family"));
    let m = manifest(&inp.fit);
    assert_eq!(m["command"], "fit-copula");
    assert_eq!(m["exit_code"], 0);
}

#[test]
fn deterministic_schedule_has_one_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("det");
    let res = schedule(&out, &["--deterministic"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let scen = read(&out.join("scenarios.csv"));
    assert_eq!(scen.lines().count(), 2);
    assert!(!out.join("sample_pool.csv").exists());
    assert_eq!(read(&out.join("schedule.csv")).lines().count(), 1 + 24);
    assert_eq!(read(&out.join("buildings.csv")).lines().count(), 1 + 10 * 24);
}

#[test]
fn fixed_cluster_count_sets_the_scenario_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k15");
    let res = schedule(&out, &["--k", "15", "--samples", "100", "--seed", "3"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(read(&out.join("scenarios.csv")).lines().count(), 1 + 15);
    assert_eq!(read(&out.join("sample_pool.csv")).lines().count(), 1 + 100);
    assert!(!out.join("elbow.csv").exists());
    assert_eq!(read(&out.join("schedule.csv")).lines().count(), 1 + 15 * 24);
    let m = manifest(&out);
    assert_eq!(m["seed"], 3);
    assert_eq!(m["parameters"]["k"], "15");
}

#[test]
fn schedule_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--samples", "80", "--seed", "9"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&schedule(&a, &args)), 0);
    assert_eq!(code(&schedule(&b, &[&args[..], &["--threads", "1"]].concat())), 0);
    for name in ["sample_pool.csv", "elbow.csv", "scenarios.csv", "schedule.csv", "buildings.csv", "summary.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn non_empty_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("old.txt"), "x").unwrap();
    assert_eq!(code(&schedule(&out, &["--deterministic"])), 1);
    assert_eq!(code(&schedule(&out, &["--deterministic", "--force"])), 0);
}

#[test]
fn missing_input_is_a_data_error_with_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let res = ebts(&["fit-copula", "--data", p(&dir.path().join("nope.csv")), "--out", p(&out)]);
    assert_eq!(code(&res), 2);
    let m = manifest(&out);
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].is_string());
}

#[test]
fn evaluate_two_days() {
    let inp = inputs();
    let dir = tempfile::tempdir().unwrap();
    let text = read(&inp.weather.join("test_days.csv"));
    let days = dir.path().join("days.csv");
    std::fs::write(&days, text.lines().take(1 + 48).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    let out = dir.path().join("eval");
    let (model, config) = (inp.model(), fixture());
    let res = ebts(&[
        "evaluate", "--model", p(&model), "--config", p(&config), "--test-days", p(&days), "--samples", "60", "--k", "4", "--out",
        p(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let cmp = read(&out.join("comparison.csv"));
    assert_eq!(cmp.lines().next().unwrap(), "day,stochastic_cost,deterministic_cost,stoch_violation,det_violation");
    assert_eq!(cmp.lines().count(), 3);
    assert_eq!(read(&out.join("comparison_long.csv")).lines().count(), 1 + 2 * 2 * 3);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "timestamp,forecast_c,actual_c\n").unwrap();
    let res = ebts(&["evaluate", "--model", p(&model), "--config", p(&config), "--test-days", p(&empty), "--out", p(&dir.path().join("e"))]);
    assert_eq!(code(&res), 2);
}

#[test]
fn undersized_plant_is_reported_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, read(&fixture()).replace("p_max_mw = 60.0", "p_max_mw = 1.0")).unwrap();
    let inp = inputs();
    let out = dir.path().join("o");
    let (model, forecast) = (inp.model(), inp.forecast());
    let res = ebts(&[
        "schedule", "--model", p(&model), "--config", p(&config), "--forecast", p(&forecast), "--deterministic", "--out", p(&out),
    ]);
    assert_eq!(code(&res), 4, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("balance"));
}
