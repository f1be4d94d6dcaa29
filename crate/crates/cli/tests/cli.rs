use std::process::Command;

use cusp_extend_cli::{parse_config, run};
use proptest::prelude::*;
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cusp-extend").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(args: &[&str]) -> Value {
    let (code, out, err) = invoke(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap()
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cusp-extend"))
}

#[test]
fn maps_eval_report() {
    let doc = report(&["maps", "eval", "--map", "cusp2d:gamma=1", "--point", "r=0.5,s=0.7854"]);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "maps-eval");
    assert!(doc["wall_time"].is_number());
    let jac = doc["results"]["jacobian"].as_f64().unwrap();
    assert!((jac + 0.5 / (std::f64::consts::PI - 0.5)).abs() < 1e-12);
    assert_eq!(doc["results"]["image"].as_array().unwrap().len(), 2);
    assert_eq!(doc["results"]["differential"].as_array().unwrap().len(), 2);
    assert!(doc["results"]["op_norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(invoke(&["--help"]).0, 0);
    assert_eq!(invoke(&["--version"]).0, 0);
    assert_eq!(invoke(&[]).0, 1);
    assert_eq!(invoke(&["frobnicate"]).0, 1);
    assert_eq!(invoke(&["maps", "eval", "--map", "cusp2d:gamma=1"]).0, 1);

    let (code, _, err) = invoke(&["alpha-range", "--domain", "cusp2d:gamma_tilde=1.5", "--p", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("(0,1)"), "{err}");
    assert_eq!(invoke(&["alpha-range", "--gamma-tilde", "0.5", "--p", "abc"]).0, 2);
    assert_eq!(invoke(&["distortion", "kpq", "--map", "cusp2d:gamma=1", "--p", "2", "--q", "3"]).0, 2);
    assert_eq!(invoke(&["distortion", "kpq", "--map", "cusp2d:gamma=1", "--p", "2", "--q", "1", "--grid", "N=4"]).0, 2);
    assert_eq!(invoke(&["maps", "eval", "--map", "cusp2d:gamma=1", "--point", "r=2,s=0.1"]).0, 2);
}

#[test]
fn required_convergence_fails_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = [
        "distortion", "kpq", "--map", "cusp2d:gamma=1", "--p", "2", "--q", "1.8", "--grid", "N=16",
        "--require-convergence", "--json", path.to_str().unwrap(),
    ];
    let (code, out, err) = invoke(&args);
    assert_eq!(code, 3, "{err}");
    assert!(out.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["results"]["verdict"], "Diverged");
}

#[test]
fn csv_and_json_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let json = dir.path().join("report.json");
    let (code, out, err) = invoke(&[
        "distortion", "kpq", "--map", "cusp2d:gamma=1", "--p", "2", "--q", "1", "--grid", "N=16",
        "--csv", csv.to_str().unwrap(), "--json", json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,estimate"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "16");
    assert!(first[1].parse::<f64>().unwrap() > 0.0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["results"]["converged"], true);
    assert_eq!(doc["results"]["dominated"], true);
}

#[test]
fn run_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("alpha.conf");
    std::fs::write(&path, "# admissible range\ncommand = alpha-range\ngamma-tilde = 0.5\np = 2\n").unwrap();
    let from_config = report(&["run", "--config", path.to_str().unwrap()]);
    let from_flags = report(&["alpha-range", "--gamma-tilde", "0.5", "--p", "2"]);
    assert_eq!(from_config["results"], from_flags["results"]);
    assert_eq!(from_config["config"], from_flags["config"]);

    std::fs::write(&path, "command = alpha-range\ngamma-tilde = 0.5\ngamma-tilde = 0.6\n").unwrap();
    assert_eq!(invoke(&["run", "--config", path.to_str().unwrap()]).0, 2);
    std::fs::write(&path, "command = alpha-range\nnot-a-flag = 1\n").unwrap();
    assert_eq!(invoke(&["run", "--config", path.to_str().unwrap()]).0, 2);
    assert_eq!(invoke(&["run", "--config", dir.path().join("missing").to_str().unwrap()]).0, 2);
}

#[test]
fn reproduce_sections_run() {
    let doc = report(&["paper-reproduce", "--section", "2.3-2d", "--grid", "N=16"]);
    assert!(doc["results"].is_object());
    let eigen = report(&["eigen", "bound", "--domain", "cusp2d:gamma_tilde=0.5", "--p", "2", "--alpha", "0.55", "--mu-ball", "3.39"]);
    assert!(eigen["results"]["bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn thread_override_from_environment() {
    let args = ["maps", "classify", "--map", "radial:alphas=0.5,1.5", "--p", "4"];
    let base = binary().args(args).output().unwrap();
    assert!(base.status.success());
    let two = binary().args(args).env("CUSP_EXTEND_THREADS", "2").output().unwrap();
    assert!(two.status.success());
    let results = |bytes: &[u8]| serde_json::from_slice::<Value>(bytes).unwrap()["results"].clone();
    assert_eq!(results(&base.stdout), results(&two.stdout));

    for bad in ["0", "lots", "100000"] {
        let out = binary().args(args).env("CUSP_EXTEND_THREADS", bad).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
    // The environment wins over the flag.
    let out = binary().args(["--threads", "2"]).args(args).env("CUSP_EXTEND_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let args = ["eigen", "min", "--domain", "disc", "--p", "2", "--q", "2", "--grid", "N=8", "--restarts", "3"];
    let one = binary().args(["--threads", "1"]).args(args).output().unwrap();
    let four = binary().args(["--threads", "4"]).args(args).output().unwrap();
    assert!(one.status.success() && four.status.success());
    let strip = |bytes: &[u8]| {
        let mut v: Value = serde_json::from_slice(bytes).unwrap();
        v.as_object_mut().unwrap().remove("wall_time");
        v["config"] = Value::Null;
        v
    };
    assert_eq!(strip(&one.stdout), strip(&four.stdout));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn config_parser_never_panics(text in "(?s).{0,200}") {
        let _ = parse_config(&text);
    }

    #[test]
    fn malformed_configs_exit_cleanly(lines in prop::collection::vec("[a-z=# .0-9:,-]{0,24}", 0..6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, lines.join("\n")).unwrap();
        let (code, _, _) = invoke(&["run", "--config", path.to_str().unwrap()]);
        prop_assert!(matches!(code, 0 | 2 | 3), "exit {}", code);
    }
}
