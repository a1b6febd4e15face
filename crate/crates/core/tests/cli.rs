use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_switchfdi"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const TWO_FLOWS: &str = r#"{
  "switch": {"num_ports": 1, "priorities": 3, "output_service": 2},
  "flows": [
    {"flow_id": "hp", "class": "high", "ingress_port": 0, "egress_port": 0, "period": 5},
    {"flow_id": "lp", "class": "low", "ingress_port": 0, "egress_port": 0, "period": 5}
  ],
  "horizon": 100,
  "fdi": {"enabled": true}
}"#;

#[test]
fn baseline_run_writes_trace_and_summary() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        scenario("baseline").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("class high count=4000 min=2.000 max=4.000"), "{text}");
    for f in ["deliveries.csv", "faults.csv", "decisions.csv", "scenario.json"] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }
    let faults = fs::read_to_string(out.path().join("faults.csv")).unwrap();
    assert_eq!(
        faults,
        "at_ticks,class,packet_id,kind,measured_ticks,bound_ticks,residual_ticks\n"
    );
}

#[test]
fn flags_override_the_file_and_are_echoed() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        scenario("fdi_ftc").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--ftc",
        "off",
        "--horizon",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echoed = fs::read_to_string(out.path().join("scenario.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&echoed).unwrap();
    assert_eq!(v["ftc"]["enabled"], false);
    assert_eq!(v["horizon"], 200);
    let decisions = fs::read_to_string(out.path().join("decisions.csv")).unwrap();
    assert_eq!(decisions.lines().count(), 1, "no decisions without compensation");
}

#[test]
fn duplicate_flow_ids_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "dup.json", &TWO_FLOWS.replace("\"lp\"", "\"hp\""));
    let o = run(&[
        "run",
        p.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate flow id"), "{}", stderr(&o));
}

#[test]
fn malformed_json_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.json", "{\n  \"switch\": {\n    \"num_ports\": 1,,\n");
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("line 3"), "{}", stdout(&o));
}

#[test]
fn overloaded_class_with_computed_bounds_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "over.json",
        &TWO_FLOWS.replace("\"period\": 5}\n  ]", "\"period\": 5, \"packets_per_release\": 2}\n  ]"),
    );
    let o = run(&[
        "run",
        p.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("Unstable: lp"), "{}", stderr(&o));
}

#[test]
fn bound_prints_every_flow() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "two.json", TWO_FLOWS);
    let o = run(&["bound", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains(
        "hp class=high port=0 sigma=2 rho=2/5 leftover_rate=1 leftover_latency=2 bound=4 (4.000 T.U) bound_ticks=4000"
    ));
    assert!(text.contains("lp class=low port=0 sigma=2 rho=2/5 leftover_rate=3/5 leftover_latency=10/3 bound=20/3 (6.667 T.U) bound_ticks=6667"));

    let p = write(
        dir.path(),
        "over.json",
        &TWO_FLOWS.replace("\"period\": 5}\n  ]", "\"period\": 1}\n  ]"),
    );
    let o = run(&["bound", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.lines().any(|l| l.starts_with("hp ") && l.contains("bound=4")),
        "{text}"
    );
    assert!(
        text.lines().any(|l| l.starts_with("lp ") && l.contains("Unstable")),
        "{text}"
    );
}

#[test]
fn validate_lists_diagnostics() {
    let o = run(&["validate", scenario("fdi_ftc").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());

    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "h0.json",
        &TWO_FLOWS.replace("\"horizon\": 100", "\"horizon\": 0"),
    );
    let o = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stdout(&o).starts_with("horizon:"));
}

#[test]
fn plot_writes_svg_with_bound_line() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace");
    let o = run(&[
        "run",
        scenario("fdi_ftc").to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
        "--ftc",
        "off",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let svg = dir.path().join("high.svg");
    let o = run(&[
        "plot",
        trace.to_str().unwrap(),
        "--class",
        "high",
        "--out",
        svg.to_str().unwrap(),
        "--cap",
        "80",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains("bound 80"));
    assert!(text.contains("packet(s) above 80 not shown"));

    let o = run(&[
        "plot",
        trace.to_str().unwrap(),
        "--class",
        "low",
        "--out",
        dir.path().join("low.svg").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn missing_file_is_an_error() {
    let o = run(&["bound", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/scenario.json"));
}
