#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use canary_audit_cli::report::AuditReport;
use serde_json::{json, Value};

pub const BIN: &str = env!("CARGO_BIN_EXE_canary-audit");

pub fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("CANARY_AUDIT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn small_fl_config(seed: u64) -> Value {
    json!({
        "dim": 1000,
        "total_clients": 500,
        "clients_per_round": 50,
        "rounds": 10,
        "noise_multiplier": 0.3,
        "clip_norm": 1.0,
        "server_lr": 0.5,
        "server_momentum": 0.0,
        "observed_canaries": 40,
        "unobserved_canaries": 40,
        "seed": seed,
    })
}

pub fn write_json(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// Report text with the `runtime_seconds` line dropped.
pub fn without_runtime(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("\"runtime_seconds\"")).collect::<Vec<_>>().join("\n")
}

pub fn read_report(path: &Path) -> AuditReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs `args` in a fresh out-dir and returns the dir.
pub fn run_in(dir: &Path, args: &[&str]) -> Result<(), String> {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out-dir", s(dir)]);
    let o = run(&full);
    if code(&o) != 0 {
        return Err(format!("{args:?} exited {}: {}", code(&o), String::from_utf8_lossy(&o.stderr)));
    }
    Ok(())
}

/// Identical seeds give byte-identical reports apart from the runtime.
pub fn check_determinism(tmp: &Path) -> Result<(), String> {
    let cfg = tmp.join("det.json");
    write_json(&cfg, &small_fl_config(11));
    let cases: [(&[&str], &str); 2] = [
        (&["gauss-audit", "--dim", "10000", "--sigma", "1.54", "--seed", "9", "--repeats", "2"], "gauss-audit-run-0001.json"),
        (&["fl-audit", s(&cfg), "--all-iterates", "--runs", "2"], "fl-audit-report.json"),
    ];
    for (i, (args, file)) in cases.iter().enumerate() {
        let a = tmp.join(format!("det-{i}-a"));
        let b = tmp.join(format!("det-{i}-b"));
        run_in(&a, args)?;
        run_in(&b, args)?;
        let ra = std::fs::read_to_string(a.join(file)).unwrap();
        let rb = std::fs::read_to_string(b.join(file)).unwrap();
        if without_runtime(&ra) != without_runtime(&rb) {
            return Err(format!("{file} differs between identical runs"));
        }
        let csv = if file.starts_with("gauss") { file.replace(".json", ".csv") } else { "fl-audit-cosines.csv".into() };
        if std::fs::read(a.join(&csv)).unwrap() != std::fs::read(b.join(&csv)).unwrap() {
            return Err(format!("{csv} differs between identical runs"));
        }
    }
    Ok(())
}

/// Feeding a report's config echo back in reproduces its estimate exactly.
pub fn check_config_echo(tmp: &Path) -> Result<(), String> {
    let first = tmp.join("echo-a");
    run_in(&first, &["gauss-audit", "--dim", "20000", "--sigma", "4.22", "--seed", "3"])?;
    let rep = read_report(&first.join("gauss-audit-run-0000.json"));
    let echo = tmp.join("echo-gauss.json");
    write_json(&echo, &serde_json::to_value(&rep.config_echo).unwrap());
    let second = tmp.join("echo-b");
    run_in(&second, &["gauss-audit", "--config", s(&echo)])?;
    let again = read_report(&second.join("gauss-audit-run-0000.json"));
    if again.epsilon_estimate != rep.epsilon_estimate || again.config_echo != rep.config_echo {
        return Err(format!("gauss echo: {:?} vs {:?}", again.epsilon_estimate, rep.epsilon_estimate));
    }

    let cfg = tmp.join("echo-fl-in.json");
    write_json(&cfg, &small_fl_config(21));
    let first = tmp.join("echo-c");
    run_in(&first, &["fl-audit", s(&cfg), "--runs", "3", "--all-iterates", "--seed", "40"])?;
    let rep = read_report(&first.join("fl-audit-report.json"));
    let echo = tmp.join("echo-fl.json");
    write_json(&echo, &serde_json::to_value(&rep.config_echo).unwrap());
    let second = tmp.join("echo-d");
    run_in(&second, &["fl-audit", s(&echo), "--runs", "3", "--all-iterates"])?;
    let again = read_report(&second.join("fl-audit-report.json"));
    if again.epsilon_estimate != rep.epsilon_estimate || again.epsilon_all_iterates != rep.epsilon_all_iterates {
        return Err(format!("fl echo: {:?} vs {:?}", again.epsilon_estimate, rep.epsilon_estimate));
    }
    Ok(())
}

/// Malformed inputs and the exit code each must produce.
pub fn check_exit_codes(tmp: &Path) -> Result<(), String> {
    let good = tmp.join("good.json");
    write_json(&good, &small_fl_config(1));
    let with = |k: &str, v: Value| {
        let mut c = small_fl_config(1);
        c[k] = v;
        c
    };
    let mut configs = vec![
        ("unknown-key", with("noise", json!(1.0))),
        ("bad-type", with("dim", json!("many"))),
        ("too-many-per-round", with("clients_per_round", json!(501))),
        ("negative-noise", with("noise_multiplier", json!(-1.0))),
        ("no-observed", with("observed_canaries", json!(0))),
        ("bad-delta", with("delta", json!(1.5))),
    ];
    let mut missing = small_fl_config(1);
    missing.as_object_mut().unwrap().remove("rounds");
    configs.push(("missing-key", missing));
    let mut diverge = with("server_lr", json!(f64::MAX));
    diverge["noise_multiplier"] = json!(1.0);
    diverge["clip_norm"] = json!(f64::MAX / 4.0);
    configs.push(("diverge", diverge));
    for (name, v) in &configs {
        write_json(&tmp.join(format!("{name}.json")), v);
    }
    std::fs::write(tmp.join("not-json.json"), "{dim: 3").unwrap();
    std::fs::write(tmp.join("array.json"), "[1, 2]").unwrap();
    std::fs::write(tmp.join("bad-header.csv"), "a,b\n1,2\n").unwrap();
    std::fs::write(tmp.join("bad-cell.csv"), "round,canary_id,label,cosine\n-1,0,observed,abc\n").unwrap();
    std::fs::write(tmp.join("bad-label.csv"), "round,canary_id,label,cosine\n-1,0,seen,0.1\n").unwrap();
    std::fs::write(tmp.join("out-of-range.csv"), "round,canary_id,label,cosine\n-1,0,observed,1.5\n-1,1,observed,0.2\n").unwrap();
    let const_rows: String = (0..20).map(|i| format!("-1,{i},observed,0.25\n")).collect();
    std::fs::write(tmp.join("constant.csv"), format!("round,canary_id,label,cosine\n{const_rows}")).unwrap();
    let ok_rows: String = (0..20).map(|i| format!("-1,{i},observed,{}\n", (i as f64 * 0.7).sin() * 0.05)).collect();
    std::fs::write(tmp.join("ok.csv"), format!("round,canary_id,label,cosine\n{ok_rows}")).unwrap();

    let p = |name: &str| tmp.join(name).to_str().unwrap().to_owned();
    let out = p("exit-out");
    let cases: Vec<(Vec<String>, Vec<(&str, &str)>, i32)> = {
        let v = |a: &[&str]| a.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let fl = |name: &str| v(&["fl-audit", &p(name), "--out-dir", &out]);
        vec![
            (v(&["--help"]), vec![], 0),
            (v(&["--version"]), vec![], 0),
            (v(&[]), vec![], 2),
            (v(&["frobnicate"]), vec![], 2),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "1", "--mu2", "1", "--sigma2", "1", "--delta", "1e-6"]), vec![], 0),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "0", "--mu2", "1", "--sigma2", "1", "--delta", "1e-6"]), vec![], 2),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "-1", "--mu2", "1", "--sigma2", "1", "--delta", "1e-6"]), vec![], 2),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "1", "--mu2", "1", "--sigma2", "1", "--delta", "1.5"]), vec![], 2),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "1", "--mu2", "1", "--sigma2", "1", "--delta", "0"]), vec![], 2),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "1", "--mu2", "1", "--sigma2", "1"]), vec![], 2),
            (v(&["epsilon", "--mu1", "0", "--sigma1", "1", "--mu2", "1", "--sigma2", "1", "--delta", "0.1", "--epsilon", "1"]), vec![], 2),
            (v(&["epsilon", "--mu1", "x", "--sigma1", "1", "--mu2", "1", "--sigma2", "1", "--delta", "0.1"]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1", "--sigma", "1", "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "nan", "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--delta", "2", "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--confidence", "1", "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--repeats", "0", "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--canaries", "1", "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--config", &p("good.json")]), vec![], 2),
            (v(&["gauss-audit", "--config", &p("good.json"), "--out-dir", &out]), vec![], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--out-dir", &out]), vec![("CANARY_AUDIT_THREADS", "lots")], 2),
            (v(&["gauss-audit", "--dim", "1000", "--sigma", "1", "--out-dir", &out, "--threads", "1"]), vec![], 0),
            (fl("good.json"), vec![], 0),
            (fl("absent.json"), vec![], 2),
            (fl("not-json.json"), vec![], 2),
            (fl("array.json"), vec![], 2),
            (fl("unknown-key.json"), vec![], 2),
            (fl("bad-type.json"), vec![], 2),
            (fl("missing-key.json"), vec![], 2),
            (fl("too-many-per-round.json"), vec![], 2),
            (fl("negative-noise.json"), vec![], 2),
            (fl("no-observed.json"), vec![], 2),
            (fl("bad-delta.json"), vec![], 2),
            (fl("diverge.json"), vec![], 1),
            (v(&["fl-audit", &p("good.json"), "--runs", "0", "--out-dir", &out]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("absent.csv"), "--dim", "1000"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("bad-header.csv"), "--dim", "1000"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("bad-cell.csv"), "--dim", "1000"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("bad-label.csv"), "--dim", "1000"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("out-of-range.csv"), "--dim", "1000"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("ok.csv"), "--dim", "1000", "--empirical-null"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("ok.csv"), "--dim", "1000", "--round", "4"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("ok.csv"), "--dim", "1"]), vec![], 2),
            (v(&["lower-bound", "--csv", &p("ok.csv"), "--dim", "1000"]), vec![], 0),
            (v(&["validate-normality", "--csv", &p("ok.csv")]), vec![], 0),
            (v(&["validate-normality", "--csv", &p("ok.csv"), "--column", "nope"]), vec![], 2),
            (v(&["validate-normality", "--csv", &p("ok.csv"), "--label", "unobserved"]), vec![], 2),
            (v(&["validate-normality", "--csv", &p("constant.csv")]), vec![], 1),
        ]
    };
    let mut wrong = Vec::new();
    for (args, env, want) in &cases {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = run_env(&a, env);
        if code(&o) != *want {
            wrong.push(format!("{a:?}: exit {} (want {want}) {}", code(&o), String::from_utf8_lossy(&o.stderr).trim()));
        }
        if *want != 0 && o.stderr.is_empty() {
            wrong.push(format!("{a:?}: no message on stderr"));
        }
    }
    if wrong.is_empty() {
        Ok(())
    } else {
        Err(wrong.join("\n"))
    }
}
