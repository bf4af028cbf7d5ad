use std::process::{Command, Output};

use cmdeg_core::cli::{run, Envelope, EvalRecord, ErrorRecord};
use cmdeg_core::cmdeg::{CmCheckReport, DegreeBracket, Verdict};
use cmdeg_core::Real;

fn cmdeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmdeg"))
        .args(args)
        .env_remove("CMDEG_DEFAULT_PREC")
        .output()
        .expect("spawn cmdeg")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_q_at_one() {
    let o = cmdeg(&["eval", "--special", "Q", "--t", "1", "--prec", "128"]);
    assert!(o.status.success());
    let env: Envelope<EvalRecord> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(env.schema, 1);
    assert_eq!(env.precision.working_bits, 128);
    assert!(env.result.values[0].to_scientific(10).starts_with("1.160073351"));
}

#[test]
fn exit_codes() {
    assert_eq!(cmdeg(&["eval", "--special", "Q", "--t", "2"]).status.code(), Some(0));
    // usage errors
    for args in [
        vec!["frobnicate"],
        vec!["eval", "--t", "1"],
        vec!["eval", "--spec", "2", "--t", "1"],
        vec!["eval", "--spec", "9,0", "--t", "1"],
        vec!["cmcheck", "--special", "Q", "--r", "4", "--grid", "log:1:0.5:10"],
        vec!["eval", "--special", "Q", "--t", "1", "--prec", "3"],
        vec!["kernel", "coeffs", "--from", "3", "--to", "8"],
        vec!["eval", "--special", "Q", "--t", "one"],
    ] {
        let o = cmdeg(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
    // computation error with a structured record
    let o = cmdeg(&["eval", "--special", "Q", "--t", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let line = String::from_utf8(o.stderr).unwrap();
    let rec: ErrorRecord = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(rec.schema, 1);
    assert_eq!(rec.error.kind, "NonPositiveArgument");
}

#[test]
fn cmcheck_output_is_deterministic_and_round_trips() {
    let args = ["cmcheck", "--special", "Q", "--r", "4", "--max-order", "6", "--grid", "log:1e-3:1e3:20"];
    let a = cmdeg(&args);
    let b = cmdeg(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let env: Envelope<CmCheckReport> = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(env.result.verdict, Verdict::Pass);
    assert!(env.result.is_consistent());
    let again = serde_json::to_string_pretty(&env).unwrap();
    assert_eq!(again.trim_end(), stdout(&a).trim_end());
    let csv_a = cmdeg(&[&args[..], &["--format", "csv"]].concat());
    let csv_b = cmdeg(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(csv_a.stdout, csv_b.stdout);
}

#[test]
fn q_scan_plot_data() {
    let o = cmdeg(&["cmcheck", "--special", "Q", "--r", "4", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,k,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200 * 13);
    for row in rows {
        let value = row.rsplit(',').next().unwrap();
        assert!(!value.starts_with('-'), "{row}");
    }
}

#[test]
fn degree_record_for_psigap() {
    let o = cmdeg(&["degree", "--special", "PsiGap", "--grid", "log:1e-3:1e3:40", "--max-order", "8"]);
    assert!(o.status.success());
    let env: Envelope<DegreeBracket> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((env.result.lower, env.result.upper), (1.0, 1.0));
}

#[test]
fn conjecture_table_rows() {
    let o = cmdeg(&["conjectures", "--format", "csv", "--grid", "log:1e-2:1e2:12", "--max-order", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,lower,upper,conjectured");
    assert_eq!(lines.len(), 17);
}

#[test]
fn out_flag_and_precision_env() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let o = Command::new(env!("CARGO_BIN_EXE_cmdeg"))
        .args(["kernel", "--order", "4", "--s", "2", "--out", path.to_str().unwrap()])
        .env("CMDEG_DEFAULT_PREC", "96")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["precision"]["working_bits"], 96);
    let value: Real = serde_json::from_value(v["result"]["value"].clone()).unwrap();
    assert!(value.is_positive());

    let bad = Command::new(env!("CARGO_BIN_EXE_cmdeg"))
        .args(["bernoulli", "--to", "4"])
        .env("CMDEG_DEFAULT_PREC", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn in_process_runner_matches_binary() {
    let args = ["cmdeg", "kernel", "coeffs", "--from", "7", "--to", "9", "--format", "text"];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(run(args, &mut out, &mut err), 0);
    assert_eq!(out, cmdeg(&args[1..]).stdout);
    assert!(String::from_utf8(out).unwrap().contains("2 c_7 = 5/7"));
}
