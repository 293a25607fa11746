use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn sftlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sftlab")).args(args).output().expect("spawn sftlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn result_json(o: &Output) -> serde_json::Value {
    let out = stdout(o);
    let line = out.lines().last().expect("output");
    let body = line.strip_prefix("RESULT ").expect("RESULT line");
    serde_json::from_str(body).expect("json")
}

#[test]
fn supertile_check_reports_no_violations() {
    let o = sftlab(&["supertile", "--order", "2", "--orient", "sw", "--check"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("violations: 0"));
    assert_eq!(result_json(&o)["side"], 7);
}

#[test]
fn golden_mean_count() {
    let o = sftlab(&["census", "count", "--sft", &data("golden.sft"), "--n", "4", "--method", "bf"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("8"));
    assert_eq!(result_json(&o)["count"], "8");
}

#[test]
fn methods_agree_on_hard_square() {
    let counts: Vec<serde_json::Value> = ["bf", "bt", "transfer"]
        .iter()
        .map(|m| {
            let o = sftlab(&["census", "count", "--sft", &data("hard_square.sft"), "--n", "4", "--method", m]);
            assert!(o.status.success(), "{m}");
            result_json(&o)["count"].clone()
        })
        .collect();
    assert_eq!(counts[0], "1234");
    assert!(counts.iter().all(|c| *c == counts[0]));
}

#[test]
fn fermat_numbers_coprime() {
    let o = sftlab(&["counters", "coprime", "--upto", "6"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pairwise coprime: true"));
}

#[test]
fn budget_overflow_is_a_domain_error() {
    let o = sftlab(&["census", "count", "--sft", &data("golden.sft"), "--n", "30", "--method", "bf", "--budget", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(result_json(&o)["error"], "Census::BudgetExceeded");
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(sftlab(&["supertile", "--order", "2", "--orient", "up"]).status.code(), Some(2));
    assert_eq!(sftlab(&["census", "count", "--sft", "/nonexistent.sft", "--n", "2"]).status.code(), Some(2));
    assert_eq!(sftlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dirty_face_splits_at_the_stray_letter() {
    let o = sftlab(&["machine", "run", "--builtin", "incrementer", "--face", &data("dirty_face.json")]);
    assert!(o.status.success());
    let r = result_json(&o);
    assert_eq!(r["overlay"]["tape_left"], 5);
    assert_eq!(r["forbidden"], false);
}

#[test]
fn spec_file_matches_builtin() {
    let a = sftlab(&["machine", "run", "--spec", &data("incrementer.tm"), "--width", "6", "--height", "10"]);
    let b = sftlab(&["machine", "run", "--builtin", "incrementer", "--width", "6", "--height", "10"]);
    assert!(a.status.success());
    assert_eq!(result_json(&a)["top"], result_json(&b)["top"]);
    assert_eq!(result_json(&a)["top"][1], "0");
    assert_eq!(result_json(&a)["top"][2], "1");
}

#[test]
fn failing_machine_is_forbidden() {
    let o = sftlab(&["machine", "run", "--builtin", "failing", "--width", "6", "--height", "8"]);
    let r = result_json(&o);
    assert_eq!(r["overlay"]["first_error"], 2);
    assert_eq!(r["forbidden"], true);
}

#[test]
fn supertile_round_trips_through_files() {
    let dir = std::env::temp_dir().join(format!("sftlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let block = dir.join("b.txt");
    let svg = dir.join("b.svg");
    let b = block.to_str().unwrap();
    assert!(sftlab(&["supertile", "--order", "1", "--orient", "ne", "--out", b]).status.success());
    let o = sftlab(&["complete", "--block", b]);
    assert!(o.status.success());
    assert!(sftlab(&["render", "pattern", "--input", b, "--out", svg.to_str().unwrap()]).status.success());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let ppm = dir.join("s.ppm");
    let o = sftlab(&[
        "render", "supertile3", "--order", "2", "--orient", "ne,ne,ne", "--slice", "axis=0", "index=3", "--out",
        ppm.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(std::fs::read(&ppm).unwrap().starts_with(b"P6\n"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn hierarchy_subcommands() {
    let o = sftlab(&["hier", "dk", "--k", "1", "--bits", "00"]);
    assert_eq!(result_json(&o)["formula"], "4194304");
    assert_eq!(result_json(&o)["simulated"], "4194304");
    let o = sftlab(&["hier", "budget", "--q", "3", "--bits", "000", "--construction"]);
    assert_eq!(result_json(&o)["within_bounds"], true);
    let o = sftlab(&["hier", "simulate", "--bits", "101"]);
    assert_eq!(result_json(&o)["purple_corners"], (4u64 * 16).to_string());
}

#[test]
fn select_reaches_target() {
    let o = sftlab(&["counters", "select", "--x", "7/10"]);
    assert!(o.status.success());
    let r = result_json(&o);
    assert_eq!(r["residual"], 0.0);
}
