use std::path::PathBuf;
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("reach-entropy-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reach-entropy"))
        .args(args)
        .env("REACH_ENTROPY_CACHE_DIR", scratch("cache"))
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn report_is_byte_identical_across_runs() {
    let a = cli(&["report", &config("example2.toml")]);
    let b = cli(&["--no-cache", "report", &config("example2.toml")]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["controller_stats"]["domain_size"], 2);
    assert_eq!(v["entropy"]["N_R_include_target"], 1.0);
}

#[test]
fn example1_report_and_oracle() {
    let v = json(&cli(&["report", &config("example1.toml")]));
    assert_eq!(v["system_kind"], "finite");
    assert_eq!(v["entropy"]["N_R_include_target"], 1.0);
    assert_eq!(v["entropy"]["N_R_exclude_target"], 1.0);
    assert_eq!(v["coarsening_stats"]["group_count"], 2);

    let o = json(&cli(&["oracle", &config("example1.toml")]));
    assert_eq!(o["entropy"], 1.0);
    assert!(o["trivial_input"].is_null());
}

#[test]
fn entropy_modes_and_graph_export() {
    let incl = json(&cli(&["entropy", &config("example2.toml"), "--weight-mode", "include-target"]));
    let excl = json(&cli(&["entropy", &config("example2.toml"), "--weight-mode", "exclude-target"]));
    assert!(excl["N_R"].as_f64().unwrap() <= incl["N_R"].as_f64().unwrap());

    let dot = cli(&["export-graph", &config("example2.toml")]);
    assert!(dot.status.success());
    let text = String::from_utf8(dot.stdout).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("doublecircle"));
}

#[test]
fn simulate_reaches_target() {
    let traj = scratch("traj.csv");
    let out = cli(&["simulate", &config("example2.toml"), "--x0", "5.0", "--trajectory", traj.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["reached_target"], true);
    assert_eq!(v["R_H"], 1.0);
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert!(csv.starts_with("t,x0,"));
    assert!(csv.lines().count() >= 3);
}

#[test]
fn synthesize_and_abstract_commands() {
    let out = cli(&["synthesize", &config("example2.toml")]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().lines().count() >= 3);
    let v = json(&cli(&["abstract", &config("example2.toml")]));
    assert_eq!(v["q_cell_count"], 3);
    assert_eq!(v["t_cell_count"], 1);
}

#[test]
fn frr_check_passes_and_fails() {
    let ok = json(&cli(&[
        "check-frr",
        &config("split_concrete.toml"),
        &config("split_abstract.toml"),
        &config("split_witness.csv"),
    ]));
    assert_eq!(ok["frr_holds"], true);
    assert_eq!(ok["entropy"]["ordering_holds"], true);

    // relating the concrete target to a non-target abstract state breaks the inclusion
    let bad = scratch("bad_witness.csv");
    std::fs::write(&bad, "pair,0,1\npair,1,1\npair,1',0\npair,2,2\ninput,a,a\n").unwrap();
    let out =
        cli(&["check-frr", &config("split_concrete.toml"), &config("split_abstract.toml"), bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["frr_holds"], false);
    assert!(v["counterexample"].is_object());
}

#[test]
fn errors_exit_nonzero_with_message() {
    let missing = cli(&["report", "/nonexistent/config.toml"]);
    assert!(!missing.status.success());
    assert!(!missing.stderr.is_empty());

    let broken = scratch("broken.toml");
    std::fs::write(&broken, "[system]\nkind = \"finite\"\nstates = [\"a\"]\n").unwrap();
    let out = cli(&["report", broken.to_str().unwrap()]);
    assert!(!out.status.success());

    let out = cli(&["entropy", &config("example1.toml"), "--weight-mode", "sideways"]);
    assert!(!out.status.success());
}
