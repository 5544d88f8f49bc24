use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causalg::models::{compile_poset, compile_tree, parse_dot, TreeSpec};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn causalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causalg"))
        .args(args)
        .env_remove("CAUSALG_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compile_movie_counts() {
    let o = causalg(&["compile", "--model", path(&data("movie.bn"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("36 atoms, 14 blocks, 24 chains after pinning, degree 4"));
}

#[test]
fn compile_small_tree_and_write_dot() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("t.tree");
    fs::write(&model, "model tree t\nvertex r\nvertex a\nvertex b\nvertex c\nedge r -> a\nedge r -> b\nedge r -> c\n").unwrap();
    let dot = dir.path().join("t.dot");
    let o = causalg(&["compile", "--model", path(&model), "--out", path(&dot)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("3 atoms, 1 block,"));
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));
}

#[test]
fn malformed_model_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.bn");
    fs::write(&model, "model bn bad\nvar X levels 2\nvar Y levels\n").unwrap();
    let o = causalg(&["compile", "--model", path(&model)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_model_is_an_error() {
    let o = causalg(&["chains"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identify_total_cause_of_ban() {
    let manifests = format!("{},{}", path(&data("exp2.man")), path(&data("exp3.man")));
    let o = causalg(&[
        "--model",
        path(&data("movie.bn")),
        "--constraints",
        path(&data("movietable.con")),
        "identify",
        "--manifest",
        &manifests,
        "--effect",
        path(&data("e.eff")),
        "--do",
        path(&data("ban.do")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "identifiable");
    assert!(v["expression"].as_str().unwrap().starts_with("e = "));
    assert!(stderr(&o).contains("identifiable: e = "));
}

#[test]
fn identify_non_identifiable_is_conclusive() {
    let o = causalg(&[
        "--model",
        path(&data("movie.bn")),
        "--constraints",
        path(&data("movietable.con")),
        "identify",
        "--manifest",
        path(&data("exp1.man")),
        "--effect",
        path(&data("e.eff")),
        "--do",
        "X2=2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "non-identifiable");
    assert!(v["witness"]["first"].is_object());
}

#[test]
fn joint_then_condition_and_marginal() {
    let dir = tempfile::tempdir().unwrap();
    let point = dir.path().join("point.json");
    fs::write(
        &point,
        r#"{"pi(X1=0)": "1/2", "pi(X1=1)": "1/2", "pi(X2=0|X1=0)": "1/3", "pi(X2=1|X1=0)": "2/3",
            "pi(X2=0|X1=1)": "1/4", "pi(X2=1|X1=1)": "3/4"}"#,
    )
    .unwrap();
    let joint = dir.path().join("joint.jsonl");
    let model = data("binary2.bn");
    let o = causalg(&["joint", "--model", path(&model), "--point", path(&point), "--out", path(&joint)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&joint).unwrap();
    assert_eq!(text.lines().next().unwrap(), r#"{"chain":"p(0,0)","prob":"1/6"}"#);

    let o = causalg(&["condition", "--model", path(&model), "--joint", path(&joint), "--event", "X1=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let probs: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["prob"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(probs, ["1/3", "2/3", "0", "0"]);

    let o = causalg(&["marginal", "--model", path(&model), "--joint", path(&joint), "--keep", "X2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(r#"{"chain":"X2=0","prob":"7/24"}"#), "{}", stdout(&o));
}

#[test]
fn random_joint_is_reproducible() {
    let model = data("movie.bn");
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_causalg"))
            .args(["joint", "--model", path(&model)])
            .env("CAUSALG_SEED", seed)
            .output()
            .unwrap()
    };
    let (a, b, c) = (run("7"), run("7"), run("8"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let flag = causalg(&["joint", "--model", path(&model), "--seed", "7"]);
    assert_eq!(flag.stdout, a.stdout);
}

#[test]
fn do_lists_manipulated_atoms() {
    let o = causalg(&["do", "--model", path(&data("movie.bn")), path(&data("ban.do"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 6);
    assert!(out.contains("p(1,2,1,1) = "));
    assert!(stderr(&o).contains("margin unchanged"));
}

#[test]
fn feasibility_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.con");
    fs::write(&bad, "eq: pi(X1=0) = 1/2\neq: pi(X1=0) = 1/3\n").unwrap();
    let model = data("binary2.bn");
    let o = causalg(&["feasible", "--model", path(&model), "--constraints", path(&bad), "--trials", "20"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("none-found"));

    let o = causalg(&[
        "feasible",
        "--model",
        path(&data("movie.bn")),
        "--constraints",
        &format!("{},{}", path(&data("movietable.con")), path(&data("movieineq.con"))),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn chains_of_poset() {
    let o = causalg(&["chains", "--model", path(&data("movie.poset"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().count() > 0);
    assert!(stdout(&o).lines().all(|l| l.starts_with("p(")));
}

#[test]
fn dot_round_trip_preserves_tree_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("t.tree");
    fs::write(
        &model,
        "model tree t\nvertex r\nvertex u\nvertex v\nvertex w\nvertex x\nedge r -> u\nedge r -> v\nedge u -> w\nedge u -> x\n",
    )
    .unwrap();
    let o = causalg(&["export-dot", "--model", path(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dot = stdout(&o);
    let from_dot = compile_poset(&parse_dot(&dot).unwrap()).unwrap();
    let tree = compile_tree(&TreeSpec::new(["r", "u", "v", "w", "x"], [("r", "u"), ("r", "v"), ("u", "w"), ("u", "x")]))
        .unwrap();
    assert_eq!(from_dot.atoms, tree.atoms);
    assert_eq!(from_dot.blocks, tree.blocks);
    assert_eq!(from_dot.equalities, tree.equalities);

    let reimported = dir.path().join("t.dot");
    fs::write(&reimported, &dot).unwrap();
    let a = causalg(&["compile", "--model", path(&model)]);
    let b = causalg(&["compile", "--model", path(&reimported)]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reproduce_movie_claims() {
    let o = causalg(&["reproduce-movie", "--trials", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["claims_hold"], true);
    assert_eq!(v["cases"].as_array().unwrap().len(), 14);
}
