use std::process::{Command, Output};

use ktree::marginals::marginal_tree;
use ktree::rng::replicate;
use ktree::treegrow::GrowingTree;

fn ktree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktree")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn grow_prints_tree_with_kn_plus_one_edges() {
    let out = ktree(&["grow", "--k", "3", "--n", "3", "--seed", "7"]);
    assert!(out.status.success());
    let tree = GrowingTree::from_json(&stdout(&out)).unwrap();
    assert_eq!(tree.edge_count(), 10);
    assert_eq!(tree, GrowingTree::grown(3, 3, &mut replicate(7, 0)).unwrap());
}

#[test]
fn marginal_from_file_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let path_str = path.to_str().unwrap();
    assert!(ktree(&["grow", "--k", "2", "--n", "40", "--seed", "3", "-o", path_str]).status.success());
    let out = ktree(&["marginal", "--input", path_str, "--p", "5"]);
    assert!(out.status.success());
    let tree = GrowingTree::grown(2, 40, &mut replicate(3, 0)).unwrap();
    assert_eq!(stdout(&out).trim(), marginal_tree(&tree, 5).unwrap().to_json());
}

#[test]
fn prune_reports_retained_internal_count() {
    let out = ktree(&["prune", "--k", "3", "--n", "50", "--seed", "11", "--kp", "2"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let tree = GrowingTree::grown(3, 50, &mut replicate(11, 0)).unwrap();
    assert_eq!(doc["retained_internal"].as_u64().unwrap(), tree.retained_internal_count(2).unwrap());
}

#[test]
fn crp_trajectory_has_one_row_per_step() {
    let out = ktree(&["crp", "--alpha", "0.5", "--theta", "0.5", "--steps", "20", "--seed", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("step,table_count,largest_table"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn verify_qn_passes() {
    let out = ktree(&["verify", "qn", "--k", "2", "--nmax", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn experiment_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = ktree(&[
        "experiment", "spine", "--k", "2", "--n", "100,200", "--reps", "10", "--seed", "5", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["reports"].as_array().is_some_and(|r| !r.is_empty()));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 11);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ktree(&["grow", "--k", "3", "--n", "3"]).status.code(), Some(2));
    assert_eq!(ktree(&["grow", "--k", "1", "--n", "3", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(ktree(&["marginal", "--p", "2", "--k", "2"]).status.code(), Some(2));
    assert_eq!(ktree(&["experiment", "nonsense", "--k", "2", "--n", "5", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(ktree(&["bogus"]).status.code(), Some(2));
}
