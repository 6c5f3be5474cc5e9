//! Command-line behavior: output formats, exit codes, error paths.

mod common;

use common::{cli, convolution_graph, data_path, read_data};
use rewrite_rl_core::rl::TrainingGraph;

#[test]
fn extract_json_is_a_fifteen_element_array() {
    let (code, out, _) = cli(&["extract", &data_path("convolution.c"), "--json"]);
    assert_eq!(code, 0);
    let values: Vec<u32> = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(values.len(), 15);
    assert_eq!(values, vec![3, 0, 0, 0, 0, 0, 0, 0, 0, 6, 0, 3, 0, 4, 0]);
}

#[test]
fn extract_human_output_labels_every_component() {
    let (code, out, _) = cli(&["extract", &data_path("convolution.c")]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 15);
    assert!(out.contains("max_nested_loop_depth"));
    assert!(out.contains("total_for_loops"));
}

#[test]
fn missing_file_exits_one_and_names_the_file() {
    let (code, out, err) = cli(&["extract", "no_such_file.c"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("no_such_file.c"), "{err}");
}

#[test]
fn usage_error_exits_two() {
    let (code, _, err) = cli(&["extract"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage") || err.contains("usage"), "{err}");
    let (code, _, _) = cli(&["not-a-command"]);
    assert_eq!(code, 2);
}

#[test]
fn help_goes_to_stdout_with_exit_zero() {
    let (code, out, err) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("extract"));
    assert!(err.is_empty());
}

#[test]
fn apply_emits_reparsable_source() {
    let (code, out, _) = cli(&["apply", &data_path("convolution.c"), "--rule", "0"]);
    assert_eq!(code, 0);
    let unit = rewrite_rl_core::model::parse(&out).unwrap();
    assert!(out.contains("input_image[100]"));
    assert_eq!(rewrite_rl_core::abstraction::extract(&unit)[11], 2);
}

#[test]
fn apply_unknown_rule_exits_one() {
    let (code, _, err) = cli(&["apply", &data_path("convolution.c"), "--rule", "7"]);
    assert_eq!(code, 1);
    assert!(err.contains("R7"), "{err}");
}

#[test]
fn apply_site_out_of_range_exits_one() {
    let (code, _, err) = cli(&["apply", &data_path("convolution.c"), "--rule", "0", "--site", "9"]);
    assert_eq!(code, 1);
    assert!(err.contains("site"), "{err}");
}

#[test]
fn train_missing_graph_exits_one_naming_file() {
    let (code, _, err) =
        cli(&["train", "--graph", "missing.json", "-o", "/tmp/unused_q.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn classify_predict_routes_through_fitted_tree() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let (code, _, _) =
        cli(&["classify", "fit", "--corpus", &data_path("corpus.json"), "-o", tree.to_str().unwrap()]);
    assert_eq!(code, 0);

    // The fully rewritten convolution state is FPGA-ready.
    let (code, out, _) = cli(&[
        "classify",
        "predict",
        "--tree",
        tree.to_str().unwrap(),
        "--features",
        "2,0,0,0,0,0,0,0,0,5,0,0,2,3,0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "FPGA");

    let (code, out, _) = cli(&[
        "classify",
        "predict",
        "--tree",
        tree.to_str().unwrap(),
        "--features",
        "2,0,0,0,0,0,0,0,0,5,0,0,2,3,0",
        "--json",
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["classes"], serde_json::json!(["FPGA"]));
}

#[test]
fn classify_predict_rejects_malformed_features() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    cli(&["classify", "fit", "--corpus", &data_path("corpus.json"), "-o", tree.to_str().unwrap()]);
    let (code, _, err) =
        cli(&["classify", "predict", "--tree", tree.to_str().unwrap(), "--features", "1,2,3"]);
    assert_eq!(code, 1);
    assert!(err.contains("15"), "{err}");
}

#[test]
fn gamma_at_one_prints_warning_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.json");
    let (code, out, err) = cli(&[
        "train",
        "--graph",
        &data_path("convolution_graph.json"),
        "--gamma",
        "1.0",
        "--episodes",
        "10",
        "-o",
        q.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("diverge"), "{err}");
    assert!(!out.contains("diverge"));
}

#[test]
fn qtable_show_json_reproduces_canonical_table() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.json");
    cli(&[
        "train",
        "--graph",
        &data_path("convolution_graph.json"),
        "--episodes",
        "100",
        "--seed",
        "3",
        "-o",
        q.to_str().unwrap(),
    ]);
    let stored = std::fs::read_to_string(&q).unwrap();
    let (code, out, _) = cli(&["qtable-show", "--qtable", q.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    assert_eq!(out, stored);
}

#[test]
fn shipped_graph_matches_regenerated_sequence() {
    let (graph, _) = convolution_graph(100.0);
    let shipped = TrainingGraph::from_json_str(&read_data("convolution_graph.json")).unwrap();
    assert_eq!(graph, shipped, "data/convolution_graph.json is stale");
    assert_eq!(graph.to_json_string(), read_data("convolution_graph.json"));
}

#[test]
fn diagnostics_honor_env_and_stay_on_stderr() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_rewrite-rl"))
        .args(["extract", &data_path("convolution.c"), "--json"])
        .env("REWRITE_RL_LOG", "debug")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    let _: Vec<u32> = serde_json::from_str(stdout.trim()).expect("stdout stays machine readable");
    assert!(stderr.contains("debug:"), "{stderr}");

    let quiet = std::process::Command::new(env!("CARGO_BIN_EXE_rewrite-rl"))
        .args(["extract", &data_path("convolution.c"), "--json"])
        .env("REWRITE_RL_LOG", "off")
        .output()
        .unwrap();
    assert!(quiet.stderr.is_empty());
}
