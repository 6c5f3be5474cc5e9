//! Helpers shared by the CLI test targets.

use rewrite_rl_core::abstraction::{extract, state_key, StateKey};
use rewrite_rl_core::model::parse;
use rewrite_rl_core::rl::TrainingGraph;
use rewrite_rl_core::rules::{Registry, RuleId};

pub fn data_path(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn read_data(name: &str) -> String {
    let path = data_path(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Replay the convolution rewrite sequence (three flattens, one collapse)
/// and build the five-state training graph from the observed states.
pub fn convolution_graph(reward: f64) -> (TrainingGraph, Vec<StateKey>) {
    let registry = Registry::with_defaults();
    let mut unit = parse(&read_data("convolution.c")).expect("fixture parses");
    let mut keys = vec![state_key(&extract(&unit))];
    let plan = [RuleId(0), RuleId(0), RuleId(0), RuleId(1)];
    for rule in plan {
        let sites = registry.find_sites(&unit, rule).expect("known rule");
        unit = registry.apply(&unit, rule, &sites[0]).expect("site matches").unit;
        keys.push(state_key(&extract(&unit)));
    }

    let mut graph = TrainingGraph::new();
    for (step, rule) in plan.iter().enumerate() {
        graph.add_transition(keys[step].clone(), *rule, keys[step + 1].clone()).unwrap();
    }
    graph.set_final(keys[4].clone(), reward);
    graph.validate().unwrap();
    (graph, keys)
}

/// Run the CLI against in-memory buffers; returns (exit, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["rewrite-rl".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = rewrite_rl_cli::run_cli(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
