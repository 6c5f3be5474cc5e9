//! Golden feature vectors for the shipped example snippets and the
//! convolution transformation sequence.
//!
//! Expected component values were hand-traced from the feature
//! definitions before the extractor was written; the full vectors are
//! frozen here so any extractor change shows up as a diff.

use rewrite_rl_core::abstraction::{extract, state_key, FeatureVector};
use rewrite_rl_core::model::parse;
use rewrite_rl_core::rules::{Registry, RuleId};

fn snippet(name: &str) -> String {
    let path = format!("{}/../../data/snippets/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn extract_file(name: &str) -> FeatureVector {
    extract(&parse(&snippet(name)).expect("snippet parses"))
}

#[test]
fn shifted_writes_left_counts_one() {
    let fv = extract_file("shifted_writes_left.c");
    assert_eq!(fv[2], 1, "multiple writes, one with positive offset");
    assert_eq!(fv.components(), &[0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1]);
}

#[test]
fn shifted_writes_right_counts_zero() {
    let fv = extract_file("shifted_writes_right.c");
    assert_eq!(fv[2], 0, "a single write per iteration does not count");
    assert_eq!(fv.components(), &[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0]);
}

#[test]
fn loop_schedule_sets_flag() {
    let fv = extract_file("loop_schedule.c");
    assert_eq!(fv[8], 1);
    assert_eq!(fv.components(), &[1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 2, 0]);
}

#[test]
fn aux_index_variable_counts_one() {
    let fv = extract_file("aux_index.c");
    assert_eq!(fv[12], 1);
    assert_eq!(fv[13], 1);
    assert_eq!(fv[14], 0);
    assert_eq!(fv.components(), &[0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 1, 0]);
}

#[test]
fn non_static_limit_sets_flag() {
    let fv = extract_file("non_static_limit.c");
    assert_eq!(fv[6], 1, "a call in a loop condition is not a static limit");
    assert_eq!(fv.components(), &[1, 3, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 2, 0]);
}

/// Apply R0 three times, then R1 once, checking the per-rule feature
/// deltas at every step.
#[test]
fn convolution_sequence_feature_deltas() {
    let source = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/convolution.c"
    ))
    .expect("convolution fixture");
    let registry = Registry::with_defaults();

    let c0 = parse(&source).unwrap();
    let v0 = extract(&c0);
    assert_eq!(v0.components(), &[3, 0, 0, 0, 0, 0, 0, 0, 0, 6, 0, 3, 0, 4, 0]);

    // Flattening consumes one multi-dimensional array per step and leaves
    // every other component alone (component 12 may move in general; it
    // does not here).
    let mut unit = c0;
    let mut previous = v0;
    for expected_sites in [3, 2, 1] {
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        assert_eq!(sites.len(), expected_sites);
        unit = registry.apply(&unit, RuleId(0), &sites[0]).unwrap().unit;
        let current = extract(&unit);
        assert_eq!(current[11], previous[11] - 1);
        for idx in (0..15).filter(|i| *i != 11 && *i != 12) {
            assert_eq!(current[idx], previous[idx], "component {idx} moved under R0");
        }
        previous = current;
    }
    assert_eq!(previous.components(), &[3, 0, 0, 0, 0, 0, 0, 0, 0, 6, 0, 0, 0, 4, 0]);

    // Collapsing removes one loop and one nesting level.
    let sites = registry.find_sites(&unit, RuleId(1)).unwrap();
    assert!(!sites.is_empty());
    unit = registry.apply(&unit, RuleId(1), &sites[0]).unwrap().unit;
    let v4 = extract(&unit);
    assert_eq!(v4[13], previous[13] - 1);
    assert_eq!(v4[0], previous[0] - 1);
    assert_eq!(v4.components(), &[2, 0, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 2, 3, 0]);

    // All five states are distinct.
    let keys = [
        state_key(&v0),
        state_after_flattens(&source, 1),
        state_after_flattens(&source, 2),
        state_key(&previous),
        state_key(&v4),
    ];
    let mut unique = keys.to_vec();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), keys.len());
}

/// State key of the convolution fixture after `n` flatten steps.
fn state_after_flattens(source: &str, n: usize) -> rewrite_rl_core::abstraction::StateKey {
    let registry = Registry::with_defaults();
    let mut unit = parse(source).unwrap();
    for _ in 0..n {
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        unit = registry.apply(&unit, RuleId(0), &sites[0]).unwrap().unit;
    }
    state_key(&extract(&unit))
}
