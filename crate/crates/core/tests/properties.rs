//! Property tests over feature vectors, state keys, and tree fitting.

use proptest::prelude::*;

use rewrite_rl_core::abstraction::{extract, state_key, FeatureVector, FEATURE_COUNT};
use rewrite_rl_core::classify::{
    fit, platform_classes, training_accuracy, FitParams, LabeledSample,
};
use rewrite_rl_core::model::parse;
use rewrite_rl_core::testsupport::round_trip_case;

/// Components that satisfy the vector invariants by construction.
fn valid_components() -> impl Strategy<Value = [u32; FEATURE_COUNT]> {
    (
        0u32..6,   // total loops
        any::<[bool; 4]>(),
        proptest::array::uniform8(0u32..5),
    )
        .prop_map(|(total, flags, counts)| {
            let depth = if total == 0 { 0 } else { counts[0] % total };
            let iter_indep = if total == 0 { 0 } else { counts[1] % (total + 1) };
            let non_norm = if total == 0 { 0 } else { counts[2] % (total + 1) };
            [
                depth,
                counts[3],
                counts[4],
                flags[0] as u32,
                flags[1] as u32,
                counts[5],
                flags[2] as u32,
                iter_indep,
                flags[3] as u32,
                counts[6],
                counts[7],
                counts[0],
                counts[1],
                total,
                non_norm,
            ]
        })
}

proptest! {
    #[test]
    fn state_key_is_injective(a in valid_components(), b in valid_components()) {
        let fa = FeatureVector::new(a).unwrap();
        let fb = FeatureVector::new(b).unwrap();
        prop_assert_eq!(state_key(&fa) == state_key(&fb), fa == fb);
    }

    #[test]
    fn state_key_has_fifteen_fields(a in valid_components()) {
        let fv = FeatureVector::new(a).unwrap();
        let keytext = state_key(&fv).to_string();
        prop_assert_eq!(keytext.split(',').count(), FEATURE_COUNT);
        for (text, value) in keytext.split(',').zip(fv.components()) {
            prop_assert_eq!(text.parse::<u32>().unwrap(), *value);
        }
    }

    #[test]
    fn consistent_training_sets_are_memorized(
        labels in proptest::collection::vec(0usize..15, 1..24),
        seeds in proptest::collection::vec(any::<u32>(), 1..24),
    ) {
        let classes = platform_classes();
        let n = labels.len().min(seeds.len());
        let mut samples = Vec::new();
        for k in 0..n {
            // Distinct vectors by construction: component 1 carries the index.
            let mut c = [0u32; FEATURE_COUNT];
            c[1] = k as u32;
            c[5] = seeds[k] % 3;
            c[11] = (seeds[k] / 3) % 4;
            samples.push(LabeledSample {
                features: FeatureVector::new(c).unwrap(),
                classes: classes[labels[k]],
            });
        }
        let tree = fit(&samples, FitParams::default()).unwrap();
        prop_assert_eq!(training_accuracy(&tree, &samples), 1.0);
    }
}

proptest! {
    /// The fitted root split's Gini gain matches the maximum over an
    /// exhaustive (feature, threshold) enumeration.
    #[test]
    fn root_split_is_gini_optimal(
        labels in proptest::collection::vec(0usize..15, 2..32),
        values in proptest::collection::vec((0u32..4, 0u32..4, 0u32..4), 2..32),
    ) {
        let classes = platform_classes();
        let n = labels.len().min(values.len());
        let mut samples = Vec::new();
        for k in 0..n {
            let mut c = [0u32; FEATURE_COUNT];
            c[1] = values[k].0;
            c[5] = values[k].1;
            c[11] = values[k].2;
            c[9] = k as u32; // keep vectors distinct
            samples.push(LabeledSample {
                features: FeatureVector::new(c).unwrap(),
                classes: classes[labels[k]],
            });
        }
        let tree = fit(&samples, FitParams::default()).unwrap();
        if let Some((feature, threshold)) = tree.root_split() {
            let fitted_gain = split_gain(&samples, feature, threshold);
            let best_gain = enumerate_best_gain(&samples);
            prop_assert!(
                (fitted_gain - best_gain).abs() <= 1e-12,
                "root ({feature}, {threshold}) gain {fitted_gain} < best {best_gain}"
            );
        }
    }
}

fn gini_of(subset: &[&LabeledSample]) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for s in subset {
        *counts.entry(s.classes).or_insert(0usize) += 1;
    }
    let n = subset.len() as f64;
    1.0 - counts.values().map(|c| (*c as f64 / n).powi(2)).sum::<f64>()
}

fn split_gain(samples: &[LabeledSample], feature: usize, threshold: f64) -> f64 {
    let all: Vec<&LabeledSample> = samples.iter().collect();
    let (l, r): (Vec<&LabeledSample>, Vec<&LabeledSample>) =
        all.iter().partition(|s| (s.features.get(feature) as f64) <= threshold);
    gini_of(&all)
        - l.len() as f64 / all.len() as f64 * gini_of(&l)
        - r.len() as f64 / all.len() as f64 * gini_of(&r)
}

fn enumerate_best_gain(samples: &[LabeledSample]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for feature in 0..FEATURE_COUNT {
        let mut values: Vec<u32> = samples.iter().map(|s| s.features.get(feature)).collect();
        values.sort_unstable();
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] as f64 + pair[1] as f64) / 2.0;
            best = best.max(split_gain(samples, feature, threshold));
        }
    }
    best
}

/// Extractor outputs always satisfy the vector invariants; constructing
/// the vector re-checks them, so extraction must not panic.
#[test]
fn extractor_output_is_always_valid() {
    for seed in 0..150 {
        let unit = round_trip_case(seed);
        let fv = extract(&unit);
        let reparsed = parse(&rewrite_rl_core::model::print(&unit)).unwrap();
        assert_eq!(extract(&reparsed), fv, "seed {seed}: extraction is pure");
    }
}
