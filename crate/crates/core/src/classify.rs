//! Decision-tree classification of feature vectors into platform
//! readiness classes.
//!
//! The target label is a non-empty subset of the four supported platforms,
//! giving fifteen possible classes. Trees are grown by recursive binary
//! partitioning on Gini impurity and double as the stop criterion of the
//! transformation search: code is "final" for a platform once its predicted
//! class contains that platform.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{FeatureVector, FEATURE_COUNT};

/// A supported target platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Platform {
    #[serde(rename = "FPGA")]
    Fpga,
    #[serde(rename = "GPU")]
    Gpu,
    #[serde(rename = "SM_CPU")]
    SmCpu,
    #[serde(rename = "DM_CPU")]
    DmCpu,
}

impl Platform {
    pub const ALL: [Platform; 4] = [Platform::Fpga, Platform::Gpu, Platform::SmCpu, Platform::DmCpu];

    pub fn name(self) -> &'static str {
        match self {
            Platform::Fpga => "FPGA",
            Platform::Gpu => "GPU",
            Platform::SmCpu => "SM_CPU",
            Platform::DmCpu => "DM_CPU",
        }
    }

    fn bit(self) -> u8 {
        match self {
            Platform::Fpga => 1 << 0,
            Platform::Gpu => 1 << 1,
            Platform::SmCpu => 1 << 2,
            Platform::DmCpu => 1 << 3,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Platform {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Platform, ClassifyError> {
        Platform::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ClassifyError::UnknownPlatform(s.to_string()))
    }
}

/// Non-empty set of platforms: the class of the target variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlatformSet(u8);

impl PlatformSet {
    pub fn new(platforms: impl IntoIterator<Item = Platform>) -> Result<PlatformSet, ClassifyError> {
        let mut bits = 0u8;
        for p in platforms {
            bits |= p.bit();
        }
        if bits == 0 {
            return Err(ClassifyError::EmptyClass);
        }
        Ok(PlatformSet(bits))
    }

    pub fn contains(&self, platform: Platform) -> bool {
        self.0 & platform.bit() != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = Platform> + '_ {
        Platform::ALL.into_iter().filter(|p| self.contains(*p))
    }

    /// Canonical sort key: class size first, then member order.
    fn canonical_key(&self) -> (usize, Vec<u8>) {
        let members: Vec<u8> = Platform::ALL
            .iter()
            .enumerate()
            .filter(|(_, p)| self.contains(**p))
            .map(|(i, _)| i as u8)
            .collect();
        (self.len(), members)
    }
}

impl PartialOrd for PlatformSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PlatformSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.canonical_key().cmp(&other.canonical_key())
    }
}

impl fmt::Display for PlatformSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(|p| p.name()).collect();
        f.write_str(&names.join("+"))
    }
}

impl Serialize for PlatformSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for PlatformSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let platforms = Vec::<Platform>::deserialize(deserializer)?;
        PlatformSet::new(platforms).map_err(serde::de::Error::custom)
    }
}

/// All fifteen classes in canonical order (by size, then member order).
pub fn platform_classes() -> Vec<PlatformSet> {
    let mut classes: Vec<PlatformSet> = (1u8..16).map(PlatformSet).collect();
    classes.sort();
    classes
}

/// One training record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub classes: PlatformSet,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyInput,
    #[error("samples {first} and {second} share features but disagree on the class")]
    AmbiguousData { first: usize, second: usize },
    #[error("a class must contain at least one platform")]
    EmptyClass,
    #[error("unknown platform `{0}`")]
    UnknownPlatform(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

#[derive(Debug, Clone, Copy)]
pub struct FitParams {
    pub min_samples: usize,
    pub max_depth: Option<usize>,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams { min_samples: 1, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { class: PlatformSet, counts: Vec<ClassCount> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassCount {
    class: PlatformSet,
    count: usize,
}

/// A fitted classification tree. Immutable and cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Route a vector to its leaf class. `x[feature] <= threshold` goes left.
    pub fn predict(&self, x: &FeatureVector) -> PlatformSet {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    at = if (x.get(*feature) as f64) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Root split as (feature, threshold), if the tree is not a single leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first() {
            Some(Node::Split { feature, threshold, .. }) => Some((*feature, *threshold)),
            _ => None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn to_json_string(&self) -> String {
        let file = TreeFile { schema: 1, nodes: self.nodes.clone() };
        let mut text = serde_json::to_string_pretty(&file).expect("tree serializes");
        text.push('\n');
        text
    }

    pub fn from_json_str(text: &str) -> Result<DecisionTree, ClassifyError> {
        let file: TreeFile =
            serde_json::from_str(text).map_err(|e| ClassifyError::InvalidTree(e.to_string()))?;
        if file.schema != 1 {
            return Err(ClassifyError::InvalidTree(format!(
                "unsupported schema {}",
                file.schema
            )));
        }
        let tree = DecisionTree { nodes: file.nodes };
        if tree.nodes.is_empty() {
            return Err(ClassifyError::InvalidTree("no nodes".into()));
        }
        for node in &tree.nodes {
            if let Node::Split { feature, left, right, .. } = node {
                if *feature >= FEATURE_COUNT || *left >= tree.nodes.len() || *right >= tree.nodes.len()
                {
                    return Err(ClassifyError::InvalidTree("index out of range".into()));
                }
            }
        }
        Ok(tree)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    schema: u32,
    nodes: Vec<Node>,
}

/// True when the predicted class of `x` contains `target`.
pub fn is_final(tree: &DecisionTree, x: &FeatureVector, target: Platform) -> bool {
    tree.predict(x).contains(target)
}

/// Grow a tree by recursive binary partitioning on Gini impurity.
///
/// Splits are chosen by maximum impurity decrease; ties go to the lowest
/// feature index, then the lowest threshold. Recursion stops at pure
/// nodes, when no candidate threshold exists, or when `params` say so.
pub fn fit(samples: &[LabeledSample], params: FitParams) -> Result<DecisionTree, ClassifyError> {
    if samples.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let mut seen: BTreeMap<&[u32; FEATURE_COUNT], (usize, PlatformSet)> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        if let Some((first, class)) = seen.get(s.features.components()) {
            if *class != s.classes {
                return Err(ClassifyError::AmbiguousData { first: *first, second: i });
            }
        } else {
            seen.insert(s.features.components(), (i, s.classes));
        }
    }

    let mut nodes = Vec::new();
    let indices: Vec<usize> = (0..samples.len()).collect();
    grow(samples, &indices, &params, 0, &mut nodes);
    Ok(DecisionTree { nodes })
}

fn grow(
    samples: &[LabeledSample],
    indices: &[usize],
    params: &FitParams,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let counts = class_counts(samples, indices);
    let is_pure = counts.len() == 1;
    let depth_stop = params.max_depth.is_some_and(|d| depth >= d);
    let size_stop = indices.len() < params.min_samples;

    if !is_pure && !depth_stop && !size_stop {
        if let Some((feature, threshold)) = best_split(samples, indices) {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| (samples[i].features.get(feature) as f64) <= threshold);
            let at = nodes.len();
            nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
            let left = grow(samples, &left_idx, params, depth + 1, nodes);
            let right = grow(samples, &right_idx, params, depth + 1, nodes);
            nodes[at] = Node::Split { feature, threshold, left, right };
            return at;
        }
    }

    // Leaf: majority class, ties broken by canonical class order.
    let class = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(class, _)| *class)
        .expect("leaf over non-empty sample set");
    let counts_vec: Vec<ClassCount> =
        counts.into_iter().map(|(class, count)| ClassCount { class, count }).collect();
    let at = nodes.len();
    nodes.push(Node::Leaf { class, counts: counts_vec });
    at
}

fn class_counts(samples: &[LabeledSample], indices: &[usize]) -> BTreeMap<PlatformSet, usize> {
    let mut counts = BTreeMap::new();
    for &i in indices {
        *counts.entry(samples[i].classes).or_insert(0) += 1;
    }
    counts
}

/// Gini impurity of a class histogram: 1 - sum p_c^2.
fn gini(counts: &BTreeMap<PlatformSet, usize>, total: usize) -> f64 {
    let mut sum_sq = 0.0;
    for count in counts.values() {
        let p = *count as f64 / total as f64;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

/// Best `(feature, threshold)` by Gini gain over midpoint candidates.
fn best_split(samples: &[LabeledSample], indices: &[usize]) -> Option<(usize, f64)> {
    let total = indices.len();
    let parent = gini(&class_counts(samples, indices), total);
    let mut best: Option<(f64, usize, f64)> = None;

    for feature in 0..FEATURE_COUNT {
        let mut values: Vec<u32> = indices.iter().map(|&i| samples[i].features.get(feature)).collect();
        values.sort_unstable();
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] as f64 + pair[1] as f64) / 2.0;
            let (left, right): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| (samples[i].features.get(feature) as f64) <= threshold);
            let weighted = (left.len() as f64 / total as f64)
                * gini(&class_counts(samples, &left), left.len())
                + (right.len() as f64 / total as f64)
                    * gini(&class_counts(samples, &right), right.len());
            let gain = parent - weighted;
            let candidate = (gain, feature, threshold);
            let better = match &best {
                None => true,
                Some((best_gain, best_feature, best_threshold)) => {
                    gain > *best_gain
                        || (gain == *best_gain
                            && (feature < *best_feature
                                || (feature == *best_feature && threshold < *best_threshold)))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best.map(|(_, feature, threshold)| (feature, threshold))
}

/// Fraction of samples the tree classifies exactly.
pub fn training_accuracy(tree: &DecisionTree, samples: &[LabeledSample]) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let hits = samples.iter().filter(|s| tree.predict(&s.features) == s.classes).count();
    hits as f64 / samples.len() as f64
}

// ---------------------------------------------------------------------------
// Corpus file I/O
// ---------------------------------------------------------------------------

/// Parse a labeled corpus: a JSON array of `{features, classes}` records.
pub fn parse_corpus(text: &str) -> Result<Vec<LabeledSample>, ClassifyError> {
    serde_json::from_str::<Vec<LabeledSample>>(text)
        .map_err(|e| ClassifyError::InvalidTree(format!("corpus: {e}")))
}

pub fn corpus_to_json(samples: &[LabeledSample]) -> String {
    let mut text = serde_json::to_string_pretty(samples).expect("corpus serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(edit: impl Fn(&mut [u32; FEATURE_COUNT])) -> FeatureVector {
        let mut components = [0u32; FEATURE_COUNT];
        edit(&mut components);
        FeatureVector::new(components).unwrap()
    }

    fn class(platforms: &[Platform]) -> PlatformSet {
        PlatformSet::new(platforms.iter().copied()).unwrap()
    }

    #[test]
    fn fifteen_classes_no_duplicates() {
        let classes = platform_classes();
        assert_eq!(classes.len(), 15);
        let mut dedup = classes.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 15);
        assert!(classes.contains(&class(&[Platform::Gpu])));
        assert!(classes.contains(&class(&Platform::ALL)));
        assert!(classes.iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn canonical_order_is_size_then_members() {
        let classes = platform_classes();
        assert_eq!(classes[0], class(&[Platform::Fpga]));
        assert_eq!(classes[1], class(&[Platform::Gpu]));
        assert_eq!(classes[4], class(&[Platform::Fpga, Platform::Gpu]));
        assert_eq!(classes[14], class(&Platform::ALL));
    }

    #[test]
    fn single_sample_fits_to_single_leaf() {
        let samples = vec![LabeledSample {
            features: fv(|_| {}),
            classes: class(&[Platform::Gpu]),
        }];
        let tree = fit(&samples, FitParams::default()).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert_eq!(tree.predict(&samples[0].features), samples[0].classes);
    }

    #[test]
    fn two_samples_split_on_feature_11_at_one() {
        let samples = vec![
            LabeledSample { features: fv(|c| c[11] = 0), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|c| c[11] = 2), classes: class(&[Platform::Fpga]) },
        ];
        let tree = fit(&samples, FitParams::default()).unwrap();
        assert_eq!(tree.root_split(), Some((11, 1.0)));
        // Unseen value on the right side routes to the FPGA leaf.
        assert_eq!(tree.predict(&fv(|c| c[11] = 5)), class(&[Platform::Fpga]));
    }

    #[test]
    fn memorizes_consistent_data() {
        let samples = vec![
            LabeledSample { features: fv(|c| c[13] = 4), classes: class(&[Platform::DmCpu]) },
            LabeledSample { features: fv(|c| { c[13] = 4; c[1] = 2 }), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|c| { c[13] = 1; c[7] = 1 }), classes: class(&[Platform::Gpu, Platform::SmCpu]) },
            LabeledSample { features: fv(|c| c[11] = 3), classes: class(&[Platform::Fpga]) },
            LabeledSample { features: fv(|c| c[5] = 7), classes: class(&[Platform::SmCpu]) },
        ];
        let tree = fit(&samples, FitParams::default()).unwrap();
        assert_eq!(training_accuracy(&tree, &samples), 1.0);
    }

    #[test]
    fn xor_shaped_data_is_memorized() {
        // No single split improves impurity at the root, yet the tree
        // must still separate the classes.
        let samples = vec![
            LabeledSample { features: fv(|c| { c[1] = 0; c[5] = 0 }), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|c| { c[1] = 0; c[5] = 1 }), classes: class(&[Platform::Fpga]) },
            LabeledSample { features: fv(|c| { c[1] = 1; c[5] = 0 }), classes: class(&[Platform::Fpga]) },
            LabeledSample { features: fv(|c| { c[1] = 1; c[5] = 1 }), classes: class(&[Platform::Gpu]) },
        ];
        let tree = fit(&samples, FitParams::default()).unwrap();
        assert_eq!(training_accuracy(&tree, &samples), 1.0);
    }

    #[test]
    fn ambiguous_data_rejected() {
        let samples = vec![
            LabeledSample { features: fv(|_| {}), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|_| {}), classes: class(&[Platform::Fpga]) },
        ];
        let err = fit(&samples, FitParams::default()).unwrap_err();
        assert_eq!(err, ClassifyError::AmbiguousData { first: 0, second: 1 });
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(fit(&[], FitParams::default()).unwrap_err(), ClassifyError::EmptyInput);
    }

    #[test]
    fn prediction_ignores_untested_features() {
        let samples = vec![
            LabeledSample { features: fv(|c| c[11] = 0), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|c| c[11] = 2), classes: class(&[Platform::Fpga]) },
        ];
        let tree = fit(&samples, FitParams::default()).unwrap();
        // Feature 5 is never tested on the path; perturbing it cannot
        // change the class.
        let base = tree.predict(&fv(|c| c[11] = 2));
        let perturbed = tree.predict(&fv(|c| { c[11] = 2; c[5] = 9 }));
        assert_eq!(base, perturbed);
    }

    #[test]
    fn is_final_checks_membership() {
        let samples = vec![
            LabeledSample {
                features: fv(|c| c[11] = 0),
                classes: class(&[Platform::Gpu, Platform::SmCpu]),
            },
            LabeledSample { features: fv(|c| c[11] = 2), classes: class(&[Platform::Fpga]) },
        ];
        let tree = fit(&samples, FitParams::default()).unwrap();
        let ready = fv(|c| c[11] = 0);
        assert!(is_final(&tree, &ready, Platform::Gpu));
        assert!(!is_final(&tree, &ready, Platform::Fpga));
    }

    #[test]
    fn tree_round_trips_through_json() {
        let samples = vec![
            LabeledSample { features: fv(|c| c[11] = 0), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|c| c[11] = 2), classes: class(&[Platform::Fpga]) },
            LabeledSample { features: fv(|c| c[0] = 0), classes: class(&[Platform::Gpu]) },
        ];
        let tree = fit(&samples, FitParams::default()).unwrap_or_else(|e| panic!("{e}"));
        let text = tree.to_json_string();
        let back = DecisionTree::from_json_str(&text).unwrap();
        assert_eq!(tree, back);
        assert_eq!(text, back.to_json_string());
    }

    #[test]
    fn corpus_round_trips() {
        let samples = vec![
            LabeledSample { features: fv(|c| c[13] = 2), classes: class(&[Platform::Gpu]) },
            LabeledSample { features: fv(|_| {}), classes: class(&[Platform::Fpga, Platform::DmCpu]) },
        ];
        let text = corpus_to_json(&samples);
        let back = parse_corpus(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].classes, samples[0].classes);
        assert_eq!(back[1].features, samples[1].features);
    }
}
