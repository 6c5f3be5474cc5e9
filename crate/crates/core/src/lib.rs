//! Learning-guided source-to-source transformation for a C-like subset.
//!
//! The pipeline: parse code into an AST ([`model`]), abstract it into a
//! fifteen-component feature vector ([`abstraction`]), rewrite it with
//! registered rules ([`rules`]), decide when code is ready for a target
//! platform with a decision tree ([`classify`]), and pick the next rule to
//! apply with a learned state-action table ([`rl`]).

pub mod abstraction;
pub mod classify;
pub mod model;
pub mod rl;
pub mod rules;
#[cfg(feature = "testsupport")]
pub mod testsupport;

pub use abstraction::{extract, state_key, FeatureVector, StateKey};
pub use classify::{fit, is_final, DecisionTree, Platform, PlatformSet};
pub use model::{interpret, parse, print, TranslationUnit};
pub use rl::{train, transform_greedy, LearnConfig, QTable, TrainingGraph};
pub use rules::{Registry, RewriteRule, RuleId, Site};
