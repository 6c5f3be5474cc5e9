//! Tabular state-action learning over transformation sequences.
//!
//! A learning episode walks a training graph greedily by table value,
//! then replays the visited pairs in reverse temporal order through the
//! update rule
//!
//! ```text
//! q(s,a) <- q(s,a) + alpha * (r + gamma * q(s',a') - q(s,a))
//! ```
//!
//! with `a'` the action actually taken at `s'` (the row maximum at the end
//! of the episode). Rows of final states are frozen at the initial value.
//! Training is deterministic given the graph and config: all randomness
//! (start states, tie-breaking) flows from one seeded generator.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{extract, state_key, FeatureVector, StateKey};
use crate::classify::{is_final, DecisionTree, Platform};
use crate::model::TranslationUnit;
use crate::rules::{Registry, RuleError, RuleId, Site};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RlError {
    #[error("no actions available in state {0}")]
    NoActions(StateKey),
    #[error("state {0} is final; its row is frozen")]
    FinalStateUpdate(StateKey),
    #[error("bad episode start {0}: not a known non-final state")]
    BadStart(StateKey),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid table file: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Deterministic generator used across training and greedy transformation.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// State-action table
// ---------------------------------------------------------------------------

/// The state-action table. Absent entries read as `q_init`; rows of final
/// states are never written.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    q_init: f64,
    rows: BTreeMap<StateKey, BTreeMap<RuleId, f64>>,
    states: BTreeSet<StateKey>,
    actions: BTreeSet<RuleId>,
    finals: BTreeSet<StateKey>,
}

impl QTable {
    pub fn new(q_init: f64) -> QTable {
        QTable {
            q_init,
            rows: BTreeMap::new(),
            states: BTreeSet::new(),
            actions: BTreeSet::new(),
            finals: BTreeSet::new(),
        }
    }

    /// A table pre-sized to a graph's states, actions, and final states.
    pub fn for_graph(q_init: f64, graph: &TrainingGraph) -> QTable {
        QTable {
            q_init,
            rows: BTreeMap::new(),
            states: graph.states().clone(),
            actions: graph.actions(),
            finals: graph.final_states().clone(),
        }
    }

    pub fn q_init(&self) -> f64 {
        self.q_init
    }

    pub fn value(&self, state: &StateKey, action: RuleId) -> f64 {
        self.rows
            .get(state)
            .and_then(|row| row.get(&action))
            .copied()
            .unwrap_or(self.q_init)
    }

    /// Highest value in a state's row over the known actions.
    pub fn row_max(&self, state: &StateKey) -> f64 {
        self.actions
            .iter()
            .map(|a| self.value(state, *a))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(self.q_init)
    }

    pub fn insert(&mut self, state: StateKey, action: RuleId, value: f64) -> Result<(), RlError> {
        if self.finals.contains(&state) {
            return Err(RlError::FinalStateUpdate(state));
        }
        self.states.insert(state.clone());
        self.actions.insert(action);
        self.rows.entry(state).or_default().insert(action, value);
        Ok(())
    }

    pub fn known_states(&self) -> &BTreeSet<StateKey> {
        &self.states
    }

    pub fn known_actions(&self) -> &BTreeSet<RuleId> {
        &self.actions
    }

    pub fn final_states(&self) -> &BTreeSet<StateKey> {
        &self.finals
    }

    pub fn is_final(&self, state: &StateKey) -> bool {
        self.finals.contains(state)
    }

    /// Serialize with a fixed layout and 17 significant digits per value,
    /// so equal tables produce byte-identical files.
    pub fn to_json_string(&self) -> String {
        let mut out = String::from("{\n");
        out.push_str("  \"schema\": 1,\n");
        out.push_str(&format!("  \"q_init\": {},\n", format_value(self.q_init)));
        out.push_str("  \"finals\": [");
        let finals: Vec<String> =
            self.finals.iter().map(|s| serde_json::to_string(s.as_str()).unwrap()).collect();
        out.push_str(&finals.join(", "));
        out.push_str("],\n");
        out.push_str("  \"rows\": {\n");
        let states: Vec<&StateKey> = self.states.iter().collect();
        for (i, state) in states.iter().enumerate() {
            let key = serde_json::to_string(state.as_str()).unwrap();
            out.push_str(&format!("    {key}: {{"));
            let cells: Vec<String> = self
                .actions
                .iter()
                .map(|a| format!("\"{}\": {}", a.0, format_value(self.value(state, *a))))
                .collect();
            out.push_str(&cells.join(", "));
            out.push('}');
            if i + 1 < states.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  }\n}\n");
        out
    }

    pub fn from_json_str(text: &str) -> Result<QTable, RlError> {
        let file: TableFile =
            serde_json::from_str(text).map_err(|e| RlError::InvalidTable(e.to_string()))?;
        if file.schema != 1 {
            return Err(RlError::InvalidTable(format!("unsupported schema {}", file.schema)));
        }
        let mut table = QTable::new(file.q_init);
        table.finals = file.finals.into_iter().collect();
        for (state, row) in file.rows {
            table.states.insert(state.clone());
            for (action, value) in row {
                let id: u32 = action
                    .parse()
                    .map_err(|_| RlError::InvalidTable(format!("bad rule id `{action}`")))?;
                table.actions.insert(RuleId(id));
                if !table.finals.contains(&state) {
                    table.rows.entry(state.clone()).or_default().insert(RuleId(id), value);
                }
            }
        }
        Ok(table)
    }
}

#[derive(Deserialize)]
struct TableFile {
    schema: u32,
    q_init: f64,
    #[serde(default)]
    finals: Vec<StateKey>,
    rows: BTreeMap<StateKey, BTreeMap<String, f64>>,
}

/// 17 significant digits in scientific notation round-trips every f64.
fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// Training graph
// ---------------------------------------------------------------------------

/// States, deterministic transitions, and terminal rewards to learn from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingGraph {
    states: BTreeSet<StateKey>,
    transitions: BTreeMap<StateKey, BTreeMap<RuleId, StateKey>>,
    finals: BTreeMap<StateKey, f64>,
}

impl TrainingGraph {
    pub fn new() -> TrainingGraph {
        TrainingGraph::default()
    }

    pub fn add_state(&mut self, state: StateKey) {
        self.states.insert(state);
    }

    /// Transitions are deterministic per (state, action).
    pub fn add_transition(
        &mut self,
        from: StateKey,
        action: RuleId,
        to: StateKey,
    ) -> Result<(), RlError> {
        self.states.insert(from.clone());
        self.states.insert(to.clone());
        let row = self.transitions.entry(from.clone()).or_default();
        if let Some(existing) = row.get(&action) {
            if *existing != to {
                return Err(RlError::InvalidGraph(format!(
                    "transition ({from}, {action}) already goes to {existing}"
                )));
            }
        }
        row.insert(action, to);
        Ok(())
    }

    pub fn set_final(&mut self, state: StateKey, reward: f64) {
        self.states.insert(state.clone());
        self.finals.insert(state, reward);
    }

    pub fn states(&self) -> &BTreeSet<StateKey> {
        &self.states
    }

    pub fn final_states(&self) -> BTreeSet<StateKey> {
        self.finals.keys().cloned().collect()
    }

    pub fn reward(&self, state: &StateKey) -> Option<f64> {
        self.finals.get(state).copied()
    }

    pub fn is_final(&self, state: &StateKey) -> bool {
        self.finals.contains_key(state)
    }

    /// Action universe: every action on some transition.
    pub fn actions(&self) -> BTreeSet<RuleId> {
        self.transitions.values().flat_map(|row| row.keys().copied()).collect()
    }

    /// Actions available in `state`, in id order.
    pub fn available(&self, state: &StateKey) -> Vec<RuleId> {
        self.transitions
            .get(state)
            .map(|row| row.keys().copied().collect())
            .unwrap_or_default()
    }

    pub fn next_state(&self, state: &StateKey, action: RuleId) -> Option<&StateKey> {
        self.transitions.get(state)?.get(&action)
    }

    /// Every non-final state needs a way out; every final state a reward.
    pub fn validate(&self) -> Result<(), RlError> {
        for state in &self.states {
            if !self.is_final(state) && self.available(state).is_empty() {
                return Err(RlError::InvalidGraph(format!(
                    "non-final state {state} has no outgoing transition"
                )));
            }
        }
        for (state, _, to) in self.transition_list() {
            if !self.states.contains(&state) || !self.states.contains(&to) {
                return Err(RlError::InvalidGraph("dangling transition endpoint".into()));
            }
        }
        Ok(())
    }

    fn transition_list(&self) -> Vec<(StateKey, RuleId, StateKey)> {
        let mut list = Vec::new();
        for (from, row) in &self.transitions {
            for (action, to) in row {
                list.push((from.clone(), *action, to.clone()));
            }
        }
        list
    }

    pub fn to_json_string(&self) -> String {
        let file = GraphFile {
            schema: 1,
            states: self.states.iter().cloned().collect(),
            transitions: self
                .transition_list()
                .into_iter()
                .map(|(s, a, to)| TransitionRecord { from: s, action: a, to })
                .collect(),
            finals: self
                .finals
                .iter()
                .map(|(state, reward)| FinalRecord { state: state.clone(), reward: *reward })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("graph serializes");
        text.push('\n');
        text
    }

    pub fn from_json_str(text: &str) -> Result<TrainingGraph, RlError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| RlError::InvalidGraph(e.to_string()))?;
        if file.schema != 1 {
            return Err(RlError::InvalidGraph(format!("unsupported schema {}", file.schema)));
        }
        let mut graph = TrainingGraph::new();
        for state in file.states {
            graph.add_state(state);
        }
        for t in file.transitions {
            graph.add_transition(t.from, t.action, t.to)?;
        }
        for f in file.finals {
            graph.set_final(f.state, f.reward);
        }
        graph.validate()?;
        Ok(graph)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    schema: u32,
    states: Vec<StateKey>,
    transitions: Vec<TransitionRecord>,
    finals: Vec<FinalRecord>,
}

#[derive(Serialize, Deserialize)]
struct TransitionRecord {
    #[serde(rename = "s")]
    from: StateKey,
    #[serde(rename = "a")]
    action: RuleId,
    #[serde(rename = "s'")]
    to: StateKey,
}

#[derive(Serialize, Deserialize)]
struct FinalRecord {
    state: StateKey,
    reward: f64,
}

// ---------------------------------------------------------------------------
// Learning
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub q_init: f64,
    pub episodes: u64,
    pub max_steps: u64,
    pub seed: u64,
    /// Probability of a uniformly random action per step. Zero keeps the
    /// walk purely greedy and draws no randomness beyond tie-breaking.
    pub epsilon: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            alpha: 0.5,
            gamma: 0.6,
            q_init: 1.0,
            episodes: 500,
            max_steps: 50,
            seed: 0,
            epsilon: 0.0,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(RlError::InvalidConfig(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(RlError::InvalidConfig(format!("gamma {} not in (0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(RlError::InvalidConfig(format!("epsilon {} not in [0, 1]", self.epsilon)));
        }
        if self.max_steps == 0 {
            return Err(RlError::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !self.q_init.is_finite() {
            return Err(RlError::InvalidConfig("q_init must be finite".into()));
        }
        Ok(())
    }

    /// Non-fatal advisories, e.g. the divergence risk at gamma = 1.
    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.gamma >= 1.0 {
            warnings.push(format!(
                "gamma = {} may make table values diverge; values below 1 are recommended",
                self.gamma
            ));
        }
        warnings
    }
}

/// Greedy argmax over `available`, ties broken uniformly by `rng`.
///
/// A tie-free row draws no randomness, so the choice is deterministic.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: &StateKey,
    available: &[RuleId],
    rng: &mut R,
) -> Result<RuleId, RlError> {
    if available.is_empty() {
        return Err(RlError::NoActions(state.clone()));
    }
    let best = available
        .iter()
        .map(|a| q.value(state, *a))
        .fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<RuleId> =
        available.iter().copied().filter(|a| q.value(state, *a) == best).collect();
    if ties.len() == 1 {
        Ok(ties[0])
    } else {
        Ok(ties[rng.random_range(0..ties.len())])
    }
}

/// One application of the update rule; returns the new value.
pub fn sarsa_update(
    q: &mut QTable,
    state: &StateKey,
    action: RuleId,
    reward: f64,
    next_state: &StateKey,
    next_action: RuleId,
    cfg: &LearnConfig,
) -> Result<f64, RlError> {
    if q.is_final(state) {
        return Err(RlError::FinalStateUpdate(state.clone()));
    }
    let old = q.value(state, action);
    let next = q.value(next_state, next_action);
    let updated = old + cfg.alpha * (reward + cfg.gamma * next - old);
    q.insert(state.clone(), action, updated)?;
    Ok(updated)
}

/// One visited (state, action, reward, next-state) step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStep {
    pub state: StateKey,
    pub action: RuleId,
    pub reward: f64,
    pub next_state: StateKey,
}

/// Walk greedily from `start` until a final state or the step budget, then
/// apply the update rule over the visited pairs in reverse temporal order.
pub fn run_episode<R: Rng + ?Sized>(
    q: &mut QTable,
    graph: &TrainingGraph,
    start: &StateKey,
    cfg: &LearnConfig,
    rng: &mut R,
) -> Result<Vec<EpisodeStep>, RlError> {
    if !graph.states().contains(start) || graph.is_final(start) {
        return Err(RlError::BadStart(start.clone()));
    }

    let mut steps = Vec::new();
    let mut current = start.clone();
    for _ in 0..cfg.max_steps {
        if graph.is_final(&current) {
            break;
        }
        let available = graph.available(&current);
        let action = if cfg.epsilon > 0.0 && rng.random::<f64>() < cfg.epsilon {
            available[rng.random_range(0..available.len())]
        } else {
            select_action(q, &current, &available, rng)?
        };
        let next = graph
            .next_state(&current, action)
            .expect("available action has a transition")
            .clone();
        let reward = if graph.is_final(&next) { graph.reward(&next).unwrap_or(0.0) } else { 0.0 };
        steps.push(EpisodeStep { state: current, action, reward, next_state: next.clone() });
        current = next;
        if graph.is_final(&current) {
            break;
        }
    }

    // Reverse replay: each update sees the already-updated successor row.
    let mut next_action: Option<RuleId> = None;
    for step in steps.iter().rev() {
        let bound_next = match next_action {
            Some(a) => a,
            // Last step: bind a' to the successor row's argmax (for a
            // final state that row is uniformly q_init).
            None => row_argmax(q, &step.next_state),
        };
        sarsa_update(q, &step.state, step.action, step.reward, &step.next_state, bound_next, cfg)?;
        next_action = Some(step.action);
    }
    Ok(steps)
}

/// Lowest-id action maximizing the row; the value is what matters, any
/// maximizer gives the same q(s', a').
fn row_argmax(q: &QTable, state: &StateKey) -> RuleId {
    let mut best: Option<(RuleId, f64)> = None;
    for action in q.known_actions() {
        let value = q.value(state, *action);
        if best.map(|(_, b)| value > b).unwrap_or(true) {
            best = Some((*action, value));
        }
    }
    best.map(|(a, _)| a).unwrap_or(RuleId(0))
}

/// Run `cfg.episodes` learning episodes from uniformly random non-final
/// start states. Deterministic given `(graph, cfg)`.
pub fn train(graph: &TrainingGraph, cfg: &LearnConfig) -> Result<QTable, RlError> {
    cfg.validate()?;
    graph.validate()?;
    let mut q = QTable::for_graph(cfg.q_init, graph);
    let starts: Vec<&StateKey> =
        graph.states().iter().filter(|s| !graph.is_final(s)).collect();
    if starts.is_empty() {
        return Ok(q);
    }
    let mut rng = seeded_rng(cfg.seed);
    for _ in 0..cfg.episodes {
        let start = starts[rng.random_range(0..starts.len())];
        run_episode(&mut q, graph, start, cfg, &mut rng)?;
    }
    Ok(q)
}

// ---------------------------------------------------------------------------
// Greedy transformation driver
// ---------------------------------------------------------------------------

/// Why a greedy transformation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    /// The classifier accepted the code for the target platform.
    Final,
    BudgetExhausted,
    NoApplicableRule,
}

#[derive(Debug, Clone)]
pub struct TransformStep {
    pub rule: RuleId,
    pub site: Site,
    pub vector_after: FeatureVector,
}

#[derive(Debug, Clone)]
pub struct TransformOutcome {
    pub unit: TranslationUnit,
    pub initial_vector: FeatureVector,
    pub steps: Vec<TransformStep>,
    pub status: TerminalStatus,
}

/// Repeatedly apply the best applicable rule (by table value at the current
/// state) at its leftmost-outermost site, until the classifier accepts the
/// code for `target`, the step budget runs out, or nothing applies.
pub fn transform_greedy<R: Rng + ?Sized>(
    unit: &TranslationUnit,
    q: &QTable,
    registry: &Registry,
    tree: &DecisionTree,
    target: Platform,
    max_steps: u64,
    rng: &mut R,
) -> Result<TransformOutcome, RlError> {
    let mut current = unit.clone();
    let initial_vector = extract(&current);
    let mut vector = initial_vector;
    let mut steps = Vec::new();

    loop {
        if is_final(tree, &vector, target) {
            return Ok(TransformOutcome {
                unit: current,
                initial_vector,
                steps,
                status: TerminalStatus::Final,
            });
        }
        if steps.len() as u64 >= max_steps {
            return Ok(TransformOutcome {
                unit: current,
                initial_vector,
                steps,
                status: TerminalStatus::BudgetExhausted,
            });
        }

        let mut applicable: Vec<(RuleId, Site)> = Vec::new();
        for rule in registry.rules() {
            let mut sites = rule.find_sites(&current);
            if !sites.is_empty() {
                applicable.push((rule.id(), sites.remove(0)));
            }
        }
        if applicable.is_empty() {
            return Ok(TransformOutcome {
                unit: current,
                initial_vector,
                steps,
                status: TerminalStatus::NoApplicableRule,
            });
        }

        let state = state_key(&vector);
        let actions: Vec<RuleId> = applicable.iter().map(|(id, _)| *id).collect();
        let chosen = select_action(q, &state, &actions, rng)?;
        let site = applicable
            .into_iter()
            .find(|(id, _)| *id == chosen)
            .map(|(_, site)| site)
            .expect("chosen action is applicable");

        let result = registry.apply(&current, chosen, &site)?;
        current = result.unit;
        vector = extract(&current);
        steps.push(TransformStep { rule: chosen, site, vector_after: vector });
    }
}
