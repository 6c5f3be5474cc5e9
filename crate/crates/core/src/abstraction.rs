//! The code-to-feature-vector abstraction and the state mapping.
//!
//! A translation unit is summarized by fifteen non-negative integer
//! features covering loop structure, data layout, annotations, and
//! dataflow shape. Equal vectors identify equal learner states.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Assign, Block, Expr, ForStmt, LValue, Pragma, PragmaKind, Stmt, TranslationUnit, VarScope,
};

pub const FEATURE_COUNT: usize = 15;

/// Component names in index order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "max_nested_loop_depth",
    "num_function_calls",
    "num_shifted_array_writes",
    "irregular_loops_flag",
    "global_write_flag",
    "num_if_statements",
    "non_static_loop_limits_flag",
    "num_iteration_independent_loops",
    "loop_schedule_flag",
    "num_loop_invariant_vars",
    "num_hoisted_var_modifications",
    "num_non_1d_arrays",
    "num_aux_index_vars",
    "total_for_loops",
    "num_non_normalized_loops",
];

/// Indices of the flag-valued components.
const FLAG_COMPONENTS: [usize; 4] = [3, 4, 6, 8];

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("component {index} ({name}) is a flag but has value {value}")]
    FlagOutOfRange { index: usize, name: &'static str, value: u32 },
    #[error("component {index} ({name}) = {value} exceeds total_for_loops = {total}")]
    LoopBoundViolated { index: usize, name: &'static str, value: u32, total: u32 },
}

/// The fifteen-component abstraction of a translation unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector([u32; FEATURE_COUNT]);

impl FeatureVector {
    /// Build a vector, checking the component invariants.
    pub fn new(components: [u32; FEATURE_COUNT]) -> Result<Self, FeatureError> {
        let fv = FeatureVector(components);
        fv.check()?;
        Ok(fv)
    }

    fn check(&self) -> Result<(), FeatureError> {
        for index in FLAG_COMPONENTS {
            if self.0[index] > 1 {
                return Err(FeatureError::FlagOutOfRange {
                    index,
                    name: FEATURE_NAMES[index],
                    value: self.0[index],
                });
            }
        }
        let total = self.0[13];
        for index in [0usize, 7, 14] {
            if self.0[index] > total {
                return Err(FeatureError::LoopBoundViolated {
                    index,
                    name: FEATURE_NAMES[index],
                    value: self.0[index],
                    total,
                });
            }
        }
        Ok(())
    }

    pub fn components(&self) -> &[u32; FEATURE_COUNT] {
        &self.0
    }

    pub fn get(&self, index: usize) -> u32 {
        self.0[index]
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = u32;

    fn index(&self, index: usize) -> &u32 {
        &self.0[index]
    }
}

/// Canonical text form of a feature vector: comma-joined decimal components.
///
/// Arbitrary keys (not derived from any vector) are allowed so training
/// graphs can use symbolic state names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateKey(String);

impl StateKey {
    pub fn new(key: impl Into<String>) -> StateKey {
        StateKey(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StateKey {
    fn from(s: &str) -> StateKey {
        StateKey(s.to_string())
    }
}

/// Map a feature vector to its state key. Injective on distinct vectors.
pub fn state_key(fv: &FeatureVector) -> StateKey {
    let parts: Vec<String> = fv.0.iter().map(|c| c.to_string()).collect();
    StateKey(parts.join(","))
}

/// Compute the fifteen-feature abstraction of a unit.
pub fn extract(unit: &TranslationUnit) -> FeatureVector {
    let mut ex = Extractor::new(unit);
    ex.run();
    ex.finish()
}

// ---------------------------------------------------------------------------
// Extraction walker
// ---------------------------------------------------------------------------

/// Per-loop working state while the loop is on the stack.
struct LoopCtx {
    id: usize,
    var: String,
    /// Scalars assigned, in document order, before the loop header.
    before: BTreeSet<String>,
    /// Scalar reads in the loop condition, step, and body subtree.
    reads: BTreeSet<String>,
    /// Scalar writes in the body subtree (nested loop headers included).
    writes: BTreeSet<String>,
    /// Array bases written in the body subtree.
    write_bases: BTreeSet<String>,
    /// Array writes whose innermost enclosing loop is this one.
    direct_array_writes: Vec<(String, Vec<Expr>)>,
    cond_has_call: bool,
    /// Scalar vars and array bases the condition reads, loop var excluded.
    cond_reads: BTreeSet<String>,
}

/// Finalized per-loop facts, kept for whole-unit feature evaluation.
struct LoopRecord {
    cond_has_call: bool,
    cond_reads: BTreeSet<String>,
    writes: BTreeSet<String>,
    write_bases: BTreeSet<String>,
    enclosing: Vec<usize>,
}

struct Extractor<'u> {
    unit: &'u TranslationUnit,
    scopes: Vec<HashMap<String, usize>>,
    assigned: BTreeSet<String>,
    stack: Vec<LoopCtx>,
    records: BTreeMap<usize, LoopRecord>,
    next_loop_id: usize,

    call_count: u32,
    if_count: u32,
    irregular: bool,
    global_written: bool,
    non_1d_decls: u32,
    aux_index_vars: BTreeSet<String>,
    for_count: u32,
    non_normalized: u32,
    max_chain: u32,
    iteration_independent: u32,
    loop_schedule: bool,
    shifted_loops: u32,
    invariant_pairs: u32,
    hoisted_pairs: u32,
}

impl<'u> Extractor<'u> {
    fn new(unit: &'u TranslationUnit) -> Self {
        Extractor {
            unit,
            scopes: Vec::new(),
            assigned: BTreeSet::new(),
            stack: Vec::new(),
            records: BTreeMap::new(),
            next_loop_id: 0,
            call_count: 0,
            if_count: 0,
            irregular: false,
            global_written: false,
            non_1d_decls: 0,
            aux_index_vars: BTreeSet::new(),
            for_count: 0,
            non_normalized: 0,
            max_chain: 0,
            iteration_independent: 0,
            loop_schedule: false,
            shifted_loops: 0,
            invariant_pairs: 0,
            hoisted_pairs: 0,
        }
    }

    fn run(&mut self) {
        // Named compile-time constants are not variables: they never feed
        // the per-variable dataflow features.
        let globals_assigned: BTreeSet<String> = self
            .unit
            .globals
            .iter()
            .filter(|g| g.init.is_some() && !g.is_array() && !g.is_const)
            .map(|g| g.name.clone())
            .collect();
        for g in &self.unit.globals {
            if g.dims.len() >= 2 {
                self.non_1d_decls += 1;
            }
        }

        let global_scope: HashMap<String, usize> =
            self.unit.globals.iter().map(|g| (g.name.clone(), g.dims.len())).collect();

        for f in &self.unit.functions {
            self.scopes = vec![global_scope.clone(), HashMap::new()];
            self.assigned = globals_assigned.clone();
            for p in &f.params {
                if p.dims.len() >= 2 {
                    self.non_1d_decls += 1;
                }
                self.scopes.last_mut().unwrap().insert(p.name.clone(), p.dims.len());
            }
            self.walk_block(&f.body);
        }
    }

    fn finish(self) -> FeatureVector {
        let feature_6 = self.evaluate_static_limits();
        let components = [
            self.max_chain.saturating_sub(1),
            self.call_count,
            self.shifted_loops,
            self.irregular as u32,
            self.global_written as u32,
            self.if_count,
            feature_6,
            self.iteration_independent,
            self.loop_schedule as u32,
            self.invariant_pairs,
            self.hoisted_pairs,
            self.non_1d_decls,
            self.aux_index_vars.len() as u32,
            self.for_count,
            self.non_normalized,
        ];
        FeatureVector::new(components).expect("extractor output satisfies invariants")
    }

    /// A loop limit is non-static when the condition calls a function or
    /// reads something written inside the loop or any enclosing loop body.
    fn evaluate_static_limits(&self) -> u32 {
        for record in self.records.values() {
            if record.cond_has_call {
                return 1;
            }
            for name in &record.cond_reads {
                let written_here =
                    record.writes.contains(name) || record.write_bases.contains(name);
                let written_enclosing = record.enclosing.iter().any(|id| {
                    let m = &self.records[id];
                    m.writes.contains(name) || m.write_bases.contains(name)
                });
                if written_here || written_enclosing {
                    return 1;
                }
            }
        }
        0
    }

    fn is_array(&self, name: &str) -> bool {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .map(|dims| *dims > 0)
            .unwrap_or(false)
    }

    fn is_global(&self, name: &str) -> bool {
        self.unit.global(name).is_some()
    }

    fn mark_assigned(&mut self, name: &str) {
        self.assigned.insert(name.to_string());
    }

    fn scalar_write(&mut self, name: &str) {
        for ctx in &mut self.stack {
            ctx.writes.insert(name.to_string());
        }
        if self.is_global(name) {
            self.global_written = true;
        }
        self.mark_assigned(name);
    }

    fn scalar_read(&mut self, name: &str) {
        for ctx in &mut self.stack {
            ctx.reads.insert(name.to_string());
        }
    }

    fn walk_block(&mut self, block: &Block) {
        self.scopes.push(HashMap::new());
        for stmt in &block.stmts {
            self.walk_stmt(stmt);
        }
        self.scopes.pop();
    }

    fn walk_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Block(b) => self.walk_block(b),
            Stmt::Decl(d) => {
                if d.dims.len() >= 2 {
                    self.non_1d_decls += 1;
                }
                if let Some(init) = &d.init {
                    self.walk_expr(init);
                    self.scalar_write(&d.name);
                }
                self.scopes.last_mut().unwrap().insert(d.name.clone(), d.dims.len());
            }
            Stmt::Assign(a) => self.walk_assign(a),
            Stmt::Call { args, .. } => {
                self.call_count += 1;
                for arg in args {
                    self.walk_expr(arg);
                }
            }
            Stmt::Break | Stmt::Continue => {
                self.irregular = true;
            }
            Stmt::If(ifs) => {
                self.if_count += 1;
                self.walk_expr(&ifs.cond);
                self.walk_block(&ifs.then_branch);
                if let Some(e) = &ifs.else_branch {
                    self.walk_block(e);
                }
            }
            Stmt::For(f) => self.walk_for(f),
        }
    }

    fn walk_for(&mut self, f: &ForStmt) {
        let var = f.loop_var().to_string();

        // The init runs once, outside the iteration space.
        self.walk_expr(&f.init.rhs);
        let before = self.assigned.clone();
        self.scalar_write(&var);

        let id = self.next_loop_id;
        self.next_loop_id += 1;
        self.for_count += 1;
        if !f.step_is_unit_increment() {
            self.non_normalized += 1;
        }
        self.count_pragmas(&f.pragmas);

        self.stack.push(LoopCtx {
            id,
            var: var.clone(),
            before,
            reads: BTreeSet::new(),
            writes: BTreeSet::new(),
            write_bases: BTreeSet::new(),
            direct_array_writes: Vec::new(),
            cond_has_call: false,
            cond_reads: BTreeSet::new(),
        });
        self.max_chain = self.max_chain.max(self.stack.len() as u32);

        self.walk_cond(&f.cond);
        self.walk_assign(&f.step);
        self.walk_block(&f.body);

        let ctx = self.stack.pop().expect("loop context pushed above");
        self.apply_loop_features(&ctx);
        self.records.insert(
            ctx.id,
            LoopRecord {
                cond_has_call: ctx.cond_has_call,
                cond_reads: ctx.cond_reads,
                writes: ctx.writes,
                write_bases: ctx.write_bases,
                enclosing: self.stack.iter().map(|c| c.id).collect(),
            },
        );
    }

    /// Pair features and the shifted-write pattern for a finished loop.
    fn apply_loop_features(&mut self, ctx: &LoopCtx) {
        for name in &ctx.before {
            if *name == ctx.var {
                continue;
            }
            if ctx.writes.contains(name) {
                self.hoisted_pairs += 1;
            } else if ctx.reads.contains(name) {
                self.invariant_pairs += 1;
            }
        }

        let mut per_base: BTreeMap<&str, u32> = BTreeMap::new();
        for (base, _) in &ctx.direct_array_writes {
            *per_base.entry(base.as_str()).or_default() += 1;
        }
        let shifted = ctx.direct_array_writes.iter().any(|(base, indices)| {
            per_base[base.as_str()] >= 2
                && indices.iter().any(|idx| is_positive_offset_of(idx, &ctx.var))
        });
        if shifted {
            self.shifted_loops += 1;
        }
    }

    fn count_pragmas(&mut self, pragmas: &[Pragma]) {
        if pragmas.iter().any(|p| p.kind == PragmaKind::IterationIndependent) {
            self.iteration_independent += 1;
        }
        if pragmas.iter().any(|p| p.kind == PragmaKind::LoopSchedule) {
            self.loop_schedule = true;
        }
    }

    fn walk_assign(&mut self, a: &Assign) {
        self.walk_expr(&a.rhs);
        match &a.lhs {
            LValue::Var(name) => self.scalar_write(name),
            LValue::ArrayAccess { base, indices } => {
                self.note_index_reads(indices);
                for idx in indices {
                    self.walk_expr(idx);
                }
                for ctx in &mut self.stack {
                    ctx.write_bases.insert(base.clone());
                }
                if let Some(innermost) = self.stack.last_mut() {
                    innermost.direct_array_writes.push((base.clone(), indices.clone()));
                }
                if self.is_global(base) {
                    self.global_written = true;
                }
            }
        }
    }

    /// Loop conditions feed the static-limit analysis besides normal reads.
    fn walk_cond(&mut self, cond: &Expr) {
        let mut has_call = false;
        let mut names = BTreeSet::new();
        collect_cond_reads(cond, &mut names, &mut has_call);
        let ctx = self.stack.last_mut().expect("condition walked with loop on stack");
        names.remove(&ctx.var);
        ctx.cond_has_call |= has_call;
        ctx.cond_reads.extend(names);
        self.walk_expr(cond);
    }

    fn walk_expr(&mut self, expr: &Expr) {
        match expr {
            Expr::IntLit(_) => {}
            Expr::Var(name) => {
                if !self.is_array(name) {
                    self.scalar_read(name);
                }
            }
            Expr::BinOp { lhs, rhs, .. } => {
                self.walk_expr(lhs);
                self.walk_expr(rhs);
            }
            Expr::Call { args, .. } => {
                self.call_count += 1;
                for arg in args {
                    self.walk_expr(arg);
                }
            }
            Expr::ArrayAccess { indices, .. } => {
                self.note_index_reads(indices);
                for idx in indices {
                    self.walk_expr(idx);
                }
            }
        }
    }

    /// Scalars indexing an array without being a loop variable of any
    /// enclosing loop are auxiliary index variables. Named constants are
    /// not variables and never count.
    fn note_index_reads(&mut self, indices: &[Expr]) {
        let mut names = BTreeSet::new();
        for idx in indices {
            collect_scalar_reads(idx, &self.scopes, &mut names);
        }
        for name in names {
            let is_enclosing_loop_var = self.stack.iter().any(|c| c.var == name);
            let is_constant = self.unit.global(&name).is_some_and(|g| g.is_const);
            if !is_enclosing_loop_var && !is_constant {
                self.aux_index_vars.insert(name);
            }
        }
    }
}

fn collect_scalar_reads(expr: &Expr, scopes: &[HashMap<String, usize>], out: &mut BTreeSet<String>) {
    match expr {
        Expr::IntLit(_) => {}
        Expr::Var(name) => {
            let is_array = scopes
                .iter()
                .rev()
                .find_map(|s| s.get(name))
                .map(|d| *d > 0)
                .unwrap_or(false);
            if !is_array {
                out.insert(name.clone());
            }
        }
        Expr::BinOp { lhs, rhs, .. } => {
            collect_scalar_reads(lhs, scopes, out);
            collect_scalar_reads(rhs, scopes, out);
        }
        Expr::ArrayAccess { indices, .. } => {
            for idx in indices {
                collect_scalar_reads(idx, scopes, out);
            }
        }
        Expr::Call { args, .. } => {
            for arg in args {
                collect_scalar_reads(arg, scopes, out);
            }
        }
    }
}

/// Vars and array bases a loop condition reads, plus whether it calls.
fn collect_cond_reads(expr: &Expr, out: &mut BTreeSet<String>, has_call: &mut bool) {
    match expr {
        Expr::IntLit(_) => {}
        Expr::Var(name) => {
            out.insert(name.clone());
        }
        Expr::BinOp { lhs, rhs, .. } => {
            collect_cond_reads(lhs, out, has_call);
            collect_cond_reads(rhs, out, has_call);
        }
        Expr::ArrayAccess { base, indices } => {
            out.insert(base.clone());
            for idx in indices {
                collect_cond_reads(idx, out, has_call);
            }
        }
        Expr::Call { args, .. } => {
            *has_call = true;
            for arg in args {
                collect_cond_reads(arg, out, has_call);
            }
        }
    }
}

/// Matches `var + k` or `k + var` with a positive literal k.
fn is_positive_offset_of(index: &Expr, var: &str) -> bool {
    match index {
        Expr::BinOp { op: crate::model::BinOp::Add, lhs, rhs } => {
            let var_plus_lit = matches!(&**lhs, Expr::Var(v) if v == var)
                && matches!(&**rhs, Expr::IntLit(k) if *k > 0);
            let lit_plus_var = matches!(&**rhs, Expr::Var(v) if v == var)
                && matches!(&**lhs, Expr::IntLit(k) if *k > 0);
            var_plus_lit || lit_plus_var
        }
        _ => false,
    }
}

/// Count array-typed declarations in a unit (used by rule tests).
pub fn multi_dim_decl_count(unit: &TranslationUnit) -> u32 {
    let mut count = 0;
    for g in &unit.globals {
        if g.dims.len() >= 2 {
            count += 1;
        }
    }
    for f in &unit.functions {
        count += f.params.iter().filter(|p| p.dims.len() >= 2).count() as u32;
        count += count_local_multi_dim(&f.body);
    }
    count
}

fn count_local_multi_dim(block: &Block) -> u32 {
    let mut count = 0;
    for stmt in &block.stmts {
        match stmt {
            Stmt::Decl(d) if d.dims.len() >= 2 && d.scope == VarScope::Local => count += 1,
            Stmt::Block(b) => count += count_local_multi_dim(b),
            Stmt::For(f) => count += count_local_multi_dim(&f.body),
            Stmt::If(ifs) => {
                count += count_local_multi_dim(&ifs.then_branch);
                if let Some(e) = &ifs.else_branch {
                    count += count_local_multi_dim(e);
                }
            }
            _ => {}
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse;

    fn extract_src(src: &str) -> FeatureVector {
        extract(&parse(src).unwrap())
    }

    #[test]
    fn empty_function_is_all_zero() {
        let fv = extract_src("void f() {}");
        assert_eq!(fv.components(), &[0; 15]);
    }

    #[test]
    fn zero_vector_state_key() {
        let fv = FeatureVector::new([0; 15]).unwrap();
        assert_eq!(state_key(&fv).as_str(), "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0");
    }

    #[test]
    fn state_key_distinguishes_last_component() {
        let mut a = [0u32; 15];
        let mut b = [0u32; 15];
        a[13] = 1; // keep invariants satisfiable
        b[13] = 1;
        b[14] = 1;
        let ka = state_key(&FeatureVector::new(a).unwrap());
        let kb = state_key(&FeatureVector::new(b).unwrap());
        assert_ne!(ka, kb);
    }

    #[test]
    fn extraction_is_pure() {
        let src = "
const int N = 4;
void f(int a[4][4])
{
    int i;
    int j;
    for (i = 0; i < N; i++) {
        for (j = 0; j < N; j++) {
            a[i][j] = i + j;
        }
    }
}
";
        let unit = parse(src).unwrap();
        assert_eq!(extract(&unit), extract(&unit));
        assert_eq!(state_key(&extract(&unit)), state_key(&extract(&unit)));
    }

    #[test]
    fn nesting_depth_is_zero_based() {
        let one = extract_src("void f(int a[4]) { int i; for (i = 0; i < 4; i++) { a[i] = 0; } }");
        assert_eq!(one[0], 0);
        assert_eq!(one[13], 1);

        let two = extract_src(
            "void f(int a[4][4]) { int i; int j;
             for (i = 0; i < 4; i++) { for (j = 0; j < 4; j++) { a[i][j] = 0; } } }",
        );
        assert_eq!(two[0], 1);
        assert_eq!(two[13], 2);
    }

    #[test]
    fn calls_and_ifs_counted() {
        let fv = extract_src(
            "void f(int x) { int y; y = 0; if (x < 0) { y = g(x); } if (x > 0) { h(x); } }",
        );
        assert_eq!(fv[1], 2);
        assert_eq!(fv[5], 2);
    }

    #[test]
    fn break_sets_irregular_flag() {
        let fv = extract_src(
            "void f(int a[4]) { int i; for (i = 0; i < 4; i++) { if (a[i] == 0) { break; } } }",
        );
        assert_eq!(fv[3], 1);
    }

    #[test]
    fn global_write_flag() {
        let read_only = extract_src("int g;\nvoid f(int x) { int y; y = g + x; }");
        assert_eq!(read_only[4], 0);
        let written = extract_src("int g;\nvoid f(int x) { g = x; }");
        assert_eq!(written[4], 1);
    }

    #[test]
    fn non_static_limit_from_own_body_write() {
        let fv = extract_src(
            "void f(int n) { int i; for (i = 0; i < n; i++) { n = n - 1; } }",
        );
        assert_eq!(fv[6], 1);
    }

    #[test]
    fn non_static_limit_from_enclosing_body_write_after_loop() {
        let fv = extract_src(
            "void f(int m) { int i; int j;
             for (j = 0; j < 4; j++) {
                 for (i = 0; i < m; i++) { }
                 m = m - 1;
             } }",
        );
        assert_eq!(fv[6], 1);
    }

    #[test]
    fn static_limits_stay_zero() {
        let fv = extract_src(
            "const int N = 4;\nvoid f(int a[4]) { int i; for (i = 0; i < N; i++) { a[i] = i; } }",
        );
        assert_eq!(fv[6], 0);
    }

    #[test]
    fn pragma_counts() {
        let fv = extract_src(
            "void f(int a[4], int b[4]) { int i; int j;
             #pragma stml iteration_independent
             for (i = 0; i < 4; i++) { a[i] = 0; }
             #pragma stml iteration_independent
             #pragma stml loop_schedule
             for (j = 0; j < 4; j++) { b[j] = 0; }
             }",
        );
        assert_eq!(fv[7], 2);
        assert_eq!(fv[8], 1);
    }

    #[test]
    fn invariant_and_hoisted_pairs() {
        // k: assigned before, read inside, never written -> invariant.
        // s: assigned before and written inside -> hoisted modification.
        let fv = extract_src(
            "void f(int a[4]) { int i; int k; int s;
             k = 3;
             s = 0;
             for (i = 0; i < 4; i++) {
                 a[i] = k;
                 s = s + a[i];
             } }",
        );
        assert_eq!(fv[9], 1, "invariant pairs");
        assert_eq!(fv[10], 1, "hoisted pairs");
    }

    #[test]
    fn aux_index_variable_detected() {
        let fv = extract_src(
            "void f(int v[4], int w[4]) { int i; int aux;
             aux = 0;
             for (i = 0; i < 4; i++) {
                 w[i] = v[aux];
                 aux++;
             } }",
        );
        assert_eq!(fv[12], 1);
        // aux is also a hoisted modification
        assert_eq!(fv[10], 1);
    }

    #[test]
    fn multi_dim_arrays_counted_per_declaration() {
        let fv = extract_src(
            "int m[2][2];\nvoid f(int a[2][3], int b[6]) { int c[4][4][4]; c[0][0][0] = 1; }",
        );
        assert_eq!(fv[11], 3);
    }

    #[test]
    fn non_normalized_steps_counted() {
        let fv = extract_src(
            "void f(int a[8]) { int i; int j;
             for (i = 1; i < 8; i += 2) { a[i] = 0; }
             for (j = 0; j < 8; j++) { a[j] = 1; }
             }",
        );
        assert_eq!(fv[14], 1);
        assert_eq!(fv[13], 2);
    }

    #[test]
    fn flag_invariant_enforced() {
        let mut bad = [0u32; 15];
        bad[3] = 2;
        assert!(FeatureVector::new(bad).is_err());
    }

    #[test]
    fn loop_bound_invariant_enforced() {
        let mut bad = [0u32; 15];
        bad[0] = 1; // depth 1 with zero loops
        assert!(FeatureVector::new(bad).is_err());
    }
}
