//! Rewrite rules: pattern matchers paired with semantics-preserving
//! transformations over translation units.
//!
//! A [`Site`] addresses the matched node as a child-index path from the
//! unit root: global declarations come first, then functions; inside a
//! function, parameters come first and the body block is the last child.
//! `for` statements expose `[init, cond, step, body]` as children 0-3 and
//! `if` statements expose `[cond, then, else]`. Sites are invalidated by
//! any rewrite and must be recomputed.

mod collapse;
mod flatten;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Block, Expr, LValue, Stmt, TranslationUnit, VarDecl};

pub use collapse::CollapseLoops;
pub use flatten::FlattenArray;

/// Dense action identifier for a rule.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct RuleId(pub u32);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("R{}", self.0))
    }
}

/// Path of child indices from the unit root to a matched node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(Vec<usize>);

impl Site {
    pub fn new(path: Vec<usize>) -> Site {
        Site(path)
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join("."))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule {0} is already registered")]
    DuplicateId(RuleId),
    #[error("unknown rule {0}")]
    UnknownRule(RuleId),
    #[error("site {site} does not match rule {rule}")]
    SiteMismatch { rule: RuleId, site: Site },
}

/// Outcome of a successful rewrite.
#[derive(Debug, Clone)]
pub struct RewriteResult {
    pub unit: TranslationUnit,
    pub rule: RuleId,
    pub site: Site,
}

/// A rewrite rule: stateless matcher + rewriter pair.
pub trait RewriteRule: Send + Sync {
    fn id(&self) -> RuleId;
    fn name(&self) -> &str;

    /// All matching sites in leftmost-outermost document order.
    fn find_sites(&self, unit: &TranslationUnit) -> Vec<Site>;

    /// Rewrite at a site previously returned by [`Self::find_sites`].
    fn apply(&self, unit: &TranslationUnit, site: &Site) -> Result<TranslationUnit, RuleError>;

    fn matches(&self, unit: &TranslationUnit, site: &Site) -> bool {
        self.find_sites(unit).contains(site)
    }
}

/// Id-ordered collection of registered rules.
pub struct Registry {
    rules: Vec<Box<dyn RewriteRule>>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::with_defaults()
    }
}

impl Registry {
    /// The shipped rules: `R0 flatten_array` and `R1 collapse_loops`.
    pub fn with_defaults() -> Registry {
        let mut registry = Registry::empty();
        registry.register(Box::new(FlattenArray)).expect("fresh registry");
        registry.register(Box::new(CollapseLoops)).expect("fresh registry");
        registry
    }

    pub fn empty() -> Registry {
        Registry { rules: Vec::new() }
    }

    pub fn register(&mut self, rule: Box<dyn RewriteRule>) -> Result<(), RuleError> {
        match self.rules.binary_search_by_key(&rule.id(), |r| r.id()) {
            Ok(_) => Err(RuleError::DuplicateId(rule.id())),
            Err(at) => {
                self.rules.insert(at, rule);
                Ok(())
            }
        }
    }

    /// Registered rules in id order.
    pub fn rules(&self) -> &[Box<dyn RewriteRule>] {
        &self.rules
    }

    pub fn get(&self, id: RuleId) -> Result<&dyn RewriteRule, RuleError> {
        self.rules
            .iter()
            .find(|r| r.id() == id)
            .map(|r| r.as_ref())
            .ok_or(RuleError::UnknownRule(id))
    }

    pub fn find_sites(&self, unit: &TranslationUnit, id: RuleId) -> Result<Vec<Site>, RuleError> {
        Ok(self.get(id)?.find_sites(unit))
    }

    /// Apply `id` at `site`, re-checking the match first.
    pub fn apply(
        &self,
        unit: &TranslationUnit,
        id: RuleId,
        site: &Site,
    ) -> Result<RewriteResult, RuleError> {
        let rule = self.get(id)?;
        if !rule.matches(unit, site) {
            return Err(RuleError::SiteMismatch { rule: id, site: site.clone() });
        }
        let rewritten = rule.apply(unit, site)?;
        debug_assert_ne!(&rewritten, unit, "a rewrite must change the unit");
        Ok(RewriteResult { unit: rewritten, rule: id, site: site.clone() })
    }
}

// ---------------------------------------------------------------------------
// Site resolution and shared walking helpers
// ---------------------------------------------------------------------------

/// Where a declaration site points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DeclPlace {
    Global,
    /// Parameter or local of the function at this index.
    InFunction(usize),
}

pub(crate) fn resolve_decl<'u>(
    unit: &'u TranslationUnit,
    site: &Site,
) -> Option<(&'u VarDecl, DeclPlace)> {
    let path = site.path();
    let first = *path.first()?;
    if first < unit.globals.len() {
        if path.len() != 1 {
            return None;
        }
        return Some((&unit.globals[first], DeclPlace::Global));
    }
    let f_idx = first - unit.globals.len();
    let function = unit.functions.get(f_idx)?;
    let second = *path.get(1)?;
    if second < function.params.len() {
        if path.len() != 2 {
            return None;
        }
        return Some((&function.params[second], DeclPlace::InFunction(f_idx)));
    }
    if second != function.params.len() {
        return None;
    }
    match resolve_stmt_in(&function.body, &path[2..])? {
        Stmt::Decl(d) => Some((d, DeclPlace::InFunction(f_idx))),
        _ => None,
    }
}

/// Function index and statement for a path that addresses a statement.
pub(crate) fn resolve_stmt<'u>(
    unit: &'u TranslationUnit,
    site: &Site,
) -> Option<(usize, &'u Stmt)> {
    let path = site.path();
    let first = *path.first()?;
    if first < unit.globals.len() {
        return None;
    }
    let f_idx = first - unit.globals.len();
    let function = unit.functions.get(f_idx)?;
    if *path.get(1)? != function.params.len() {
        return None;
    }
    Some((f_idx, resolve_stmt_in(&function.body, &path[2..])?))
}

fn resolve_stmt_in<'b>(block: &'b Block, path: &[usize]) -> Option<&'b Stmt> {
    let idx = *path.first()?;
    let stmt = block.stmts.get(idx)?;
    if path.len() == 1 {
        return Some(stmt);
    }
    match stmt {
        Stmt::Block(b) => resolve_stmt_in(b, &path[1..]),
        Stmt::For(f) => {
            if path[1] != 3 {
                return None;
            }
            resolve_stmt_in(&f.body, &path[2..])
        }
        Stmt::If(ifs) => match path[1] {
            1 => resolve_stmt_in(&ifs.then_branch, &path[2..]),
            2 => resolve_stmt_in(ifs.else_branch.as_ref()?, &path[2..]),
            _ => None,
        },
        _ => None,
    }
}

pub(crate) fn stmt_mut<'u>(unit: &'u mut TranslationUnit, site: &Site) -> Option<&'u mut Stmt> {
    let path = site.path();
    let first = *path.first()?;
    let n_globals = unit.globals.len();
    if first < n_globals {
        return None;
    }
    let function = unit.functions.get_mut(first - n_globals)?;
    if *path.get(1)? != function.params.len() {
        return None;
    }
    stmt_mut_in(&mut function.body, &path[2..])
}

fn stmt_mut_in<'b>(block: &'b mut Block, path: &[usize]) -> Option<&'b mut Stmt> {
    let idx = *path.first()?;
    let stmt = block.stmts.get_mut(idx)?;
    if path.len() == 1 {
        return Some(stmt);
    }
    match stmt {
        Stmt::Block(b) => stmt_mut_in(b, &path[1..]),
        Stmt::For(f) => {
            if path[1] != 3 {
                return None;
            }
            stmt_mut_in(&mut f.body, &path[2..])
        }
        Stmt::If(ifs) => match path[1] {
            1 => stmt_mut_in(&mut ifs.then_branch, &path[2..]),
            2 => stmt_mut_in(ifs.else_branch.as_mut()?, &path[2..]),
            _ => None,
        },
        _ => None,
    }
}

/// Pre-order statement walk with the site path of each statement.
pub(crate) fn walk_stmts_with_path<'u>(
    unit: &'u TranslationUnit,
    mut visit: impl FnMut(&'u Stmt, &[usize]),
) {
    for (f_idx, function) in unit.functions.iter().enumerate() {
        let prefix = vec![unit.globals.len() + f_idx, function.params.len()];
        walk_block(&function.body, &prefix, &mut visit);
    }
}

fn walk_block<'b>(block: &'b Block, prefix: &[usize], visit: &mut impl FnMut(&'b Stmt, &[usize])) {
    for (idx, stmt) in block.stmts.iter().enumerate() {
        let mut path = prefix.to_vec();
        path.push(idx);
        visit(stmt, &path);
        match stmt {
            Stmt::Block(b) => walk_block(b, &path, visit),
            Stmt::For(f) => {
                path.push(3);
                walk_block(&f.body, &path, visit);
            }
            Stmt::If(ifs) => {
                path.push(1);
                walk_block(&ifs.then_branch, &path, visit);
                path.pop();
                if let Some(e) = &ifs.else_branch {
                    path.push(2);
                    walk_block(e, &path, visit);
                }
            }
            _ => {}
        }
    }
}

/// Every identifier mentioned anywhere in the unit.
pub(crate) fn collect_identifiers(unit: &TranslationUnit) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    for g in &unit.globals {
        names.insert(g.name.clone());
        if let Some(init) = &g.init {
            collect_expr_idents(init, &mut names);
        }
    }
    for f in &unit.functions {
        names.insert(f.name.clone());
        for p in &f.params {
            names.insert(p.name.clone());
        }
        collect_block_idents(&f.body, &mut names);
    }
    names
}

fn collect_block_idents(block: &Block, names: &mut BTreeSet<String>) {
    for stmt in &block.stmts {
        match stmt {
            Stmt::Block(b) => collect_block_idents(b, names),
            Stmt::Decl(d) => {
                names.insert(d.name.clone());
                if let Some(init) = &d.init {
                    collect_expr_idents(init, names);
                }
            }
            Stmt::Assign(a) => {
                collect_lvalue_idents(&a.lhs, names);
                collect_expr_idents(&a.rhs, names);
            }
            Stmt::Call { name, args } => {
                names.insert(name.clone());
                for arg in args {
                    collect_expr_idents(arg, names);
                }
            }
            Stmt::Break | Stmt::Continue => {}
            Stmt::If(ifs) => {
                collect_expr_idents(&ifs.cond, names);
                collect_block_idents(&ifs.then_branch, names);
                if let Some(e) = &ifs.else_branch {
                    collect_block_idents(e, names);
                }
            }
            Stmt::For(f) => {
                collect_lvalue_idents(&f.init.lhs, names);
                collect_expr_idents(&f.init.rhs, names);
                collect_expr_idents(&f.cond, names);
                collect_lvalue_idents(&f.step.lhs, names);
                collect_expr_idents(&f.step.rhs, names);
                collect_block_idents(&f.body, names);
            }
        }
    }
}

fn collect_expr_idents(expr: &Expr, names: &mut BTreeSet<String>) {
    match expr {
        Expr::IntLit(_) => {}
        Expr::Var(name) => {
            names.insert(name.clone());
        }
        Expr::BinOp { lhs, rhs, .. } => {
            collect_expr_idents(lhs, names);
            collect_expr_idents(rhs, names);
        }
        Expr::ArrayAccess { base, indices } => {
            names.insert(base.clone());
            for idx in indices {
                collect_expr_idents(idx, names);
            }
        }
        Expr::Call { name, args } => {
            names.insert(name.clone());
            for arg in args {
                collect_expr_idents(arg, names);
            }
        }
    }
}

fn collect_lvalue_idents(lv: &LValue, names: &mut BTreeSet<String>) {
    match lv {
        LValue::Var(name) => {
            names.insert(name.clone());
        }
        LValue::ArrayAccess { base, indices } => {
            names.insert(base.clone());
            for idx in indices {
                collect_expr_idents(idx, names);
            }
        }
    }
}

/// True when the statement subtree mentions `name` anywhere except as the
/// declaration of `name` itself.
pub(crate) fn mentions_name(stmt: &Stmt, name: &str) -> bool {
    match stmt {
        Stmt::Block(b) => b.stmts.iter().any(|s| mentions_name(s, name)),
        Stmt::Decl(d) => d.init.as_ref().is_some_and(|e| expr_mentions(e, name)),
        Stmt::Assign(a) => lvalue_mentions(&a.lhs, name) || expr_mentions(&a.rhs, name),
        Stmt::Call { args, .. } => args.iter().any(|a| expr_mentions(a, name)),
        Stmt::Break | Stmt::Continue => false,
        Stmt::If(ifs) => {
            expr_mentions(&ifs.cond, name)
                || ifs.then_branch.stmts.iter().any(|s| mentions_name(s, name))
                || ifs
                    .else_branch
                    .as_ref()
                    .is_some_and(|e| e.stmts.iter().any(|s| mentions_name(s, name)))
        }
        Stmt::For(f) => {
            lvalue_mentions(&f.init.lhs, name)
                || expr_mentions(&f.init.rhs, name)
                || expr_mentions(&f.cond, name)
                || lvalue_mentions(&f.step.lhs, name)
                || expr_mentions(&f.step.rhs, name)
                || f.body.stmts.iter().any(|s| mentions_name(s, name))
        }
    }
}

pub(crate) fn expr_mentions(expr: &Expr, name: &str) -> bool {
    match expr {
        Expr::IntLit(_) => false,
        Expr::Var(v) => v == name,
        Expr::BinOp { lhs, rhs, .. } => expr_mentions(lhs, name) || expr_mentions(rhs, name),
        Expr::ArrayAccess { base, indices } => {
            base == name || indices.iter().any(|i| expr_mentions(i, name))
        }
        Expr::Call { args, .. } => args.iter().any(|a| expr_mentions(a, name)),
    }
}

fn lvalue_mentions(lv: &LValue, name: &str) -> bool {
    match lv {
        LValue::Var(v) => v == name,
        LValue::ArrayAccess { base, indices } => {
            base == name || indices.iter().any(|i| expr_mentions(i, name))
        }
    }
}

/// Constant-folding multiply for rewritten index expressions.
pub(crate) fn fold_mul(lhs: Expr, rhs: Expr) -> Expr {
    match (&lhs, &rhs) {
        (Expr::IntLit(a), Expr::IntLit(b)) => Expr::IntLit(a.wrapping_mul(*b)),
        (Expr::IntLit(0), _) | (_, Expr::IntLit(0)) => Expr::IntLit(0),
        (Expr::IntLit(1), _) => rhs,
        (_, Expr::IntLit(1)) => lhs,
        _ => Expr::bin(crate::model::BinOp::Mul, lhs, rhs),
    }
}

/// Constant-folding add for rewritten index expressions.
pub(crate) fn fold_add(lhs: Expr, rhs: Expr) -> Expr {
    match (&lhs, &rhs) {
        (Expr::IntLit(a), Expr::IntLit(b)) => Expr::IntLit(a.wrapping_add(*b)),
        (Expr::IntLit(0), _) => rhs,
        (_, Expr::IntLit(0)) => lhs,
        _ => Expr::bin(crate::model::BinOp::Add, lhs, rhs),
    }
}
