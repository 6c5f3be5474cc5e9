//! R1: collapse a two-level perfect loop nest into a single loop over the
//! product iteration space, reconstructing the original indices with
//! division and modulus.

use super::{
    collect_identifiers, fold_mul, mentions_name, resolve_stmt, stmt_mut, walk_stmts_with_path,
    RewriteRule, RuleError, RuleId, Site,
};
use crate::model::{
    const_eval, Assign, BinOp, Block, Expr, ForStmt, LValue, Stmt, TranslationUnit, VarDecl,
    VarScope,
};

pub struct CollapseLoops;

impl RewriteRule for CollapseLoops {
    fn id(&self) -> RuleId {
        RuleId(1)
    }

    fn name(&self) -> &str {
        "collapse_loops"
    }

    fn find_sites(&self, unit: &TranslationUnit) -> Vec<Site> {
        let mut sites = Vec::new();
        walk_stmts_with_path(unit, |stmt, path| {
            if let Stmt::For(outer) = stmt {
                let f_idx = path[0] - unit.globals.len();
                if matches_nest(unit, f_idx, outer) {
                    sites.push(Site::new(path.to_vec()));
                }
            }
        });
        sites
    }

    fn apply(&self, unit: &TranslationUnit, site: &Site) -> Result<TranslationUnit, RuleError> {
        let mismatch = || RuleError::SiteMismatch { rule: self.id(), site: site.clone() };
        let (f_idx, stmt) = resolve_stmt(unit, site).ok_or_else(mismatch)?;
        let Stmt::For(outer) = stmt else { return Err(mismatch()) };
        if !matches_nest(unit, f_idx, outer) {
            return Err(mismatch());
        }
        let Stmt::For(inner) = &outer.body.stmts[0] else { return Err(mismatch()) };

        let outer_var = outer.loop_var().to_string();
        let inner_var = inner.loop_var().to_string();
        let outer_limit = limit_expr(&outer.cond, &outer_var).expect("matched nest");
        let inner_limit = limit_expr(&inner.cond, &inner_var).expect("matched nest");

        let fresh = fresh_counter_name(unit);
        let scalar = |name: &str, init: Option<Expr>| VarDecl {
            name: name.to_string(),
            dims: Vec::new(),
            scope: VarScope::Local,
            is_const: false,
            init,
        };

        let mut body_stmts = vec![
            Stmt::Decl(scalar(
                &outer_var,
                Some(Expr::bin(BinOp::Div, Expr::var(&fresh), inner_limit.clone())),
            )),
            Stmt::Decl(scalar(
                &inner_var,
                Some(Expr::bin(BinOp::Mod, Expr::var(&fresh), inner_limit.clone())),
            )),
        ];
        body_stmts.extend(inner.body.stmts.iter().cloned());

        let collapsed = Stmt::For(ForStmt {
            pragmas: Vec::new(),
            init: Assign { lhs: LValue::Var(fresh.clone()), rhs: Expr::IntLit(0) },
            cond: Expr::bin(BinOp::Lt, Expr::var(&fresh), fold_mul(outer_limit, inner_limit)),
            step: Assign {
                lhs: LValue::Var(fresh.clone()),
                rhs: Expr::bin(BinOp::Add, Expr::var(&fresh), Expr::IntLit(1)),
            },
            body: Block { stmts: body_stmts },
        });
        let replacement =
            Stmt::Block(Block { stmts: vec![Stmt::Decl(scalar(&fresh, None)), collapsed] });

        let mut rewritten = unit.clone();
        *stmt_mut(&mut rewritten, site).expect("site resolved above") = replacement;
        // The nest variables are now declared per iteration; their old
        // initializer-free declarations would shadow them.
        remove_bare_decls(&mut rewritten.functions[f_idx].body, &[&outer_var, &inner_var]);
        Ok(rewritten)
    }
}

/// The collapsible pattern: a normalized two-level perfect nest with
/// statically known limits whose loop variables live entirely in the nest.
fn matches_nest(unit: &TranslationUnit, f_idx: usize, outer: &ForStmt) -> bool {
    let [Stmt::For(inner)] = outer.body.stmts.as_slice() else {
        return false;
    };
    if !outer.pragmas.is_empty() || !inner.pragmas.is_empty() {
        return false;
    }
    if !outer.is_normalized() || !inner.is_normalized() {
        return false;
    }
    let (Some(outer_limit), Some(inner_limit)) = (
        limit_expr(&outer.cond, outer.loop_var()),
        limit_expr(&inner.cond, inner.loop_var()),
    ) else {
        return false;
    };
    if const_eval(unit, &outer_limit).is_none() || const_eval(unit, &inner_limit).is_none() {
        return false;
    }

    let outer_var = outer.loop_var();
    let inner_var = inner.loop_var();
    if outer_var == inner_var {
        return false;
    }
    if contains_break_or_continue(&outer.body) {
        return false;
    }
    // Rebinding the indices per iteration must not change their meaning:
    // the body may read them but never write them.
    if writes_scalar(&inner.body, outer_var) || writes_scalar(&inner.body, inner_var) {
        return false;
    }

    let function = &unit.functions[f_idx];
    for var in [outer_var, inner_var] {
        if !is_plain_local(function, var) {
            return false;
        }
        if used_outside_nest(&function.body, outer, var) {
            return false;
        }
    }
    true
}

/// Extract `limit` from a condition of the exact shape `var < limit`.
fn limit_expr(cond: &Expr, var: &str) -> Option<Expr> {
    match cond {
        Expr::BinOp { op: BinOp::Lt, lhs, rhs } if matches!(&**lhs, Expr::Var(v) if v == var) => {
            Some((**rhs).clone())
        }
        _ => None,
    }
}

fn contains_break_or_continue(block: &Block) -> bool {
    block.stmts.iter().any(|stmt| match stmt {
        Stmt::Break | Stmt::Continue => true,
        Stmt::Block(b) => contains_break_or_continue(b),
        Stmt::For(f) => contains_break_or_continue(&f.body),
        Stmt::If(ifs) => {
            contains_break_or_continue(&ifs.then_branch)
                || ifs.else_branch.as_ref().is_some_and(contains_break_or_continue)
        }
        _ => false,
    })
}

fn writes_scalar(block: &Block, name: &str) -> bool {
    block.stmts.iter().any(|stmt| match stmt {
        Stmt::Assign(a) => matches!(&a.lhs, LValue::Var(v) if v == name),
        Stmt::Block(b) => writes_scalar(b, name),
        Stmt::For(f) => {
            matches!(&f.init.lhs, LValue::Var(v) if v == name)
                || matches!(&f.step.lhs, LValue::Var(v) if v == name)
                || writes_scalar(&f.body, name)
        }
        Stmt::If(ifs) => {
            writes_scalar(&ifs.then_branch, name)
                || ifs.else_branch.as_ref().is_some_and(|e| writes_scalar(e, name))
        }
        Stmt::Decl(d) => d.name == name && d.init.is_some(),
        _ => false,
    })
}

/// An initializer-free scalar local declaration, not a param or global.
fn is_plain_local(function: &crate::model::FunctionDef, name: &str) -> bool {
    if function.params.iter().any(|p| p.name == name) {
        return false;
    }
    find_local_decl(&function.body, name)
        .map(|d| d.dims.is_empty() && d.init.is_none())
        .unwrap_or(false)
}

fn find_local_decl<'b>(block: &'b Block, name: &str) -> Option<&'b VarDecl> {
    for stmt in &block.stmts {
        match stmt {
            Stmt::Decl(d) if d.name == name => return Some(d),
            Stmt::Block(b) => {
                if let Some(d) = find_local_decl(b, name) {
                    return Some(d);
                }
            }
            Stmt::For(f) => {
                if let Some(d) = find_local_decl(&f.body, name) {
                    return Some(d);
                }
            }
            Stmt::If(ifs) => {
                if let Some(d) = find_local_decl(&ifs.then_branch, name) {
                    return Some(d);
                }
                if let Some(e) = &ifs.else_branch {
                    if let Some(d) = find_local_decl(e, name) {
                        return Some(d);
                    }
                }
            }
            _ => {}
        }
    }
    None
}

/// Any mention of `name` in the function outside the nest subtree (its own
/// declaration excluded) keeps the nest from collapsing.
fn used_outside_nest(body: &Block, nest: &ForStmt, name: &str) -> bool {
    body.stmts.iter().any(|stmt| stmt_uses_outside(stmt, nest, name))
}

fn stmt_uses_outside(stmt: &Stmt, nest: &ForStmt, name: &str) -> bool {
    if let Stmt::For(f) = stmt {
        if std::ptr::eq(f, nest) {
            return false;
        }
    }
    match stmt {
        Stmt::Block(b) => used_outside_nest(b, nest, name),
        Stmt::Decl(d) => d.init.as_ref().is_some_and(|e| super::expr_mentions(e, name)),
        Stmt::If(ifs) => {
            super::expr_mentions(&ifs.cond, name)
                || used_outside_nest(&ifs.then_branch, nest, name)
                || ifs.else_branch.as_ref().is_some_and(|e| used_outside_nest(e, nest, name))
        }
        Stmt::For(f) => {
            mentions_in_header(f, name) || used_outside_nest(&f.body, nest, name)
        }
        other => mentions_name(other, name),
    }
}

fn mentions_in_header(f: &ForStmt, name: &str) -> bool {
    matches!(&f.init.lhs, LValue::Var(v) if v == name)
        || super::expr_mentions(&f.init.rhs, name)
        || super::expr_mentions(&f.cond, name)
        || matches!(&f.step.lhs, LValue::Var(v) if v == name)
        || super::expr_mentions(&f.step.rhs, name)
}

fn fresh_counter_name(unit: &TranslationUnit) -> String {
    let taken = collect_identifiers(unit);
    (0..)
        .map(|n| format!("__k{n}"))
        .find(|candidate| !taken.contains(candidate))
        .expect("unbounded candidate space")
}

/// Drop initializer-free declarations of `names`. The replacement block's
/// own `int v = ...` declarations all carry initializers and survive.
fn remove_bare_decls(block: &mut Block, names: &[&str]) {
    block.stmts.retain(|stmt| match stmt {
        Stmt::Decl(d) => d.init.is_some() || !names.contains(&d.name.as_str()),
        _ => true,
    });
    for stmt in &mut block.stmts {
        match stmt {
            Stmt::Block(b) => remove_bare_decls(b, names),
            Stmt::For(f) => remove_bare_decls(&mut f.body, names),
            Stmt::If(ifs) => {
                remove_bare_decls(&mut ifs.then_branch, names);
                if let Some(e) = &mut ifs.else_branch {
                    remove_bare_decls(e, names);
                }
            }
            _ => {}
        }
    }
}
