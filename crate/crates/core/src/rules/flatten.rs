//! R0: rewrite a multi-dimensional array into row-major one-dimensional
//! form, linearizing every access.

use super::{
    fold_add, fold_mul, resolve_decl, DeclPlace, RewriteRule, RuleError, RuleId, Site,
};
use crate::model::{Block, Expr, FunctionDef, LValue, Stmt, TranslationUnit, VarDecl};

pub struct FlattenArray;

impl RewriteRule for FlattenArray {
    fn id(&self) -> RuleId {
        RuleId(0)
    }

    fn name(&self) -> &str {
        "flatten_array"
    }

    fn find_sites(&self, unit: &TranslationUnit) -> Vec<Site> {
        let mut sites = Vec::new();
        for (g_idx, g) in unit.globals.iter().enumerate() {
            let place = DeclPlace::Global;
            if matches_decl(unit, g, place) {
                sites.push(Site::new(vec![g_idx]));
            }
        }
        for (f_idx, function) in unit.functions.iter().enumerate() {
            let node = unit.globals.len() + f_idx;
            for (p_idx, p) in function.params.iter().enumerate() {
                if matches_decl(unit, p, DeclPlace::InFunction(f_idx)) {
                    sites.push(Site::new(vec![node, p_idx]));
                }
            }
            let prefix = vec![node, function.params.len()];
            collect_local_sites(unit, &function.body, &prefix, f_idx, &mut sites);
        }
        sites
    }

    fn apply(&self, unit: &TranslationUnit, site: &Site) -> Result<TranslationUnit, RuleError> {
        let (decl, place) = resolve_decl(unit, site)
            .filter(|(d, p)| matches_decl(unit, d, *p))
            .ok_or_else(|| RuleError::SiteMismatch { rule: self.id(), site: site.clone() })?;
        let name = decl.name.clone();
        let dims = decl.dims.clone();
        let flat: u64 = dims.iter().product();

        let mut rewritten = unit.clone();
        match place {
            DeclPlace::Global => {
                let g = rewritten.globals.iter_mut().find(|g| g.name == name).expect("resolved");
                g.dims = vec![flat];
                for function in &mut rewritten.functions {
                    rewrite_function(function, &name, &dims);
                }
            }
            DeclPlace::InFunction(f_idx) => {
                let function = &mut rewritten.functions[f_idx];
                if let Some(p) = function.params.iter_mut().find(|p| p.name == name) {
                    p.dims = vec![flat];
                } else {
                    flatten_local_decl(&mut function.body, &name, flat);
                }
                rewrite_function(function, &name, &dims);
            }
        }
        Ok(rewritten)
    }
}

/// The declaration must be a multi-dimensional array that is never passed
/// whole to an opaque call within its scope.
fn matches_decl(unit: &TranslationUnit, decl: &VarDecl, place: DeclPlace) -> bool {
    if decl.dims.len() < 2 {
        return false;
    }
    match place {
        DeclPlace::Global => unit
            .functions
            .iter()
            .all(|f| !passed_whole_to_opaque_call(unit, &f.body, &decl.name)),
        DeclPlace::InFunction(f_idx) => {
            !passed_whole_to_opaque_call(unit, &unit.functions[f_idx].body, &decl.name)
        }
    }
}

fn collect_local_sites(
    unit: &TranslationUnit,
    block: &Block,
    prefix: &[usize],
    f_idx: usize,
    sites: &mut Vec<Site>,
) {
    for (idx, stmt) in block.stmts.iter().enumerate() {
        let mut path = prefix.to_vec();
        path.push(idx);
        match stmt {
            Stmt::Decl(d) => {
                if matches_decl(unit, d, DeclPlace::InFunction(f_idx)) {
                    sites.push(Site::new(path));
                }
            }
            Stmt::Block(b) => collect_local_sites(unit, b, &path, f_idx, sites),
            Stmt::For(f) => {
                path.push(3);
                collect_local_sites(unit, &f.body, &path, f_idx, sites);
            }
            Stmt::If(ifs) => {
                path.push(1);
                collect_local_sites(unit, &ifs.then_branch, &path, f_idx, sites);
                path.pop();
                if let Some(e) = &ifs.else_branch {
                    path.push(2);
                    collect_local_sites(unit, e, &path, f_idx, sites);
                }
            }
            _ => {}
        }
    }
}

fn passed_whole_to_opaque_call(unit: &TranslationUnit, block: &Block, name: &str) -> bool {
    block.stmts.iter().any(|stmt| stmt_passes_whole(unit, stmt, name))
}

fn stmt_passes_whole(unit: &TranslationUnit, stmt: &Stmt, name: &str) -> bool {
    match stmt {
        Stmt::Block(b) => passed_whole_to_opaque_call(unit, b, name),
        Stmt::Decl(d) => d.init.as_ref().is_some_and(|e| expr_passes_whole(unit, e, name)),
        Stmt::Assign(a) => {
            expr_passes_whole(unit, &a.rhs, name)
                || lvalue_indices(&a.lhs).iter().any(|i| expr_passes_whole(unit, i, name))
        }
        Stmt::Call { name: callee, args } => {
            let opaque = !unit.defines_function(callee);
            args.iter().any(|arg| {
                (opaque && matches!(arg, Expr::Var(v) if v == name))
                    || expr_passes_whole(unit, arg, name)
            })
        }
        Stmt::Break | Stmt::Continue => false,
        Stmt::If(ifs) => {
            expr_passes_whole(unit, &ifs.cond, name)
                || passed_whole_to_opaque_call(unit, &ifs.then_branch, name)
                || ifs
                    .else_branch
                    .as_ref()
                    .is_some_and(|e| passed_whole_to_opaque_call(unit, e, name))
        }
        Stmt::For(f) => {
            expr_passes_whole(unit, &f.init.rhs, name)
                || expr_passes_whole(unit, &f.cond, name)
                || expr_passes_whole(unit, &f.step.rhs, name)
                || passed_whole_to_opaque_call(unit, &f.body, name)
        }
    }
}

fn expr_passes_whole(unit: &TranslationUnit, expr: &Expr, name: &str) -> bool {
    match expr {
        Expr::IntLit(_) | Expr::Var(_) => false,
        Expr::BinOp { lhs, rhs, .. } => {
            expr_passes_whole(unit, lhs, name) || expr_passes_whole(unit, rhs, name)
        }
        Expr::ArrayAccess { indices, .. } => {
            indices.iter().any(|i| expr_passes_whole(unit, i, name))
        }
        Expr::Call { name: callee, args } => {
            let opaque = !unit.defines_function(callee);
            args.iter().any(|arg| {
                (opaque && matches!(arg, Expr::Var(v) if v == name))
                    || expr_passes_whole(unit, arg, name)
            })
        }
    }
}

fn lvalue_indices(lv: &LValue) -> &[Expr] {
    match lv {
        LValue::Var(_) => &[],
        LValue::ArrayAccess { indices, .. } => indices,
    }
}

fn flatten_local_decl(block: &mut Block, name: &str, flat: u64) {
    for stmt in &mut block.stmts {
        match stmt {
            Stmt::Decl(d) if d.name == name => {
                d.dims = vec![flat];
                return;
            }
            Stmt::Block(b) => flatten_local_decl(b, name, flat),
            Stmt::For(f) => flatten_local_decl(&mut f.body, name, flat),
            Stmt::If(ifs) => {
                flatten_local_decl(&mut ifs.then_branch, name, flat);
                if let Some(e) = &mut ifs.else_branch {
                    flatten_local_decl(e, name, flat);
                }
            }
            _ => {}
        }
    }
}

fn rewrite_function(function: &mut FunctionDef, name: &str, dims: &[u64]) {
    rewrite_block(&mut function.body, name, dims);
}

fn rewrite_block(block: &mut Block, name: &str, dims: &[u64]) {
    for stmt in &mut block.stmts {
        rewrite_stmt(stmt, name, dims);
    }
}

fn rewrite_stmt(stmt: &mut Stmt, name: &str, dims: &[u64]) {
    match stmt {
        Stmt::Block(b) => rewrite_block(b, name, dims),
        Stmt::Decl(d) => {
            if let Some(init) = &mut d.init {
                rewrite_expr(init, name, dims);
            }
        }
        Stmt::Assign(a) => {
            rewrite_lvalue(&mut a.lhs, name, dims);
            rewrite_expr(&mut a.rhs, name, dims);
        }
        Stmt::Call { args, .. } => {
            for arg in args {
                rewrite_expr(arg, name, dims);
            }
        }
        Stmt::Break | Stmt::Continue => {}
        Stmt::If(ifs) => {
            rewrite_expr(&mut ifs.cond, name, dims);
            rewrite_block(&mut ifs.then_branch, name, dims);
            if let Some(e) = &mut ifs.else_branch {
                rewrite_block(e, name, dims);
            }
        }
        Stmt::For(f) => {
            rewrite_lvalue(&mut f.init.lhs, name, dims);
            rewrite_expr(&mut f.init.rhs, name, dims);
            rewrite_expr(&mut f.cond, name, dims);
            rewrite_lvalue(&mut f.step.lhs, name, dims);
            rewrite_expr(&mut f.step.rhs, name, dims);
            rewrite_block(&mut f.body, name, dims);
        }
    }
}

fn rewrite_expr(expr: &mut Expr, name: &str, dims: &[u64]) {
    match expr {
        Expr::IntLit(_) | Expr::Var(_) => {}
        Expr::BinOp { lhs, rhs, .. } => {
            rewrite_expr(lhs, name, dims);
            rewrite_expr(rhs, name, dims);
        }
        Expr::Call { args, .. } => {
            for arg in args {
                rewrite_expr(arg, name, dims);
            }
        }
        Expr::ArrayAccess { base, indices } => {
            for idx in indices.iter_mut() {
                rewrite_expr(idx, name, dims);
            }
            if base == name {
                *indices = vec![linearize(indices, dims)];
            }
        }
    }
}

fn rewrite_lvalue(lv: &mut LValue, name: &str, dims: &[u64]) {
    if let LValue::ArrayAccess { base, indices } = lv {
        for idx in indices.iter_mut() {
            rewrite_expr(idx, name, dims);
        }
        if base == name {
            *indices = vec![linearize(indices, dims)];
        }
    }
}

/// Row-major linearization: `a[i][j]` over `[N][M]` becomes `a[i*M + j]`,
/// with literal subterms folded.
fn linearize(indices: &[Expr], dims: &[u64]) -> Expr {
    let mut acc = indices[0].clone();
    for (idx, extent) in indices.iter().zip(dims).skip(1) {
        acc = fold_add(fold_mul(acc, Expr::IntLit(*extent as i64)), idx.clone());
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{interpret, parse, print, Value};
    use crate::rules::Registry;
    use std::collections::BTreeMap;

    #[test]
    fn flattens_declaration_and_accesses() {
        let src = "
void f(int a[4][8], int x)
{
    int i;
    int j;
    for (i = 0; i < 4; i++) {
        for (j = 0; j < 8; j++) {
            a[i][j] = 0;
        }
    }
}
";
        let unit = parse(src).unwrap();
        let registry = Registry::with_defaults();
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        assert_eq!(sites.len(), 1);
        let result = registry.apply(&unit, RuleId(0), &sites[0]).unwrap();

        let text = print(&result.unit);
        assert!(text.contains("int a[32]"), "{text}");
        assert!(text.contains("a[i * 8 + j] = 0;"), "{text}");

        // Oracle: both forms fill identically.
        let inputs = BTreeMap::from([
            ("a".to_string(), Value::Array(vec![5; 32])),
            ("x".to_string(), Value::Int(0)),
        ]);
        assert_eq!(
            interpret(&unit, "f", &inputs).unwrap(),
            interpret(&result.unit, "f", &inputs).unwrap()
        );
    }

    #[test]
    fn no_sites_on_one_dimensional_arrays() {
        let unit = parse("void f(int a[8]) { a[0] = 1; }").unwrap();
        let sites = Registry::with_defaults().find_sites(&unit, RuleId(0)).unwrap();
        assert!(sites.is_empty());
    }

    #[test]
    fn applying_consumes_the_match() {
        let src = "
void f(int a[2][2], int b[3][3])
{
    a[0][0] = b[1][1];
}
";
        let unit = parse(src).unwrap();
        let registry = Registry::with_defaults();
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        assert_eq!(sites.len(), 2);
        let result = registry.apply(&unit, RuleId(0), &sites[0]).unwrap();
        let remaining = registry.find_sites(&result.unit, RuleId(0)).unwrap();
        assert_eq!(remaining.len(), 1);
    }

    #[test]
    fn whole_array_passed_to_opaque_call_blocks_match() {
        let src = "
void f(int a[2][2])
{
    prefetch(a);
    a[0][0] = 1;
}
";
        let unit = parse(src).unwrap();
        let sites = Registry::with_defaults().find_sites(&unit, RuleId(0)).unwrap();
        assert!(sites.is_empty());
    }

    #[test]
    fn whole_array_passed_to_defined_call_still_matches() {
        let src = "
void init(int b[4])
{
    int i;
    for (i = 0; i < 4; i++) {
        b[i] = i;
    }
}

void f(int a[2][2])
{
    init(a);
    a[1][1] = 9;
}
";
        let unit = parse(src).unwrap();
        let registry = Registry::with_defaults();
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        assert_eq!(sites.len(), 1);
        let result = registry.apply(&unit, RuleId(0), &sites[0]).unwrap();
        let inputs = BTreeMap::from([("a".to_string(), Value::Array(vec![0; 4]))]);
        assert_eq!(
            interpret(&unit, "f", &inputs).unwrap(),
            interpret(&result.unit, "f", &inputs).unwrap()
        );
    }

    #[test]
    fn stale_site_is_rejected() {
        let src = "void f(int a[2][2]) { a[0][0] = 1; }";
        let unit = parse(src).unwrap();
        let registry = Registry::with_defaults();
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        let result = registry.apply(&unit, RuleId(0), &sites[0]).unwrap();
        let err = registry.apply(&result.unit, RuleId(0), &sites[0]).unwrap_err();
        assert!(matches!(err, RuleError::SiteMismatch { .. }));
    }

    #[test]
    fn three_dimensional_linearization() {
        let src = "
void f(int a[2][3][4])
{
    int i;
    int j;
    int k;
    for (i = 0; i < 2; i++) {
        for (j = 0; j < 3; j++) {
            for (k = 0; k < 4; k++) {
                a[i][j][k] = i * 100 + j * 10 + k;
            }
        }
    }
}
";
        let unit = parse(src).unwrap();
        let registry = Registry::with_defaults();
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        let result = registry.apply(&unit, RuleId(0), &sites[0]).unwrap();
        let text = print(&result.unit);
        assert!(text.contains("int a[24]"), "{text}");
        assert!(text.contains("a[(i * 3 + j) * 4 + k]"), "{text}");
        let inputs = BTreeMap::from([("a".to_string(), Value::Array(vec![0; 24]))]);
        assert_eq!(
            interpret(&unit, "f", &inputs).unwrap(),
            interpret(&result.unit, "f", &inputs).unwrap()
        );
    }

    #[test]
    fn literal_indices_fold() {
        let src = "void f(int a[4][8]) { a[0][3] = 7; }";
        let unit = parse(src).unwrap();
        let registry = Registry::with_defaults();
        let sites = registry.find_sites(&unit, RuleId(0)).unwrap();
        let result = registry.apply(&unit, RuleId(0), &sites[0]).unwrap();
        assert!(print(&result.unit).contains("a[3] = 7;"));
    }
}
