//! Canonical source form for translation units.
//!
//! The output is stable: printing a printed-and-reparsed unit yields the
//! same text, and reparsing the output reproduces the same AST.

use std::fmt::Write;

use super::{Assign, Block, Expr, FunctionDef, LValue, Stmt, TranslationUnit, VarDecl};

const INDENT: &str = "    ";

/// Render a unit as source text.
pub fn print(unit: &TranslationUnit) -> String {
    let mut out = String::new();
    for g in &unit.globals {
        print_decl_line(&mut out, g, 0);
    }
    for (i, f) in unit.functions.iter().enumerate() {
        if i > 0 || !unit.globals.is_empty() {
            out.push('\n');
        }
        print_function(&mut out, f);
    }
    out
}

fn print_function(out: &mut String, f: &FunctionDef) {
    let params: Vec<String> = f.params.iter().map(decl_text).collect();
    let _ = writeln!(out, "void {}({})", f.name, params.join(", "));
    out.push_str("{\n");
    print_block_stmts(out, &f.body, 1);
    out.push_str("}\n");
}

fn print_block_stmts(out: &mut String, block: &Block, depth: usize) {
    for stmt in &block.stmts {
        print_stmt(out, stmt, depth);
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match stmt {
        Stmt::Block(b) => {
            let _ = writeln!(out, "{pad}{{");
            print_block_stmts(out, b, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::For(f) => {
            for pragma in &f.pragmas {
                let _ = writeln!(out, "{pad}#pragma stml {}", pragma.raw);
            }
            let _ = writeln!(
                out,
                "{pad}for ({}; {}; {}) {{",
                assign_text(&f.init),
                expr_text(&f.cond),
                assign_text(&f.step)
            );
            print_block_stmts(out, &f.body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::If(ifs) => {
            let _ = writeln!(out, "{pad}if ({}) {{", expr_text(&ifs.cond));
            print_block_stmts(out, &ifs.then_branch, depth + 1);
            match &ifs.else_branch {
                Some(e) => {
                    let _ = writeln!(out, "{pad}}} else {{");
                    print_block_stmts(out, e, depth + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
                None => {
                    let _ = writeln!(out, "{pad}}}");
                }
            }
        }
        Stmt::Assign(a) => {
            let _ = writeln!(out, "{pad}{};", assign_text(a));
        }
        Stmt::Call { name, args } => {
            let args: Vec<String> = args.iter().map(expr_text).collect();
            let _ = writeln!(out, "{pad}{name}({});", args.join(", "));
        }
        Stmt::Break => {
            let _ = writeln!(out, "{pad}break;");
        }
        Stmt::Continue => {
            let _ = writeln!(out, "{pad}continue;");
        }
        Stmt::Decl(d) => print_decl_line(out, d, depth),
    }
}

fn print_decl_line(out: &mut String, d: &VarDecl, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &d.init {
        Some(init) => {
            let _ = writeln!(out, "{pad}{} = {};", decl_text(d), expr_text(init));
        }
        None => {
            let _ = writeln!(out, "{pad}{};", decl_text(d));
        }
    }
}

fn decl_text(d: &VarDecl) -> String {
    let mut s = String::new();
    if d.is_const {
        s.push_str("const ");
    }
    let _ = write!(s, "int {}", d.name);
    for dim in &d.dims {
        let _ = write!(s, "[{dim}]");
    }
    s
}

fn assign_text(a: &Assign) -> String {
    format!("{} = {}", lvalue_text(&a.lhs), expr_text(&a.rhs))
}

fn lvalue_text(lv: &LValue) -> String {
    match lv {
        LValue::Var(name) => name.clone(),
        LValue::ArrayAccess { base, indices } => {
            let mut s = base.clone();
            for idx in indices {
                let _ = write!(s, "[{}]", expr_text(idx));
            }
            s
        }
    }
}

fn expr_text(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::BinOp { op, .. } => match op {
            super::BinOp::Eq | super::BinOp::Ne => 1,
            super::BinOp::Lt | super::BinOp::Le | super::BinOp::Gt | super::BinOp::Ge => 2,
            super::BinOp::Add | super::BinOp::Sub => 3,
            super::BinOp::Mul | super::BinOp::Div | super::BinOp::Mod => 4,
        },
        _ => 5,
    }
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let prec = precedence(e);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Var(name) => out.push_str(name),
        Expr::IntLit(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::BinOp { op, lhs, rhs } => {
            // Left-associative: the right child needs parens at equal level.
            write_expr(out, lhs, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, prec + 1);
        }
        Expr::ArrayAccess { base, indices } => {
            out.push_str(base);
            for idx in indices {
                out.push('[');
                write_expr(out, idx, 0);
                out.push(']');
            }
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg, 0);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn empty_function_exact_form() {
        let unit = parse("void f() {}").unwrap();
        assert_eq!(print(&unit), "void f()\n{\n}\n");
    }

    #[test]
    fn pragma_printed_on_own_line_above_loop() {
        let src = "
void f(int v[4])
{
    int i;
    #pragma stml loop_schedule
    for (i = 0; i < 4; i++) {
        v[i] = 0;
    }
}
";
        let text = print(&parse(src).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        let pragma_at = lines.iter().position(|l| l.trim() == "#pragma stml loop_schedule").unwrap();
        assert!(lines[pragma_at + 1].trim_start().starts_with("for ("));
    }

    #[test]
    fn round_trip_is_stable() {
        let src = "
const int N = 4;
int g;

void f(int a[4][8], int x)
{
    int i;
    int j;
    for (i = 0; i < N; i++) {
        for (j = 0; j < 8; j++) {
            a[i][j] = x * (i + j) - a[i][j] / 2;
        }
    }
    if (x < 3) {
        g = 1;
    } else {
        g = 0;
    }
    helper(a, x % 3);
}
";
        let first = parse(src).unwrap();
        let second = parse(&print(&first)).unwrap();
        assert_eq!(first, second);
        assert_eq!(print(&first), print(&second));
    }

    #[test]
    fn nested_subtraction_keeps_parens() {
        let src = "void f(int x) { x = x - (1 - x); }";
        let unit = parse(src).unwrap();
        let reparsed = parse(&print(&unit)).unwrap();
        assert_eq!(unit, reparsed);
        assert!(print(&unit).contains("x - (1 - x)"));
    }
}
