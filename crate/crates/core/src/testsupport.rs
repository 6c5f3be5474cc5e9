//! Seeded generators of valid programs for property tests.
//!
//! Compiled only with the `testsupport` feature. Every generated program
//! parses, interprets without errors on its generated inputs, and matches
//! the preconditions of the rule its generator targets.

use std::collections::BTreeMap;

use rand::Rng;

use crate::model::{
    parse, print, Assign, BinOp, Block, Expr, ForStmt, FunctionDef, LValue, Stmt, TranslationUnit,
    Value, VarDecl, VarScope,
};
use crate::rl::seeded_rng;

/// A generated program plus input bindings for its entry function.
pub struct GeneratedCase {
    pub unit: TranslationUnit,
    pub entry: String,
    pub inputs: Vec<BTreeMap<String, Value>>,
}

fn scalar(name: &str, scope: VarScope) -> VarDecl {
    VarDecl { name: name.to_string(), dims: Vec::new(), scope, is_const: false, init: None }
}

fn array(name: &str, dims: &[u64], scope: VarScope) -> VarDecl {
    VarDecl { name: name.to_string(), dims: dims.to_vec(), scope, is_const: false, init: None }
}

fn assign(lhs: LValue, rhs: Expr) -> Stmt {
    Stmt::Assign(Assign { lhs, rhs })
}

fn counted_for(var: &str, limit: Expr, body: Vec<Stmt>) -> Stmt {
    Stmt::For(ForStmt {
        pragmas: Vec::new(),
        init: Assign { lhs: LValue::Var(var.to_string()), rhs: Expr::IntLit(0) },
        cond: Expr::bin(BinOp::Lt, Expr::var(var), limit),
        step: Assign {
            lhs: LValue::Var(var.to_string()),
            rhs: Expr::bin(BinOp::Add, Expr::var(var), Expr::IntLit(1)),
        },
        body: Block { stmts: body },
    })
}

/// Random division-free arithmetic over the given atoms.
fn random_expr<R: Rng>(rng: &mut R, atoms: &[Expr], depth: u32) -> Expr {
    if depth == 0 || rng.random_range(0..4) == 0 {
        if rng.random_range(0..3) == 0 {
            // The grammar has no unary minus; literals are non-negative.
            return Expr::IntLit(rng.random_range(0..10));
        }
        return atoms[rng.random_range(0..atoms.len())].clone();
    }
    let op = match rng.random_range(0..3) {
        0 => BinOp::Add,
        1 => BinOp::Sub,
        _ => BinOp::Mul,
    };
    Expr::bin(op, random_expr(rng, atoms, depth - 1), random_expr(rng, atoms, depth - 1))
}

fn random_array_values<R: Rng>(rng: &mut R, len: usize) -> Value {
    Value::Array((0..len).map(|_| rng.random_range(-100..100)).collect())
}

/// A program holding one multi-dimensional array that R0 can flatten:
/// a full loop nest reads and writes `a` and mirrors results into a
/// one-dimensional scratch array.
pub fn flatten_case(seed: u64) -> GeneratedCase {
    let mut rng = seeded_rng(seed.wrapping_mul(0x9e37_79b9).wrapping_add(seed));
    let n_dims = rng.random_range(2..=3usize);
    let dims: Vec<u64> = (0..n_dims).map(|_| rng.random_range(2..=4)).collect();
    let total: u64 = dims.iter().product();
    let loop_vars: Vec<String> = (0..n_dims).map(|d| format!("i{d}")).collect();

    // Row-major linear index over the loop variables.
    let mut linear = Expr::var(&loop_vars[0]);
    for d in 1..n_dims {
        linear = Expr::bin(
            BinOp::Add,
            Expr::bin(BinOp::Mul, linear, Expr::IntLit(dims[d] as i64)),
            Expr::var(&loop_vars[d]),
        );
    }

    let index_exprs: Vec<Expr> = loop_vars
        .iter()
        .enumerate()
        .map(|(d, v)| {
            if rng.random_range(0..4) == 0 {
                // Reversed index stays in bounds.
                Expr::bin(
                    BinOp::Sub,
                    Expr::IntLit(dims[d] as i64 - 1),
                    Expr::var(v),
                )
            } else {
                Expr::var(v)
            }
        })
        .collect();

    let atoms: Vec<Expr> = loop_vars
        .iter()
        .map(|v| Expr::var(v))
        .chain([
            Expr::var("s"),
            Expr::ArrayAccess { base: "a".into(), indices: index_exprs.clone() },
        ])
        .collect();

    let mut innermost = vec![assign(
        LValue::ArrayAccess { base: "a".into(), indices: index_exprs.clone() },
        random_expr(&mut rng, &atoms, 2),
    )];
    if rng.random_range(0..2) == 0 {
        innermost.push(assign(
            LValue::ArrayAccess { base: "b".into(), indices: vec![linear.clone()] },
            random_expr(&mut rng, &atoms, 2),
        ));
    } else {
        innermost.push(assign(
            LValue::ArrayAccess { base: "b".into(), indices: vec![linear.clone()] },
            Expr::ArrayAccess { base: "a".into(), indices: index_exprs.clone() },
        ));
    }

    let mut nest = Stmt::Block(Block { stmts: innermost });
    for d in (0..n_dims).rev() {
        let body = match nest {
            Stmt::Block(b) => b.stmts,
            other => vec![other],
        };
        nest = counted_for(&loop_vars[d], Expr::IntLit(dims[d] as i64), body);
    }

    let mut stmts: Vec<Stmt> =
        loop_vars.iter().map(|v| Stmt::Decl(scalar(v, VarScope::Local))).collect();
    stmts.push(nest);

    let unit = TranslationUnit {
        globals: Vec::new(),
        functions: vec![FunctionDef {
            name: "kernel".into(),
            params: vec![
                array("a", &dims, VarScope::Param),
                array("b", &[total], VarScope::Param),
                scalar("s", VarScope::Param),
            ],
            body: Block { stmts },
        }],
    };
    debug_assert_eq!(parse(&print(&unit)).as_ref(), Ok(&unit));

    let inputs = (0..3)
        .map(|_| {
            BTreeMap::from([
                ("a".to_string(), random_array_values(&mut rng, total as usize)),
                ("b".to_string(), random_array_values(&mut rng, total as usize)),
                ("s".to_string(), Value::Int(rng.random_range(-50..50))),
            ])
        })
        .collect();

    GeneratedCase { unit, entry: "kernel".into(), inputs }
}

/// A program with a collapsible two-level perfect nest followed by
/// statements that do not touch the nest variables.
pub fn collapse_case(seed: u64) -> GeneratedCase {
    let mut rng = seeded_rng(seed.wrapping_mul(0x517c_c1b7).wrapping_add(seed));
    let rows: u64 = rng.random_range(2..=5);
    let cols: u64 = rng.random_range(2..=5);
    let total = rows * cols;
    let use_consts = rng.random_range(0..2) == 0;

    let (globals, row_limit, col_limit) = if use_consts {
        (
            vec![
                VarDecl {
                    name: "R".into(),
                    dims: Vec::new(),
                    scope: VarScope::Global,
                    is_const: true,
                    init: Some(Expr::IntLit(rows as i64)),
                },
                VarDecl {
                    name: "C".into(),
                    dims: Vec::new(),
                    scope: VarScope::Global,
                    is_const: true,
                    init: Some(Expr::IntLit(cols as i64)),
                },
            ],
            Expr::var("R"),
            Expr::var("C"),
        )
    } else {
        (Vec::new(), Expr::IntLit(rows as i64), Expr::IntLit(cols as i64))
    };

    let linear = Expr::bin(
        BinOp::Add,
        Expr::bin(BinOp::Mul, Expr::var("i"), Expr::IntLit(cols as i64)),
        Expr::var("j"),
    );
    let cell = Expr::ArrayAccess { base: "out".into(), indices: vec![linear.clone()] };
    let atoms = vec![Expr::var("i"), Expr::var("j"), Expr::var("s"), cell.clone()];

    let mut body = vec![assign(
        LValue::ArrayAccess { base: "out".into(), indices: vec![linear.clone()] },
        random_expr(&mut rng, &atoms, 2),
    )];
    if rng.random_range(0..2) == 0 {
        body.push(assign(
            LValue::ArrayAccess { base: "out".into(), indices: vec![linear] },
            Expr::bin(BinOp::Add, cell, Expr::var("s")),
        ));
    }

    let inner = counted_for("j", col_limit, body);
    let outer = counted_for("i", row_limit, vec![inner]);

    let mut stmts = vec![
        Stmt::Decl(scalar("i", VarScope::Local)),
        Stmt::Decl(scalar("j", VarScope::Local)),
        outer,
    ];
    if rng.random_range(0..2) == 0 {
        // Trailing work independent of the nest variables.
        stmts.push(assign(
            LValue::ArrayAccess { base: "out".into(), indices: vec![Expr::IntLit(0)] },
            Expr::bin(
                BinOp::Add,
                Expr::ArrayAccess { base: "out".into(), indices: vec![Expr::IntLit(0)] },
                Expr::var("s"),
            ),
        ));
    }

    let unit = TranslationUnit {
        globals,
        functions: vec![FunctionDef {
            name: "kernel".into(),
            params: vec![array("out", &[total], VarScope::Param), scalar("s", VarScope::Param)],
            body: Block { stmts },
        }],
    };
    debug_assert_eq!(parse(&print(&unit)).as_ref(), Ok(&unit));

    let inputs = (0..3)
        .map(|_| {
            BTreeMap::from([
                ("out".to_string(), random_array_values(&mut rng, total as usize)),
                ("s".to_string(), Value::Int(rng.random_range(-50..50))),
            ])
        })
        .collect();

    GeneratedCase { unit, entry: "kernel".into(), inputs }
}

/// A mixed-shape valid program for parser/printer round-trip fuzzing.
pub fn round_trip_case(seed: u64) -> TranslationUnit {
    // Reuse the rule generators and sprinkle in control flow.
    let base = if seed.is_multiple_of(2) { flatten_case(seed) } else { collapse_case(seed) };
    let mut unit = base.unit;
    let mut rng = seeded_rng(seed ^ 0xabcd_ef01);
    let f = &mut unit.functions[0];
    if rng.random_range(0..2) == 0 {
        f.body.stmts.push(Stmt::If(crate::model::IfStmt {
            cond: Expr::bin(BinOp::Le, Expr::var("s"), Expr::IntLit(rng.random_range(0..5))),
            then_branch: Block {
                stmts: vec![assign(LValue::Var("s".into()), Expr::IntLit(0))],
            },
            else_branch: Some(Block {
                stmts: vec![assign(
                    LValue::Var("s".into()),
                    Expr::bin(BinOp::Mod, Expr::var("s"), Expr::IntLit(7)),
                )],
            }),
        }));
    }
    unit
}
