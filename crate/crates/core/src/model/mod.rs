//! Code model for the restricted C-like input language.
//!
//! The language covers `void` functions over `int` scalars and statically
//! sized `int` arrays, with `for`/`if`/assignment/call statements and
//! `#pragma stml` annotations attached to loops. Everything is immutable
//! after parsing; transformations produce new units.

mod interp;
mod parse;
mod print;

pub use interp::{interpret, interpret_with, InterpError, InterpOptions, Value};
pub use parse::{parse, ParseError};
pub use print::print;

/// A parsed source file: global declarations followed by function definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationUnit {
    pub globals: Vec<VarDecl>,
    pub functions: Vec<FunctionDef>,
}

impl TranslationUnit {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&VarDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// True when `name` is defined as a function in this unit.
    pub fn defines_function(&self, name: &str) -> bool {
        self.function(name).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<VarDecl>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

/// Where a variable was declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarScope {
    Global,
    Param,
    Local,
}

/// Declaration of an `int` scalar (`dims` empty) or array.
///
/// Array extents are resolved to positive literals at parse time, so a
/// declaration carries its concrete shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub dims: Vec<u64>,
    pub scope: VarScope,
    pub is_const: bool,
    pub init: Option<Expr>,
}

impl VarDecl {
    pub fn is_array(&self) -> bool {
        !self.dims.is_empty()
    }

    /// Total number of elements (1 for a scalar).
    pub fn elem_count(&self) -> u64 {
        self.dims.iter().product()
    }
}

/// Statement-level assignment, also used for `for` headers.
///
/// Compound forms (`+=`, `++`, ...) are desugared to plain assignments
/// during parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub lhs: LValue,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForStmt {
    pub pragmas: Vec<Pragma>,
    pub init: Assign,
    pub cond: Expr,
    pub step: Assign,
    pub body: Block,
}

impl ForStmt {
    /// The variable assigned by the loop header.
    ///
    /// Validation guarantees init and step target the same scalar.
    pub fn loop_var(&self) -> &str {
        match &self.init.lhs {
            LValue::Var(name) => name,
            LValue::ArrayAccess { .. } => unreachable!("loop header targets a scalar"),
        }
    }

    /// True for the canonical `v = 0 .. v = v + 1` iteration shape.
    pub fn is_normalized(&self) -> bool {
        matches!(self.init.rhs, Expr::IntLit(0)) && self.step_is_unit_increment()
    }

    /// True when the step is exactly `v = v + 1` (what `v++` desugars to).
    pub fn step_is_unit_increment(&self) -> bool {
        match &self.step.rhs {
            Expr::BinOp { op: BinOp::Add, lhs, rhs } => {
                matches!(&**lhs, Expr::Var(v) if v == self.loop_var())
                    && matches!(&**rhs, Expr::IntLit(1))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfStmt {
    pub cond: Expr,
    pub then_branch: Block,
    pub else_branch: Option<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Block(Block),
    For(ForStmt),
    If(IfStmt),
    Assign(Assign),
    Call { name: String, args: Vec<Expr> },
    Break,
    Continue,
    Decl(VarDecl),
}

/// `#pragma stml <text>` attached to the `for` statement it precedes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pragma {
    pub kind: PragmaKind,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PragmaKind {
    LoopSchedule,
    IterationIndependent,
    /// Any other `stml` annotation, kept verbatim.
    Unknown(String),
}

impl Pragma {
    pub fn from_raw(raw: &str) -> Pragma {
        let kind = match raw.split_whitespace().next() {
            Some("loop_schedule") => PragmaKind::LoopSchedule,
            Some("iteration_independent") => PragmaKind::IterationIndependent,
            Some(other) => PragmaKind::Unknown(other.to_string()),
            None => PragmaKind::Unknown(String::new()),
        };
        Pragma { kind, raw: raw.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    IntLit(i64),
    BinOp { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    ArrayAccess { base: String, indices: Vec<Expr> },
    Call { name: String, args: Vec<Expr> },
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn lit(value: i64) -> Expr {
        Expr::IntLit(value)
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinOp { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    ArrayAccess { base: String, indices: Vec<Expr> },
}

impl LValue {
    /// Name of the variable being written.
    pub fn base(&self) -> &str {
        match self {
            LValue::Var(name) => name,
            LValue::ArrayAccess { base, .. } => base,
        }
    }
}

/// Evaluate an expression that must be known at compile time.
///
/// Only integer literals, `const` globals with literal-resolvable
/// initializers, and arithmetic over those qualify.
pub fn const_eval(unit: &TranslationUnit, expr: &Expr) -> Option<i64> {
    match expr {
        Expr::IntLit(v) => Some(*v),
        Expr::Var(name) => {
            let decl = unit.global(name)?;
            if !decl.is_const || decl.is_array() {
                return None;
            }
            const_eval(unit, decl.init.as_ref()?)
        }
        Expr::BinOp { op, lhs, rhs } => {
            let l = const_eval(unit, lhs)?;
            let r = const_eval(unit, rhs)?;
            Some(match op {
                BinOp::Add => l.wrapping_add(r),
                BinOp::Sub => l.wrapping_sub(r),
                BinOp::Mul => l.wrapping_mul(r),
                BinOp::Div => {
                    if r == 0 {
                        return None;
                    }
                    l.wrapping_div(r)
                }
                BinOp::Mod => {
                    if r == 0 {
                        return None;
                    }
                    l.wrapping_rem(r)
                }
                BinOp::Lt => (l < r) as i64,
                BinOp::Le => (l <= r) as i64,
                BinOp::Gt => (l > r) as i64,
                BinOp::Ge => (l >= r) as i64,
                BinOp::Eq => (l == r) as i64,
                BinOp::Ne => (l != r) as i64,
            })
        }
        Expr::ArrayAccess { .. } | Expr::Call { .. } => None,
    }
}
