//! Lexer, recursive-descent parser, and semantic validation.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::{
    Assign, BinOp, Block, Expr, ForStmt, FunctionDef, IfStmt, LValue, Pragma, Stmt,
    TranslationUnit, VarDecl, VarScope,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("semantic error at {pos}: {msg}")]
    Semantic { pos: Pos, msg: String },
}

impl ParseError {
    fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos, msg: msg.into() }
    }

    fn semantic(pos: Pos, msg: impl Into<String>) -> ParseError {
        ParseError::Semantic { pos, msg: msg.into() }
    }
}

/// Parse and validate a source file.
pub fn parse(source: &str) -> Result<TranslationUnit, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, at: 0 };
    let unit = parser.translation_unit()?;
    validate(&unit, &parser.decl_positions())?;
    Ok(unit)
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Punct(&'static str),
    /// Text after `#pragma stml `, one token per pragma line.
    PragmaStml(String),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

const KEYWORDS: [&str; 8] = ["void", "int", "const", "for", "if", "else", "break", "continue"];

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! pos {
        () => {
            Pos { line, col }
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let start = pos!();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                col += 2;
                loop {
                    if i + 1 >= chars.len() {
                        return Err(ParseError::syntax(start, "unterminated block comment"));
                    }
                    if chars[i] == '*' && chars[i + 1] == '/' {
                        i += 2;
                        col += 2;
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
            }
            '#' => {
                let mut rest = String::new();
                while i < chars.len() && chars[i] != '\n' {
                    rest.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                let body = rest.trim_start_matches('#').trim();
                let Some(after) = body.strip_prefix("pragma") else {
                    return Err(ParseError::syntax(start, "expected `#pragma`"));
                };
                let after = after.trim();
                let Some(text) = after.strip_prefix("stml") else {
                    return Err(ParseError::syntax(
                        start,
                        "only `#pragma stml ...` annotations are accepted",
                    ));
                };
                let text = text.trim();
                if text.is_empty() {
                    return Err(ParseError::syntax(start, "`#pragma stml` requires a kind"));
                }
                out.push(Token { tok: Tok::PragmaStml(text.to_string()), pos: start });
            }
            _ if c.is_ascii_digit() => {
                let mut value = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    value.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                let parsed = value
                    .parse::<i64>()
                    .map_err(|_| ParseError::syntax(start, "integer literal out of range"))?;
                out.push(Token { tok: Tok::Int(parsed), pos: start });
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    word.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                let tok = match KEYWORDS.iter().find(|k| **k == word) {
                    Some(k) => Tok::Kw(k),
                    None => Tok::Ident(word),
                };
                out.push(Token { tok, pos: start });
            }
            _ => {
                let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
                let punct2 = ["<=", ">=", "==", "!=", "++", "--", "+=", "-=", "*=", "/=", "%="]
                    .iter()
                    .find(|p| two.starts_with(**p))
                    .copied();
                if let Some(p) = punct2 {
                    out.push(Token { tok: Tok::Punct(p), pos: start });
                    i += 2;
                    col += 2;
                } else {
                    let punct1 = ["(", ")", "{", "}", "[", "]", ";", ",", "=", "+", "-", "*", "/", "%", "<", ">"]
                        .iter()
                        .find(|p| p.starts_with(c))
                        .copied();
                    match punct1 {
                        Some(p) => {
                            out.push(Token { tok: Tok::Punct(p), pos: start });
                            i += 1;
                            col += 1;
                        }
                        None => {
                            return Err(ParseError::syntax(
                                start,
                                format!("unexpected character `{c}`"),
                            ))
                        }
                    }
                }
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos: pos!() });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.at + 1).min(self.tokens.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(ParseError::syntax(self.pos(), format!("expected `{p}`")))
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Kw(q) if *q == k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(ParseError::syntax(self.pos(), format!("expected `{k}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(ParseError::syntax(self.pos(), "expected identifier")),
        }
    }

    fn translation_unit(&mut self) -> Result<TranslationUnit, ParseError> {
        let mut unit = TranslationUnit { globals: Vec::new(), functions: Vec::new() };
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Kw("void") => {
                    let f = self.function_def(&unit)?;
                    unit.functions.push(f);
                }
                Tok::Kw("const") | Tok::Kw("int") => {
                    if !unit.functions.is_empty() {
                        return Err(ParseError::syntax(
                            self.pos(),
                            "global declarations must precede function definitions",
                        ));
                    }
                    let decl = self.var_decl(VarScope::Global, &unit)?;
                    self.expect_punct(";")?;
                    unit.globals.push(decl);
                }
                _ => {
                    return Err(ParseError::syntax(
                        self.pos(),
                        "expected declaration or function definition",
                    ))
                }
            }
        }
        Ok(unit)
    }

    /// `[const] int name[dims] [= expr]` without the trailing semicolon.
    fn var_decl(&mut self, scope: VarScope, unit: &TranslationUnit) -> Result<VarDecl, ParseError> {
        let is_const = self.eat_kw("const");
        if is_const && scope != VarScope::Global {
            return Err(ParseError::syntax(self.pos(), "`const` is only allowed at global scope"));
        }
        self.expect_kw("int")?;
        let name = self.expect_ident()?;
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            let pos = self.pos();
            let extent = self.dimension(unit, pos)?;
            self.expect_punct("]")?;
            dims.push(extent);
        }
        let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
        Ok(VarDecl { name, dims, scope, is_const, init })
    }

    /// A dimension is a positive integer literal or a named constant.
    fn dimension(&mut self, unit: &TranslationUnit, pos: Pos) -> Result<u64, ParseError> {
        let value = match self.bump() {
            Tok::Int(v) => v,
            Tok::Ident(name) => {
                let resolved = unit
                    .global(&name)
                    .filter(|g| g.is_const && !g.is_array())
                    .and_then(|g| g.init.as_ref())
                    .and_then(|e| super::const_eval(unit, e));
                match resolved {
                    Some(v) => v,
                    None => {
                        return Err(ParseError::semantic(
                            pos,
                            format!("array dimension `{name}` is not a named constant"),
                        ))
                    }
                }
            }
            _ => return Err(ParseError::syntax(pos, "expected array dimension")),
        };
        if value < 1 {
            return Err(ParseError::semantic(pos, "array dimensions must be positive"));
        }
        Ok(value as u64)
    }

    fn function_def(&mut self, unit: &TranslationUnit) -> Result<FunctionDef, ParseError> {
        self.expect_kw("void")?;
        let name = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let mut p = self.var_decl(VarScope::Param, unit)?;
                if p.init.take().is_some() {
                    return Err(ParseError::syntax(self.pos(), "parameters cannot have initializers"));
                }
                params.push(p);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        let body = self.block(unit)?;
        Ok(FunctionDef { name, params, body })
    }

    fn block(&mut self, unit: &TranslationUnit) -> Result<Block, ParseError> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(ParseError::syntax(self.pos(), "unexpected end of input in block"));
            }
            stmts.push(self.stmt(unit)?);
        }
        Ok(Block { stmts })
    }

    /// A statement that may legally carry loop pragmas must be a `for`.
    fn stmt(&mut self, unit: &TranslationUnit) -> Result<Stmt, ParseError> {
        let mut pragmas = Vec::new();
        while let Tok::PragmaStml(text) = self.peek().clone() {
            let pos = self.pos();
            self.bump();
            pragmas.push((Pragma::from_raw(&text), pos));
        }
        if !pragmas.is_empty() && !matches!(self.peek(), Tok::Kw("for")) {
            return Err(ParseError::syntax(
                pragmas[0].1,
                "`#pragma stml` must directly precede a for loop",
            ));
        }
        let pragmas: Vec<Pragma> = pragmas.into_iter().map(|(p, _)| p).collect();

        match self.peek().clone() {
            Tok::Punct("{") => Ok(Stmt::Block(self.block(unit)?)),
            Tok::Kw("for") => {
                self.bump();
                self.expect_punct("(")?;
                let init = self.assign()?;
                self.expect_punct(";")?;
                let cond = self.expr()?;
                self.expect_punct(";")?;
                let step = self.assign()?;
                self.expect_punct(")")?;
                let body = self.stmt_as_block(unit)?;
                Ok(Stmt::For(ForStmt { pragmas, init, cond, step, body }))
            }
            Tok::Kw("if") => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_branch = self.stmt_as_block(unit)?;
                let else_branch =
                    if self.eat_kw("else") { Some(self.stmt_as_block(unit)?) } else { None };
                Ok(Stmt::If(IfStmt { cond, then_branch, else_branch }))
            }
            Tok::Kw("break") => {
                self.bump();
                self.expect_punct(";")?;
                Ok(Stmt::Break)
            }
            Tok::Kw("continue") => {
                self.bump();
                self.expect_punct(";")?;
                Ok(Stmt::Continue)
            }
            Tok::Kw("int") => {
                let decl = self.var_decl(VarScope::Local, unit)?;
                self.expect_punct(";")?;
                Ok(Stmt::Decl(decl))
            }
            Tok::Kw("const") => {
                Err(ParseError::syntax(self.pos(), "`const` is only allowed at global scope"))
            }
            Tok::Ident(name) => {
                if matches!(self.peek2(), Tok::Punct("(")) {
                    self.bump();
                    self.bump();
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    self.expect_punct(";")?;
                    Ok(Stmt::Call { name, args })
                } else {
                    let assign = self.assign()?;
                    self.expect_punct(";")?;
                    Ok(Stmt::Assign(assign))
                }
            }
            _ => Err(ParseError::syntax(self.pos(), "expected statement")),
        }
    }

    /// Parse a loop or branch body, normalizing a bare statement into a block.
    fn stmt_as_block(&mut self, unit: &TranslationUnit) -> Result<Block, ParseError> {
        if matches!(self.peek(), Tok::Punct("{")) {
            self.block(unit)
        } else {
            let stmt = self.stmt(unit)?;
            Ok(Block { stmts: vec![stmt] })
        }
    }

    /// Assignment with `=`, compound operators, or `++`/`--`, desugared.
    fn assign(&mut self) -> Result<Assign, ParseError> {
        let lhs = self.lvalue()?;
        let lhs_expr = match &lhs {
            LValue::Var(name) => Expr::Var(name.clone()),
            LValue::ArrayAccess { base, indices } => {
                Expr::ArrayAccess { base: base.clone(), indices: indices.clone() }
            }
        };
        let tok = self.bump();
        let rhs = match tok {
            Tok::Punct("=") => self.expr()?,
            Tok::Punct("++") => Expr::bin(BinOp::Add, lhs_expr, Expr::IntLit(1)),
            Tok::Punct("--") => Expr::bin(BinOp::Sub, lhs_expr, Expr::IntLit(1)),
            Tok::Punct(op @ ("+=" | "-=" | "*=" | "/=" | "%=")) => {
                let rhs = self.expr()?;
                let bin = match op {
                    "+=" => BinOp::Add,
                    "-=" => BinOp::Sub,
                    "*=" => BinOp::Mul,
                    "/=" => BinOp::Div,
                    _ => BinOp::Mod,
                };
                Expr::bin(bin, lhs_expr, rhs)
            }
            _ => return Err(ParseError::syntax(self.pos(), "expected assignment operator")),
        };
        Ok(Assign { lhs, rhs })
    }

    fn lvalue(&mut self) -> Result<LValue, ParseError> {
        let name = self.expect_ident()?;
        let mut indices = Vec::new();
        while self.eat_punct("[") {
            indices.push(self.expr()?);
            self.expect_punct("]")?;
        }
        if indices.is_empty() {
            Ok(LValue::Var(name))
        } else {
            Ok(LValue::ArrayAccess { base: name, indices })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.equality()
    }

    fn equality(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.relational()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("==") => BinOp::Eq,
                Tok::Punct("!=") => BinOp::Ne,
                _ => break,
            };
            self.bump();
            let rhs = self.relational()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("<") => BinOp::Lt,
                Tok::Punct("<=") => BinOp::Le,
                Tok::Punct(">") => BinOp::Gt,
                Tok::Punct(">=") => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let rhs = self.additive()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                Tok::Punct("%") => BinOp::Mod,
                _ => break,
            };
            self.bump();
            let rhs = self.primary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::IntLit(v))
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.eat_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_punct(")") {
                                break;
                            }
                            self.expect_punct(",")?;
                        }
                    }
                    Ok(Expr::Call { name, args })
                } else {
                    let mut indices = Vec::new();
                    while self.eat_punct("[") {
                        indices.push(self.expr()?);
                        self.expect_punct("]")?;
                    }
                    if indices.is_empty() {
                        Ok(Expr::Var(name))
                    } else {
                        Ok(Expr::ArrayAccess { base: name, indices })
                    }
                }
            }
            _ => Err(ParseError::syntax(self.pos(), "expected expression")),
        }
    }

    fn decl_positions(&self) -> Pos {
        // Validation reports a best-effort position; token stream is gone by
        // then, so point at the end of input.
        self.tokens.last().map(|t| t.pos).unwrap_or(Pos { line: 1, col: 1 })
    }
}

// ---------------------------------------------------------------------------
// Semantic validation
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct VarInfo {
    dims: usize,
    is_const: bool,
    is_array: bool,
}

struct Scopes {
    stack: Vec<HashMap<String, VarInfo>>,
}

impl Scopes {
    fn lookup(&self, name: &str) -> Option<&VarInfo> {
        self.stack.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, decl: &VarDecl, fallback: Pos) -> Result<(), ParseError> {
        if self.lookup(&decl.name).is_some() {
            return Err(ParseError::semantic(
                fallback,
                format!("`{}` is already declared in an enclosing scope", decl.name),
            ));
        }
        self.stack.last_mut().unwrap().insert(
            decl.name.clone(),
            VarInfo {
                dims: decl.dims.len(),
                is_const: decl.is_const,
                is_array: decl.is_array(),
            },
        );
        Ok(())
    }
}

fn validate(unit: &TranslationUnit, fallback: &Pos) -> Result<(), ParseError> {
    let pos = *fallback;
    let mut globals = Scopes { stack: vec![HashMap::new()] };

    for g in &unit.globals {
        if g.is_array() && g.init.is_some() {
            return Err(ParseError::semantic(
                pos,
                format!("array `{}` cannot have an initializer", g.name),
            ));
        }
        if g.is_const {
            let ok = g
                .init
                .as_ref()
                .map(|e| super::const_eval(unit, e).is_some())
                .unwrap_or(false);
            if !ok {
                return Err(ParseError::semantic(
                    pos,
                    format!("const `{}` requires a compile-time constant initializer", g.name),
                ));
            }
        } else if let Some(init) = &g.init {
            if super::const_eval(unit, init).is_none() {
                return Err(ParseError::semantic(
                    pos,
                    format!("global `{}` initializer must be a compile-time constant", g.name),
                ));
            }
        }
        if g.is_const && g.is_array() {
            return Err(ParseError::semantic(pos, format!("const array `{}` is not supported", g.name)));
        }
        globals.declare(g, pos)?;
    }

    let mut fn_names = HashMap::new();
    for f in &unit.functions {
        if fn_names.insert(f.name.clone(), ()).is_some() {
            return Err(ParseError::semantic(pos, format!("function `{}` defined twice", f.name)));
        }
    }

    for f in &unit.functions {
        let mut scopes = Scopes { stack: globals.stack.clone() };
        scopes.stack.push(HashMap::new());
        for p in &f.params {
            scopes.declare(p, pos).map_err(|_| {
                ParseError::semantic(pos, format!("duplicate parameter `{}` in `{}`", p.name, f.name))
            })?;
        }
        let mut ctx = FnCtx { scopes, loop_depth: 0, pos };
        ctx.check_block(&f.body)?;
    }
    Ok(())
}

struct FnCtx {
    scopes: Scopes,
    loop_depth: usize,
    pos: Pos,
}

impl FnCtx {
    fn check_block(&mut self, block: &Block) -> Result<(), ParseError> {
        self.scopes.stack.push(HashMap::new());
        for stmt in &block.stmts {
            self.check_stmt(stmt)?;
        }
        self.scopes.stack.pop();
        Ok(())
    }

    fn check_stmt(&mut self, stmt: &Stmt) -> Result<(), ParseError> {
        match stmt {
            Stmt::Block(b) => self.check_block(b),
            Stmt::Decl(d) => {
                if let Some(init) = &d.init {
                    if d.is_array() {
                        return Err(ParseError::semantic(
                            self.pos,
                            format!("array `{}` cannot have an initializer", d.name),
                        ));
                    }
                    self.check_expr(init)?;
                }
                self.scopes.declare(d, self.pos)
            }
            Stmt::Assign(a) => self.check_assign(a),
            Stmt::Call { name, args } => {
                self.check_callee(name)?;
                for arg in args {
                    self.check_arg(arg)?;
                }
                Ok(())
            }
            Stmt::Break | Stmt::Continue => {
                if self.loop_depth == 0 {
                    return Err(ParseError::semantic(
                        self.pos,
                        "`break`/`continue` outside of a for loop",
                    ));
                }
                Ok(())
            }
            Stmt::If(ifs) => {
                self.check_expr(&ifs.cond)?;
                self.check_block(&ifs.then_branch)?;
                if let Some(e) = &ifs.else_branch {
                    self.check_block(e)?;
                }
                Ok(())
            }
            Stmt::For(f) => {
                let var = match &f.init.lhs {
                    LValue::Var(v) => v.clone(),
                    LValue::ArrayAccess { .. } => {
                        return Err(ParseError::semantic(
                            self.pos,
                            "for-loop init must assign a scalar variable",
                        ))
                    }
                };
                match &f.step.lhs {
                    LValue::Var(v) if *v == var => {}
                    _ => {
                        return Err(ParseError::semantic(
                            self.pos,
                            "for-loop step must assign the loop variable",
                        ))
                    }
                }
                self.check_assign(&f.init)?;
                self.check_expr(&f.cond)?;
                self.check_assign(&f.step)?;
                self.loop_depth += 1;
                self.check_block(&f.body)?;
                self.loop_depth -= 1;
                Ok(())
            }
        }
    }

    fn check_assign(&mut self, a: &Assign) -> Result<(), ParseError> {
        match &a.lhs {
            LValue::Var(name) => {
                let info = self.lookup(name)?;
                if info.is_array {
                    return Err(ParseError::semantic(
                        self.pos,
                        format!("cannot assign to array `{name}` as a whole"),
                    ));
                }
                if info.is_const {
                    return Err(ParseError::semantic(self.pos, format!("cannot assign to const `{name}`")));
                }
            }
            LValue::ArrayAccess { base, indices } => {
                self.check_access(base, indices)?;
                let info = self.lookup(base)?;
                if info.is_const {
                    return Err(ParseError::semantic(self.pos, format!("cannot assign to const `{base}`")));
                }
            }
        }
        self.check_expr(&a.rhs)
    }

    fn check_expr(&mut self, expr: &Expr) -> Result<(), ParseError> {
        match expr {
            Expr::IntLit(_) => Ok(()),
            Expr::Var(name) => {
                let info = self.lookup(name)?;
                if info.is_array {
                    return Err(ParseError::semantic(
                        self.pos,
                        format!("array `{name}` used without indices"),
                    ));
                }
                Ok(())
            }
            Expr::BinOp { lhs, rhs, .. } => {
                self.check_expr(lhs)?;
                self.check_expr(rhs)
            }
            Expr::ArrayAccess { base, indices } => self.check_access(base, indices),
            Expr::Call { name, args } => {
                self.check_callee(name)?;
                for arg in args {
                    self.check_arg(arg)?;
                }
                Ok(())
            }
        }
    }

    /// Call arguments may pass whole arrays by name.
    fn check_arg(&mut self, arg: &Expr) -> Result<(), ParseError> {
        if let Expr::Var(name) = arg {
            self.lookup(name)?;
            return Ok(());
        }
        self.check_expr(arg)
    }

    fn check_callee(&mut self, name: &str) -> Result<(), ParseError> {
        if self.scopes.lookup(name).is_some() {
            return Err(ParseError::semantic(self.pos, format!("`{name}` is not a function")));
        }
        Ok(())
    }

    fn check_access(&mut self, base: &str, indices: &[Expr]) -> Result<(), ParseError> {
        let info = self.lookup(base)?.clone();
        if info.dims != indices.len() {
            return Err(ParseError::semantic(
                self.pos,
                format!(
                    "`{base}` has {} dimension(s) but is indexed with {}",
                    info.dims,
                    indices.len()
                ),
            ));
        }
        for idx in indices {
            self.check_expr(idx)?;
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Result<&VarInfo, ParseError> {
        self.scopes
            .lookup(name)
            .ok_or_else(|| ParseError::semantic(self.pos, format!("`{name}` is not declared")))
    }
}
