//! Deterministic interpreter for the language subset.
//!
//! Scalars are 64-bit wrapping integers; arrays are flat row-major buffers.
//! Declarations initialize storage to zero unless an initializer is given.
//! Execution is bounded by a step budget so property tests cannot hang.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::{Assign, BinOp, Block, Expr, FunctionDef, LValue, Stmt, TranslationUnit, VarDecl};

/// A scalar or flat row-major array value crossing the interpreter boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Array(Vec<i64>),
}

#[derive(Debug, Clone, Copy)]
pub struct InterpOptions {
    pub step_budget: u64,
    pub max_call_depth: u32,
}

impl Default for InterpOptions {
    fn default() -> Self {
        InterpOptions { step_budget: 10_000_000, max_call_depth: 128 }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InterpError {
    #[error("step budget of {0} exceeded")]
    StepBudgetExceeded(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of bounds for dimension {dim} of `{name}` (extent {extent})")]
    OutOfBounds { name: String, dim: usize, index: i64, extent: u64 },
    #[error("call to undefined function `{0}`")]
    UndefinedCall(String),
    #[error("void call to `{0}` used as a value")]
    VoidCall(String),
    #[error("unknown entry function `{0}`")]
    UnknownEntry(String),
    #[error("missing input for parameter `{0}`")]
    MissingInput(String),
    #[error("input `{0}`: {1}")]
    InputMismatch(String, String),
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("call to `{0}`: {1}")]
    ArgumentMismatch(String, String),
    #[error("call depth limit exceeded")]
    CallDepthExceeded,
}

/// Run `entry` with the default options.
///
/// Inputs must bind every parameter; non-const globals may be overridden.
/// The result maps array parameters and written globals to final values.
pub fn interpret(
    unit: &TranslationUnit,
    entry: &str,
    inputs: &BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, InterpError> {
    interpret_with(unit, entry, inputs, InterpOptions::default())
}

pub fn interpret_with(
    unit: &TranslationUnit,
    entry: &str,
    inputs: &BTreeMap<String, Value>,
    opts: InterpOptions,
) -> Result<BTreeMap<String, Value>, InterpError> {
    let entry_fn = unit
        .function(entry)
        .ok_or_else(|| InterpError::UnknownEntry(entry.to_string()))?;

    let mut machine = Machine {
        unit,
        arrays: Vec::new(),
        globals: HashMap::new(),
        written_globals: BTreeSet::new(),
        steps: 0,
        opts,
    };
    machine.init_globals(inputs)?;

    // Bind entry parameters from inputs.
    let mut frame = Frame::default();
    let mut param_arrays: Vec<(String, usize)> = Vec::new();
    for p in &entry_fn.params {
        let value = inputs
            .get(&p.name)
            .ok_or_else(|| InterpError::MissingInput(p.name.clone()))?;
        let slot = machine.slot_from_input(p, value)?;
        if let Slot::Array { handle, .. } = &slot {
            param_arrays.push((p.name.clone(), *handle));
        }
        frame.vars.insert(p.name.clone(), slot);
    }
    for name in inputs.keys() {
        let is_param = entry_fn.params.iter().any(|p| p.name == *name);
        let is_global = unit.global(name).is_some();
        if !is_param && !is_global {
            return Err(InterpError::UnknownInput(name.clone()));
        }
    }

    machine.exec_block(&entry_fn.body, &mut frame, 0)?;

    let mut out = BTreeMap::new();
    for (name, handle) in param_arrays {
        out.insert(name, Value::Array(machine.arrays[handle].clone()));
    }
    for name in &machine.written_globals {
        let value = match &machine.globals[name] {
            Slot::Int(v) => Value::Int(*v),
            Slot::Array { handle, .. } => Value::Array(machine.arrays[*handle].clone()),
        };
        out.insert(name.clone(), value);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Slot {
    Int(i64),
    Array { handle: usize, dims: Vec<u64> },
}

#[derive(Default)]
struct Frame {
    vars: HashMap<String, Slot>,
}

enum Flow {
    Normal,
    Break,
    Continue,
}

struct Machine<'u> {
    unit: &'u TranslationUnit,
    arrays: Vec<Vec<i64>>,
    globals: HashMap<String, Slot>,
    written_globals: BTreeSet<String>,
    steps: u64,
    opts: InterpOptions,
}

impl<'u> Machine<'u> {
    fn init_globals(&mut self, inputs: &BTreeMap<String, Value>) -> Result<(), InterpError> {
        for g in &self.unit.globals {
            let slot = match inputs.get(&g.name) {
                Some(value) => {
                    if g.is_const {
                        return Err(InterpError::InputMismatch(
                            g.name.clone(),
                            "cannot override a const global".into(),
                        ));
                    }
                    self.slot_from_input(g, value)?
                }
                None => {
                    if g.is_array() {
                        let handle = self.alloc(g.elem_count() as usize);
                        Slot::Array { handle, dims: g.dims.clone() }
                    } else {
                        let init = g
                            .init
                            .as_ref()
                            .and_then(|e| super::const_eval(self.unit, e))
                            .unwrap_or(0);
                        Slot::Int(init)
                    }
                }
            };
            self.globals.insert(g.name.clone(), slot);
        }
        Ok(())
    }

    fn slot_from_input(&mut self, decl: &VarDecl, value: &Value) -> Result<Slot, InterpError> {
        match (decl.is_array(), value) {
            (false, Value::Int(v)) => Ok(Slot::Int(*v)),
            (true, Value::Array(items)) => {
                let expected = decl.elem_count() as usize;
                if items.len() != expected {
                    return Err(InterpError::InputMismatch(
                        decl.name.clone(),
                        format!("expected {expected} elements, got {}", items.len()),
                    ));
                }
                let handle = self.arrays.len();
                self.arrays.push(items.clone());
                Ok(Slot::Array { handle, dims: decl.dims.clone() })
            }
            (false, Value::Array(_)) => Err(InterpError::InputMismatch(
                decl.name.clone(),
                "expected a scalar".into(),
            )),
            (true, Value::Int(_)) => Err(InterpError::InputMismatch(
                decl.name.clone(),
                "expected an array".into(),
            )),
        }
    }

    fn alloc(&mut self, len: usize) -> usize {
        self.arrays.push(vec![0; len]);
        self.arrays.len() - 1
    }

    fn tick(&mut self) -> Result<(), InterpError> {
        self.steps += 1;
        if self.steps > self.opts.step_budget {
            return Err(InterpError::StepBudgetExceeded(self.opts.step_budget));
        }
        Ok(())
    }

    fn exec_block(&mut self, block: &Block, frame: &mut Frame, depth: u32) -> Result<Flow, InterpError> {
        for stmt in &block.stmts {
            match self.exec_stmt(stmt, frame, depth)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &Stmt, frame: &mut Frame, depth: u32) -> Result<Flow, InterpError> {
        self.tick()?;
        match stmt {
            Stmt::Block(b) => self.exec_block(b, frame, depth),
            Stmt::Decl(d) => {
                let slot = if d.is_array() {
                    Slot::Array { handle: self.alloc(d.elem_count() as usize), dims: d.dims.clone() }
                } else {
                    let v = match &d.init {
                        Some(e) => self.eval(e, frame, depth)?,
                        None => 0,
                    };
                    Slot::Int(v)
                };
                frame.vars.insert(d.name.clone(), slot);
                Ok(Flow::Normal)
            }
            Stmt::Assign(a) => {
                self.exec_assign(a, frame, depth)?;
                Ok(Flow::Normal)
            }
            Stmt::Call { name, args } => {
                self.exec_call(name, args, frame, depth)?;
                Ok(Flow::Normal)
            }
            Stmt::Break => Ok(Flow::Break),
            Stmt::Continue => Ok(Flow::Continue),
            Stmt::If(ifs) => {
                let cond = self.eval(&ifs.cond, frame, depth)?;
                if cond != 0 {
                    self.exec_block(&ifs.then_branch, frame, depth)
                } else if let Some(e) = &ifs.else_branch {
                    self.exec_block(e, frame, depth)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::For(f) => {
                self.exec_assign(&f.init, frame, depth)?;
                loop {
                    self.tick()?;
                    if self.eval(&f.cond, frame, depth)? == 0 {
                        break;
                    }
                    match self.exec_block(&f.body, frame, depth)? {
                        Flow::Break => break,
                        Flow::Normal | Flow::Continue => {}
                    }
                    self.exec_assign(&f.step, frame, depth)?;
                }
                Ok(Flow::Normal)
            }
        }
    }

    fn exec_assign(&mut self, a: &Assign, frame: &mut Frame, depth: u32) -> Result<(), InterpError> {
        let value = self.eval(&a.rhs, frame, depth)?;
        match &a.lhs {
            LValue::Var(name) => {
                if frame.vars.contains_key(name) {
                    frame.vars.insert(name.clone(), Slot::Int(value));
                } else {
                    self.globals.insert(name.clone(), Slot::Int(value));
                    self.written_globals.insert(name.clone());
                }
            }
            LValue::ArrayAccess { base, indices } => {
                let (handle, offset) = self.locate(base, indices, frame, depth)?;
                self.arrays[handle][offset] = value;
                if !frame.vars.contains_key(base) {
                    self.written_globals.insert(base.clone());
                }
            }
        }
        Ok(())
    }

    /// Resolve an array access to (buffer handle, row-major offset), with a
    /// per-dimension bounds check.
    fn locate(
        &mut self,
        base: &str,
        indices: &[Expr],
        frame: &mut Frame,
        depth: u32,
    ) -> Result<(usize, usize), InterpError> {
        let (handle, dims) = {
            let slot = frame.vars.get(base).or_else(|| self.globals.get(base));
            match slot {
                Some(Slot::Array { handle, dims }) => (*handle, dims.clone()),
                _ => unreachable!("validated array variable `{base}`"),
            }
        };
        let mut offset: u64 = 0;
        for (d, (idx_expr, extent)) in indices.iter().zip(dims.iter()).enumerate() {
            let idx = self.eval(idx_expr, frame, depth)?;
            if idx < 0 || (idx as u64) >= *extent {
                return Err(InterpError::OutOfBounds {
                    name: base.to_string(),
                    dim: d,
                    index: idx,
                    extent: *extent,
                });
            }
            offset = offset * extent + idx as u64;
        }
        Ok((handle, offset as usize))
    }

    fn eval(&mut self, expr: &Expr, frame: &mut Frame, depth: u32) -> Result<i64, InterpError> {
        match expr {
            Expr::IntLit(v) => Ok(*v),
            Expr::Var(name) => {
                let slot = frame.vars.get(name).or_else(|| self.globals.get(name));
                match slot {
                    Some(Slot::Int(v)) => Ok(*v),
                    _ => unreachable!("validated scalar variable `{name}`"),
                }
            }
            Expr::ArrayAccess { base, indices } => {
                let (handle, offset) = self.locate(base, indices, frame, depth)?;
                Ok(self.arrays[handle][offset])
            }
            Expr::BinOp { op, lhs, rhs } => {
                let l = self.eval(lhs, frame, depth)?;
                let r = self.eval(rhs, frame, depth)?;
                Ok(match op {
                    BinOp::Add => l.wrapping_add(r),
                    BinOp::Sub => l.wrapping_sub(r),
                    BinOp::Mul => l.wrapping_mul(r),
                    BinOp::Div => {
                        if r == 0 {
                            return Err(InterpError::DivisionByZero);
                        }
                        l.wrapping_div(r)
                    }
                    BinOp::Mod => {
                        if r == 0 {
                            return Err(InterpError::DivisionByZero);
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
            Expr::Call { name, .. } => {
                if self.unit.defines_function(name) {
                    Err(InterpError::VoidCall(name.clone()))
                } else {
                    Err(InterpError::UndefinedCall(name.clone()))
                }
            }
        }
    }

    /// Execute a call statement. Scalars pass by value; a whole array named
    /// as an argument aliases the callee parameter when element counts match.
    fn exec_call(
        &mut self,
        name: &str,
        args: &[Expr],
        frame: &mut Frame,
        depth: u32,
    ) -> Result<(), InterpError> {
        let callee: &FunctionDef = self
            .unit
            .function(name)
            .ok_or_else(|| InterpError::UndefinedCall(name.to_string()))?;
        if depth + 1 > self.opts.max_call_depth {
            return Err(InterpError::CallDepthExceeded);
        }
        if args.len() != callee.params.len() {
            return Err(InterpError::ArgumentMismatch(
                name.to_string(),
                format!("expected {} argument(s), got {}", callee.params.len(), args.len()),
            ));
        }
        let mut callee_frame = Frame::default();
        for (param, arg) in callee.params.iter().zip(args) {
            let slot = if param.is_array() {
                let Expr::Var(arg_name) = arg else {
                    return Err(InterpError::ArgumentMismatch(
                        name.to_string(),
                        format!("parameter `{}` needs a whole array argument", param.name),
                    ));
                };
                let slot = frame.vars.get(arg_name).or_else(|| self.globals.get(arg_name));
                let Some(Slot::Array { handle, .. }) = slot else {
                    return Err(InterpError::ArgumentMismatch(
                        name.to_string(),
                        format!("argument `{arg_name}` is not an array"),
                    ));
                };
                let handle = *handle;
                if self.arrays[handle].len() != param.elem_count() as usize {
                    return Err(InterpError::ArgumentMismatch(
                        name.to_string(),
                        format!(
                            "array `{arg_name}` has {} elements but `{}` expects {}",
                            self.arrays[handle].len(),
                            param.name,
                            param.elem_count()
                        ),
                    ));
                }
                // The callee indexes the shared buffer through its own shape.
                Slot::Array { handle, dims: param.dims.clone() }
            } else {
                Slot::Int(self.eval(arg, frame, depth)?)
            };
            callee_frame.vars.insert(param.name.clone(), slot);
        }
        self.exec_block(&callee.body, &mut callee_frame, depth + 1)?;
        Ok(())
    }
}
