//! Tracing tree-walking interpreter.
//!
//! Every executed statement appends the value it produced to its element's
//! trace: the assigned value, the condition's truth value (1/0), the returned
//! value, each printed value, or the callee's result for call statements.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{BinOp, ElementId, Expr, Program, Stmt};
use super::parser::BUILTIN_NARGS;
use super::value::{ArithError, Value};

/// Default lower bound on the per-test step limit.
pub const MIN_STEP_LIMIT: u64 = 10_000;
/// Nested calls deeper than this abort with [`RuntimeErrorKind::CallDepthExceeded`].
pub const MAX_CALL_DEPTH: usize = 512;

/// Step limit for mutant runs of a test whose original run took `original_steps`.
pub fn default_step_limit(original_steps: u64) -> u64 {
    original_steps.saturating_mul(10).max(MIN_STEP_LIMIT)
}

/// Arguments bound positionally to the entry function's parameters. Fewer
/// arguments than parameters is allowed; reading an unbound one fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInput {
    pub name: String,
    pub args: Vec<Value>,
}

impl TestInput {
    pub fn new(name: impl Into<String>, args: Vec<Value>) -> TestInput {
        TestInput {
            name: name.into(),
            args,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeErrorKind {
    DivisionByZero,
    Overflow,
    InvalidOperation,
    MissingArgument,
    UndefinedVariable,
    CallDepthExceeded,
}

impl From<ArithError> for RuntimeErrorKind {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::DivisionByZero => RuntimeErrorKind::DivisionByZero,
            ArithError::Overflow => RuntimeErrorKind::Overflow,
            ArithError::InvalidOperand => RuntimeErrorKind::InvalidOperation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Completed,
    RuntimeError(RuntimeErrorKind),
    StepLimitExceeded,
}

impl Status {
    pub fn is_abnormal(self) -> bool {
        !matches!(self, Status::Completed)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Completed => f.write_str("completed"),
            Status::RuntimeError(k) => write!(f, "runtime-error({k:?})"),
            Status::StepLimitExceeded => f.write_str("step-limit-exceeded"),
        }
    }
}

/// Observable behaviour of one run: everything printed plus the entry
/// function's return value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub printed: Vec<Value>,
    pub returned: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionResult {
    pub status: Status,
    pub output: Output,
    /// Values produced per element, in execution order.
    pub trace: Vec<Vec<Value>>,
    /// Elements in order of their first execution.
    pub first_execution: Vec<ElementId>,
    pub steps: u64,
}

impl ExecutionResult {
    pub fn element_trace(&self, e: ElementId) -> &[Value] {
        self.trace.get(e.index()).map(Vec::as_slice).unwrap_or(&[])
    }
}

enum Halt {
    Error(RuntimeErrorKind),
    StepLimit,
}

impl From<ArithError> for Halt {
    fn from(e: ArithError) -> Self {
        Halt::Error(e.into())
    }
}

enum Flow {
    Normal,
    Return(Value),
}

struct Frame<'p> {
    vars: Vec<(&'p str, Option<Value>)>,
}

impl<'p> Frame<'p> {
    fn get(&self, name: &str) -> Result<Value, Halt> {
        match self.vars.iter().find(|(n, _)| *n == name) {
            Some((_, Some(v))) => Ok(*v),
            Some((_, None)) => Err(Halt::Error(RuntimeErrorKind::MissingArgument)),
            None => Err(Halt::Error(RuntimeErrorKind::UndefinedVariable)),
        }
    }

    fn set(&mut self, name: &'p str, v: Value) {
        match self.vars.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = Some(v),
            None => self.vars.push((name, Some(v))),
        }
    }
}

struct Machine<'p> {
    program: &'p Program,
    entry_args: usize,
    trace: Vec<Vec<Value>>,
    first_execution: Vec<ElementId>,
    printed: Vec<Value>,
    steps: u64,
    limit: u64,
    depth: usize,
}

impl<'p> Machine<'p> {
    fn record(&mut self, id: ElementId, v: Value) {
        let slot = &mut self.trace[id.index()];
        if slot.is_empty() {
            self.first_execution.push(id);
        }
        slot.push(v);
    }

    fn step(&mut self) -> Result<(), Halt> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(Halt::StepLimit)
        } else {
            Ok(())
        }
    }

    fn call(&mut self, func: usize, args: Vec<Option<Value>>) -> Result<Value, Halt> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Halt::Error(RuntimeErrorKind::CallDepthExceeded));
        }
        let def = &self.program.functions()[func];
        let mut frame = Frame {
            vars: def.params.iter().map(String::as_str).zip(args).collect(),
        };
        self.depth += 1;
        let flow = self.block(&def.body, &mut frame);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::Unit),
        }
    }

    fn block(&mut self, ids: &'p [ElementId], frame: &mut Frame<'p>) -> Result<Flow, Halt> {
        for id in ids {
            if let Flow::Return(v) = self.stmt(*id, frame)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, id: ElementId, frame: &mut Frame<'p>) -> Result<Flow, Halt> {
        let program = self.program;
        self.step()?;
        match &program.statements()[id.index()].stmt {
            Stmt::Assign { target, value } => {
                let v = self.eval(value, frame)?;
                self.record(id, v);
                frame.set(target, v);
            }
            Stmt::Return { value } => {
                let v = self.eval(value, frame)?;
                self.record(id, v);
                return Ok(Flow::Return(v));
            }
            Stmt::Print { args } => {
                let values = args
                    .iter()
                    .map(|a| self.eval(a, frame))
                    .collect::<Result<Vec<_>, _>>()?;
                for v in values {
                    self.record(id, v);
                    self.printed.push(v);
                }
            }
            Stmt::Call { callee, args } => {
                let v = self.call_named(callee, args, frame)?;
                self.record(id, v);
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let taken = self.eval(cond, frame)?.truthy()?;
                self.record(id, Value::from_bool(taken));
                let body = if taken {
                    Some(then_body)
                } else {
                    else_body.as_ref()
                };
                if let Some(body) = body {
                    return self.block(body, frame);
                }
            }
            Stmt::While { cond, body } => {
                let mut first = true;
                loop {
                    if !first {
                        self.step()?;
                    }
                    first = false;
                    let taken = self.eval(cond, frame)?.truthy()?;
                    self.record(id, Value::from_bool(taken));
                    if !taken {
                        break;
                    }
                    if let Flow::Return(v) = self.block(body, frame)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn call_named(
        &mut self,
        callee: &str,
        args: &'p [Expr],
        frame: &mut Frame<'p>,
    ) -> Result<Value, Halt> {
        if callee == BUILTIN_NARGS {
            return Ok(Value::Int(self.entry_args as i64));
        }
        let func = self
            .program
            .function_index(callee)
            .ok_or(Halt::Error(RuntimeErrorKind::InvalidOperation))?;
        let values = args
            .iter()
            .map(|a| self.eval(a, frame).map(Some))
            .collect::<Result<Vec<_>, _>>()?;
        self.call(func, values)
    }

    fn eval(&mut self, e: &'p Expr, frame: &mut Frame<'p>) -> Result<Value, Halt> {
        Ok(match e {
            Expr::Lit(v) => *v,
            Expr::Var(name) => frame.get(name)?,
            Expr::Neg(inner) => self.eval(inner, frame)?.neg()?,
            Expr::Binary(BinOp::And, l, r) => {
                let v = self.eval(l, frame)?.truthy()? && self.eval(r, frame)?.truthy()?;
                Value::from_bool(v)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let v = self.eval(l, frame)?.truthy()? || self.eval(r, frame)?.truthy()?;
                Value::from_bool(v)
            }
            Expr::Binary(op, l, r) => {
                let a = self.eval(l, frame)?;
                let b = self.eval(r, frame)?;
                match op {
                    BinOp::Add => a.add(b)?,
                    BinOp::Sub => a.sub(b)?,
                    BinOp::Mul => a.mul(b)?,
                    BinOp::Div => a.div(b)?,
                    BinOp::Rem => a.rem(b)?,
                    BinOp::Lt => Value::from_bool(a.compare(b)?.is_lt()),
                    BinOp::Le => Value::from_bool(a.compare(b)?.is_le()),
                    BinOp::Gt => Value::from_bool(a.compare(b)?.is_gt()),
                    BinOp::Ge => Value::from_bool(a.compare(b)?.is_ge()),
                    BinOp::Eq => Value::from_bool(a.compare(b)?.is_eq()),
                    BinOp::Ne => Value::from_bool(a.compare(b)?.is_ne()),
                    BinOp::And | BinOp::Or => unreachable!("short-circuit operators handled above"),
                }
            }
            Expr::Call(callee, args) => self.call_named(callee, args, frame)?,
        })
    }
}

/// Runs the entry function on `test`. Never panics on program faults:
/// they surface as [`Status::RuntimeError`] or [`Status::StepLimitExceeded`].
pub fn execute(program: &Program, test: &TestInput, step_limit: u64) -> ExecutionResult {
    let mut m = Machine {
        program,
        entry_args: test.args.len(),
        trace: vec![Vec::new(); program.element_count()],
        first_execution: Vec::new(),
        printed: Vec::new(),
        steps: 0,
        limit: step_limit,
        depth: 0,
    };
    let entry = program
        .function_index(program.entry().name.as_str())
        .expect("entry exists");
    let nparams = program.entry().params.len();
    let args: Vec<Option<Value>> = (0..nparams).map(|i| test.args.get(i).copied()).collect();
    let (status, returned) = match m.call(entry, args) {
        Ok(v) => (Status::Completed, Some(v)),
        Err(Halt::Error(k)) => (Status::RuntimeError(k), None),
        Err(Halt::StepLimit) => (Status::StepLimitExceeded, None),
    };
    ExecutionResult {
        status,
        output: Output {
            printed: m.printed,
            returned,
        },
        trace: m.trace,
        first_execution: m.first_execution,
        steps: m.steps,
    }
}
