//! The mini-language: parser, AST, pretty-printer and tracing interpreter.

mod ast;
mod interp;
mod parser;
mod printer;
mod value;

pub use ast::{
    BinOp, ElementId, Expr, FunctionDef, Location, OpClass, Program, Statement, StatementKind,
    Stmt, ENTRY_FUNCTION,
};
pub use interp::{
    default_step_limit, execute, ExecutionResult, Output, RuntimeErrorKind, Status, TestInput,
    MAX_CALL_DEPTH, MIN_STEP_LIMIT,
};
pub use parser::{parse, ParseError, BUILTIN_NARGS};
pub use printer::{print_expr, print_literal, print_program};
pub use value::{ArithError, Fixed, Value, FIXED_DIGITS, FIXED_SCALE};

use serde::Serialize;
use thiserror::Error;

/// One row of [`enumerate_elements`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementInfo {
    pub id: ElementId,
    pub kind: StatementKind,
    pub function: String,
    pub location: Location,
}

/// Lists the program elements in id (= source) order.
pub fn enumerate_elements(p: &Program) -> Vec<ElementInfo> {
    p.statements()
        .iter()
        .map(|s| ElementInfo {
            id: s.id,
            kind: s.stmt.kind(),
            function: p.functions()[s.function].name.clone(),
            location: p.location(s.id),
        })
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("test suite line {line}: {message}")]
pub struct SuiteError {
    pub line: usize,
    pub message: String,
}

/// Parses a test suite: one `name: v1, v2, ...` per line. Blank lines and
/// lines starting with `#` are skipped. A test may list fewer values than
/// the entry function has parameters.
pub fn parse_suite(text: &str) -> Result<Vec<TestInput>, SuiteError> {
    let mut tests: Vec<TestInput> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| SuiteError {
            line: i + 1,
            message,
        };
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| err("missing `:`".into()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(err("empty test name".into()));
        }
        if tests.iter().any(|t| t.name == name) {
            return Err(err(format!("duplicate test name `{name}`")));
        }
        let mut args = Vec::new();
        if !rest.trim().is_empty() {
            for tok in rest.split(',') {
                args.push(
                    parse_scalar(tok.trim())
                        .ok_or_else(|| err(format!("bad value `{}`", tok.trim())))?,
                );
            }
        }
        tests.push(TestInput::new(name, args));
    }
    Ok(tests)
}

/// Parses an integer or a fixed-point decimal literal (optionally negative).
pub fn parse_scalar(tok: &str) -> Option<Value> {
    if tok.contains('.') {
        Fixed::parse(tok).map(Value::Fixed)
    } else {
        tok.parse::<i64>().ok().map(Value::Int)
    }
}

pub fn format_suite(tests: &[TestInput]) -> String {
    let mut out = String::new();
    for t in tests {
        let args: Vec<String> = t.args.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{}: {}\n", t.name, args.join(", ")));
    }
    out
}
