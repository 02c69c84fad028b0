//! Syntax tree for mini-language programs.
//!
//! Statements live in one flat arena on [`Program`], indexed by their
//! [`ElementId`]. Blocks refer to statements by id, so a mutation rewrites a
//! statement's expression payload in place and never renumbers anything.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::value::Value;

/// Dense ordinal of an executable statement (a "program element").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub usize);

impl ElementId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

/// Operator families used by the mutation operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpClass {
    Arithmetic,
    Relational,
    Logical,
}

impl BinOp {
    pub const ARITHMETIC: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];
    pub const RELATIONAL: [BinOp; 6] = [
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
    ];
    pub const LOGICAL: [BinOp; 2] = [BinOp::And, BinOp::Or];

    pub fn class(self) -> OpClass {
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => OpClass::Arithmetic,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => {
                OpClass::Relational
            }
            BinOp::And | BinOp::Or => OpClass::Logical,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        let all = Self::ARITHMETIC
            .iter()
            .chain(&Self::RELATIONAL)
            .chain(&Self::LOGICAL);
        all.copied().find(|op| op.symbol() == s)
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Integer or decimal literal. Negative literals are folded at parse time.
    Lit(Value),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Direct sub-expressions in site-path order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Var(_) => Vec::new(),
            Expr::Neg(e) => vec![e],
            Expr::Binary(_, l, r) => vec![l, r],
            Expr::Call(_, args) => args.iter().collect(),
        }
    }

    pub fn child_mut(&mut self, index: usize) -> Option<&mut Expr> {
        match self {
            Expr::Lit(_) | Expr::Var(_) => None,
            Expr::Neg(e) => (index == 0).then_some(&mut **e),
            Expr::Binary(_, l, r) => match index {
                0 => Some(&mut **l),
                1 => Some(&mut **r),
                _ => None,
            },
            Expr::Call(_, args) => args.get_mut(index),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatementKind {
    Assignment,
    Return,
    BranchCondition,
    LoopCondition,
    Print,
    CallStatement,
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatementKind::Assignment => "assignment",
            StatementKind::Return => "return",
            StatementKind::BranchCondition => "branch-condition",
            StatementKind::LoopCondition => "loop-condition",
            StatementKind::Print => "print",
            StatementKind::CallStatement => "call-statement",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        target: String,
        value: Expr,
    },
    Return {
        value: Expr,
    },
    Print {
        args: Vec<Expr>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    If {
        cond: Expr,
        then_body: Vec<ElementId>,
        else_body: Option<Vec<ElementId>>,
    },
    While {
        cond: Expr,
        body: Vec<ElementId>,
    },
}

impl Stmt {
    pub fn kind(&self) -> StatementKind {
        match self {
            Stmt::Assign { .. } => StatementKind::Assignment,
            Stmt::Return { .. } => StatementKind::Return,
            Stmt::Print { .. } => StatementKind::Print,
            Stmt::Call { .. } => StatementKind::CallStatement,
            Stmt::If { .. } => StatementKind::BranchCondition,
            Stmt::While { .. } => StatementKind::LoopCondition,
        }
    }

    /// Expression slots a mutation may target; the first component of a
    /// site path indexes into this list.
    pub fn slots(&self) -> Vec<&Expr> {
        match self {
            Stmt::Assign { value, .. } | Stmt::Return { value } => vec![value],
            Stmt::Print { args } | Stmt::Call { args, .. } => args.iter().collect(),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
        }
    }

    pub fn slot_mut(&mut self, index: usize) -> Option<&mut Expr> {
        match self {
            Stmt::Assign { value, .. } | Stmt::Return { value } => (index == 0).then_some(value),
            Stmt::Print { args } | Stmt::Call { args, .. } => args.get_mut(index),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => (index == 0).then_some(cond),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub id: ElementId,
    /// Index into [`Program::functions`].
    pub function: usize,
    pub stmt: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<ElementId>,
}

/// 1-based source position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Name of the function every program starts in.
pub const ENTRY_FUNCTION: &str = "main";

/// A parsed, validated program.
#[derive(Clone, Debug)]
pub struct Program {
    pub(crate) functions: Vec<FunctionDef>,
    pub(crate) statements: Vec<Statement>,
    pub(crate) locations: Vec<Location>,
    pub(crate) entry: usize,
}

impl Program {
    pub fn functions(&self) -> &[FunctionDef] {
        &self.functions
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn statement(&self, id: ElementId) -> Option<&Statement> {
        self.statements.get(id.0)
    }

    pub(crate) fn statement_mut(&mut self, id: ElementId) -> Option<&mut Statement> {
        self.statements.get_mut(id.0)
    }

    pub fn element_count(&self) -> usize {
        self.statements.len()
    }

    pub fn entry(&self) -> &FunctionDef {
        &self.functions[self.entry]
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn location(&self, id: ElementId) -> Location {
        self.locations.get(id.0).copied().unwrap_or_default()
    }
}

/// Structural equality; source locations are ignored.
impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        self.functions == other.functions
            && self.statements == other.statements
            && self.entry == other.entry
    }
}

impl Eq for Program {}
