//! Lexer and recursive-descent parser for `.mut` sources.
//!
//! Expressions are parsed by precedence climbing over
//! `|| && == != < <= > >= + - * / %` with unary minus binding tightest.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{
    BinOp, ElementId, Expr, FunctionDef, Location, Program, Statement, Stmt, ENTRY_FUNCTION,
};
use super::value::{Fixed, Value};

/// Builtin returning the number of arguments supplied to the entry function.
pub const BUILTIN_NARGS: &str = "nargs";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {location}: {message}")]
    Syntax { location: Location, message: String },
    #[error("semantic error at {location}: {message}")]
    Semantic { location: Location, message: String },
}

impl ParseError {
    pub fn location(&self) -> Location {
        match self {
            ParseError::Syntax { location, .. } | ParseError::Semantic { location, .. } => {
                *location
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Dec(Fixed),
    Func,
    If,
    Else,
    While,
    Return,
    Print,
    Op(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Dec(v) => format!("decimal `{v}`"),
            Tok::Func => "`func`".into(),
            Tok::If => "`if`".into(),
            Tok::Else => "`else`".into(),
            Tok::While => "`while`".into(),
            Tok::Return => "`return`".into(),
            Tok::Print => "`print`".into(),
            Tok::Op(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

const PUNCT: [&str; 23] = [
    "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "%", "=", "(", ")", "{", "}",
    ",", ";", "!", "&", "|",
];

fn lex(source: &str) -> Result<Vec<(Tok, Location)>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
        let c = chars[*i];
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let loc = Location { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                advance(&mut i, &mut line, &mut col);
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if text.contains('.') {
                Fixed::parse(&text).map(Tok::Dec)
            } else {
                text.parse().ok().map(Tok::Int)
            };
            let tok = tok.ok_or_else(|| ParseError::Syntax {
                location: loc,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((tok, loc));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "func" => Tok::Func,
                "if" => Tok::If,
                "else" => Tok::Else,
                "while" => Tok::While,
                "return" => Tok::Return,
                "print" => Tok::Print,
                _ => Tok::Ident(word),
            };
            out.push((tok, loc));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op = PUNCT
            .iter()
            .find(|p| p.len() == 2 && **p == two)
            .or_else(|| PUNCT.iter().find(|p| p.len() == 1 && p.starts_with(c)));
        match op {
            Some(&p) if !matches!(p, "!" | "&" | "|") => {
                for _ in 0..p.len() {
                    advance(&mut i, &mut line, &mut col);
                }
                out.push((Tok::Op(p), loc));
            }
            _ => {
                return Err(ParseError::Syntax {
                    location: loc,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push((Tok::Eof, Location { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Location)>,
    pos: usize,
    statements: Vec<Statement>,
    locations: Vec<Location>,
    current_function: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> Location {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            location: self.loc(),
            message: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Tok::Op(o) if *o == op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(&format!("`{op}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.error("identifier"),
        }
    }

    fn program(&mut self) -> Result<Vec<(FunctionDef, Location)>, ParseError> {
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            let loc = self.loc();
            if *self.peek() != Tok::Func {
                return self.error("`func`");
            }
            self.bump();
            let name = self.ident()?;
            self.expect_op("(")?;
            let mut params = Vec::new();
            if !self.eat_op(")") {
                loop {
                    params.push(self.ident()?);
                    if self.eat_op(")") {
                        break;
                    }
                    self.expect_op(",")?;
                }
            }
            self.current_function = functions.len();
            let body = self.block()?;
            functions.push((FunctionDef { name, params, body }, loc));
        }
        if functions.is_empty() {
            return self.error("`func`");
        }
        Ok(functions)
    }

    fn block(&mut self) -> Result<Vec<ElementId>, ParseError> {
        self.expect_op("{")?;
        let mut ids = Vec::new();
        while !self.eat_op("}") {
            ids.push(self.statement()?);
        }
        Ok(ids)
    }

    /// Reserves the next element id so that statements are numbered in
    /// source order even when a compound statement contains nested ones.
    fn reserve(&mut self, loc: Location) -> ElementId {
        let id = ElementId(self.statements.len());
        self.statements.push(Statement {
            id,
            function: self.current_function,
            stmt: Stmt::Print { args: Vec::new() },
        });
        self.locations.push(loc);
        id
    }

    fn statement(&mut self) -> Result<ElementId, ParseError> {
        let loc = self.loc();
        let stmt_id;
        let stmt = match self.peek().clone() {
            Tok::If => {
                self.bump();
                stmt_id = self.reserve(loc);
                self.expect_op("(")?;
                let cond = self.expr()?;
                self.expect_op(")")?;
                let then_body = self.block()?;
                let else_body = if *self.peek() == Tok::Else {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                }
            }
            Tok::While => {
                self.bump();
                stmt_id = self.reserve(loc);
                self.expect_op("(")?;
                let cond = self.expr()?;
                self.expect_op(")")?;
                let body = self.block()?;
                Stmt::While { cond, body }
            }
            Tok::Return => {
                self.bump();
                stmt_id = self.reserve(loc);
                let value = self.expr()?;
                self.expect_op(";")?;
                Stmt::Return { value }
            }
            Tok::Print => {
                self.bump();
                stmt_id = self.reserve(loc);
                self.expect_op("(")?;
                let args = self.args_nonempty()?;
                self.expect_op(";")?;
                Stmt::Print { args }
            }
            Tok::Ident(name) => {
                self.bump();
                stmt_id = self.reserve(loc);
                if self.eat_op("=") {
                    let value = self.expr()?;
                    self.expect_op(";")?;
                    Stmt::Assign {
                        target: name,
                        value,
                    }
                } else if self.eat_op("(") {
                    let args = self.args()?;
                    self.expect_op(";")?;
                    Stmt::Call { callee: name, args }
                } else {
                    return self.error("`=` or `(`");
                }
            }
            _ => return self.error("statement"),
        };
        self.statements[stmt_id.0].stmt = stmt;
        Ok(stmt_id)
    }

    /// Arguments after `(`, consuming the closing `)`.
    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        if self.eat_op(")") {
            return Ok(Vec::new());
        }
        self.args_nonempty()
    }

    fn args_nonempty(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = vec![self.expr()?];
        while self.eat_op(",") {
            args.push(self.expr()?);
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op(s) => match BinOp::from_symbol(s) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("-") {
            let operand = self.unary()?;
            return Ok(match operand {
                Expr::Lit(v) => match v.neg() {
                    Ok(n) => Expr::Lit(n),
                    Err(_) => Expr::Neg(Box::new(Expr::Lit(v))),
                },
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(Value::Int(v)))
            }
            Tok::Dec(v) => {
                self.bump();
                Ok(Expr::Lit(Value::Fixed(v)))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat_op("(") {
                    Ok(Expr::Call(name, self.args()?))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Op("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_op(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}

/// Parses and validates a program.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        statements: Vec::new(),
        locations: Vec::new(),
        current_function: 0,
    };
    let defs = parser.program()?;
    let Parser {
        statements,
        locations,
        ..
    } = parser;

    let mut seen = BTreeSet::new();
    for (f, loc) in &defs {
        if f.name == BUILTIN_NARGS {
            return semantic(
                *loc,
                format!("`{}` is a builtin and cannot be redefined", f.name),
            );
        }
        if !seen.insert(f.name.clone()) {
            return semantic(*loc, format!("function `{}` defined twice", f.name));
        }
    }
    let functions: Vec<FunctionDef> = defs.into_iter().map(|(f, _)| f).collect();
    let entry = match functions.iter().position(|f| f.name == ENTRY_FUNCTION) {
        Some(e) => e,
        None => {
            return semantic(
                Location { line: 1, column: 1 },
                format!("no `{ENTRY_FUNCTION}` function"),
            );
        }
    };
    let program = Program {
        functions,
        statements,
        locations,
        entry,
    };
    check(&program)?;
    Ok(program)
}

fn semantic<T>(location: Location, message: String) -> Result<T, ParseError> {
    Err(ParseError::Semantic { location, message })
}

fn check(program: &Program) -> Result<(), ParseError> {
    for (fi, func) in program.functions.iter().enumerate() {
        let mut defined: BTreeSet<&str> = func.params.iter().map(String::as_str).collect();
        if defined.len() != func.params.len() {
            return semantic(
                Location::default(),
                format!("duplicate parameter in `{}`", func.name),
            );
        }
        for st in program.statements.iter().filter(|s| s.function == fi) {
            if let Stmt::Assign { target, .. } = &st.stmt {
                defined.insert(target);
            }
        }
        for st in program.statements.iter().filter(|s| s.function == fi) {
            let loc = program.location(st.id);
            if let Stmt::Call { callee, args } = &st.stmt {
                check_call(program, callee, args.len(), loc)?;
            }
            for e in st.stmt.slots() {
                check_expr(program, e, &defined, loc)?;
            }
        }
    }
    Ok(())
}

fn check_call(
    program: &Program,
    callee: &str,
    arity: usize,
    loc: Location,
) -> Result<(), ParseError> {
    if callee == BUILTIN_NARGS {
        if arity != 0 {
            return semantic(loc, format!("`{BUILTIN_NARGS}` takes no arguments"));
        }
        return Ok(());
    }
    match program.function_index(callee) {
        None => semantic(loc, format!("undefined function `{callee}`")),
        Some(i) if program.functions[i].params.len() != arity => semantic(
            loc,
            format!(
                "`{callee}` expects {} arguments, got {arity}",
                program.functions[i].params.len()
            ),
        ),
        Some(_) => Ok(()),
    }
}

fn check_expr(
    program: &Program,
    e: &Expr,
    defined: &BTreeSet<&str>,
    loc: Location,
) -> Result<(), ParseError> {
    match e {
        Expr::Var(name) if !defined.contains(name.as_str()) => {
            return semantic(loc, format!("undefined variable `{name}`"));
        }
        Expr::Call(callee, args) => check_call(program, callee, args.len(), loc)?,
        _ => {}
    }
    for c in e.children() {
        check_expr(program, c, defined, loc)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::ast::StatementKind;

    pub(crate) const ALG1: &str = "func main(b) {\n  a = 1;\n  a = a + 1;\n  if (b % 2 == 0) {\n    a = a * 2;\n  }\n  c = 100;\n  return a;\n}\n";

    #[test]
    fn motivating_example_has_six_elements() {
        let p = parse(ALG1).unwrap();
        assert_eq!(p.element_count(), 6);
        let kinds: Vec<_> = p.statements().iter().map(|s| s.stmt.kind()).collect();
        assert_eq!(
            kinds,
            vec![
                StatementKind::Assignment,
                StatementKind::Assignment,
                StatementKind::BranchCondition,
                StatementKind::Assignment,
                StatementKind::Assignment,
                StatementKind::Return
            ]
        );
        assert_eq!(p.location(ElementId(2)), Location { line: 4, column: 3 });
    }

    #[test]
    fn empty_body() {
        let p = parse("func main() {}").unwrap();
        assert_eq!(p.element_count(), 0);
    }

    #[test]
    fn malformed_assignment_reports_line() {
        let err = parse("func main() {\n  a = ;\n}").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
        assert_eq!(err.location().line, 2);
    }

    #[test]
    fn precedence() {
        let p = parse("func main(x) { y = 1 + 2 * x - 3 < 4 || x == 1 && x != 2; }").unwrap();
        let Stmt::Assign { value, .. } = &p.statements()[0].stmt else {
            panic!()
        };
        let Expr::Binary(BinOp::Or, lhs, rhs) = value else {
            panic!("{value:?}")
        };
        assert!(matches!(**lhs, Expr::Binary(BinOp::Lt, _, _)));
        assert!(matches!(**rhs, Expr::Binary(BinOp::And, _, _)));
    }

    #[test]
    fn negative_literals_fold() {
        let p = parse("func main() { a = -1; b = 2 - -0.5; c = -a; }").unwrap();
        let slot = |i: usize| p.statements()[i].stmt.slots()[0].clone();
        assert_eq!(slot(0), Expr::Lit(Value::Int(-1)));
        assert!(
            matches!(slot(1), Expr::Binary(BinOp::Sub, _, r) if *r == Expr::Lit(Value::Fixed(Fixed(-5000))))
        );
        assert!(matches!(slot(2), Expr::Neg(_)));
    }

    #[test]
    fn semantic_errors() {
        assert!(matches!(
            parse("func main() { return x; }"),
            Err(ParseError::Semantic { .. })
        ));
        assert!(matches!(
            parse("func main() { f(); }"),
            Err(ParseError::Semantic { .. })
        ));
        assert!(matches!(
            parse("func f(a) { return a; } func main() { x = f(1, 2); }"),
            Err(ParseError::Semantic { .. })
        ));
        assert!(matches!(
            parse("func helper() { }"),
            Err(ParseError::Semantic { .. })
        ));
        assert!(matches!(
            parse("func main() {} func main() {}"),
            Err(ParseError::Semantic { .. })
        ));
        assert!(matches!(
            parse("func main() { x = nargs(1); }"),
            Err(ParseError::Semantic { .. })
        ));
    }

    #[test]
    fn syntax_errors() {
        assert!(parse("").is_err());
        assert!(parse("func main() { a = 1 }").is_err());
        assert!(parse("func main() { a = 1 & 2; }").is_err());
        assert!(parse("func main() { a = 1.23456; }").is_err());
        assert!(parse("func main() { print(); }").is_err());
        assert!(parse("func main() { if (1) { } else }").is_err());
    }

    #[test]
    fn call_statement_and_comments() {
        let p = parse("// header\nfunc f(a) { print(a); }\nfunc main() { f(3); // trailing\n }")
            .unwrap();
        assert_eq!(p.element_count(), 2);
        assert_eq!(p.statements()[1].stmt.kind(), StatementKind::CallStatement);
    }
}
