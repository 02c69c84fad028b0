//! Pretty-printer producing canonical `.mut` source.

use std::fmt::Write;

use super::ast::{ElementId, Expr, Program, Stmt};
use super::value::Value;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, f) in p.functions().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "func {}({}) {{", f.name, f.params.join(", "));
        print_block(p, &f.body, 1, &mut out);
        out.push_str("}\n");
    }
    out
}

fn print_block(p: &Program, ids: &[ElementId], depth: usize, out: &mut String) {
    for id in ids {
        print_stmt(p, *id, depth, out);
    }
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_stmt(p: &Program, id: ElementId, depth: usize, out: &mut String) {
    let stmt = &p.statements()[id.index()].stmt;
    indent(depth, out);
    match stmt {
        Stmt::Assign { target, value } => {
            let _ = writeln!(out, "{target} = {};", print_expr(value));
        }
        Stmt::Return { value } => {
            let _ = writeln!(out, "return {};", print_expr(value));
        }
        Stmt::Print { args } => {
            let _ = writeln!(out, "print({});", join(args));
        }
        Stmt::Call { callee, args } => {
            let _ = writeln!(out, "{callee}({});", join(args));
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = writeln!(out, "if ({}) {{", print_expr(cond));
            print_block(p, then_body, depth + 1, out);
            indent(depth, out);
            match else_body {
                Some(body) => {
                    out.push_str("} else {\n");
                    print_block(p, body, depth + 1, out);
                    indent(depth, out);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        Stmt::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", print_expr(cond));
            print_block(p, body, depth + 1, out);
            indent(depth, out);
            out.push_str("}\n");
        }
    }
}

fn join(args: &[Expr]) -> String {
    args.iter().map(print_expr).collect::<Vec<_>>().join(", ")
}

/// Renders an expression with the minimal parentheses needed to reparse
/// to the same tree.
pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Lit(v) => print_literal(*v),
        Expr::Var(name) => name.clone(),
        Expr::Neg(inner) => match **inner {
            Expr::Lit(_) | Expr::Binary(..) => format!("-({})", print_expr(inner)),
            _ => format!("-{}", print_expr(inner)),
        },
        Expr::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let wrap = |child: &Expr, strict: bool| {
                let s = print_expr(child);
                match child {
                    Expr::Binary(cop, ..)
                        if cop.precedence() < prec || (strict && cop.precedence() == prec) =>
                    {
                        format!("({s})")
                    }
                    _ => s,
                }
            };
            format!("{} {} {}", wrap(lhs, false), op.symbol(), wrap(rhs, true))
        }
        Expr::Call(name, args) => format!("{name}({})", join(args)),
    }
}

pub fn print_literal(v: Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Fixed(f) => f.to_string(),
        Value::Unit => "0".to_string(),
    }
}
