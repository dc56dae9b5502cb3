//! Printing in the concrete syntax. Output re-parses to the same tree:
//! parentheses are inserted wherever precedence or associativity would
//! otherwise regroup operands.

use crate::ast::{BinOp, Expr, Lvalue, Stmt, UnOp};
use crate::predicate::{ArithOp, Predicate, Range, Term, VarRef};

pub trait Pretty {
    fn pretty(&self) -> String;
}

pub fn pretty_print<P: Pretty + ?Sized>(x: &P) -> String {
    x.pretty()
}

impl Pretty for Stmt {
    fn pretty(&self) -> String {
        let mut out = String::new();
        stmt_list(self, 0, &mut out);
        out
    }
}

impl Pretty for Expr {
    fn pretty(&self) -> String {
        expr(self, 0)
    }
}

impl Pretty for Predicate {
    fn pretty(&self) -> String {
        pred(self, 0)
    }
}

impl Pretty for Term {
    fn pretty(&self) -> String {
        term(self, 0)
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn stmt_list(s: &Stmt, level: usize, out: &mut String) {
    let parts = s.flatten();
    for (k, p) in parts.iter().enumerate() {
        indent(level, out);
        stmt(p, level, out);
        if k + 1 < parts.len() {
            out.push(';');
        }
        out.push('\n');
    }
}

fn stmt(s: &Stmt, level: usize, out: &mut String) {
    match s {
        Stmt::Ok => out.push_str("ok"),
        Stmt::Stop => out.push_str("stop"),
        Stmt::Print(e) => {
            out.push_str("print ");
            out.push_str(&expr(e, 0));
        }
        Stmt::Assign(lv, e) => {
            match lv {
                Lvalue::Scalar(n) => out.push_str(n),
                Lvalue::Cell(n, i) => {
                    out.push_str(n);
                    out.push('(');
                    out.push_str(&expr(i, 0));
                    out.push(')');
                }
            }
            out.push_str(" := ");
            out.push_str(&expr(e, 0));
        }
        Stmt::If(c, a, b) => {
            out.push_str("if ");
            out.push_str(&expr(c, 0));
            out.push_str(" then\n");
            stmt_list(a, level + 1, out);
            if **b != Stmt::Ok {
                indent(level, out);
                out.push_str("else\n");
                stmt_list(b, level + 1, out);
            }
            indent(level, out);
            out.push_str("fi");
        }
        Stmt::While(c, body, spec) => {
            out.push_str("while ");
            out.push_str(&expr(c, 0));
            out.push_str(" do\n");
            stmt_list(body, level + 1, out);
            indent(level, out);
            out.push_str("od");
            if let Some(n) = spec {
                out.push_str(" spec ");
                out.push_str(n);
            }
        }
        Stmt::Seq(..) => {
            // Only reachable for a sequence nested in a branch position that
            // `flatten` already unpacked.
            stmt_list(s, level, out);
        }
    }
}

// Precedence levels shared by program expressions and spec terms.
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;
const CMP: u8 = 5;
const ADD: u8 = 6;
const MUL: u8 = 7;
const NEG: u8 = 8;
const FACT: u8 = 9;
const ATOM: u8 = 10;

fn wrap(s: String, level: u8, min: u8) -> String {
    if level < min {
        format!("({s})")
    } else {
        s
    }
}

fn int(n: i64) -> String {
    if n < 0 {
        format!("({n})")
    } else {
        n.to_string()
    }
}

fn binop_level(op: BinOp) -> u8 {
    match op {
        BinOp::Or => OR,
        BinOp::And => AND,
        BinOp::Add | BinOp::Sub => ADD,
        BinOp::Mul | BinOp::Div => MUL,
        _ => CMP,
    }
}

fn expr(e: &Expr, min: u8) -> String {
    let (s, level) = match e {
        Expr::Int(n) => (int(*n), ATOM),
        Expr::Bool(b) => (b.to_string(), ATOM),
        Expr::Var(n) => (n.clone(), ATOM),
        Expr::Index(n, i) => (format!("{n}({})", expr(i, 0)), ATOM),
        Expr::Unary(UnOp::Neg, a) => (format!("-{}", expr(a, NEG)), NEG),
        Expr::Unary(UnOp::Not, a) => (format!("~{}", expr(a, NOT)), NOT),
        Expr::Unary(UnOp::Fact, a) => (format!("{}!", expr(a, FACT)), FACT),
        Expr::Binary(op, a, b) => {
            let l = binop_level(*op);
            let (lmin, rmin) = if op.is_comparison() { (l + 1, l + 1) } else { (l, l + 1) };
            (format!("{} {} {}", expr(a, lmin), op.symbol(), expr(b, rmin)), l)
        }
    };
    wrap(s, level, min)
}

// Predicate levels.
const SEQ: u8 = 0;
const IMPLIES: u8 = 1;

fn var_ref(v: &VarRef) -> String {
    let mut s = String::new();
    if v.need {
        s.push_str("need ");
    }
    s.push_str(&v.name);
    if v.primed {
        s.push('\'');
    }
    if let Some(i) = &v.index {
        s.push('(');
        s.push_str(&term(i, 0));
        s.push(')');
    }
    s
}

fn range(r: &Range) -> String {
    if r.lo.is_none() && r.hi.is_none() {
        return String::new();
    }
    let lo = r.lo.as_ref().map(|t| term(t, ADD)).unwrap_or_default();
    let hi = r.hi.as_ref().map(|t| term(t, ADD)).unwrap_or_default();
    format!(": {lo}..{hi}")
}

fn term(t: &Term, min: u8) -> String {
    let (s, level) = match t {
        Term::Int(n) => (int(*n), ATOM),
        Term::Inf => ("inf".to_string(), ATOM),
        Term::Time { primed } => ((if *primed { "t'" } else { "t" }).to_string(), ATOM),
        Term::Var(v) => (var_ref(v), ATOM),
        Term::Bound(n) => (n.clone(), ATOM),
        Term::Neg(a) => (format!("-{}", term(a, NEG)), NEG),
        Term::Fact(a) => (format!("{}!", term(a, FACT)), FACT),
        Term::Arith(op, a, b) => {
            let l = match op {
                ArithOp::Add | ArithOp::Sub => ADD,
                ArithOp::Mul | ArithOp::Div => MUL,
            };
            (format!("{} {} {}", term(a, l), op.symbol(), term(b, l + 1)), l)
        }
        Term::IfFi(c, a, b) => (
            format!("if {} then {} else {} fi", pred(c, 0), term(a, 0), term(b, 0)),
            ATOM,
        ),
        Term::Max {
            var,
            range: r,
            guard,
            body,
        } => (
            format!("(max {var}{} | {} . {})", range(r), pred(guard, IMPLIES), term(body, ADD)),
            ATOM,
        ),
    };
    wrap(s, level, min)
}

/// Whether a predicate prints as a plain binary atom, or is already
/// parenthesized, so it may stand on either side of `=` as is.
fn simple_side(p: &Predicate) -> bool {
    matches!(
        p,
        Predicate::Const(_) | Predicate::Atom(_) | Predicate::IfFi(..) | Predicate::Forall(..) | Predicate::Exists(..)
    )
}

fn joined(ps: &[Predicate], sep: &str, min: u8) -> String {
    ps.iter().map(|q| pred(q, min)).collect::<Vec<_>>().join(sep)
}

fn pred(p: &Predicate, min: u8) -> String {
    let (s, level) = match p {
        Predicate::Const(b) => (b.to_string(), ATOM),
        Predicate::Atom(t) => (term(t, ATOM), ATOM),
        Predicate::Cmp(op, a, b) => (
            format!("{} {} {}", term(a, ADD), op.symbol(), term(b, ADD)),
            CMP,
        ),
        Predicate::Equiv(a, b) => {
            let side = |q: &Predicate| {
                if simple_side(q) {
                    pred(q, 0)
                } else {
                    format!("({})", pred(q, 0))
                }
            };
            (format!("{} = {}", side(a), side(b)), CMP)
        }
        Predicate::Not(a) => (format!("~{}", pred(a, NOT)), NOT),
        Predicate::And(ps) if ps.len() >= 2 => (joined(ps, " /\\ ", AND + 1), AND),
        Predicate::Or(ps) if ps.len() >= 2 => (joined(ps, " \\/ ", OR + 1), OR),
        // Degenerate junctions have no surface form of their own.
        Predicate::And(ps) | Predicate::Or(ps) => match ps.first() {
            Some(q) => return pred(q, min),
            None => (matches!(p, Predicate::And(_)).to_string(), ATOM),
        },
        Predicate::Implies(a, b) => (
            format!("{} ==> {}", pred(a, IMPLIES + 1), pred(b, IMPLIES)),
            IMPLIES,
        ),
        Predicate::IfFi(c, a, b) => (
            format!("if {} then {} else {} fi", pred(c, 0), pred(a, 0), pred(b, 0)),
            ATOM,
        ),
        Predicate::Forall(v, r, body) => (format!("(forall {v}{} . {})", range(r), pred(body, IMPLIES)), ATOM),
        Predicate::Exists(v, r, body) => (format!("(exists {v}{} . {})", range(r), pred(body, IMPLIES)), ATOM),
        Predicate::Compose(ps) => (joined(ps, "; ", IMPLIES), SEQ),
    };
    wrap(s, level, min)
}
