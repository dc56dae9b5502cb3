//! Canonical forms: literal folding, affine offset merging, ordered
//! conjunctions and disjunctions, and unrolling of quantifiers whose range
//! is literal.
//!
//! Literal quantifier ranges are assumed to lie inside the modeled prefix;
//! the annotator only emits such ranges.

use super::eval::{arith, compare, factorial_i64, Value};
use super::{provably_distinct, subst_bound_pred, ArithOp, CmpOp, Predicate, Range, Term, VarRef};

/// Longest literal range unrolled into explicit conjuncts.
const MAX_UNROLL: i64 = 64;

pub fn normalize(p: &Predicate) -> Predicate {
    pred(p)
}

pub fn normalize_term(t: &Term) -> Term {
    term(t)
}

fn literal(t: &Term) -> Option<Value> {
    match t {
        Term::Int(n) => Some(Value::Int(*n)),
        Term::Inf => Some(Value::Inf),
        _ => None,
    }
}

fn from_value(v: Value) -> Option<Term> {
    match v {
        Value::Int(n) => Some(Term::Int(n)),
        Value::Inf => Some(Term::Inf),
        Value::Bool(_) => None,
    }
}

/// Splits `e + c` / `e - c` into `(e, c)`.
fn offset(t: &Term) -> (Option<&Term>, i64) {
    match t {
        Term::Int(n) => (None, *n),
        Term::Arith(ArithOp::Add, a, b) => match **b {
            Term::Int(c) => (Some(a), c),
            _ => (Some(t), 0),
        },
        Term::Arith(ArithOp::Sub, a, b) => match **b {
            Term::Int(c) if c != i64::MIN => (Some(a), -c),
            _ => (Some(t), 0),
        },
        _ => (Some(t), 0),
    }
}

fn with_offset(base: Term, c: i64) -> Term {
    match c {
        0 => base,
        c if c < 0 && c != i64::MIN => Term::sub(base, Term::Int(-c)),
        c => Term::add(base, Term::Int(c)),
    }
}

fn range(r: &Range) -> Range {
    Range {
        lo: r.lo.as_ref().map(|t| Box::new(term(t))),
        hi: r.hi.as_ref().map(|t| Box::new(term(t))),
    }
}

fn term(t: &Term) -> Term {
    match t {
        Term::Int(_) | Term::Inf | Term::Time { .. } | Term::Bound(_) => t.clone(),
        Term::Var(v) => Term::Var(VarRef {
            index: v.index.as_ref().map(|i| Box::new(term(i))),
            ..v.clone()
        }),
        Term::Neg(a) => match term(a) {
            Term::Int(n) if n != i64::MIN => Term::Int(-n),
            Term::Neg(inner) => *inner,
            a => Term::Neg(Box::new(a)),
        },
        Term::Fact(a) => {
            let a = term(a);
            if let Term::Int(n) = a {
                if let Ok(v) = factorial_i64(n) {
                    return Term::Int(v);
                }
            }
            Term::Fact(Box::new(a))
        }
        Term::Arith(op, a, b) => arith_term(*op, term(a), term(b)),
        Term::IfFi(c, a, b) => {
            let c = pred(c);
            let (a, b) = (term(a), term(b));
            match c {
                Predicate::Const(true) => a,
                Predicate::Const(false) => b,
                _ if a == b => a,
                c => Term::if_fi(c, a, b),
            }
        }
        Term::Max {
            var,
            range: r,
            guard,
            body,
        } => Term::Max {
            var: var.clone(),
            range: range(r),
            guard: Box::new(pred(guard)),
            body: Box::new(term(body)),
        },
    }
}

fn arith_term(op: ArithOp, a: Term, b: Term) -> Term {
    if let (Some(x), Some(y)) = (literal(&a), literal(&b)) {
        if let Some(t) = arith(op, x, y).ok().and_then(from_value) {
            return t;
        }
    }
    match (op, &a, &b) {
        (ArithOp::Add, Term::Int(0), _) => return b,
        (ArithOp::Add | ArithOp::Sub, _, Term::Int(0)) => return a,
        (ArithOp::Mul, Term::Int(1), _) => return b,
        (ArithOp::Mul | ArithOp::Div, _, Term::Int(1)) => return a,
        _ => {}
    }
    // (e + c1) +/- c2 merges the literal offsets.
    if let (ArithOp::Add | ArithOp::Sub, Term::Int(c2)) = (op, &b) {
        if let (Some(base), c1) = offset(&a) {
            if c1 != 0 {
                let c2 = if op == ArithOp::Add { Some(*c2) } else { c2.checked_neg() };
                if let Some(c) = c2.and_then(|c2| c1.checked_add(c2)) {
                    return with_offset(base.clone(), c);
                }
            }
        }
    }
    Term::arith(op, a, b)
}

fn pred(p: &Predicate) -> Predicate {
    match p {
        Predicate::Const(_) => p.clone(),
        Predicate::Atom(t) => Predicate::Atom(term(t)),
        Predicate::Cmp(op, a, b) => {
            let (a, b) = (term(a), term(b));
            if let (Some(x), Some(y)) = (literal(&a), literal(&b)) {
                if let Ok(v) = compare(*op, x, y) {
                    return Predicate::Const(v);
                }
            }
            // Terms are pure, so a term equals itself; equal bases with
            // different literal offsets never coincide.
            if a == b {
                return Predicate::Const(matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge));
            }
            match op {
                CmpOp::Eq | CmpOp::Ne if provably_distinct(&a, &b) => {
                    return Predicate::Const(*op == CmpOp::Ne)
                }
                _ => {}
            }
            Predicate::Cmp(*op, a, b)
        }
        Predicate::Not(a) => negate(pred(a)),
        Predicate::And(ps) => junction(ps, true),
        Predicate::Or(ps) => junction(ps, false),
        Predicate::Implies(a, b) => match (pred(a), pred(b)) {
            (Predicate::Const(true), b) => b,
            (Predicate::Const(false), _) | (_, Predicate::Const(true)) => Predicate::tt(),
            (a, Predicate::Const(false)) => negate(a),
            (a, b) if a == b => Predicate::tt(),
            (a, b) => Predicate::implies(a, b),
        },
        Predicate::Equiv(a, b) => match (pred(a), pred(b)) {
            (Predicate::Const(x), Predicate::Const(y)) => Predicate::Const(x == y),
            (Predicate::Const(true), q) | (q, Predicate::Const(true)) => q,
            (Predicate::Const(false), q) | (q, Predicate::Const(false)) => negate(q),
            (a, b) if a == b => Predicate::tt(),
            (a, b) => Predicate::equiv(a, b),
        },
        Predicate::IfFi(c, a, b) => {
            let c = pred(c);
            let (a, b) = (pred(a), pred(b));
            match c {
                Predicate::Const(true) => a,
                Predicate::Const(false) => b,
                _ if a == b => a,
                c => Predicate::if_fi(c, a, b),
            }
        }
        Predicate::Forall(v, r, body) => quantifier(v, r, body, true),
        Predicate::Exists(v, r, body) => quantifier(v, r, body, false),
        Predicate::Compose(stages) => {
            let mut out = Vec::new();
            for s in stages {
                match pred(s) {
                    Predicate::Compose(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            Predicate::Compose(out)
        }
    }
}

fn negate(p: Predicate) -> Predicate {
    match p {
        Predicate::Const(b) => Predicate::Const(!b),
        Predicate::Not(inner) => *inner,
        Predicate::Cmp(op, a, b) => Predicate::Cmp(op.negate(), a, b),
        other => Predicate::not(other),
    }
}

/// Normalizes a conjunction (`and == true`) or disjunction.
fn junction(ps: &[Predicate], and: bool) -> Predicate {
    let mut out = Vec::new();
    let mut stack: Vec<Predicate> = ps.iter().map(pred).collect();
    stack.reverse();
    while let Some(q) = stack.pop() {
        match q {
            Predicate::Const(b) if b == and => {}
            Predicate::Const(_) => return Predicate::Const(!and),
            Predicate::And(inner) if and => stack.extend(inner.into_iter().rev()),
            Predicate::Or(inner) if !and => stack.extend(inner.into_iter().rev()),
            other => out.push(other),
        }
    }
    out.sort();
    out.dedup();
    match out.len() {
        0 => Predicate::Const(and),
        1 => out.pop().unwrap(),
        _ if and => Predicate::And(out),
        _ => Predicate::Or(out),
    }
}

fn quantifier(v: &str, r: &Range, body: &Predicate, all: bool) -> Predicate {
    let r = range(r);
    let body = pred(body);
    if let (Some(Term::Int(lo)), Some(Term::Int(hi))) = (r.lo.as_deref(), r.hi.as_deref()) {
        let lo = (*lo).max(0);
        if hi.saturating_sub(lo) < MAX_UNROLL {
            let parts = (lo..=*hi)
                .map(|j| subst_bound_pred(&body, v, &Term::Int(j)))
                .collect::<Vec<_>>();
            return junction(&parts, all);
        }
    }
    match body {
        Predicate::Const(b) if b == all => Predicate::Const(all),
        body if all => Predicate::Forall(v.to_string(), r, Box::new(body)),
        body => Predicate::Exists(v.to_string(), r, Box::new(body)),
    }
}
