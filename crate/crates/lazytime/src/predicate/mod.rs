//! Specification predicates over unprimed, primed, time and need variables,
//! evaluated over bounded finite domains.

mod compose;
mod eval;
mod frame;
mod normalize;
mod onepoint;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ast::{ExtNat, Universe};

pub use compose::{compose, eval_chain, solve_chain, ChainSolutions, SolveBudget};
pub use eval::{eval_pred, eval_pred_in, eval_term_in, Value};
pub use frame::{Binding, Frame, FramePair, Slot};
pub use normalize::{normalize, normalize_term};
pub use onepoint::{one_point_compose, Effect, OnePointError};
pub(crate) use onepoint::provably_distinct;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "/=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

/// Inclusive index range; missing bounds mean the edge of the modeled
/// prefix. Ranges are always clamped to `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Range {
    pub lo: Option<Box<Term>>,
    pub hi: Option<Box<Term>>,
}

impl Range {
    pub fn all() -> Range {
        Range::default()
    }

    pub fn new(lo: Option<Term>, hi: Option<Term>) -> Range {
        Range {
            lo: lo.map(Box::new),
            hi: hi.map(Box::new),
        }
    }

    pub fn literal(lo: i64, hi: i64) -> Range {
        Range::new(Some(Term::Int(lo)), Some(Term::Int(hi)))
    }
}

/// A reference to a program variable, its primed version, or its need
/// variable, optionally indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: String,
    pub primed: bool,
    pub need: bool,
    pub index: Option<Box<Term>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(i64),
    Inf,
    Time { primed: bool },
    Var(VarRef),
    /// A quantifier- or comprehension-bound index variable.
    Bound(String),
    Neg(Box<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
    Fact(Box<Term>),
    IfFi(Box<Predicate>, Box<Term>, Box<Term>),
    Max {
        var: String,
        range: Range,
        guard: Box<Predicate>,
        body: Box<Term>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Const(bool),
    /// A binary-valued term, in practice a need variable.
    Atom(Term),
    Cmp(CmpOp, Term, Term),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Implies(Box<Predicate>, Box<Predicate>),
    Equiv(Box<Predicate>, Box<Predicate>),
    IfFi(Box<Predicate>, Box<Predicate>, Box<Predicate>),
    Forall(String, Range, Box<Predicate>),
    Exists(String, Range, Box<Predicate>),
    /// Sequential composition `A; B; ...`, evaluated by searching for
    /// intermediate states.
    Compose(Vec<Predicate>),
}

impl Term {
    fn var_ref(name: &str, primed: bool, need: bool, index: Option<Term>) -> Term {
        Term::Var(VarRef {
            name: name.to_string(),
            primed,
            need,
            index: index.map(Box::new),
        })
    }

    pub fn var(name: &str) -> Term {
        Term::var_ref(name, false, false, None)
    }

    pub fn primed(name: &str) -> Term {
        Term::var_ref(name, true, false, None)
    }

    pub fn cell(name: &str, idx: Term) -> Term {
        Term::var_ref(name, false, false, Some(idx))
    }

    pub fn cell_primed(name: &str, idx: Term) -> Term {
        Term::var_ref(name, true, false, Some(idx))
    }

    pub fn need(name: &str, primed: bool, idx: Option<Term>) -> Term {
        Term::var_ref(name, primed, true, idx)
    }

    pub fn time(primed: bool) -> Term {
        Term::Time { primed }
    }

    pub fn bound(name: &str) -> Term {
        Term::Bound(name.to_string())
    }

    pub fn arith(op: ArithOp, a: Term, b: Term) -> Term {
        Term::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::arith(ArithOp::Add, a, b)
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::arith(ArithOp::Sub, a, b)
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::arith(ArithOp::Mul, a, b)
    }

    pub fn if_fi(c: Predicate, a: Term, b: Term) -> Term {
        Term::IfFi(Box::new(c), Box::new(a), Box::new(b))
    }

    /// Whether this term is a need variable reference.
    pub fn is_need_ref(&self) -> bool {
        matches!(self, Term::Var(v) if v.need)
    }
}

impl Predicate {
    pub fn tt() -> Predicate {
        Predicate::Const(true)
    }

    pub fn ff() -> Predicate {
        Predicate::Const(false)
    }

    /// Conjunction, flattening nested conjunctions and dropping `true`.
    pub fn and(parts: Vec<Predicate>) -> Predicate {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Predicate::And(inner) => out.extend(inner),
                Predicate::Const(true) => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Predicate::tt(),
            1 => out.pop().unwrap(),
            _ => Predicate::And(out),
        }
    }

    /// Disjunction, flattening nested disjunctions and dropping `false`.
    pub fn or(parts: Vec<Predicate>) -> Predicate {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Predicate::Or(inner) => out.extend(inner),
                Predicate::Const(false) => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Predicate::ff(),
            1 => out.pop().unwrap(),
            _ => Predicate::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Predicate) -> Predicate {
        Predicate::Not(Box::new(p))
    }

    pub fn eq(a: Term, b: Term) -> Predicate {
        Predicate::Cmp(CmpOp::Eq, a, b)
    }

    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Predicate {
        Predicate::Cmp(op, a, b)
    }

    pub fn equiv(a: Predicate, b: Predicate) -> Predicate {
        Predicate::Equiv(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Predicate, b: Predicate) -> Predicate {
        Predicate::Implies(Box::new(a), Box::new(b))
    }

    pub fn if_fi(c: Predicate, a: Predicate, b: Predicate) -> Predicate {
        Predicate::IfFi(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn forall(var: &str, range: Range, body: Predicate) -> Predicate {
        Predicate::Forall(var.to_string(), range, Box::new(body))
    }

    pub fn exists(var: &str, range: Range, body: Predicate) -> Predicate {
        Predicate::Exists(var.to_string(), range, Box::new(body))
    }

    pub fn atom(t: Term) -> Predicate {
        Predicate::Atom(t)
    }

    /// The top-level conjuncts of this predicate.
    pub fn conjuncts(&self) -> Vec<&Predicate> {
        match self {
            Predicate::And(ps) => ps.iter().flat_map(|p| p.conjuncts()).collect(),
            Predicate::Const(true) => Vec::new(),
            other => vec![other],
        }
    }

    /// Whether any need variable occurs in this predicate.
    pub fn mentions_needs(&self) -> bool {
        let mut found = false;
        visit_pred(self, &mut |t| {
            if let Term::Var(v) = t {
                found |= v.need;
            }
        });
        found
    }

    /// Names of program variables occurring (in any form) in this predicate.
    pub fn variables(&self) -> BTreeSet<(String, bool)> {
        let mut out = BTreeSet::new();
        visit_pred(self, &mut |t| {
            if let Term::Var(v) = t {
                out.insert((v.name.clone(), v.index.is_some()));
            }
        });
        out
    }
}

/// Calls `f` on every term node reachable from `p`, including nested ones.
pub(crate) fn visit_pred(p: &Predicate, f: &mut dyn FnMut(&Term)) {
    match p {
        Predicate::Const(_) => {}
        Predicate::Atom(t) => visit_term(t, f),
        Predicate::Cmp(_, a, b) => {
            visit_term(a, f);
            visit_term(b, f);
        }
        Predicate::Not(a) => visit_pred(a, f),
        Predicate::And(ps) | Predicate::Or(ps) | Predicate::Compose(ps) => {
            for q in ps {
                visit_pred(q, f);
            }
        }
        Predicate::Implies(a, b) | Predicate::Equiv(a, b) => {
            visit_pred(a, f);
            visit_pred(b, f);
        }
        Predicate::IfFi(c, a, b) => {
            visit_pred(c, f);
            visit_pred(a, f);
            visit_pred(b, f);
        }
        Predicate::Forall(_, r, body) | Predicate::Exists(_, r, body) => {
            visit_range(r, f);
            visit_pred(body, f);
        }
    }
}

fn visit_range(r: &Range, f: &mut dyn FnMut(&Term)) {
    if let Some(lo) = &r.lo {
        visit_term(lo, f);
    }
    if let Some(hi) = &r.hi {
        visit_term(hi, f);
    }
}

pub(crate) fn visit_term(t: &Term, f: &mut dyn FnMut(&Term)) {
    f(t);
    match t {
        Term::Int(_) | Term::Inf | Term::Time { .. } | Term::Bound(_) => {}
        Term::Var(v) => {
            if let Some(i) = &v.index {
                visit_term(i, f);
            }
        }
        Term::Neg(a) | Term::Fact(a) => visit_term(a, f),
        Term::Arith(_, a, b) => {
            visit_term(a, f);
            visit_term(b, f);
        }
        Term::IfFi(c, a, b) => {
            visit_pred(c, f);
            visit_term(a, f);
            visit_term(b, f);
        }
        Term::Max {
            range, guard, body, ..
        } => {
            visit_range(range, f);
            visit_pred(guard, f);
            visit_term(body, f);
        }
    }
}

/// Replaces free occurrences of bound variable `var` by `with`.
pub fn subst_bound_term(t: &Term, var: &str, with: &Term) -> Term {
    match t {
        Term::Bound(v) if v == var => with.clone(),
        Term::Max {
            var: v,
            range,
            guard,
            body,
        } => {
            let range = Range {
                lo: range.lo.as_ref().map(|x| Box::new(subst_bound_term(x, var, with))),
                hi: range.hi.as_ref().map(|x| Box::new(subst_bound_term(x, var, with))),
            };
            if v == var {
                Term::Max {
                    var: v.clone(),
                    range,
                    guard: guard.clone(),
                    body: body.clone(),
                }
            } else {
                Term::Max {
                    var: v.clone(),
                    range,
                    guard: Box::new(subst_bound_pred(guard, var, with)),
                    body: Box::new(subst_bound_term(body, var, with)),
                }
            }
        }
        Term::Var(r) => Term::Var(VarRef {
            name: r.name.clone(),
            primed: r.primed,
            need: r.need,
            index: r.index.as_ref().map(|i| Box::new(subst_bound_term(i, var, with))),
        }),
        Term::Neg(a) => Term::Neg(Box::new(subst_bound_term(a, var, with))),
        Term::Fact(a) => Term::Fact(Box::new(subst_bound_term(a, var, with))),
        Term::Arith(op, a, b) => {
            Term::arith(*op, subst_bound_term(a, var, with), subst_bound_term(b, var, with))
        }
        Term::IfFi(c, a, b) => Term::if_fi(
            subst_bound_pred(c, var, with),
            subst_bound_term(a, var, with),
            subst_bound_term(b, var, with),
        ),
        _ => t.clone(),
    }
}

pub fn subst_bound_pred(p: &Predicate, var: &str, with: &Term) -> Predicate {
    let st = |t: &Term| subst_bound_term(t, var, with);
    let sp = |q: &Predicate| subst_bound_pred(q, var, with);
    match p {
        Predicate::Const(_) => p.clone(),
        Predicate::Atom(t) => Predicate::Atom(st(t)),
        Predicate::Cmp(op, a, b) => Predicate::Cmp(*op, st(a), st(b)),
        Predicate::Not(a) => Predicate::not(sp(a)),
        Predicate::And(ps) => Predicate::And(ps.iter().map(sp).collect()),
        Predicate::Or(ps) => Predicate::Or(ps.iter().map(sp).collect()),
        Predicate::Compose(ps) => Predicate::Compose(ps.iter().map(sp).collect()),
        Predicate::Implies(a, b) => Predicate::implies(sp(a), sp(b)),
        Predicate::Equiv(a, b) => Predicate::equiv(sp(a), sp(b)),
        Predicate::IfFi(c, a, b) => Predicate::if_fi(sp(c), sp(a), sp(b)),
        Predicate::Forall(v, r, body) | Predicate::Exists(v, r, body) => {
            let range = Range {
                lo: r.lo.as_ref().map(|x| Box::new(st(x))),
                hi: r.hi.as_ref().map(|x| Box::new(st(x))),
            };
            let body = if v == var {
                body.clone()
            } else {
                Box::new(sp(body))
            };
            if matches!(p, Predicate::Forall(..)) {
                Predicate::Forall(v.clone(), range, body)
            } else {
                Predicate::Exists(v.clone(), range, body)
            }
        }
    }
}

/// The finite domain a check enumerates over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub array_bound: usize,
    pub scalar_values: Vec<i64>,
    pub time_samples: Vec<ExtNat>,
    /// Cap on the number of intermediate-state candidates a single
    /// composition evaluation may visit.
    pub compose_budget: u64,
}

impl Domain {
    pub fn new(array_bound: usize, scalar_values: Vec<i64>, time_samples: Vec<ExtNat>) -> Domain {
        Domain {
            array_bound,
            scalar_values,
            time_samples,
            compose_budget: 200_000,
        }
    }

    /// Values `0..=5`, time samples `{0, 1, 5, inf}`.
    pub fn with_bound(array_bound: usize) -> Domain {
        Domain::new(
            array_bound,
            (0..=5).collect(),
            vec![ExtNat::Fin(0), ExtNat::Fin(1), ExtNat::Fin(5), ExtNat::Inf],
        )
    }

    pub fn validate(&self) -> Result<(), PredError> {
        if self.array_bound == 0 {
            return Err(PredError::BadDomain("array bound must be at least 1"));
        }
        if self.scalar_values.is_empty() {
            return Err(PredError::BadDomain("scalar value set is empty"));
        }
        if !self.time_samples.contains(&ExtNat::Fin(0)) || !self.time_samples.contains(&ExtNat::Inf)
        {
            return Err(PredError::BadDomain("time samples must include 0 and inf"));
        }
        Ok(())
    }
}

impl Default for Domain {
    fn default() -> Domain {
        Domain::with_bound(crate::ast::DEFAULT_ARRAY_BOUND)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("max over an empty set")]
    UndefinedMax,
    #[error("inexact division {0} / {1}")]
    InexactDivision(i64, i64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("factorial of {0} is undefined or too large")]
    BadFactorial(i64),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("index {index} of `{array}` is outside the modeled range")]
    IndexOutOfRange { array: String, index: i64 },
    #[error("type mismatch: {0}")]
    TypeMismatch(&'static str),
    #[error("value of {0} is not determined")]
    Unknown(String),
    #[error("composition search exceeds budget ({estimate} candidates)")]
    DomainTooLarge { estimate: u64 },
    #[error("invalid domain: {0}")]
    BadDomain(&'static str),
    #[error("binding does not match the variable universe: {0}")]
    UniverseMismatch(String),
}

/// Checks that every program variable `p` mentions belongs to `u`, with
/// the right shape.
pub fn check_universe(p: &Predicate, u: &Universe) -> Result<(), PredError> {
    for (name, indexed) in p.variables() {
        let ok = if indexed {
            u.is_array(&name)
        } else {
            u.is_scalar(&name)
        };
        if !ok {
            return Err(PredError::UniverseMismatch(name));
        }
    }
    Ok(())
}
