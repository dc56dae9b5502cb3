//! The displayed shapes of single-statement annotations.

use super::symbolic::{and2, j, or2, SymLoc, SymNeeds, SymStore, J};
use super::AnnotateError;
use crate::ast::{Expr, Lvalue, Stmt, Universe};
use crate::predicate::{normalize, normalize_term, provably_distinct, CmpOp, Predicate, Range, Term};

fn all_cells(u: &Universe) -> Range {
    Range::literal(0, u.bound as i64 - 1)
}

fn need(x: &str, primed: bool, idx: Option<Term>) -> Predicate {
    Predicate::atom(Term::need(x, primed, idx))
}

/// `need v = d`, printed as `need v` or `~need v` when `d` is constant.
fn need_def(v: Term, d: Predicate) -> Predicate {
    match d {
        Predicate::Const(true) => Predicate::atom(v),
        Predicate::Const(false) => Predicate::not(Predicate::atom(v)),
        d => Predicate::equiv(Predicate::atom(v), d),
    }
}

fn guard_excluding(points: &[Term]) -> Option<Predicate> {
    let parts: Vec<Predicate> = points
        .iter()
        .map(|p| Predicate::cmp(CmpOp::Ne, j(), p.clone()))
        .collect();
    match parts.len() {
        0 => None,
        _ => Some(Predicate::and(parts)),
    }
}

fn forall_cells(u: &Universe, guard: Option<Predicate>, body: Predicate) -> Predicate {
    let body = match guard {
        Some(g) => Predicate::implies(g, body),
        None => body,
    };
    Predicate::forall(J, all_cells(u), body)
}

/// Frame conjuncts for every location `except` the written one.
fn frames(u: &Universe, except: Option<&SymLoc>) -> Vec<Predicate> {
    let mut out = Vec::new();
    for x in &u.scalars {
        if !matches!(except, Some(SymLoc::Scalar(t)) if t == x) {
            out.push(Predicate::eq(Term::primed(x), Term::var(x)));
        }
    }
    for a in &u.arrays {
        let guard = match except {
            Some(SymLoc::Cell(t, k)) if t == a => guard_excluding(std::slice::from_ref(k)),
            _ => None,
        };
        out.push(forall_cells(u, guard, Predicate::eq(Term::cell_primed(a, j()), Term::cell(a, j()))));
    }
    out
}

fn time_plus(c: Term) -> Predicate {
    Predicate::eq(Term::time(true), normalize_term(&Term::add(Term::time(false), c)))
}

/// Need conjuncts by the occurrence rule for a statement that reads `reads`
/// with demand `d` and overwrites `target`.
fn occurrence(u: &Universe, target: Option<&SymLoc>, reads: &[SymLoc], d: &Predicate) -> Vec<Predicate> {
    let mut out = Vec::new();
    for x in &u.scalars {
        let mut parts = Vec::new();
        if reads.contains(&SymLoc::Scalar(x.clone())) {
            parts.push(d.clone());
        }
        if !matches!(target, Some(SymLoc::Scalar(t)) if t == x) {
            parts.push(need(x, true, None));
        }
        let def = parts.into_iter().fold(Predicate::ff(), or2);
        out.push(need_def(Term::need(x, false, None), def));
    }
    for a in &u.arrays {
        let written = match target {
            Some(SymLoc::Cell(t, k)) if t == a => Some(k.clone()),
            _ => None,
        };
        let mut read_at: Vec<Term> = Vec::new();
        for r in reads {
            if let SymLoc::Cell(b, k) = r {
                if b == a && !read_at.contains(k) {
                    read_at.push(k.clone());
                }
            }
        }
        let mut points: Vec<Term> = written.iter().cloned().collect();
        for k in &read_at {
            if !points.contains(k) {
                points.push(k.clone());
            }
        }
        let distinct = points
            .iter()
            .enumerate()
            .all(|(n, p)| points[n + 1..].iter().all(|q| provably_distinct(p, q)));
        if distinct {
            for p in &points {
                let mut parts = Vec::new();
                if read_at.contains(p) {
                    parts.push(d.clone());
                }
                if written.as_ref() != Some(p) {
                    parts.push(need(a, true, Some(p.clone())));
                }
                let def = parts.into_iter().fold(Predicate::ff(), or2);
                out.push(need_def(Term::need(a, false, Some(p.clone())), def));
            }
            out.push(forall_cells(
                u,
                guard_excluding(&points),
                Predicate::equiv(need(a, false, Some(j())), need(a, true, Some(j()))),
            ));
        } else {
            let frame = need(a, true, Some(j()));
            let mut def = match &written {
                Some(k) => and2(Predicate::cmp(CmpOp::Ne, j(), k.clone()), frame),
                None => frame,
            };
            for k in &read_at {
                def = or2(def, and2(Predicate::eq(j(), k.clone()), d.clone()));
            }
            out.push(forall_cells(u, None, Predicate::equiv(need(a, false, Some(j())), def)));
        }
    }
    out
}

pub(crate) fn ok(u: &Universe, lazy: bool) -> Predicate {
    let mut parts = frames(u, None);
    parts.push(time_plus(Term::Int(0)));
    if lazy {
        parts.extend(occurrence(u, None, &[], &Predicate::ff()));
    }
    Predicate::and(parts)
}

pub(crate) fn stop(u: &Universe, lazy: bool) -> Predicate {
    let mut parts = frames(u, None);
    parts.push(time_plus(Term::Int(0)));
    if lazy {
        for x in &u.scalars {
            parts.push(Predicate::not(need(x, false, None)));
        }
        for a in &u.arrays {
            parts.push(forall_cells(u, None, Predicate::not(need(a, false, Some(j())))));
        }
    }
    Predicate::and(parts)
}

pub(crate) fn assign(u: &Universe, lv: &Lvalue, e: &Expr, lazy: bool) -> Result<Predicate, AnnotateError> {
    let id = SymStore::identity(u);
    let value = id.term(e)?;
    let mut reads = id.reads(e)?;
    let (target, result) = match lv {
        Lvalue::Scalar(x) => {
            id.scalar(x)?;
            (SymLoc::Scalar(x.clone()), Predicate::eq(Term::primed(x), value))
        }
        Lvalue::Cell(a, i) => {
            id.array(a)?;
            let k = id.term(i)?;
            for r in id.reads(i)? {
                if !reads.contains(&r) {
                    reads.push(r);
                }
            }
            (SymLoc::Cell(a.clone(), k.clone()), Predicate::eq(Term::cell_primed(a, k), value))
        }
    };
    let mut parts = vec![result];
    parts.extend(frames(u, Some(&target)));
    if lazy {
        let d = SymNeeds::post(u).at(&target);
        parts.push(time_plus(Term::if_fi(d.clone(), Term::Int(1), Term::Int(0))));
        parts.extend(occurrence(u, Some(&target), &reads, &d));
    } else {
        parts.push(time_plus(Term::Int(1)));
    }
    Ok(Predicate::and(parts))
}

pub(crate) fn print(u: &Universe, e: &Expr, lazy: bool) -> Result<Predicate, AnnotateError> {
    let id = SymStore::identity(u);
    let reads = id.reads(e)?;
    id.term(e)?;
    let mut parts = frames(u, None);
    parts.push(time_plus(Term::Int(1)));
    if lazy {
        parts.extend(occurrence(u, None, &reads, &Predicate::tt()));
    }
    Ok(Predicate::and(parts))
}

/// `if c then (if d1 then k else 0 fi) else (if d2 then k else 0 fi) fi`
/// becomes `if c /\ d1 then k else if ~c /\ d2 then k else 0 fi fi`.
fn flatten_cost(t: Term) -> Term {
    let unit = |t: &Term| match t {
        Term::IfFi(d, k, z) if **z == Term::Int(0) => Some(((**d).clone(), (**k).clone())),
        _ => None,
    };
    if let Term::IfFi(c, a, b) = &t {
        if let (Some((d1, k1)), Some((d2, k2))) = (unit(a), unit(b)) {
            let not_c = normalize(&Predicate::not((**c).clone()));
            return Term::if_fi(
                Predicate::and(vec![(**c).clone(), d1]),
                k1,
                Term::if_fi(Predicate::and(vec![not_c, d2]), k2, Term::Int(0)),
            );
        }
    }
    t
}

/// Annotation of a loop-free conditional (or any loop-free statement) by
/// symbolic execution.
pub(crate) fn symbolic(u: &Universe, s: &Stmt) -> Result<Predicate, AnnotateError> {
    let id = SymStore::identity(u);
    let fin = super::symbolic::forward(s, &id)?;
    let (pre, cost) = super::symbolic::back(s, &id, &SymNeeds::post(u), true, u)?;
    let pre = pre.normalized();
    let mut parts = Vec::new();
    for x in &u.scalars {
        parts.push(Predicate::eq(Term::primed(x), fin.scalar(x)?.clone()));
    }
    for a in &u.arrays {
        parts.push(forall_cells(u, None, Predicate::eq(Term::cell_primed(a, j()), fin.array(a)?.clone())));
    }
    parts.push(time_plus(flatten_cost(cost)));
    for x in &u.scalars {
        parts.push(need_def(Term::need(x, false, None), pre.scalars[x].clone()));
    }
    for a in &u.arrays {
        let def = pre.arrays[a].clone();
        parts.push(forall_cells(u, None, need_def(Term::need(a, false, Some(j())), def)));
    }
    Ok(Predicate::and(parts))
}
