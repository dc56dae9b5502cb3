//! Composition by substitution.
//!
//! When the first predicate fixes every final value it mentions as a
//! function of its initial values (an [`Effect`]) and the second fixes every
//! initial need it mentions as a function of its own final needs, the
//! intermediate state of `A;B` is unique and can be eliminated: results are
//! substituted forward into `B` and needs backward into `A`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::normalize::{normalize, normalize_term};
use super::{
    subst_bound_pred, subst_bound_term, ArithOp, CmpOp, Predicate, Range, Term, VarRef,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OnePointError {
    #[error("one-point composition does not apply: {0}")]
    NotApplicable(String),
}

fn na<T>(why: impl Into<String>) -> Result<T, OnePointError> {
    Err(OnePointError::NotApplicable(why.into()))
}

/// A function of an index given as explicit points plus a rule for every
/// other index.
#[derive(Debug, Clone, PartialEq)]
struct Piecewise<T> {
    points: Vec<(Term, T)>,
    /// `(var, guard, body)`; `guard` must exclude exactly the points.
    rest: Option<(String, Option<Predicate>, T)>,
}

impl<T> Default for Piecewise<T> {
    fn default() -> Self {
        Piecewise {
            points: Vec::new(),
            rest: None,
        }
    }
}

trait Piece: Clone {
    fn subst(&self, var: &str, with: &Term) -> Self;
    fn choose(c: Predicate, a: Self, b: Self) -> Self;
}

impl Piece for Term {
    fn subst(&self, var: &str, with: &Term) -> Term {
        subst_bound_term(self, var, with)
    }
    fn choose(c: Predicate, a: Term, b: Term) -> Term {
        Term::if_fi(c, a, b)
    }
}

impl Piece for Predicate {
    fn subst(&self, var: &str, with: &Term) -> Predicate {
        subst_bound_pred(self, var, with)
    }
    fn choose(c: Predicate, a: Predicate, b: Predicate) -> Predicate {
        Predicate::if_fi(c, a, b)
    }
}

/// `(base, c)` for `base + c`, `base - c` and literals.
fn offset(t: &Term) -> (Option<&Term>, i64) {
    match t {
        Term::Int(n) => (None, *n),
        Term::Arith(ArithOp::Add, a, b) => match **b {
            Term::Int(c) => (Some(a), c),
            _ => (Some(t), 0),
        },
        Term::Arith(ArithOp::Sub, a, b) => match **b {
            Term::Int(c) => (Some(a), c.wrapping_neg()),
            _ => (Some(t), 0),
        },
        _ => (Some(t), 0),
    }
}

/// Whether two index terms differ in every state.
pub(crate) fn provably_distinct(a: &Term, b: &Term) -> bool {
    let (ba, ca) = offset(a);
    let (bb, cb) = offset(b);
    ba == bb && ca != cb
}

fn is_full(r: &Range) -> bool {
    matches!(r.lo.as_deref(), None | Some(Term::Int(0)))
        && matches!(r.hi.as_deref(), None | Some(Term::Int(_)))
}

/// Whether `guard` is exactly the conjunction of `var /= p` over `points`.
fn excludes_exactly(guard: Option<&Predicate>, var: &str, points: &[Term]) -> bool {
    let parts: Vec<&Predicate> = match guard {
        None => Vec::new(),
        Some(Predicate::And(ps)) => ps.iter().collect(),
        Some(g) => vec![g],
    };
    if parts.len() != points.len() {
        return false;
    }
    let j = Term::Bound(var.to_string());
    let mut excluded = Vec::new();
    for part in parts {
        match part {
            Predicate::Cmp(CmpOp::Ne, a, b) if *a == j => excluded.push(b),
            Predicate::Cmp(CmpOp::Ne, a, b) if *b == j => excluded.push(a),
            _ => return false,
        }
    }
    points.iter().all(|p| excluded.contains(&p))
}

impl<T: Piece> Piecewise<T> {
    fn check(&self, what: &str) -> Result<(), OnePointError> {
        for (k, (a, _)) in self.points.iter().enumerate() {
            for (b, _) in &self.points[k + 1..] {
                if !provably_distinct(a, b) {
                    return na(format!("overlapping definitions for {what}"));
                }
            }
        }
        if let Some((var, guard, _)) = &self.rest {
            let keys: Vec<Term> = self.points.iter().map(|(t, _)| t.clone()).collect();
            if !excludes_exactly(guard.as_ref(), var, &keys) {
                return na(format!("definitions for {what} do not partition the array"));
            }
        }
        Ok(())
    }

    fn at(&self, idx: &Term, what: &str) -> Result<T, OnePointError> {
        if let Some((_, v)) = self.points.iter().find(|(k, _)| k == idx) {
            return Ok(v.clone());
        }
        let Some((var, _, body)) = &self.rest else {
            return na(format!("{what} is not defined at every index"));
        };
        let mut out = body.subst(var, idx);
        for (k, v) in self.points.iter().rev() {
            if provably_distinct(k, idx) {
                continue;
            }
            out = T::choose(Predicate::eq(idx.clone(), k.clone()), v.clone(), out);
        }
        Ok(out)
    }

    fn map(&self, f: &mut dyn FnMut(&T) -> Result<T, OnePointError>, g: &mut dyn FnMut(&Term) -> Result<Term, OnePointError>) -> Result<Piecewise<T>, OnePointError> {
        let points = self
            .points
            .iter()
            .map(|(k, v)| Ok((g(k)?, f(v)?)))
            .collect::<Result<Vec<_>, OnePointError>>()?;
        let rest = match &self.rest {
            Some((var, guard, body)) => Some((var.clone(), guard.clone(), f(body)?)),
            None => None,
        };
        Ok(Piecewise { points, rest })
    }
}

/// A predicate that determines its final values and time from its initial
/// values and final needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    scalars: BTreeMap<String, Term>,
    arrays: BTreeMap<String, Piecewise<Term>>,
    /// `C` in `t' = t + C`.
    time: Option<Term>,
    /// Conjuncts relating initial needs to final needs.
    needs: Vec<Predicate>,
}

fn primed_value_free(p: &Predicate) -> bool {
    let mut ok = true;
    super::visit_pred(p, &mut |t| match t {
        Term::Var(v) if v.primed && !v.need => ok = false,
        Term::Time { .. } => ok = false,
        _ => {}
    });
    ok
}

fn term_is_initial(t: &Term) -> bool {
    let mut ok = true;
    super::visit_term(t, &mut |t| match t {
        Term::Var(v) if v.primed || v.need => ok = false,
        Term::Time { .. } => ok = false,
        _ => {}
    });
    ok
}

fn pred_is_initial(p: &Predicate) -> bool {
    let mut ok = true;
    super::visit_pred(p, &mut |t| {
        if !matches!(t, Term::Var(_) | Term::Time { .. }) {
            return;
        }
        ok &= term_is_initial(t);
    });
    ok
}

/// `t' = t + C` (or `t' = t`) with `C` free of final values.
fn time_increment(l: &Term, r: &Term) -> Option<Term> {
    fn strip(r: &Term) -> Option<Term> {
        match r {
            Term::Time { primed: false } => Some(Term::Int(0)),
            Term::Arith(ArithOp::Add, a, c) => Some(Term::add(strip(a)?, (**c).clone())),
            _ => None,
        }
    }
    if *l != (Term::Time { primed: true }) {
        return None;
    }
    let c = normalize_term(&strip(r)?);
    primed_value_free(&Predicate::eq(Term::Int(0), c.clone())).then_some(c)
}

fn frame_target(t: &Term, var: &str) -> Option<String> {
    match t {
        Term::Var(VarRef {
            name,
            primed: true,
            need: false,
            index: Some(i),
        }) if **i == Term::Bound(var.to_string()) => Some(name.clone()),
        _ => None,
    }
}

impl Effect {
    /// Recognizes `p` as an effect.
    pub fn recognize(p: &Predicate) -> Result<Effect, OnePointError> {
        let mut e = Effect {
            scalars: BTreeMap::new(),
            arrays: BTreeMap::new(),
            time: None,
            needs: Vec::new(),
        };
        for c in p.conjuncts() {
            match c {
                Predicate::Cmp(CmpOp::Eq, l, r) => {
                    if let Some(inc) = time_increment(l, r) {
                        if e.time.replace(inc).is_some() {
                            return na("time defined twice");
                        }
                        continue;
                    }
                    match l {
                        Term::Var(VarRef {
                            name,
                            primed: true,
                            need: false,
                            index,
                        }) if term_is_initial(r) => match index {
                            None => {
                                if e.scalars.insert(name.clone(), r.clone()).is_some() {
                                    return na(format!("{name}' defined twice"));
                                }
                            }
                            Some(i) if term_is_initial(i) => e
                                .arrays
                                .entry(name.clone())
                                .or_default()
                                .points
                                .push(((**i).clone(), r.clone())),
                            Some(_) => return na("index depends on final values"),
                        },
                        _ => return na("equation is not a result definition"),
                    }
                }
                Predicate::Forall(var, range, body) if !body.mentions_needs() => {
                    let (guard, eq) = match &**body {
                        Predicate::Implies(g, eq) => (Some((**g).clone()), &**eq),
                        eq => (None, eq),
                    };
                    let Predicate::Cmp(CmpOp::Eq, l, r) = eq else {
                        return na("quantified conjunct is not a result definition");
                    };
                    let Some(name) = frame_target(l, var) else {
                        return na("quantified conjunct is not a result definition");
                    };
                    if !is_full(range)
                        || !term_is_initial(r)
                        || !guard.as_ref().map_or(true, pred_is_initial)
                    {
                        return na("quantified result definition is not over initial values");
                    }
                    let a = e.arrays.entry(name.clone()).or_default();
                    if a.rest.replace((var.clone(), guard, r.clone())).is_some() {
                        return na(format!("{name}' defined twice"));
                    }
                }
                other if primed_value_free(other) => e.needs.push(other.clone()),
                _ => return na("conjunct constrains final values indirectly"),
            }
        }
        for (name, a) in &e.arrays {
            a.check(&format!("{name}'"))?;
        }
        Ok(e)
    }
}

/// Definitions of the initial needs of the second predicate.
#[derive(Default)]
struct NeedDefs {
    scalars: BTreeMap<String, Predicate>,
    arrays: BTreeMap<String, Piecewise<Predicate>>,
}

fn initial_need(p: &Predicate) -> Option<&VarRef> {
    match p {
        Predicate::Atom(Term::Var(v)) if v.need && !v.primed => Some(v),
        _ => None,
    }
}

fn mentions_initial_needs(p: &Predicate) -> bool {
    let mut found = false;
    super::visit_pred(p, &mut |t| {
        if let Term::Var(v) = t {
            found |= v.need && !v.primed;
        }
    });
    found
}

/// `need v = D`, `need v`, `~need v` as `(v, D)`.
fn need_def(p: &Predicate) -> Option<(&VarRef, Predicate)> {
    let (v, d) = match p {
        Predicate::Equiv(a, d) => (initial_need(a)?, (**d).clone()),
        Predicate::Not(a) => (initial_need(a)?, Predicate::ff()),
        a => (initial_need(a)?, Predicate::tt()),
    };
    (!mentions_initial_needs(&d)).then_some((v, d))
}

impl NeedDefs {
    /// Splits `b` into initial-need definitions and the remaining conjuncts.
    fn split(b: &Predicate) -> Result<(NeedDefs, Vec<Predicate>), OnePointError> {
        let mut defs = NeedDefs::default();
        let mut rest = Vec::new();
        for c in b.conjuncts() {
            if let Some((v, d)) = need_def(c) {
                match &v.index {
                    None => {
                        if defs.scalars.insert(v.name.clone(), d).is_some() {
                            return na(format!("need {} defined twice", v.name));
                        }
                    }
                    Some(i) => defs
                        .arrays
                        .entry(v.name.clone())
                        .or_default()
                        .points
                        .push(((**i).clone(), d)),
                }
                continue;
            }
            if let Predicate::Forall(var, range, body) = c {
                let (guard, inner) = match &**body {
                    Predicate::Implies(g, inner) => (Some((**g).clone()), &**inner),
                    inner => (None, inner),
                };
                if let Some((v, d)) = need_def(inner) {
                    if is_full(range) && v.index.as_deref() == Some(&Term::Bound(var.clone())) {
                        let a = defs.arrays.entry(v.name.clone()).or_default();
                        if a.rest.replace((var.clone(), guard, d)).is_some() {
                            return na(format!("need {} defined twice", v.name));
                        }
                        continue;
                    }
                }
            }
            rest.push(c.clone());
        }
        for (name, a) in &defs.arrays {
            a.check(&format!("need {name}"))?;
        }
        Ok((defs, rest))
    }
}

/// Rewrites the second predicate (`initial == true`) or the first
/// predicate's need equations (`initial == false`) into the vocabulary of
/// the composition.
struct Subst<'a> {
    effect: &'a Effect,
    /// Intermediate needs, already in the vocabulary of the composition.
    needs: &'a NeedDefs,
    /// Replacement for the intermediate time, if any.
    time: Option<Term>,
    initial: bool,
}

impl Subst<'_> {
    fn value(&self, v: &VarRef) -> Result<Term, OnePointError> {
        match &v.index {
            None => match self.effect.scalars.get(&v.name) {
                Some(t) => Ok(t.clone()),
                None => na(format!("{} is not determined by the first predicate", v.name)),
            },
            Some(i) => {
                let i = self.term(i)?;
                match self.effect.arrays.get(&v.name) {
                    Some(a) => a.at(&i, &v.name),
                    None => na(format!("{} is not determined by the first predicate", v.name)),
                }
            }
        }
    }

    fn need(&self, v: &VarRef) -> Result<Predicate, OnePointError> {
        match &v.index {
            None => match self.needs.scalars.get(&v.name) {
                Some(p) => Ok(p.clone()),
                None => na(format!("need {} is not determined", v.name)),
            },
            Some(i) => {
                let i = self.term(i)?;
                match self.needs.arrays.get(&v.name) {
                    Some(a) => a.at(&i, &format!("need {}", v.name)),
                    None => na(format!("need {} is not determined", v.name)),
                }
            }
        }
    }

    /// Whether `v` lives in the intermediate state.
    fn intermediate(&self, v: &VarRef) -> bool {
        v.primed != self.initial
    }

    fn term(&self, t: &Term) -> Result<Term, OnePointError> {
        Ok(match t {
            Term::Int(_) | Term::Inf | Term::Bound(_) => t.clone(),
            Term::Time { primed } => {
                if self.initial && !primed {
                    match &self.time {
                        Some(r) => r.clone(),
                        None => return na("intermediate time is not determined"),
                    }
                } else {
                    t.clone()
                }
            }
            Term::Var(v) if self.intermediate(v) => {
                if v.need {
                    return na("need variable used as a number");
                }
                self.value(v)?
            }
            Term::Var(v) => Term::Var(VarRef {
                index: match &v.index {
                    Some(i) => Some(Box::new(self.term(i)?)),
                    None => None,
                },
                ..v.clone()
            }),
            Term::Neg(a) => Term::Neg(Box::new(self.term(a)?)),
            Term::Fact(a) => Term::Fact(Box::new(self.term(a)?)),
            Term::Arith(op, a, b) => Term::arith(*op, self.term(a)?, self.term(b)?),
            Term::IfFi(c, a, b) => Term::if_fi(self.pred(c)?, self.term(a)?, self.term(b)?),
            Term::Max {
                var,
                range,
                guard,
                body,
            } => Term::Max {
                var: var.clone(),
                range: self.range(range)?,
                guard: Box::new(self.pred(guard)?),
                body: Box::new(self.term(body)?),
            },
        })
    }

    fn range(&self, r: &Range) -> Result<Range, OnePointError> {
        Ok(Range {
            lo: match &r.lo {
                Some(t) => Some(Box::new(self.term(t)?)),
                None => None,
            },
            hi: match &r.hi {
                Some(t) => Some(Box::new(self.term(t)?)),
                None => None,
            },
        })
    }

    fn pred(&self, p: &Predicate) -> Result<Predicate, OnePointError> {
        let all = |ps: &[Predicate]| ps.iter().map(|q| self.pred(q)).collect::<Result<Vec<_>, _>>();
        Ok(match p {
            Predicate::Const(_) => p.clone(),
            Predicate::Atom(Term::Var(v)) if v.need && self.intermediate(v) => self.need(v)?,
            Predicate::Atom(t) => Predicate::Atom(self.term(t)?),
            Predicate::Cmp(op, a, b) => Predicate::Cmp(*op, self.term(a)?, self.term(b)?),
            Predicate::Not(a) => Predicate::not(self.pred(a)?),
            Predicate::And(ps) => Predicate::And(all(ps)?),
            Predicate::Or(ps) => Predicate::Or(all(ps)?),
            Predicate::Compose(_) => return na("nested composition"),
            Predicate::Implies(a, b) => Predicate::implies(self.pred(a)?, self.pred(b)?),
            Predicate::Equiv(a, b) => Predicate::equiv(self.pred(a)?, self.pred(b)?),
            Predicate::IfFi(c, a, b) => Predicate::if_fi(self.pred(c)?, self.pred(a)?, self.pred(b)?),
            Predicate::Forall(v, r, body) => {
                Predicate::Forall(v.clone(), self.range(r)?, Box::new(self.pred(body)?))
            }
            Predicate::Exists(v, r, body) => {
                Predicate::Exists(v.clone(), self.range(r)?, Box::new(self.pred(body)?))
            }
        })
    }
}

/// Composes `a; b` by eliminating the intermediate state, or reports that
/// the intermediate state is not determined syntactically.
pub fn one_point_compose(a: &Predicate, b: &Predicate) -> Result<Predicate, OnePointError> {
    if matches!(a, Predicate::Compose(_)) || matches!(b, Predicate::Compose(_)) {
        return na("nested composition");
    }
    let effect = Effect::recognize(a)?;
    let (defs_b, rest_b) = NeedDefs::split(b)?;

    // Intermediate needs in the composition's vocabulary: B's definitions
    // with B's initial values replaced by A's results.
    let empty = NeedDefs::default();
    let to_initial = Subst {
        effect: &effect,
        needs: &empty,
        time: None,
        initial: true,
    };
    let mut needs = NeedDefs::default();
    for (name, d) in &defs_b.scalars {
        needs.scalars.insert(name.clone(), to_initial.pred(d)?);
    }
    for (name, pw) in &defs_b.arrays {
        let mapped = pw.map(&mut |d| to_initial.pred(d), &mut |k| to_initial.term(k))?;
        needs.arrays.insert(name.clone(), mapped);
    }
    // A plain renaming `need w = need w'` in A supplies intermediate needs B
    // leaves open.
    for c in &effect.needs {
        match c {
            Predicate::Equiv(l, r) => {
                if let (Some(v), Predicate::Atom(Term::Var(w))) = (initial_need(l), &**r) {
                    if w.need && w.primed && w.name == v.name && v.index.is_none() && w.index.is_none() {
                        needs
                            .scalars
                            .entry(v.name.clone())
                            .or_insert_with(|| (**l).clone());
                    }
                }
            }
            Predicate::Forall(var, range, body) if is_full(range) => {
                if let Predicate::Equiv(l, r) = &**body {
                    let j = Term::Bound(var.clone());
                    if let (Some(v), Predicate::Atom(Term::Var(w))) = (initial_need(l), &**r) {
                        if w.need
                            && w.primed
                            && w.name == v.name
                            && v.index.as_deref() == Some(&j)
                            && w.index.as_deref() == Some(&j)
                        {
                            needs.arrays.entry(v.name.clone()).or_insert_with(|| Piecewise {
                                points: Vec::new(),
                                rest: Some((var.clone(), None, (**l).clone())),
                            });
                        }
                    }
                }
            }
            _ => {}
        }
    }

    let backward = Subst {
        effect: &effect,
        needs: &needs,
        time: None,
        initial: false,
    };
    let time = match &effect.time {
        Some(c) => Some(Term::add(Term::time(false), backward.term(c)?)),
        None => None,
    };
    let forward = Subst {
        effect: &effect,
        needs: &needs,
        time,
        initial: true,
    };
    let mut out = Vec::new();
    for c in &rest_b {
        out.push(forward.pred(c)?);
    }
    for c in &effect.needs {
        out.push(backward.pred(c)?);
    }
    Ok(normalize(&Predicate::and(out)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn need(name: &str, primed: bool) -> Predicate {
        Predicate::atom(Term::need(name, primed, None))
    }

    fn ok2() -> Predicate {
        Predicate::and(vec![
            Predicate::eq(Term::primed("x"), Term::var("x")),
            Predicate::eq(Term::primed("y"), Term::var("y")),
            Predicate::eq(Term::time(true), Term::time(false)),
            Predicate::equiv(need("x", false), need("x", true)),
            Predicate::equiv(need("y", false), need("y", true)),
        ])
    }

    #[test]
    fn ok_is_left_identity() {
        let p = Predicate::and(vec![
            Predicate::eq(Term::primed("x"), Term::Int(3)),
            Predicate::eq(Term::primed("y"), Term::var("y")),
            Predicate::not(need("x", false)),
            Predicate::equiv(need("y", false), need("y", true)),
            Predicate::eq(
                Term::time(true),
                Term::add(
                    Term::time(false),
                    Term::if_fi(need("x", true), Term::Int(1), Term::Int(0)),
                ),
            ),
        ]);
        let r = one_point_compose(&ok2(), &p).unwrap();
        assert_eq!(r, normalize(&p));
    }

    #[test]
    fn distinct_offsets() {
        let i = Term::var("i");
        assert!(provably_distinct(&i, &Term::sub(i.clone(), Term::Int(1))));
        assert!(!provably_distinct(&i, &Term::var("j")));
        assert!(provably_distinct(&Term::Int(0), &Term::Int(1)));
    }

    #[test]
    fn unconstrained_result_is_not_applicable() {
        let a = Predicate::eq(Term::primed("x"), Term::Int(1));
        let b = Predicate::eq(Term::primed("y"), Term::var("y"));
        assert!(one_point_compose(&a, &b).is_err());
    }
}
