//! Sequential composition and the intermediate-state search behind it.
//!
//! `A;B` holds of a pair of frames when some intermediate frame satisfies
//! `A` (as its final state) and `B` (as its initial state). The search fills
//! in unknown slots of a chain of frames: it first propagates every equation
//! that pins a slot (`x' = E`, `need v = P`, `t' = t + E`, `~need v`, ...)
//! and only enumerates slots that remain free, over the domain.

use std::collections::HashSet;
use std::ops::ControlFlow;

use super::eval::{eval_pred_with, eval_term_with, Value};
use super::frame::{location_index, SlotValue};
use super::{visit_pred, CmpOp, Domain, Frame, FramePair, PredError, Predicate, Slot, Term};
use crate::ast::{ExtNat, Universe};

/// Builds the composition `a; b`, flattening nested compositions.
pub fn compose(a: Predicate, b: Predicate) -> Predicate {
    let mut stages = Vec::new();
    for p in [a, b] {
        match p {
            Predicate::Compose(inner) => stages.extend(inner),
            other => stages.push(other),
        }
    }
    Predicate::Compose(stages)
}

/// Limits for a single chain search.
#[derive(Debug, Clone, Copy)]
pub struct SolveBudget {
    pub max_nodes: u64,
}

/// Statistics of a finished chain search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainSolutions {
    pub solutions: u64,
    pub nodes: u64,
}

/// Evaluates the chain `stages[0]; stages[1]; ...` between two complete
/// frames.
pub fn eval_chain(stages: &[Predicate], fp: &FramePair<'_>, d: &Domain) -> Result<bool, PredError> {
    eval_chain_bound(stages, fp, d, &mut Vec::new())
}

pub(crate) fn eval_chain_bound<'p>(
    stages: &'p [Predicate],
    fp: &FramePair<'_>,
    d: &Domain,
    bound: &mut Vec<(&'p str, i64)>,
) -> Result<bool, PredError> {
    let flat = flatten(stages);
    let mut frames = vec![Frame::unknown(fp.u); flat.len() + 1];
    frames[0] = fp.pre.clone();
    frames[flat.len()] = fp.post.clone();
    let mut found = false;
    let env: Vec<(String, i64)> = bound.iter().map(|(n, v)| (n.to_string(), *v)).collect();
    Solver::new(&flat, fp.u, d, &[], env)?.run(frames, &mut |_| {
        found = true;
        Ok(ControlFlow::Break(()))
    })?;
    Ok(found)
}

/// Enumerates every completion of `frames` satisfying the chain, calling
/// `visit` on each. `frames` must have one more entry than `stages`.
/// Slots referenced by `observers` (evaluated on the first and last frame)
/// are treated as relevant and enumerated when not pinned by the chain.
pub fn solve_chain(
    stages: &[Predicate],
    frames: Vec<Frame>,
    u: &Universe,
    d: &Domain,
    observers: &[&Predicate],
    visit: &mut dyn FnMut(&[Frame]) -> Result<ControlFlow<()>, PredError>,
) -> Result<ChainSolutions, PredError> {
    let flat = flatten(stages);
    assert_eq!(frames.len(), flat.len() + 1, "one frame per chain boundary");
    Solver::new(&flat, u, d, observers, Vec::new())?.run(frames, visit)
}

fn flatten(stages: &[Predicate]) -> Vec<&Predicate> {
    let mut out = Vec::new();
    fn go<'a>(p: &'a Predicate, out: &mut Vec<&'a Predicate>) {
        match p {
            Predicate::Compose(inner) => inner.iter().for_each(|q| go(q, out)),
            other => out.push(other),
        }
    }
    stages.iter().for_each(|p| go(p, &mut out));
    out
}

/// Which variables a predicate reads on each side.
#[derive(Debug, Default, Clone)]
struct Refs {
    pre: HashSet<(String, bool)>,
    post: HashSet<(String, bool)>,
    pre_time: bool,
    post_time: bool,
}

impl Refs {
    fn of(p: &Predicate) -> Refs {
        let mut r = Refs::default();
        visit_pred(p, &mut |t| match t {
            Term::Var(v) => {
                let key = (v.name.clone(), v.need);
                if v.primed {
                    r.post.insert(key);
                } else {
                    r.pre.insert(key);
                }
            }
            Term::Time { primed: true } => r.post_time = true,
            Term::Time { primed: false } => r.pre_time = true,
            _ => {}
        });
        r
    }
}

fn mentions_value(p: &Predicate, name: &str) -> bool {
    let mut hit = false;
    visit_pred(p, &mut |t| {
        if let Term::Var(v) = t {
            hit |= v.name == name && !v.need;
        }
    });
    hit
}

fn term_mentions_value(t: &Term, name: &str) -> bool {
    mentions_value(&Predicate::atom(t.clone()), name)
}

/// Whether every use of `name`'s value in `p` is a conjunct `name' = name`
/// (for arrays, cellwise at one index, possibly quantified and guarded).
fn copy_only(p: &Predicate, name: &str) -> bool {
    match p {
        Predicate::And(ps) => ps.iter().all(|q| copy_only(q, name)),
        Predicate::Forall(_, r, body) => {
            let bounds = r.lo.iter().chain(&r.hi).all(|t| !term_mentions_value(t, name));
            bounds && copy_only(body, name)
        }
        Predicate::Implies(g, body) => !mentions_value(g, name) && copy_only(body, name),
        Predicate::Cmp(CmpOp::Eq, l, r) => match (l, r) {
            (Term::Var(a), Term::Var(b))
                if a.name == name && b.name == name && !a.need && !b.need && a.primed != b.primed =>
            {
                a.index == b.index && a.index.as_deref().map_or(true, |i| !term_mentions_value(i, name))
            }
            _ => !mentions_value(p, name),
        },
        other => !mentions_value(other, name),
    }
}

enum Outcome {
    Consistent,
    Conflict,
}

struct Def {
    primed: bool,
    slot: Slot,
    value: SlotValue,
}

struct Solver<'s> {
    stages: &'s [&'s Predicate],
    u: &'s Universe,
    d: &'s Domain,
    /// relevant[m] lists the slots of frame m some predicate reads.
    relevant: Vec<Vec<Slot>>,
    env: Vec<(String, i64)>,
    nodes: u64,
    solutions: u64,
}

impl<'s> Solver<'s> {
    fn new(
        stages: &'s [&'s Predicate],
        u: &'s Universe,
        d: &'s Domain,
        observers: &[&Predicate],
        env: Vec<(String, i64)>,
    ) -> Result<Solver<'s>, PredError> {
        let refs: Vec<Refs> = stages.iter().map(|p| Refs::of(p)).collect();
        let observed = observers.iter().fold(Refs::default(), |mut acc, p| {
            let r = Refs::of(p);
            acc.pre.extend(r.pre);
            acc.post.extend(r.post);
            acc.pre_time |= r.pre_time;
            acc.post_time |= r.post_time;
            acc
        });
        let names: Vec<&str> = u
            .scalars
            .iter()
            .map(String::as_str)
            .chain(
                u.arrays
                    .iter()
                    .flat_map(|a| std::iter::repeat(a.as_str()).take(u.bound)),
            )
            .collect();
        let k = stages.len();
        let mut relevant = Vec::with_capacity(k + 1);
        for m in 0..=k {
            let mut keys: HashSet<(String, bool)> = HashSet::new();
            let mut time = false;
            if m > 0 {
                keys.extend(refs[m - 1].post.iter().cloned());
                time |= refs[m - 1].post_time;
            }
            if m < k {
                keys.extend(refs[m].pre.iter().cloned());
                time |= refs[m].pre_time;
            }
            if m == 0 {
                keys.extend(observed.pre.iter().cloned());
                time |= observed.pre_time;
            }
            if m == k {
                keys.extend(observed.post.iter().cloned());
                time |= observed.post_time;
            }
            // Values that, from here on, are only copied between frames and
            // never observed can take any value; one suffices.
            let inert = |name: &str| {
                m > 0
                    && !observed.post.contains(&(name.to_string(), false))
                    && stages[m - 1..].iter().all(|p| copy_only(p, name))
            };
            let mut slots = Vec::new();
            for need in [true, false] {
                for (idx, name) in names.iter().enumerate() {
                    if !need && inert(name) {
                        continue;
                    }
                    if keys.contains(&(name.to_string(), need)) {
                        slots.push(if need { Slot::Need(idx) } else { Slot::Val(idx) });
                    }
                }
            }
            if time {
                slots.push(Slot::Time);
            }
            relevant.push(slots);
        }
        Ok(Solver {
            stages,
            u,
            d,
            relevant,
            env,
            nodes: 0,
            solutions: 0,
        })
    }

    fn run(
        mut self,
        frames: Vec<Frame>,
        visit: &mut dyn FnMut(&[Frame]) -> Result<ControlFlow<()>, PredError>,
    ) -> Result<ChainSolutions, PredError> {
        let _ = self.search(frames, visit)?;
        Ok(ChainSolutions {
            solutions: self.solutions,
            nodes: self.nodes,
        })
    }

    fn bound(&self) -> Vec<(&str, i64)> {
        self.env.iter().map(|(n, v)| (n.as_str(), *v)).collect()
    }

    fn search(
        &mut self,
        mut frames: Vec<Frame>,
        visit: &mut dyn FnMut(&[Frame]) -> Result<ControlFlow<()>, PredError>,
    ) -> Result<ControlFlow<()>, PredError> {
        self.nodes += 1;
        if self.nodes > self.d.compose_budget {
            return Err(PredError::DomainTooLarge {
                estimate: self.estimate(&frames),
            });
        }
        if let Outcome::Conflict = self.propagate(&mut frames) {
            return Ok(ControlFlow::Continue(()));
        }
        if self.refuted(&frames) {
            return Ok(ControlFlow::Continue(()));
        }
        let Some((m, slot)) = self.pick_unknown(&frames) else {
            return self.finish(frames, visit);
        };
        let candidates: Vec<SlotValue> = match slot {
            Slot::Need(_) => vec![SlotValue::Bool(false), SlotValue::Bool(true)],
            Slot::Val(_) => self.d.scalar_values.iter().map(|&v| SlotValue::Int(v)).collect(),
            Slot::Time => self.d.time_samples.iter().map(|&t| SlotValue::Time(t)).collect(),
        };
        for v in candidates {
            let mut next = frames.clone();
            next[m].set(slot, v);
            if let ControlFlow::Break(()) = self.search(next, visit)? {
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    fn estimate(&self, frames: &[Frame]) -> u64 {
        let mut est: u64 = 1;
        for (m, slots) in self.relevant.iter().enumerate() {
            for &s in slots {
                if !frames[m].is_known(s) {
                    let n = match s {
                        Slot::Need(_) => 2,
                        Slot::Val(_) => self.d.scalar_values.len() as u64,
                        Slot::Time => self.d.time_samples.len() as u64,
                    };
                    est = est.saturating_mul(n);
                }
            }
        }
        est.max(self.nodes)
    }

    fn pick_unknown(&self, frames: &[Frame]) -> Option<(usize, Slot)> {
        // Binary slots first: they are cheapest to branch on and usually
        // unlock further propagation.
        let mut fallback = None;
        for (m, slots) in self.relevant.iter().enumerate() {
            for &s in slots {
                if !frames[m].is_known(s) {
                    if matches!(s, Slot::Need(_)) {
                        return Some((m, s));
                    }
                    fallback = fallback.or(Some((m, s)));
                }
            }
        }
        fallback
    }

    fn finish(
        &mut self,
        mut frames: Vec<Frame>,
        visit: &mut dyn FnMut(&[Frame]) -> Result<ControlFlow<()>, PredError>,
    ) -> Result<ControlFlow<()>, PredError> {
        // Nothing reads the remaining slots; any value will do.
        for f in frames.iter_mut() {
            for v in f.vals.iter_mut().filter(|v| v.is_none()) {
                *v = Some(0);
            }
            for n in f.needs.iter_mut().filter(|n| n.is_none()) {
                *n = Some(false);
            }
            if f.time.is_none() {
                f.time = Some(ExtNat::ZERO);
            }
        }
        for (m, p) in self.stages.iter().enumerate() {
            let fp = FramePair {
                u: self.u,
                pre: &frames[m],
                post: &frames[m + 1],
            };
            let mut bound = self.bound();
            if !eval_pred_with(p, &fp, self.d, &mut bound)? {
                return Ok(ControlFlow::Continue(()));
            }
        }
        self.solutions += 1;
        visit(&frames)
    }

    /// Whether some stage is already false on the known slots.
    fn refuted(&self, frames: &[Frame]) -> bool {
        self.stages.iter().enumerate().any(|(m, p)| {
            let fp = FramePair {
                u: self.u,
                pre: &frames[m],
                post: &frames[m + 1],
            };
            let mut bound = self.bound();
            matches!(eval_pred_with(p, &fp, self.d, &mut bound), Ok(false))
        })
    }

    fn propagate(&self, frames: &mut [Frame]) -> Outcome {
        loop {
            let mut changed = false;
            for m in 0..self.stages.len() {
                let mut defs = Vec::new();
                let mut conflict = false;
                {
                    let fp = FramePair {
                        u: self.u,
                        pre: &frames[m],
                        post: &frames[m + 1],
                    };
                    let mut bound = self.bound();
                    let mut ex = Extractor {
                        fp: &fp,
                        d: self.d,
                        defs: &mut defs,
                        conflict: &mut conflict,
                    };
                    ex.pred(self.stages[m], &mut bound);
                }
                if conflict {
                    return Outcome::Conflict;
                }
                for def in defs {
                    let f = &mut frames[if def.primed { m + 1 } else { m }];
                    match f.get(def.slot) {
                        None => {
                            f.set(def.slot, def.value);
                            changed = true;
                        }
                        Some(v) if v != def.value => return Outcome::Conflict,
                        Some(_) => {}
                    }
                }
            }
            if !changed {
                return Outcome::Consistent;
            }
        }
    }
}

/// Collects slot definitions from the conjunctive skeleton of a predicate.
struct Extractor<'a, 'f> {
    fp: &'a FramePair<'f>,
    d: &'a Domain,
    defs: &'a mut Vec<Def>,
    conflict: &'a mut bool,
}

impl<'a, 'f> Extractor<'a, 'f> {
    fn pred<'p>(&mut self, p: &'p Predicate, bound: &mut Vec<(&'p str, i64)>) {
        if *self.conflict {
            return;
        }
        match p {
            Predicate::And(ps) => ps.iter().for_each(|q| self.pred(q, bound)),
            Predicate::Forall(v, r, body) => {
                let Some((lo, hi)) = self.range(r, bound) else {
                    return;
                };
                for j in lo..=hi {
                    bound.push((v, j));
                    self.pred(body, bound);
                    bound.pop();
                }
            }
            Predicate::IfFi(c, a, b) => {
                if let Ok(c) = eval_pred_with(c, self.fp, self.d, bound) {
                    self.pred(if c { a } else { b }, bound);
                }
            }
            Predicate::Implies(a, b) => {
                if let Ok(true) = eval_pred_with(a, self.fp, self.d, bound) {
                    self.pred(b, bound);
                }
            }
            Predicate::Cmp(CmpOp::Eq, l, r) => {
                if !self.define_term(l, r, bound) {
                    self.define_term(r, l, bound);
                }
            }
            Predicate::Equiv(a, b) => {
                let done = match &**a {
                    Predicate::Atom(t) => self.define_bool(t, Ok(b), bound),
                    _ => false,
                };
                if !done {
                    if let Predicate::Atom(t) = &**b {
                        self.define_bool(t, Ok(a), bound);
                    }
                }
            }
            Predicate::Atom(t) => {
                self.define_bool(t, Err(true), bound);
            }
            Predicate::Not(inner) => {
                if let Predicate::Atom(t) = &**inner {
                    self.define_bool(t, Err(false), bound);
                }
            }
            _ => {}
        }
    }

    fn range<'p>(
        &self,
        r: &'p super::Range,
        bound: &mut Vec<(&'p str, i64)>,
    ) -> Option<(i64, i64)> {
        let n = self.d.array_bound as i64;
        let lo = match &r.lo {
            Some(t) => match eval_term_with(t, self.fp, self.d, bound) {
                Ok(Value::Int(v)) => v.max(0),
                _ => return None,
            },
            None => 0,
        };
        let hi = match &r.hi {
            Some(t) => match eval_term_with(t, self.fp, self.d, bound) {
                Ok(Value::Int(v)) => v.min(n - 1),
                _ => return None,
            },
            None => n - 1,
        };
        Some((lo, hi))
    }

    /// Resolves a location term to its side and slot, if its index is known.
    fn slot_of<'p>(&self, t: &'p Term, bound: &mut Vec<(&'p str, i64)>) -> Option<(bool, Slot)> {
        match t {
            Term::Time { primed } => Some((*primed, Slot::Time)),
            Term::Var(v) => {
                let idx = match &v.index {
                    Some(i) => match eval_term_with(i, self.fp, self.d, bound) {
                        Ok(Value::Int(k)) => Some(k),
                        _ => return None,
                    },
                    None => None,
                };
                let k = location_index(self.fp.u, &v.name, idx).ok()?;
                Some((v.primed, if v.need { Slot::Need(k) } else { Slot::Val(k) }))
            }
            _ => None,
        }
    }

    /// `loc = value`; returns whether `loc` was a resolvable location.
    fn define_term<'p>(
        &mut self,
        loc: &'p Term,
        value: &'p Term,
        bound: &mut Vec<(&'p str, i64)>,
    ) -> bool {
        let Some((primed, slot)) = self.slot_of(loc, bound) else {
            return false;
        };
        if matches!(slot, Slot::Need(_)) {
            return false;
        }
        if self.fp.frame(primed).is_known(slot) {
            // Try the other orientation instead.
            return false;
        }
        let Ok(v) = eval_term_with(value, self.fp, self.d, bound) else {
            return true;
        };
        let value = match (slot, v) {
            (Slot::Val(_), Value::Int(x)) => SlotValue::Int(x),
            (Slot::Time, v) => match v.to_extnat() {
                Some(t) => SlotValue::Time(t),
                None => {
                    *self.conflict = true;
                    return true;
                }
            },
            _ => {
                *self.conflict = true;
                return true;
            }
        };
        self.defs.push(Def {
            primed,
            slot,
            value,
        });
        true
    }

    /// `need ref = rhs`, where `rhs` is a predicate or a constant.
    fn define_bool<'p>(
        &mut self,
        loc: &'p Term,
        rhs: Result<&'p Predicate, bool>,
        bound: &mut Vec<(&'p str, i64)>,
    ) -> bool {
        let Some((primed, slot)) = self.slot_of(loc, bound) else {
            return false;
        };
        if !matches!(slot, Slot::Need(_)) {
            return false;
        }
        let value = match rhs {
            Err(b) => b,
            Ok(p) => match eval_pred_with(p, self.fp, self.d, bound) {
                Ok(b) => b,
                Err(_) => return false,
            },
        };
        match self.fp.frame(primed).get(slot) {
            Some(SlotValue::Bool(cur)) if cur != value => *self.conflict = true,
            Some(_) => return false,
            None => self.defs.push(Def {
                primed,
                slot,
                value: SlotValue::Bool(value),
            }),
        }
        true
    }
}
