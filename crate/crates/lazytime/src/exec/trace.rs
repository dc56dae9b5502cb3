//! Pass 1 of lazy execution: run eagerly and record, for every event, the
//! events whose results it used.
//!
//! Condition evaluations become zero-cost guard events; events inside a
//! branch or loop body depend on the innermost guard, and each loop guard
//! depends on the previous iteration's. After a conditional, every location
//! written by either branch gets a zero-cost merge event depending on the
//! guard, on its current writer, and on what the untaken branch would have
//! computed it from (found by shadow execution).

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use serde::Serialize;

use super::store::{cell_index, ExecStore};
use super::ExecError;
use crate::ast::{eval_expr, reads_of, EvalError, Expr, Location, Lvalue, ReadLoc, State, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Assign,
    Print,
    /// Merge after a conditional.
    Phi,
    /// Evaluation of a branch or loop condition.
    Guard,
}

/// What an event used: an earlier event's result, or an initial value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dep {
    Event(usize),
    Input(Location),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub id: usize,
    pub kind: EventKind,
    /// `None` for prints and guards.
    pub target: Option<Location>,
    pub value: Option<BigInt>,
    pub data_deps: BTreeSet<Dep>,
    pub control_deps: BTreeSet<Dep>,
}

impl TraceEvent {
    /// Assignments and prints take time; merges and guards are free.
    pub fn is_costed(&self) -> bool {
        matches!(self.kind, EventKind::Assign | EventKind::Print)
    }
}

/// A point where fuel ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    /// First event of the abandoned outermost loop.
    pub loop_start: usize,
    /// Number of events recorded when fuel ran out.
    pub frontier: usize,
    /// Whether execution resumed after the abandoned loop.
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandTrace {
    pub events: Vec<TraceEvent>,
    pub truncations: Vec<Truncation>,
    pub last_write: BTreeMap<Location, usize>,
    pub store: ExecStore,
    pub printed: Vec<BigInt>,
    /// Assignments and prints executed.
    pub eager_events: u64,
    /// Execution ended at `stop`, so no final value is observable.
    pub stopped: bool,
}

impl DemandTrace {
    pub fn truncated(&self) -> bool {
        !self.truncations.is_empty()
    }
}

/// Builds the trace. When fuel runs out inside a loop, the outermost
/// enclosing loop is abandoned, fuel is refilled, and execution resumes
/// after it.
pub fn build_trace(p: &Stmt, s0: &State, fuel: u64) -> Result<DemandTrace, ExecError> {
    trace_with(p, s0, fuel, true)
}

pub(crate) fn trace_with(p: &Stmt, s0: &State, fuel: u64, resume: bool) -> Result<DemandTrace, ExecError> {
    let mut t = Tracer {
        store: ExecStore::from_state(s0),
        last: BTreeMap::new(),
        events: Vec::new(),
        printed: Vec::new(),
        fuel,
        budget: fuel,
        eager_events: 0,
        ctrl: None,
        writes: Vec::new(),
        truncations: Vec::new(),
        loop_depth: 0,
        resume,
    };
    let mut stopped = false;
    match t.exec(p) {
        Ok(()) => {}
        Err(Halt::Stop) => stopped = true,
        Err(Halt::Fuel) => {
            let frontier = t.events.len();
            t.truncations.push(Truncation {
                loop_start: frontier,
                frontier,
                resumed: false,
            });
        }
        Err(Halt::Error(e)) => return Err(e),
    }
    Ok(DemandTrace {
        events: t.events,
        truncations: t.truncations,
        last_write: t.last,
        store: t.store,
        printed: t.printed,
        eager_events: t.eager_events,
        stopped,
    })
}

enum Halt {
    Fuel,
    Stop,
    Error(ExecError),
}

fn int(v: crate::ast::RtValue) -> Result<BigInt, EvalError> {
    Ok(v.as_int()?.clone())
}

fn eval_int(e: &Expr, s: &ExecStore) -> Result<BigInt, EvalError> {
    int(eval_expr(e, s)?)
}

fn eval_bool(e: &Expr, s: &ExecStore) -> Result<bool, EvalError> {
    eval_expr(e, s)?.as_bool()
}

/// Concrete locations read by `e`.
fn read_locs(e: &Expr, s: &ExecStore) -> Result<Vec<Location>, EvalError> {
    reads_of(e)
        .into_iter()
        .map(|r| {
            Ok(match r {
                ReadLoc::Scalar(x) => Location::Scalar(x),
                ReadLoc::Cell(a, i) => Location::Cell(a.clone(), cell_index(&a, &eval_int(&i, s)?)?),
            })
        })
        .collect()
}

fn target(lv: &Lvalue, s: &ExecStore) -> Result<Location, EvalError> {
    Ok(match lv {
        Lvalue::Scalar(x) => Location::Scalar(x.clone()),
        Lvalue::Cell(a, i) => Location::Cell(a.clone(), cell_index(a, &eval_int(i, s)?)?),
    })
}

fn dep_in(last: &BTreeMap<Location, usize>, loc: &Location) -> Dep {
    last.get(loc)
        .map_or_else(|| Dep::Input(loc.clone()), |&id| Dep::Event(id))
}

struct Tracer {
    store: ExecStore,
    last: BTreeMap<Location, usize>,
    events: Vec<TraceEvent>,
    printed: Vec<BigInt>,
    fuel: u64,
    budget: u64,
    eager_events: u64,
    /// Innermost enclosing guard.
    ctrl: Option<usize>,
    /// Locations written inside each enclosing conditional branch.
    writes: Vec<BTreeSet<Location>>,
    truncations: Vec<Truncation>,
    loop_depth: usize,
    resume: bool,
}

impl Tracer {
    fn fail(&self, e: EvalError) -> Halt {
        Halt::Error(ExecError::Runtime {
            event: self.events.len(),
            source: e,
        })
    }

    fn control(&self) -> BTreeSet<Dep> {
        self.ctrl.into_iter().map(Dep::Event).collect()
    }

    fn deps(&self, locs: &[Location]) -> BTreeSet<Dep> {
        locs.iter().map(|l| dep_in(&self.last, l)).collect()
    }

    fn push(&mut self, kind: EventKind, target: Option<Location>, value: Option<BigInt>, data: BTreeSet<Dep>, control: BTreeSet<Dep>) -> usize {
        let id = self.events.len();
        self.events.push(TraceEvent {
            id,
            kind,
            target,
            value,
            data_deps: data,
            control_deps: control,
        });
        id
    }

    fn charge(&mut self) -> Result<(), Halt> {
        if self.budget == 0 {
            return Err(Halt::Fuel);
        }
        self.budget -= 1;
        self.eager_events += 1;
        Ok(())
    }

    fn write(&mut self, loc: Location, id: usize) {
        for frame in &mut self.writes {
            frame.insert(loc.clone());
        }
        self.last.insert(loc, id);
    }

    fn guard(&mut self, c: &Expr, prev: Option<usize>) -> Result<(bool, usize), Halt> {
        let v = eval_bool(c, &self.store).map_err(|e| self.fail(e))?;
        let locs = read_locs(c, &self.store).map_err(|e| self.fail(e))?;
        let mut data = self.deps(&locs);
        data.extend(prev.map(Dep::Event));
        let control = self.control();
        Ok((v, self.push(EventKind::Guard, None, None, data, control)))
    }

    fn exec(&mut self, s: &Stmt) -> Result<(), Halt> {
        match s {
            Stmt::Ok => Ok(()),
            Stmt::Stop => Err(Halt::Stop),
            Stmt::Seq(a, b) => {
                self.exec(a)?;
                self.exec(b)
            }
            Stmt::Assign(lv, e) => {
                let v = eval_int(e, &self.store).map_err(|e| self.fail(e))?;
                let loc = target(lv, &self.store).map_err(|e| self.fail(e))?;
                let mut locs = read_locs(e, &self.store).map_err(|e| self.fail(e))?;
                if let Lvalue::Cell(_, i) = lv {
                    locs.extend(read_locs(i, &self.store).map_err(|e| self.fail(e))?);
                }
                self.store.set(&loc, v.clone()).map_err(|e| self.fail(e))?;
                self.charge()?;
                let (data, control) = (self.deps(&locs), self.control());
                let id = self.push(EventKind::Assign, Some(loc.clone()), Some(v), data, control);
                self.write(loc, id);
                Ok(())
            }
            Stmt::Print(e) => {
                let v = eval_int(e, &self.store).map_err(|e| self.fail(e))?;
                let locs = read_locs(e, &self.store).map_err(|e| self.fail(e))?;
                self.charge()?;
                let (data, control) = (self.deps(&locs), self.control());
                self.push(EventKind::Print, None, Some(v.clone()), data, control);
                self.printed.push(v);
                Ok(())
            }
            Stmt::If(c, a, b) => {
                let (v, g) = self.guard(c, None)?;
                let (taken, untaken) = if v { (a, b) } else { (b, a) };
                let pre_store = self.store.clone();
                let pre_last = self.last.clone();
                let outer = self.ctrl.replace(g);
                self.writes.push(BTreeSet::new());
                let r = self.exec(taken);
                let taken_writes = self.writes.pop().unwrap_or_default();
                self.ctrl = outer;
                r?;
                let mut shadow = Shadow::new(pre_store, &pre_last, self.budget);
                shadow.run(untaken);
                let merged: BTreeSet<Location> = taken_writes.union(&shadow.written).cloned().collect();
                for loc in merged {
                    let mut data = BTreeSet::from([Dep::Event(g), dep_in(&self.last, &loc)]);
                    if shadow.written.contains(&loc) {
                        data.extend(shadow.taint_of(&loc));
                    } else {
                        data.insert(dep_in(&pre_last, &loc));
                    }
                    let value = self.store.get(&loc).ok();
                    let control = self.control();
                    let id = self.push(EventKind::Phi, Some(loc.clone()), value, data, control);
                    self.write(loc, id);
                }
                Ok(())
            }
            Stmt::While(c, body, _) => {
                let outermost = self.loop_depth == 0;
                let start = self.events.len();
                let (outer, depth) = (self.ctrl, self.writes.len());
                self.loop_depth += 1;
                let r = self.iterate(c, body);
                self.loop_depth -= 1;
                self.ctrl = outer;
                match r {
                    Err(Halt::Fuel) if outermost && self.resume => {
                        self.writes.truncate(depth);
                        self.truncations.push(Truncation {
                            loop_start: start,
                            frontier: self.events.len(),
                            resumed: true,
                        });
                        self.budget = self.fuel;
                        Ok(())
                    }
                    r => r,
                }
            }
        }
    }

    fn iterate(&mut self, c: &Expr, body: &Stmt) -> Result<(), Halt> {
        let outer = self.ctrl;
        let mut prev = None;
        loop {
            self.ctrl = outer;
            let (v, g) = self.guard(c, prev)?;
            prev = Some(g);
            if !v {
                return Ok(());
            }
            self.ctrl = Some(g);
            self.exec(body)?;
        }
    }
}

/// Runs an untaken branch on a scratch store, tracking for every location
/// it writes the set of pre-branch values the result was computed from.
///
/// Mirrors the annotation, which never evaluates a branch's values: a read
/// at a negative index contributes nothing, and a value that fails to
/// evaluate poisons its target instead of stopping the run. Gives up
/// silently when a poisoned value reaches an index or a condition, on
/// `stop`, or when out of steps.
struct Shadow<'a> {
    store: ExecStore,
    base: &'a BTreeMap<Location, usize>,
    taint: BTreeMap<Location, BTreeSet<Dep>>,
    written: BTreeSet<Location>,
    poison: BTreeSet<Location>,
    frames: Vec<BTreeSet<Location>>,
    ctrl: Vec<BTreeSet<Dep>>,
    steps: u64,
}

impl<'a> Shadow<'a> {
    fn new(store: ExecStore, base: &'a BTreeMap<Location, usize>, steps: u64) -> Shadow<'a> {
        Shadow {
            store,
            base,
            taint: BTreeMap::new(),
            written: BTreeSet::new(),
            poison: BTreeSet::new(),
            frames: Vec::new(),
            ctrl: Vec::new(),
            steps,
        }
    }

    /// Locations `e` reads; `None` when an index cannot be determined.
    fn locs(&self, e: &Expr) -> Option<Vec<Location>> {
        let mut out = Vec::new();
        for r in reads_of(e) {
            match r {
                ReadLoc::Scalar(x) => out.push(Location::Scalar(x)),
                ReadLoc::Cell(a, i) => {
                    if let Ok(k) = cell_index(&a, &self.value(&i)?) {
                        out.push(Location::Cell(a, k));
                    }
                }
            }
        }
        Some(out)
    }

    /// `None` when `e` fails or reads a poisoned location.
    fn value(&self, e: &Expr) -> Option<BigInt> {
        let locs = self.locs(e)?;
        if locs.iter().any(|l| self.poison.contains(l)) {
            return None;
        }
        eval_int(e, &self.store).ok()
    }

    fn truth(&self, c: &Expr) -> Option<bool> {
        let locs = self.locs(c)?;
        if locs.iter().any(|l| self.poison.contains(l)) {
            return None;
        }
        eval_bool(c, &self.store).ok()
    }

    fn taint_of(&self, loc: &Location) -> BTreeSet<Dep> {
        self.taint
            .get(loc)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([dep_in(self.base, loc)]))
    }

    fn taint_all(&self, locs: &[Location]) -> BTreeSet<Dep> {
        locs.iter().flat_map(|l| self.taint_of(l)).collect()
    }

    fn write(&mut self, loc: Location, t: BTreeSet<Dep>) {
        self.written.insert(loc.clone());
        for f in &mut self.frames {
            f.insert(loc.clone());
        }
        self.taint.insert(loc, t);
    }

    fn run(&mut self, s: &Stmt) -> Option<()> {
        match s {
            Stmt::Ok | Stmt::Print(_) => Some(()),
            Stmt::Stop => None,
            Stmt::Seq(a, b) => {
                self.run(a)?;
                self.run(b)
            }
            Stmt::Assign(lv, e) => {
                self.steps = self.steps.checked_sub(1)?;
                let mut locs = self.locs(e)?;
                let loc = match lv {
                    Lvalue::Scalar(x) => Location::Scalar(x.clone()),
                    Lvalue::Cell(a, i) => {
                        locs.extend(self.locs(i)?);
                        match cell_index(a, &self.value(i)?) {
                            Ok(k) => Location::Cell(a.clone(), k),
                            // Writes no location the annotation tracks.
                            Err(_) => return Some(()),
                        }
                    }
                };
                match self.value(e) {
                    Some(v) => {
                        self.store.set(&loc, v).ok()?;
                        self.poison.remove(&loc);
                    }
                    None => {
                        self.poison.insert(loc.clone());
                    }
                }
                let mut t = self.taint_all(&locs);
                t.extend(self.ctrl.iter().flatten().cloned());
                self.write(loc, t);
                Some(())
            }
            Stmt::If(c, a, b) => {
                let v = self.truth(c)?;
                let k = self.taint_all(&self.locs(c)?);
                let (taken, untaken) = if v { (a, b) } else { (b, a) };
                let snapshot = (self.store.clone(), self.taint.clone(), self.poison.clone());
                self.frames.push(BTreeSet::new());
                self.ctrl.push(k.clone());
                let r = self.run(taken);
                self.ctrl.pop();
                let taken_writes = self.frames.pop().unwrap_or_default();
                r?;
                let mut other = Shadow {
                    store: snapshot.0,
                    base: self.base,
                    taint: snapshot.1,
                    written: BTreeSet::new(),
                    poison: snapshot.2,
                    frames: Vec::new(),
                    ctrl: self.ctrl.clone(),
                    steps: self.steps,
                };
                let before = other.taint.clone();
                other.run(untaken);
                let merged: BTreeSet<Location> = taken_writes.union(&other.written).cloned().collect();
                for loc in merged {
                    let mut t = k.clone();
                    t.extend(self.taint_of(&loc));
                    if other.written.contains(&loc) {
                        t.extend(other.taint_of(&loc));
                    } else {
                        t.extend(before.get(&loc).cloned().unwrap_or_else(|| {
                            BTreeSet::from([dep_in(self.base, &loc)])
                        }));
                    }
                    self.write(loc, t);
                }
                Some(())
            }
            Stmt::While(c, body, _) => {
                let depth = self.ctrl.len();
                let mut acc = BTreeSet::new();
                let r = (|| loop {
                    self.steps = self.steps.checked_sub(1)?;
                    let v = self.truth(c)?;
                    acc.extend(self.taint_all(&self.locs(c)?));
                    if !v {
                        return Some(());
                    }
                    self.ctrl.truncate(depth);
                    self.ctrl.push(acc.clone());
                    self.run(body)?;
                })();
                self.ctrl.truncate(depth);
                r
            }
        }
    }
}
