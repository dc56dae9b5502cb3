//! Pass 2 of lazy execution: the demand closure over a trace.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::trace::{DemandTrace, Dep, Truncation};
use crate::ast::{Location, NeedState};

/// Share of an abandoned loop's events, counted back from the point where
/// fuel ran out, whose influence on the result marks it as unreliable.
pub const UNSTABLE_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Root {
    /// Everything printed is demanded.
    Prints,
    /// The final value of a location is demanded.
    Final(Location),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// No fuel truncation happened.
    Exact,
    /// Truncated, but nothing demanded depends on the abandoned work.
    FuelStable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    /// Events, costed or not, reachable from the roots.
    pub events: BTreeSet<usize>,
    /// Initial values reachable from the roots.
    pub inputs: BTreeSet<Location>,
    pub stability: Stability,
    /// A location through which the closure depends on abandoned work.
    pub offending: Option<Location>,
}

impl Closure {
    /// Costed events in the closure, in execution order.
    pub fn needed_events(&self, tr: &DemandTrace) -> Vec<usize> {
        self.events
            .iter()
            .copied()
            .filter(|&id| tr.events[id].is_costed())
            .collect()
    }

    pub fn time(&self, tr: &DemandTrace) -> u64 {
        self.needed_events(tr).len() as u64
    }
}

/// Roots for a run whose prints and, per `need`, final values are demanded.
pub fn roots_for(need: &NeedState) -> Vec<Root> {
    std::iter::once(Root::Prints)
        .chain(need.needed().into_iter().map(Root::Final))
        .collect()
}

pub fn demand_closure(tr: &DemandTrace, roots: &[Root]) -> Closure {
    demand_closure_with(tr, roots, UNSTABLE_WINDOW)
}

pub fn demand_closure_with(tr: &DemandTrace, roots: &[Root], window: f64) -> Closure {
    let mut events = BTreeSet::new();
    let mut inputs = BTreeSet::new();
    let mut queue = VecDeque::new();
    let mut visit = |d: Dep, events: &mut BTreeSet<usize>, queue: &mut VecDeque<usize>| match d {
        Dep::Event(id) => {
            if events.insert(id) {
                queue.push_back(id);
            }
        }
        Dep::Input(loc) => {
            inputs.insert(loc);
        }
    };
    for r in roots {
        match r {
            Root::Prints => {
                for e in tr.events.iter().filter(|e| e.kind == super::EventKind::Print) {
                    visit(Dep::Event(e.id), &mut events, &mut queue);
                }
            }
            Root::Final(loc) => visit(final_dep(tr, loc), &mut events, &mut queue),
        }
    }
    while let Some(id) = queue.pop_front() {
        let e = &tr.events[id];
        for d in e.data_deps.iter().chain(&e.control_deps) {
            visit(d.clone(), &mut events, &mut queue);
        }
    }
    let mut c = Closure {
        events,
        inputs,
        stability: if tr.truncated() {
            Stability::FuelStable
        } else {
            Stability::Exact
        },
        offending: None,
    };
    for t in &tr.truncations {
        if let Some(verdict) = check_truncation(tr, roots, &c.events, t, window) {
            c.stability = Stability::Unstable;
            c.offending = verdict;
            break;
        }
    }
    c
}

fn final_dep(tr: &DemandTrace, loc: &Location) -> Dep {
    tr.last_write
        .get(loc)
        .map_or_else(|| Dep::Input(loc.clone()), |&id| Dep::Event(id))
}

/// `Some(offending location)` when the closure depends on work near the
/// truncation point; the location is `None` when no attribution exists.
fn check_truncation(
    tr: &DemandTrace,
    roots: &[Root],
    closure: &BTreeSet<usize>,
    t: &Truncation,
    window: f64,
) -> Option<Option<Location>> {
    // Execution never resumed: everything after the frontier is missing.
    if !t.resumed {
        return Some(None);
    }
    let len = t.frontier - t.loop_start;
    let w = ((len as f64) * window).ceil() as usize;
    let lo = t.frontier - w.min(len);
    let in_window = |id: usize| (lo..t.frontier).contains(&id);
    let hits: Vec<usize> = closure.iter().copied().filter(|&id| in_window(id)).collect();
    if !hits.is_empty() {
        return Some(hits.iter().find_map(|&id| tr.events[id].target.clone()));
    }
    // Locations whose post-frontier readers see a pre-frontier writer; had
    // the loop run on, those writers could have changed.
    // Initial values read after the frontier count too: the loop may have
    // been about to write them.
    let mut crossing = BTreeSet::new();
    let mut fresh = BTreeSet::new();
    let mut note = |d: Dep, crossing: &mut BTreeSet<Location>| match d {
        Dep::Event(src) if src < t.frontier => crossing.extend(tr.events[src].target.clone()),
        Dep::Event(_) => {}
        Dep::Input(loc) => {
            fresh.insert(loc);
        }
    };
    for &id in closure.range(t.frontier..) {
        for d in &tr.events[id].data_deps {
            note(d.clone(), &mut crossing);
        }
    }
    for r in roots {
        if let Root::Final(loc) = r {
            note(final_dep(tr, loc), &mut crossing);
        }
    }
    let name = |l: &Location| match l {
        Location::Scalar(x) | Location::Cell(x, _) => x.clone(),
    };
    let fresh_names: BTreeSet<String> = fresh.iter().map(name).collect();
    for l in tr.events[lo..t.frontier].iter().filter_map(|e| e.target.as_ref()) {
        if crossing.contains(l) {
            return Some(Some(l.clone()));
        }
        if fresh_names.contains(&name(l)) {
            return Some(fresh.iter().find(|f| name(f) == name(l)).cloned());
        }
    }
    None
}
