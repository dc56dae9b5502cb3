//! Execution: an eager interpreter, and a two-pass lazy one that runs
//! eagerly while recording dependencies, then charges only the events the
//! demanded results transitively depend on.

mod closure;
mod store;
mod trace;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use thiserror::Error;

pub use closure::{demand_closure, demand_closure_with, roots_for, Closure, Root, Stability, UNSTABLE_WINDOW};
pub use store::ExecStore;
pub use trace::{build_trace, DemandTrace, Dep, EventKind, TraceEvent, Truncation};

use crate::ast::{EvalError, ExtNat, Location, NeedState, State, Stmt, Universe};

pub const DEFAULT_FUEL: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("runtime error at event {event}: {source}")]
    Runtime {
        event: usize,
        #[source]
        source: EvalError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eager,
    Lazy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeReport {
    Fin(u64),
    Inf,
    FuelExceeded(u64),
}

impl TimeReport {
    pub fn as_extnat(self) -> Option<ExtNat> {
        match self {
            TimeReport::Fin(n) => Some(ExtNat::Fin(n)),
            TimeReport::Inf => Some(ExtNat::Inf),
            TimeReport::FuelExceeded(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecReport {
    pub mode: Mode,
    pub time: TimeReport,
    /// Absent when eager execution ran out of fuel, or when lazy execution
    /// was truncated (the final store is then not the program's).
    pub final_store: Option<ExecStore>,
    pub printed: Vec<BigInt>,
    /// Lazy mode only.
    pub stability: Option<Stability>,
    pub offending: Option<Location>,
    pub needed_events: Vec<usize>,
}

fn number(v: &BigInt) -> Value {
    v.to_i64().map_or_else(|| Value::String(v.to_string()), Value::from)
}

impl ExecReport {
    pub fn to_json(&self) -> Value {
        let time = match self.time {
            TimeReport::Fin(n) => json!({ "fin": n }),
            TimeReport::Inf => json!("inf"),
            TimeReport::FuelExceeded(n) => json!({ "fuelExceeded": n }),
        };
        let mut out = json!({
            "mode": match self.mode { Mode::Eager => "eager", Mode::Lazy => "lazy" },
            "time": time,
            "printed": self.printed.iter().map(number).collect::<Vec<_>>(),
            "stability": self.stability,
            "neededEvents": self.needed_events,
        });
        if let Some(loc) = &self.offending {
            out["offendingLocation"] = json!(loc.to_string());
        }
        out
    }
}

/// Standard execution; every assignment and print costs 1.
pub fn run_eager(p: &Stmt, s0: &State, fuel: u64) -> Result<ExecReport, ExecError> {
    let tr = trace::trace_with(p, s0, fuel, false)?;
    let exceeded = tr.truncated();
    Ok(ExecReport {
        mode: Mode::Eager,
        time: if exceeded {
            TimeReport::FuelExceeded(fuel)
        } else {
            TimeReport::Fin(tr.eager_events)
        },
        final_store: (!exceeded).then_some(tr.store),
        printed: tr.printed,
        stability: None,
        offending: None,
        needed_events: Vec::new(),
    })
}

/// Lazy execution with every print demanded and no final value demanded.
pub fn run_lazy(p: &Stmt, s0: &State, fuel: u64) -> Result<ExecReport, ExecError> {
    run_lazy_with(p, s0, fuel, &[Root::Prints])
}

pub fn run_lazy_with(p: &Stmt, s0: &State, fuel: u64, roots: &[Root]) -> Result<ExecReport, ExecError> {
    let tr = build_trace(p, s0, fuel)?;
    let c = demand_closure(&tr, roots);
    let needed = c.needed_events(&tr);
    Ok(ExecReport {
        mode: Mode::Lazy,
        time: TimeReport::Fin(needed.len() as u64),
        final_store: (!tr.truncated()).then(|| tr.store.clone()),
        printed: tr.printed.clone(),
        stability: Some(c.stability),
        offending: c.offending,
        needed_events: needed,
    })
}

/// What a lazy run from `s0` looks like through need variables, given the
/// final needs `post`. Final needs are ignored when the run ends at `stop`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub time: u64,
    /// Initial locations in the universe the demanded results depend on.
    pub pre_need: NeedState,
    /// Final values over the universe, if they fit in 64 bits.
    pub final_state: Option<State>,
    pub stability: Stability,
}

pub fn observe(p: &Stmt, s0: &State, post: &NeedState, u: &Universe, fuel: u64) -> Result<Observation, ExecError> {
    let tr = build_trace(p, s0, fuel)?;
    let roots = if tr.stopped { vec![Root::Prints] } else { roots_for(post) };
    let c = demand_closure(&tr, &roots);
    let mut pre_need = NeedState::uniform(u, false);
    for loc in &c.inputs {
        pre_need.set(loc, true);
    }
    Ok(Observation {
        time: c.time(&tr),
        pre_need,
        final_state: tr.store.to_state(u.bound),
        stability: c.stability,
    })
}
