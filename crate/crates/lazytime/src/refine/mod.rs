//! Bounded checking of refinements `A ⇐ B`: every behavior `B` allows must
//! satisfy `A`.
//!
//! The checker chooses initial stores and times; the chain solver then
//! finds every completion `B` admits, enumerating final needs (unless the
//! sampler fixed them) and any other slot `A` or `B` reads but `B` leaves
//! open, and `A` is evaluated on each.

mod crosscheck;
mod sample;

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

pub use crosscheck::{crosscheck, CrosscheckReport, Disagreement};

use crate::annotator::Annotation;
use crate::ast::{ExtNat, NeedState, State, Universe};
use crate::predicate::{
    eval_chain, eval_pred_in, one_point_compose, solve_chain, Binding, Domain, Frame, FramePair, PredError,
    Predicate,
};

/// Initial stores beyond which exhaustive enumeration is refused.
pub const EXHAUSTIVE_LIMIT: u64 = 50_000;
pub const DEFAULT_SAMPLES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0x5eed;
const MAX_DRAWS_FACTOR: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error(transparent)]
    Pred(#[from] PredError),
    #[error("exhaustive enumeration needs about {estimate} initial stores (limit {limit})")]
    DomainTooLarge { estimate: u64, limit: u64 },
    #[error("counterexample failed its independent re-check")]
    RecheckFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Exhaustive,
    /// `samples` initial stores with every index in range. Scalars, times
    /// and final needs are enumerated round-robin when their combinations
    /// fit in the budget; arrays are always drawn. Each store is paired with
    /// one vector of final needs instead of all of them.
    Sampled { samples: u64, seed: u64 },
    /// Exhaustive when within [`EXHAUSTIVE_LIMIT`], sampled otherwise.
    Auto { samples: u64, seed: u64 },
}

impl Default for Strategy {
    fn default() -> Strategy {
        Strategy::Auto {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    HoldsExhaustive,
    /// Holds on this many sampled initial stores.
    HoldsSampled(u64),
    Fails,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub claim: String,
    pub verdict: Verdict,
    /// Evaluates `B` true and `A` false.
    pub counterexample: Option<Binding>,
    /// Complete bindings admitted by `B` on which `A` was evaluated.
    pub bindings_checked: u64,
    /// Initial stores tried, skipped ones included.
    pub stores: u64,
    /// Initial stores on which some index fell outside the array bound.
    pub skipped: u64,
    pub seed: Option<u64>,
    pub array_bound: usize,
    /// Combinations of scalar values, times and final needs that sampling
    /// cycled through; zero for exhaustive checks and fully random draws.
    pub grid: u64,
}

impl RefinementReport {
    pub fn holds(&self) -> bool {
        self.verdict != Verdict::Fails
    }

    pub fn to_json(&self) -> Value {
        let verdict = match self.verdict {
            Verdict::HoldsExhaustive => "holds(exhaustive)".to_string(),
            Verdict::HoldsSampled(k) => format!("holds(sampled, {k})"),
            Verdict::Fails => "fails".to_string(),
        };
        json!({
            "claim": self.claim,
            "verdict": verdict,
            "bindingsChecked": self.bindings_checked,
            "storesChecked": self.stores,
            "storesSkipped": self.skipped,
            "arrayBound": self.array_bound,
            "counterexample": self.counterexample,
            "seed": self.seed,
            "grid": self.grid,
        })
    }
}

enum Outcome {
    Holds(u64),
    Skipped,
    Violated(Binding),
}

pub(crate) fn stages_of(p: &Predicate, one_point: bool) -> Vec<Predicate> {
    let flat = match p {
        Predicate::Compose(ps) => ps.iter().flat_map(|q| stages_of(q, false)).collect(),
        other => vec![other.clone()],
    };
    if !one_point {
        return flat;
    }
    let mut out: Vec<Predicate> = Vec::new();
    for p in flat {
        let merged = out.last().and_then(|prev| one_point_compose(prev, &p).ok());
        match merged {
            Some(m) => *out.last_mut().unwrap() = m,
            None => out.push(p),
        }
    }
    out
}

pub(crate) fn universe_for(u: &Universe, d: &Domain) -> Universe {
    let mut u = u.clone();
    u.bound = d.array_bound;
    u
}

struct Checker<'a> {
    lhs: &'a Predicate,
    rhs: &'a Predicate,
    stages: Vec<Predicate>,
    u: Universe,
    d: &'a Domain,
}

impl Checker<'_> {
    /// Final needs, when given, are fixed rather than enumerated.
    fn run(&self, pre: &State, post_need: Option<&NeedState>) -> Result<Outcome, RefineError> {
        let k = self.stages.len();
        let mut frames = vec![Frame::unknown(&self.u); k + 1];
        frames[0] = Frame::from_state(&self.u, pre, None)?;
        if let Some(n) = post_need {
            frames[k].needs = Frame::from_state(&self.u, pre, Some(n))?.needs;
        }
        let mut bad = None;
        let mut seen = 0;
        let r = solve_chain(&self.stages, frames, &self.u, self.d, &[self.lhs], &mut |fs| {
            seen += 1;
            let fp = FramePair {
                u: &self.u,
                pre: &fs[0],
                post: &fs[k],
            };
            if eval_pred_in(self.lhs, &fp, self.d)? {
                Ok(ControlFlow::Continue(()))
            } else {
                bad = Some((fs[0].clone(), fs[k].clone()));
                Ok(ControlFlow::Break(()))
            }
        });
        match r {
            Err(PredError::IndexOutOfRange { .. }) => Ok(Outcome::Skipped),
            Err(e) => Err(e.into()),
            Ok(_) => Ok(match bad {
                Some((pre, post)) => Outcome::Violated(
                    Binding::from_frames(&self.u, &pre, &post).ok_or(RefineError::RecheckFailed)?,
                ),
                None => Outcome::Holds(seen),
            }),
        }
    }

    /// Independent confirmation: `A` false and `B` true on `b`.
    fn recheck(&self, b: &Binding) -> Result<bool, RefineError> {
        let (pre, post) = b.to_frames(&self.u)?;
        let fp = FramePair {
            u: &self.u,
            pre: &pre,
            post: &post,
        };
        let stages = stages_of(self.rhs, false);
        Ok(!eval_pred_in(self.lhs, &fp, self.d)? && eval_chain(&stages, &fp, self.d)?)
    }

    /// Greedily zeroes initial values and times while a violation remains.
    fn minimize(
        &self,
        mut pre: State,
        post_need: Option<&NeedState>,
        mut found: Binding,
    ) -> Result<Binding, RefineError> {
        loop {
            let mut changed = false;
            let mut candidates = Vec::new();
            if pre.time != ExtNat::ZERO {
                let mut s = pre.clone();
                s.time = ExtNat::ZERO;
                candidates.push(s);
            }
            for loc in self.u.locations() {
                if pre.get(&loc).is_some_and(|v| v != 0) {
                    let mut s = pre.clone();
                    s.set(&loc, 0);
                    candidates.push(s);
                }
            }
            for s in candidates {
                if let Outcome::Violated(b) = self.run(&s, post_need)? {
                    pre = s;
                    found = b;
                    changed = true;
                    break;
                }
            }
            if !changed {
                return Ok(found);
            }
        }
    }
}

/// Checks `lhs ⇐ rhs` over `d`. Compositions in `rhs` are merged by
/// one-point elimination where possible.
pub fn check_refinement(
    claim: &str,
    lhs: &Predicate,
    rhs: &Predicate,
    u: &Universe,
    d: &Domain,
    strategy: Strategy,
) -> Result<RefinementReport, RefineError> {
    d.validate()?;
    let checker = Checker {
        lhs,
        rhs,
        stages: stages_of(rhs, true),
        u: universe_for(u, d),
        d,
    };
    let locs = checker.u.locations().len() as u32;
    let exhaustive_count = (d.scalar_values.len() as u64)
        .checked_pow(locs)
        .and_then(|n| n.checked_mul(d.time_samples.len() as u64))
        .unwrap_or(u64::MAX);
    let (exhaustive, samples, seed) = match strategy {
        Strategy::Exhaustive if exhaustive_count > EXHAUSTIVE_LIMIT => {
            return Err(RefineError::DomainTooLarge {
                estimate: exhaustive_count,
                limit: EXHAUSTIVE_LIMIT,
            })
        }
        Strategy::Exhaustive => (true, 0, None),
        Strategy::Auto { .. } if exhaustive_count <= EXHAUSTIVE_LIMIT => (true, 0, None),
        Strategy::Auto { samples, seed } | Strategy::Sampled { samples, seed } => (false, samples, Some(seed)),
    };
    let needs = lhs.mentions_needs() || rhs.mentions_needs();
    let stores: Box<dyn Iterator<Item = (State, Option<NeedState>)>> = if exhaustive {
        Box::new(sample::exhaustive(&checker.u, d).map(|s| (s, None)))
    } else {
        let rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or_default());
        Box::new(sample::sampled(&checker.u, d, samples, needs, rng))
    };
    // Sampling stops once `samples` stores were checked, or after drawing
    // `MAX_DRAWS_FACTOR × samples` when most land out of range.
    let max_draws = samples.saturating_mul(MAX_DRAWS_FACTOR);
    let mut report = RefinementReport {
        claim: claim.to_string(),
        verdict: if exhaustive {
            Verdict::HoldsExhaustive
        } else {
            Verdict::HoldsSampled(0)
        },
        counterexample: None,
        bindings_checked: 0,
        stores: 0,
        skipped: 0,
        seed,
        array_bound: d.array_bound,
        grid: if exhaustive {
            0
        } else {
            sample::grid_size(&checker.u, d, samples, needs)
        },
    };
    for (pre, post_need) in stores {
        if !exhaustive && (report.stores - report.skipped >= samples || report.stores >= max_draws) {
            break;
        }
        report.stores += 1;
        match checker.run(&pre, post_need.as_ref())? {
            Outcome::Holds(n) => report.bindings_checked += n,
            Outcome::Skipped => report.skipped += 1,
            Outcome::Violated(b) => {
                report.bindings_checked += 1;
                let b = checker.minimize(pre, post_need.as_ref(), b)?;
                if !checker.recheck(&b)? {
                    return Err(RefineError::RecheckFailed);
                }
                report.verdict = Verdict::Fails;
                report.counterexample = Some(b);
                return Ok(report);
            }
        }
    }
    if !exhaustive {
        report.verdict = Verdict::HoldsSampled(report.stores - report.skipped);
    }
    Ok(report)
}

/// One report per obligation of `a`, in order.
pub fn check_obligations(
    a: &Annotation,
    u: &Universe,
    d: &Domain,
    strategy: Strategy,
) -> Result<Vec<RefinementReport>, RefineError> {
    a.obligations
        .iter()
        .map(|o| check_refinement(&o.name(), &o.lhs, &o.rhs, u, d, strategy))
        .collect()
}

/// `strong ⇒ weak`: the refinement `weak ⇐ strong`.
pub fn specialize_check(
    strong: &Predicate,
    weak: &Predicate,
    u: &Universe,
    d: &Domain,
    strategy: Strategy,
) -> Result<RefinementReport, RefineError> {
    check_refinement("specialization", weak, strong, u, d, strategy)
}

#[cfg(test)]
mod tests;
