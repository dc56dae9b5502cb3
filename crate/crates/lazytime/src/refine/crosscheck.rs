//! Agreement between the lazy interpreter and the lazy annotation: on each
//! initial store and choice of final needs, the annotation must predict the
//! interpreter's time and initial needs.

use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{stages_of, universe_for, RefineError};
use crate::ast::{ExtNat, NeedState, State, Stmt, Universe};
use crate::exec::{observe, Stability};
use crate::predicate::{solve_chain, Domain, Frame, Predicate};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub pre: State,
    pub post_need: NeedState,
    pub lazy_time: u64,
    pub lazy_pre_need: NeedState,
    /// `None` when the annotation admits no behavior at all.
    pub predicted_time: Option<ExtNat>,
    pub predicted_pre_need: Option<NeedState>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    pub checked: u64,
    /// Runtime errors, unstable runs, and values too wide for a state.
    pub skipped: u64,
    pub disagreements: Vec<Disagreement>,
}

/// Compares `samples` random (initial store, final needs) pairs.
/// Initial times are zero; values come from the domain.
pub fn crosscheck(
    p: &Stmt,
    annotation: &Predicate,
    u: &Universe,
    d: &Domain,
    samples: u64,
    seed: u64,
    fuel: u64,
) -> Result<CrosscheckReport, RefineError> {
    let u = universe_for(u, d);
    let stages = stages_of(annotation, false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CrosscheckReport::default();
    let locs = u.locations();
    for _ in 0..samples {
        let mut pre = State::zeroed(&u);
        let mut post_need = NeedState::uniform(&u, false);
        for loc in &locs {
            pre.set(loc, *d.scalar_values.choose(&mut rng).unwrap_or(&0));
            post_need.set(loc, rng.gen_bool(0.5));
        }
        let Ok(obs) = observe(p, &pre, &post_need, &u, fuel) else {
            report.skipped += 1;
            continue;
        };
        if obs.stability == Stability::Unstable {
            report.skipped += 1;
            continue;
        }
        let k = stages.len();
        let mut frames = vec![Frame::unknown(&u); k + 1];
        frames[0] = Frame::from_state(&u, &pre, None)?;
        let needs_only = Frame::from_state(&u, &pre, Some(&post_need))?;
        frames[k].needs = needs_only.needs;
        let mut predicted = Vec::new();
        let r = solve_chain(&stages, frames, &u, d, &[], &mut |fs| {
            predicted.push((fs[k].time, fs[0].to_need_state(&u)));
            Ok(ControlFlow::Continue(()))
        });
        if r.is_err() {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let expect = (Some(ExtNat::Fin(obs.time)), Some(obs.pre_need.clone()));
        if predicted.is_empty() || predicted.iter().any(|got| *got != expect) {
            let first = predicted.first().cloned();
            report.disagreements.push(Disagreement {
                pre,
                post_need,
                lazy_time: obs.time,
                lazy_pre_need: obs.pre_need,
                predicted_time: first.as_ref().and_then(|f| f.0),
                predicted_pre_need: first.and_then(|f| f.1),
            });
        }
    }
    Ok(report)
}
