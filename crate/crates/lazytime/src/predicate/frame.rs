//! Flat, possibly partial, snapshots of a store together with its need
//! flags and clock. Predicates are evaluated over a pair of frames.

use serde::Serialize;

use super::PredError;
use crate::ast::{ExtNat, NeedState, State, Universe};

/// Addresses one slot of a [`Frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Val(usize),
    Need(usize),
    Time,
}

/// A store, its need flags and the time. `None` marks an unknown slot.
///
/// Locations are laid out as in [`Universe::locations`]: scalars first,
/// then each array's cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    pub vals: Vec<Option<i64>>,
    pub needs: Vec<Option<bool>>,
    pub time: Option<ExtNat>,
}

impl Frame {
    pub fn unknown(u: &Universe) -> Frame {
        let n = u.location_count();
        Frame {
            vals: vec![None; n],
            needs: vec![None; n],
            time: None,
        }
    }

    pub fn from_state(u: &Universe, s: &State, need: Option<&NeedState>) -> Result<Frame, PredError> {
        let mut f = Frame::unknown(u);
        for (k, loc) in u.locations().iter().enumerate() {
            f.vals[k] = Some(
                s.get(loc)
                    .ok_or_else(|| PredError::UniverseMismatch(loc.to_string()))?,
            );
            if let Some(n) = need {
                f.needs[k] = Some(
                    n.get(loc)
                        .ok_or_else(|| PredError::UniverseMismatch(loc.to_string()))?,
                );
            }
        }
        f.time = Some(s.time);
        Ok(f)
    }

    pub fn get(&self, slot: Slot) -> Option<SlotValue> {
        match slot {
            Slot::Val(k) => self.vals[k].map(SlotValue::Int),
            Slot::Need(k) => self.needs[k].map(SlotValue::Bool),
            Slot::Time => self.time.map(SlotValue::Time),
        }
    }

    pub fn is_known(&self, slot: Slot) -> bool {
        match slot {
            Slot::Val(k) => self.vals[k].is_some(),
            Slot::Need(k) => self.needs[k].is_some(),
            Slot::Time => self.time.is_some(),
        }
    }

    pub fn set(&mut self, slot: Slot, v: SlotValue) {
        match (slot, v) {
            (Slot::Val(k), SlotValue::Int(x)) => self.vals[k] = Some(x),
            (Slot::Need(k), SlotValue::Bool(b)) => self.needs[k] = Some(b),
            (Slot::Time, SlotValue::Time(t)) => self.time = Some(t),
            _ => panic!("slot/value kind mismatch"),
        }
    }

    pub fn clear(&mut self, slot: Slot) {
        match slot {
            Slot::Val(k) => self.vals[k] = None,
            Slot::Need(k) => self.needs[k] = None,
            Slot::Time => self.time = None,
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..self.vals.len())
            .map(Slot::Val)
            .chain((0..self.needs.len()).map(Slot::Need))
            .chain(std::iter::once(Slot::Time))
    }

    pub fn is_complete(&self) -> bool {
        self.time.is_some()
            && self.vals.iter().all(Option::is_some)
            && self.needs.iter().all(Option::is_some)
    }

    pub fn to_state(&self, u: &Universe) -> Option<State> {
        let mut s = State::zeroed(u);
        for (k, loc) in u.locations().iter().enumerate() {
            s.set(loc, self.vals[k]?);
        }
        s.time = self.time?;
        Some(s)
    }

    pub fn to_need_state(&self, u: &Universe) -> Option<NeedState> {
        let mut n = NeedState::uniform(u, false);
        for (k, loc) in u.locations().iter().enumerate() {
            n.set(loc, self.needs[k]?);
        }
        Some(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotValue {
    Int(i64),
    Bool(bool),
    Time(ExtNat),
}

/// Resolves a variable reference to its flat location index.
pub(crate) fn location_index(
    u: &Universe,
    name: &str,
    index: Option<i64>,
) -> Result<usize, PredError> {
    match index {
        None => u
            .scalar_index(name)
            .ok_or_else(|| PredError::UnboundVariable(name.to_string())),
        Some(i) => {
            let a = u
                .array_index(name)
                .ok_or_else(|| PredError::UnboundVariable(name.to_string()))?;
            if i < 0 || i as usize >= u.bound {
                return Err(PredError::IndexOutOfRange {
                    array: name.to_string(),
                    index: i,
                });
            }
            Ok(u.scalars.len() + a * u.bound + i as usize)
        }
    }
}

/// The pre and post frames a predicate is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct FramePair<'a> {
    pub u: &'a Universe,
    pub pre: &'a Frame,
    pub post: &'a Frame,
}

impl<'a> FramePair<'a> {
    pub fn frame(&self, primed: bool) -> &'a Frame {
        if primed {
            self.post
        } else {
            self.pre
        }
    }
}

/// A complete assignment to every observable variable: initial and final
/// stores (with times) and initial and final need states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub pre: State,
    pub post: State,
    pub pre_need: NeedState,
    pub post_need: NeedState,
}

impl Binding {
    pub fn universe(&self) -> Universe {
        let bound = self.pre.arrays.values().map(Vec::len).max().unwrap_or(1);
        Universe {
            scalars: self.pre.scalars.keys().cloned().collect(),
            arrays: self.pre.arrays.keys().cloned().collect(),
            bound,
        }
    }

    pub fn to_frames(&self, u: &Universe) -> Result<(Frame, Frame), PredError> {
        Ok((
            Frame::from_state(u, &self.pre, Some(&self.pre_need))?,
            Frame::from_state(u, &self.post, Some(&self.post_need))?,
        ))
    }

    /// Rebuilds a binding from complete frames.
    pub fn from_frames(u: &Universe, pre: &Frame, post: &Frame) -> Option<Binding> {
        Some(Binding {
            pre: pre.to_state(u)?,
            post: post.to_state(u)?,
            pre_need: pre.to_need_state(u)?,
            post_need: post.to_need_state(u)?,
        })
    }
}
