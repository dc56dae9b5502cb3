use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::ast::{EvalError, Location, State, Store};

/// A store with unbounded integers and arrays that grow on demand. Cells
/// never written and outside the initial prefix hold 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecStore {
    pub scalars: BTreeMap<String, BigInt>,
    pub arrays: BTreeMap<String, BTreeMap<i64, BigInt>>,
}

pub(crate) fn cell_index(name: &str, index: &BigInt) -> Result<i64, EvalError> {
    match index.to_i64() {
        Some(i) if !index.is_negative() => Ok(i),
        _ => Err(EvalError::IndexOutOfRange {
            array: name.to_string(),
            index: index.to_string(),
        }),
    }
}

impl ExecStore {
    pub fn from_state(s: &State) -> ExecStore {
        ExecStore {
            scalars: s.scalars.iter().map(|(k, &v)| (k.clone(), BigInt::from(v))).collect(),
            arrays: s
                .arrays
                .iter()
                .map(|(k, cells)| {
                    let cells = cells
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| (i as i64, BigInt::from(v)))
                        .collect();
                    (k.clone(), cells)
                })
                .collect(),
        }
    }

    pub fn get(&self, loc: &Location) -> Result<BigInt, EvalError> {
        match loc {
            Location::Scalar(x) => self.scalar(x),
            Location::Cell(a, i) => self.cell(a, &BigInt::from(*i)),
        }
    }

    pub fn set(&mut self, loc: &Location, v: BigInt) -> Result<(), EvalError> {
        match loc {
            Location::Scalar(x) => match self.scalars.get_mut(x) {
                Some(slot) => *slot = v,
                None => return Err(EvalError::UnknownVariable(x.clone())),
            },
            Location::Cell(a, i) => match self.arrays.get_mut(a) {
                Some(cells) => {
                    cells.insert(*i, v);
                }
                None => return Err(EvalError::UnknownVariable(a.clone())),
            },
        }
        Ok(())
    }

    /// The prefix `0..bound` of every array as a bounded state, if every
    /// value fits in 64 bits.
    pub fn to_state(&self, bound: usize) -> Option<State> {
        let scalars = self
            .scalars
            .iter()
            .map(|(k, v)| Some((k.clone(), v.to_i64()?)))
            .collect::<Option<_>>()?;
        let arrays = self
            .arrays
            .iter()
            .map(|(k, cells)| {
                let prefix = (0..bound as i64)
                    .map(|i| cells.get(&i).map_or(Some(0), ToPrimitive::to_i64))
                    .collect::<Option<Vec<i64>>>()?;
                Some((k.clone(), prefix))
            })
            .collect::<Option<_>>()?;
        Some(State {
            scalars,
            arrays,
            time: crate::ast::ExtNat::ZERO,
        })
    }
}

impl Store for ExecStore {
    fn scalar(&self, name: &str) -> Result<BigInt, EvalError> {
        self.scalars
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnknownVariable(name.to_string()))
    }

    fn cell(&self, name: &str, index: &BigInt) -> Result<BigInt, EvalError> {
        let cells = self
            .arrays
            .get(name)
            .ok_or_else(|| EvalError::UnknownVariable(name.to_string()))?;
        let i = cell_index(name, index)?;
        Ok(cells.get(&i).cloned().unwrap_or_else(BigInt::zero))
    }
}
