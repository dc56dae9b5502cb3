//! The backward need transformer on concrete stores.

use num_traits::ToPrimitive;

use super::AnnotateError;
use crate::ast::{eval_expr, reads_of, Expr, Location, Lvalue, NeedState, ReadLoc, State, Stmt, Universe};

fn err(e: impl ToString) -> AnnotateError {
    AnnotateError::Eval(e.to_string())
}

fn int(e: &Expr, s: &State) -> Result<i64, AnnotateError> {
    let v = eval_expr(e, s).map_err(err)?;
    v.as_int()
        .map_err(err)?
        .to_i64()
        .ok_or_else(|| err("value does not fit in 64 bits"))
}

fn truth(e: &Expr, s: &State) -> Result<bool, AnnotateError> {
    eval_expr(e, s).map_err(err)?.as_bool().map_err(err)
}

fn target(lv: &Lvalue, s: &State) -> Result<Location, AnnotateError> {
    Ok(match lv {
        Lvalue::Scalar(x) => Location::Scalar(x.clone()),
        Lvalue::Cell(a, i) => Location::Cell(a.clone(), int(i, s)?),
    })
}

fn reads(e: &Expr, s: &State) -> Result<Vec<Location>, AnnotateError> {
    reads_of(e)
        .into_iter()
        .map(|r| {
            Ok(match r {
                ReadLoc::Scalar(x) => Location::Scalar(x),
                ReadLoc::Cell(a, i) => Location::Cell(a, int(&i, s)?),
            })
        })
        .collect()
}

fn step(st: &Stmt, s: &State) -> Result<State, AnnotateError> {
    Ok(match st {
        Stmt::Ok | Stmt::Stop | Stmt::Print(_) => s.clone(),
        Stmt::Assign(lv, e) => {
            let loc = target(lv, s)?;
            let v = int(e, s)?;
            if s.get(&loc).is_none() {
                return Err(err(format!("{loc} is outside the modeled range")));
            }
            let mut out = s.clone();
            out.set(&loc, v);
            out
        }
        Stmt::If(c, a, b) => {
            if truth(c, s)? {
                step(a, s)?
            } else {
                step(b, s)?
            }
        }
        Stmt::Seq(a, b) => step(b, &step(a, s)?)?,
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
    })
}

fn writes(st: &Stmt, s: &State, out: &mut Vec<Location>) -> Result<(), AnnotateError> {
    match st {
        Stmt::Assign(lv, _) => out.push(target(lv, s)?),
        Stmt::If(_, a, b) => {
            writes(a, s, out)?;
            writes(b, s, out)?;
        }
        Stmt::Seq(a, b) => {
            writes(a, s, out)?;
            writes(b, &step(a, s)?, out)?;
        }
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
        _ => {}
    }
    Ok(())
}

fn prints(st: &Stmt, s: &State) -> Result<bool, AnnotateError> {
    Ok(match st {
        Stmt::Print(_) => true,
        Stmt::Seq(a, b) => prints(a, s)? || prints(b, &step(a, s)?)?,
        Stmt::If(c, a, b) => {
            if truth(c, s)? {
                prints(a, s)?
            } else {
                prints(b, s)?
            }
        }
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
        _ => false,
    })
}

fn demand(n: &mut NeedState, loc: &Location) {
    if n.get(loc).is_some() {
        n.set(loc, true);
    }
}

fn or_into(n: &mut NeedState, other: &NeedState) {
    for loc in other.needed() {
        n.set(&loc, true);
    }
}

/// Needs before `st` and the time `st` takes.
fn back(
    st: &Stmt,
    s: &State,
    post: &NeedState,
    sinks: bool,
    u: &Universe,
) -> Result<(NeedState, u64), AnnotateError> {
    Ok(match st {
        Stmt::Ok => (post.clone(), 0),
        Stmt::Stop => (NeedState::uniform(u, false), 0),
        Stmt::Print(e) => {
            let mut pre = post.clone();
            let rs = reads(e, s)?;
            if sinks {
                for r in &rs {
                    demand(&mut pre, r);
                }
            }
            (pre, 1)
        }
        Stmt::Assign(lv, e) => {
            let t = target(lv, s)?;
            let mut rs = reads(e, s)?;
            if let Lvalue::Cell(_, i) = lv {
                rs.extend(reads(i, s)?);
            }
            let d = post
                .get(&t)
                .ok_or_else(|| err(format!("{t} is outside the modeled range")))?;
            let mut pre = post.clone();
            pre.set(&t, false);
            if d {
                for r in &rs {
                    demand(&mut pre, r);
                }
            }
            (pre, d as u64)
        }
        Stmt::Seq(a, b) => {
            let mid = step(a, s)?;
            let (n_mid, cb) = back(b, &mid, post, sinks, u)?;
            let (n_pre, ca) = back(a, s, &n_mid, sinks, u)?;
            (n_pre, ca + cb)
        }
        Stmt::If(c, a, b) => {
            let taken = truth(c, s)?;
            let mut pre = back(a, s, post, false, u)?.0;
            or_into(&mut pre, &back(b, s, post, false, u)?.0);
            let mut w = Vec::new();
            writes(a, s, &mut w)?;
            writes(b, s, &mut w)?;
            let mut cond_needed = w.iter().any(|l| post.get(l) == Some(true));
            let mut cost = 0;
            if sinks {
                let run = if taken { a } else { b };
                let none = NeedState::uniform(u, false);
                or_into(&mut pre, &back(run, s, &none, true, u)?.0);
                cond_needed |= prints(run, s)?;
                cost = back(run, s, post, true, u)?.1;
            }
            if cond_needed {
                for r in reads(c, s)? {
                    demand(&mut pre, &r);
                }
            }
            (pre, cost)
        }
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
    })
}

/// Needs before loop-free `st`, run from `pre`, given the needs after it.
pub fn syntactic_needs(
    st: &Stmt,
    post: &NeedState,
    pre: &State,
    u: &Universe,
) -> Result<NeedState, AnnotateError> {
    if !st.is_loop_free() {
        return Err(AnnotateError::NotLoopFree);
    }
    Ok(back(st, pre, post, true, u)?.0)
}

/// The lazy time of loop-free `st` run from `pre` with needs `post` after it.
pub fn syntactic_time(
    st: &Stmt,
    post: &NeedState,
    pre: &State,
    u: &Universe,
) -> Result<u64, AnnotateError> {
    if !st.is_loop_free() {
        return Err(AnnotateError::NotLoopFree);
    }
    Ok(back(st, pre, post, true, u)?.1)
}
