use std::cmp::Ordering;

use super::frame::location_index;
use super::{compose, ArithOp, Binding, CmpOp, Domain, FramePair, PredError, Predicate, Range, Term};
use crate::ast::ExtNat;

/// Values a term can take: integers, infinity (for time), and binaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Inf,
    Bool(bool),
}

impl Value {
    pub fn from_extnat(t: ExtNat) -> Result<Value, PredError> {
        match t {
            ExtNat::Fin(n) => i64::try_from(n).map(Value::Int).map_err(|_| PredError::Overflow),
            ExtNat::Inf => Ok(Value::Inf),
        }
    }

    /// Interprets the value as a time; negative integers are not times.
    pub fn to_extnat(self) -> Option<ExtNat> {
        match self {
            Value::Int(n) if n >= 0 => Some(ExtNat::Fin(n as u64)),
            Value::Inf => Some(ExtNat::Inf),
            _ => None,
        }
    }

    fn as_int(self) -> Result<i64, PredError> {
        match self {
            Value::Int(n) => Ok(n),
            Value::Inf => Err(PredError::TypeMismatch("infinity used as an index or integer")),
            Value::Bool(_) => Err(PredError::TypeMismatch("binary used as a number")),
        }
    }

    fn as_bool(self) -> Result<bool, PredError> {
        match self {
            Value::Bool(b) => Ok(b),
            _ => Err(PredError::TypeMismatch("number used as a binary")),
        }
    }
}

/// Evaluates `p` against a complete binding.
pub fn eval_pred(p: &Predicate, b: &Binding, d: &Domain) -> Result<bool, PredError> {
    let mut u = b.universe();
    u.bound = d.array_bound;
    let (pre, post) = b.to_frames(&u)?;
    eval_pred_in(p, &FramePair { u: &u, pre: &pre, post: &post }, d)
}

/// Evaluates `p` against a pair of (possibly partial) frames. Reading an
/// unknown slot yields [`PredError::Unknown`].
pub fn eval_pred_in(p: &Predicate, fp: &FramePair<'_>, d: &Domain) -> Result<bool, PredError> {
    let mut bound = Vec::new();
    Cx { fp, d }.pred(p, &mut bound)
}

pub fn eval_term_in(t: &Term, fp: &FramePair<'_>, d: &Domain) -> Result<Value, PredError> {
    let mut bound = Vec::new();
    Cx { fp, d }.term(t, &mut bound)
}

/// Same as [`eval_pred_in`] with an initial index environment.
pub(crate) fn eval_pred_with<'p>(
    p: &'p Predicate,
    fp: &FramePair<'_>,
    d: &Domain,
    bound: &mut Vec<(&'p str, i64)>,
) -> Result<bool, PredError> {
    Cx { fp, d }.pred(p, bound)
}

pub(crate) fn eval_term_with<'p>(
    t: &'p Term,
    fp: &FramePair<'_>,
    d: &Domain,
    bound: &mut Vec<(&'p str, i64)>,
) -> Result<Value, PredError> {
    Cx { fp, d }.term(t, bound)
}

struct Cx<'a, 'f> {
    fp: &'a FramePair<'f>,
    d: &'a Domain,
}

fn lookup(bound: &[(&str, i64)], name: &str) -> Option<i64> {
    bound.iter().rev().find(|(n, _)| *n == name).map(|&(_, v)| v)
}

pub(crate) fn factorial_i64(n: i64) -> Result<i64, PredError> {
    if n < 0 {
        return Err(PredError::BadFactorial(n));
    }
    (2..=n).try_fold(1i64, |acc, k| acc.checked_mul(k).ok_or(PredError::Overflow))
}

pub(crate) fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, PredError> {
    use Value::*;
    Ok(match (op, a, b) {
        (_, Bool(_), _) | (_, _, Bool(_)) => {
            return Err(PredError::TypeMismatch("binary used in arithmetic"))
        }
        (ArithOp::Add, Int(x), Int(y)) => Int(x.checked_add(y).ok_or(PredError::Overflow)?),
        (ArithOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(y).ok_or(PredError::Overflow)?),
        (ArithOp::Mul, Int(x), Int(y)) => Int(x.checked_mul(y).ok_or(PredError::Overflow)?),
        (ArithOp::Div, Int(x), Int(y)) => {
            if y == 0 {
                return Err(PredError::DivisionByZero);
            }
            if x % y != 0 {
                return Err(PredError::InexactDivision(x, y));
            }
            Int(x / y)
        }
        (ArithOp::Add, Inf, _) | (ArithOp::Add, _, Inf) => Inf,
        (ArithOp::Sub, Inf, Int(_)) => Inf,
        (ArithOp::Mul, Inf, Int(k)) | (ArithOp::Mul, Int(k), Inf) if k > 0 => Inf,
        (ArithOp::Mul, Inf, Inf) => Inf,
        _ => return Err(PredError::TypeMismatch("undefined arithmetic on infinity")),
    })
}

pub(crate) fn compare(op: CmpOp, a: Value, b: Value) -> Result<bool, PredError> {
    use Value::*;
    let ord = match (a, b) {
        (Bool(x), Bool(y)) => {
            return match op {
                CmpOp::Eq => Ok(x == y),
                CmpOp::Ne => Ok(x != y),
                _ => Err(PredError::TypeMismatch("ordering on binaries")),
            }
        }
        (Bool(_), _) | (_, Bool(_)) => {
            return Err(PredError::TypeMismatch("comparing a binary with a number"))
        }
        (Int(x), Int(y)) => x.cmp(&y),
        (Inf, Inf) => Ordering::Equal,
        (Inf, Int(_)) => Ordering::Greater,
        (Int(_), Inf) => Ordering::Less,
    };
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

impl<'a, 'f> Cx<'a, 'f> {
    fn range<'p>(
        &self,
        r: &'p Range,
        bound: &mut Vec<(&'p str, i64)>,
    ) -> Result<(i64, i64), PredError> {
        let n = self.d.array_bound as i64;
        let lo = match &r.lo {
            Some(t) => self.term(t, bound)?.as_int()?.max(0),
            None => 0,
        };
        let hi = match &r.hi {
            Some(t) => self.term(t, bound)?.as_int()?.min(n - 1),
            None => n - 1,
        };
        Ok((lo, hi))
    }

    pub(crate) fn term<'p>(
        &self,
        t: &'p Term,
        bound: &mut Vec<(&'p str, i64)>,
    ) -> Result<Value, PredError> {
        Ok(match t {
            Term::Int(n) => Value::Int(*n),
            Term::Inf => Value::Inf,
            Term::Time { primed } => {
                let f = self.fp.frame(*primed);
                let t = f.time.ok_or_else(|| {
                    PredError::Unknown(if *primed { "t'".into() } else { "t".into() })
                })?;
                Value::from_extnat(t)?
            }
            Term::Bound(v) => Value::Int(
                lookup(bound, v).ok_or_else(|| PredError::UnboundVariable(v.clone()))?,
            ),
            Term::Var(r) => {
                let idx = match &r.index {
                    Some(i) => Some(self.term(i, bound)?.as_int()?),
                    None => None,
                };
                let k = location_index(self.fp.u, &r.name, idx)?;
                let f = self.fp.frame(r.primed);
                let missing = || {
                    let mut s = String::new();
                    if r.need {
                        s.push_str("need ");
                    }
                    s.push_str(&r.name);
                    if r.primed {
                        s.push('\'');
                    }
                    if let Some(i) = idx {
                        s.push_str(&format!("({i})"));
                    }
                    PredError::Unknown(s)
                };
                if r.need {
                    Value::Bool(f.needs[k].ok_or_else(missing)?)
                } else {
                    Value::Int(f.vals[k].ok_or_else(missing)?)
                }
            }
            Term::Neg(a) => match self.term(a, bound)? {
                Value::Int(n) => Value::Int(n.checked_neg().ok_or(PredError::Overflow)?),
                _ => return Err(PredError::TypeMismatch("negating a non-integer")),
            },
            Term::Fact(a) => Value::Int(factorial_i64(self.term(a, bound)?.as_int()?)?),
            Term::Arith(op, a, b) => {
                let x = self.term(a, bound)?;
                let y = self.term(b, bound)?;
                arith(*op, x, y)?
            }
            Term::IfFi(c, a, b) => {
                if self.pred(c, bound)? {
                    self.term(a, bound)?
                } else {
                    self.term(b, bound)?
                }
            }
            Term::Max {
                var,
                range,
                guard,
                body,
            } => {
                let (lo, hi) = self.range(range, bound)?;
                let mut best: Option<Value> = None;
                for j in lo..=hi {
                    bound.push((var, j));
                    let r = (|| -> Result<Option<Value>, PredError> {
                        if self.pred(guard, bound)? {
                            Ok(Some(self.term(body, bound)?))
                        } else {
                            Ok(None)
                        }
                    })();
                    bound.pop();
                    if let Some(v) = r? {
                        best = Some(match best {
                            Some(b) if compare(CmpOp::Ge, b, v)? => b,
                            _ => v,
                        });
                    }
                }
                best.ok_or(PredError::UndefinedMax)?
            }
        })
    }

    pub(crate) fn pred<'p>(
        &self,
        p: &'p Predicate,
        bound: &mut Vec<(&'p str, i64)>,
    ) -> Result<bool, PredError> {
        Ok(match p {
            Predicate::Const(b) => *b,
            Predicate::Atom(t) => self.term(t, bound)?.as_bool()?,
            Predicate::Cmp(op, a, b) => {
                let x = self.term(a, bound)?;
                let y = self.term(b, bound)?;
                compare(*op, x, y)?
            }
            Predicate::Not(a) => !self.pred(a, bound)?,
            Predicate::And(ps) => {
                // Evaluate every conjunct that can decide the result before
                // reporting an unknown slot.
                let mut pending = None;
                for q in ps {
                    match self.pred(q, bound) {
                        Ok(false) => return Ok(false),
                        Ok(true) => {}
                        Err(e @ PredError::Unknown(_)) => pending = pending.or(Some(e)),
                        Err(e) => return Err(e),
                    }
                }
                if let Some(e) = pending {
                    return Err(e);
                }
                true
            }
            Predicate::Or(ps) => {
                let mut pending = None;
                for q in ps {
                    match self.pred(q, bound) {
                        Ok(true) => return Ok(true),
                        Ok(false) => {}
                        Err(e @ PredError::Unknown(_)) => pending = pending.or(Some(e)),
                        Err(e) => return Err(e),
                    }
                }
                if let Some(e) = pending {
                    return Err(e);
                }
                false
            }
            Predicate::Implies(a, b) => !self.pred(a, bound)? || self.pred(b, bound)?,
            Predicate::Equiv(a, b) => self.pred(a, bound)? == self.pred(b, bound)?,
            Predicate::IfFi(c, a, b) => {
                if self.pred(c, bound)? {
                    self.pred(a, bound)?
                } else {
                    self.pred(b, bound)?
                }
            }
            Predicate::Forall(v, r, body) => {
                let (lo, hi) = self.range(r, bound)?;
                for j in lo..=hi {
                    bound.push((v, j));
                    let res = self.pred(body, bound);
                    bound.pop();
                    if !res? {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Exists(v, r, body) => {
                let (lo, hi) = self.range(r, bound)?;
                for j in lo..=hi {
                    bound.push((v, j));
                    let res = self.pred(body, bound);
                    bound.pop();
                    if res? {
                        return Ok(true);
                    }
                }
                false
            }
            Predicate::Compose(stages) => {
                compose::eval_chain_bound(stages, self.fp, self.d, bound)?
            }
        })
    }
}
