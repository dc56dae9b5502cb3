//! Symbolic execution of loop-free code. Values are terms over the initial
//! store; needs are predicates over final needs and initial values. Array
//! contents and array needs are bodies over the bound index [`J`].
//!
//! Conditionals follow the merge rule used by the dynamic trace: a location
//! written by either branch acquires, when finally needed, the condition's
//! reads and the dependencies of its value along both branches. Prints
//! demand their reads only on the branch that executes them.

use std::collections::BTreeMap;

use super::AnnotateError;
use crate::ast::{reads_of, BinOp, Expr, Lvalue, ReadLoc, Stmt, UnOp, Universe};
use crate::predicate::{
    normalize, normalize_term, subst_bound_pred, subst_bound_term, ArithOp, CmpOp, Predicate, Term,
};

/// The index variable of array bodies.
pub(crate) const J: &str = "j";

pub(crate) fn j() -> Term {
    Term::bound(J)
}

/// A location read or written, with its index in initial-store terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SymLoc {
    Scalar(String),
    Cell(String, Term),
}

pub(crate) fn or2(a: Predicate, b: Predicate) -> Predicate {
    match (a, b) {
        (Predicate::Const(true), _) | (_, Predicate::Const(true)) => Predicate::tt(),
        (Predicate::Const(false), q) | (q, Predicate::Const(false)) => q,
        (a, b) => Predicate::or(vec![a, b]),
    }
}

pub(crate) fn and2(a: Predicate, b: Predicate) -> Predicate {
    match (a, b) {
        (Predicate::Const(false), _) | (_, Predicate::Const(false)) => Predicate::ff(),
        (Predicate::Const(true), q) | (q, Predicate::Const(true)) => q,
        (a, b) => Predicate::and(vec![a, b]),
    }
}

fn is_bool_expr(e: &Expr) -> bool {
    match e {
        Expr::Bool(_) | Expr::Unary(UnOp::Not, _) => true,
        Expr::Binary(op, ..) => op.is_comparison() || matches!(op, BinOp::And | BinOp::Or),
        _ => false,
    }
}

fn cmp_op(op: BinOp) -> Option<CmpOp> {
    Some(match op {
        BinOp::Eq => CmpOp::Eq,
        BinOp::Ne => CmpOp::Ne,
        BinOp::Lt => CmpOp::Lt,
        BinOp::Le => CmpOp::Le,
        BinOp::Gt => CmpOp::Gt,
        BinOp::Ge => CmpOp::Ge,
        _ => return None,
    })
}

/// Symbolic store: every location's current value over the initial store.
#[derive(Debug, Clone)]
pub(crate) struct SymStore {
    scalars: BTreeMap<String, Term>,
    arrays: BTreeMap<String, Term>,
}

impl SymStore {
    pub(crate) fn identity(u: &Universe) -> SymStore {
        SymStore {
            scalars: u.scalars.iter().map(|x| (x.clone(), Term::var(x))).collect(),
            arrays: u.arrays.iter().map(|a| (a.clone(), Term::cell(a, j()))).collect(),
        }
    }

    pub(crate) fn scalar(&self, x: &str) -> Result<&Term, AnnotateError> {
        self.scalars
            .get(x)
            .ok_or_else(|| AnnotateError::UniverseMismatch(x.to_string()))
    }

    /// Body over [`J`] giving the array's current contents.
    pub(crate) fn array(&self, a: &str) -> Result<&Term, AnnotateError> {
        self.arrays
            .get(a)
            .ok_or_else(|| AnnotateError::UniverseMismatch(a.to_string()))
    }

    fn cell(&self, a: &str, idx: &Term) -> Result<Term, AnnotateError> {
        Ok(normalize_term(&subst_bound_term(self.array(a)?, J, idx)))
    }

    pub(crate) fn term(&self, e: &Expr) -> Result<Term, AnnotateError> {
        Ok(match e {
            Expr::Int(n) => Term::Int(*n),
            Expr::Var(x) => self.scalar(x)?.clone(),
            Expr::Index(a, i) => self.cell(a, &self.term(i)?)?,
            Expr::Unary(UnOp::Neg, a) => normalize_term(&Term::Neg(Box::new(self.term(a)?))),
            Expr::Unary(UnOp::Fact, a) => Term::Fact(Box::new(self.term(a)?)),
            Expr::Binary(op, a, b) => {
                let op = match op {
                    BinOp::Add => ArithOp::Add,
                    BinOp::Sub => ArithOp::Sub,
                    BinOp::Mul => ArithOp::Mul,
                    BinOp::Div => ArithOp::Div,
                    _ => return Err(AnnotateError::NotAnInteger),
                };
                normalize_term(&Term::arith(op, self.term(a)?, self.term(b)?))
            }
            Expr::Bool(_) | Expr::Unary(UnOp::Not, _) => return Err(AnnotateError::NotAnInteger),
        })
    }

    pub(crate) fn pred(&self, e: &Expr) -> Result<Predicate, AnnotateError> {
        Ok(match e {
            Expr::Bool(b) => Predicate::Const(*b),
            Expr::Unary(UnOp::Not, a) => Predicate::not(self.pred(a)?),
            Expr::Binary(BinOp::And, a, b) => Predicate::and(vec![self.pred(a)?, self.pred(b)?]),
            Expr::Binary(BinOp::Or, a, b) => Predicate::or(vec![self.pred(a)?, self.pred(b)?]),
            Expr::Binary(op @ (BinOp::Eq | BinOp::Ne), a, b)
                if is_bool_expr(a) && is_bool_expr(b) =>
            {
                let eqv = Predicate::equiv(self.pred(a)?, self.pred(b)?);
                if *op == BinOp::Eq {
                    eqv
                } else {
                    Predicate::not(eqv)
                }
            }
            Expr::Binary(op, a, b) => match cmp_op(*op) {
                Some(c) => Predicate::cmp(c, self.term(a)?, self.term(b)?),
                None => return Err(AnnotateError::NotABinary),
            },
            _ => return Err(AnnotateError::NotABinary),
        })
    }

    /// Locations read by `e` in the current store.
    pub(crate) fn reads(&self, e: &Expr) -> Result<Vec<SymLoc>, AnnotateError> {
        let mut out = Vec::new();
        for r in reads_of(e) {
            let loc = match r {
                ReadLoc::Scalar(x) => SymLoc::Scalar(x),
                ReadLoc::Cell(a, i) => SymLoc::Cell(a, self.term(&i)?),
            };
            if !out.contains(&loc) {
                out.push(loc);
            }
        }
        Ok(out)
    }

    fn assign(&mut self, lv: &Lvalue, e: &Expr) -> Result<(), AnnotateError> {
        let v = self.term(e)?;
        match lv {
            Lvalue::Scalar(x) => {
                self.scalar(x)?;
                self.scalars.insert(x.clone(), v);
            }
            Lvalue::Cell(a, i) => {
                let k = self.term(i)?;
                let old = self.array(a)?.clone();
                let body = Term::if_fi(Predicate::eq(j(), k), v, old);
                self.arrays.insert(a.clone(), normalize_term(&body));
            }
        }
        Ok(())
    }

    /// Pointwise `if c then self else other fi`.
    fn merge(&self, c: &Predicate, other: &SymStore) -> SymStore {
        let pick = |a: &Term, b: &Term| normalize_term(&Term::if_fi(c.clone(), a.clone(), b.clone()));
        SymStore {
            scalars: self
                .scalars
                .iter()
                .map(|(x, t)| (x.clone(), pick(t, &other.scalars[x])))
                .collect(),
            arrays: self
                .arrays
                .iter()
                .map(|(a, t)| (a.clone(), pick(t, &other.arrays[a])))
                .collect(),
        }
    }
}

/// Runs `s` forward.
pub(crate) fn forward(s: &Stmt, sigma: &SymStore) -> Result<SymStore, AnnotateError> {
    Ok(match s {
        Stmt::Ok | Stmt::Stop | Stmt::Print(_) => sigma.clone(),
        Stmt::Assign(lv, e) => {
            let mut out = sigma.clone();
            out.assign(lv, e)?;
            out
        }
        Stmt::If(c, a, b) => {
            let c = sigma.pred(c)?;
            forward(a, sigma)?.merge(&c, &forward(b, sigma)?)
        }
        Stmt::Seq(a, b) => forward(b, &forward(a, sigma)?)?,
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
    })
}

/// Locations `s` writes, counting both branches of every conditional.
fn writes(s: &Stmt, sigma: &SymStore, out: &mut Vec<SymLoc>) -> Result<(), AnnotateError> {
    match s {
        Stmt::Ok | Stmt::Stop | Stmt::Print(_) => {}
        Stmt::Assign(Lvalue::Scalar(x), _) => out.push(SymLoc::Scalar(x.clone())),
        Stmt::Assign(Lvalue::Cell(a, i), _) => out.push(SymLoc::Cell(a.clone(), sigma.term(i)?)),
        Stmt::If(_, a, b) => {
            writes(a, sigma, out)?;
            writes(b, sigma, out)?;
        }
        Stmt::Seq(a, b) => {
            writes(a, sigma, out)?;
            writes(b, &forward(a, sigma)?, out)?;
        }
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
    }
    Ok(())
}

/// Whether some print in `s` executes.
fn prints(s: &Stmt, sigma: &SymStore) -> Result<Predicate, AnnotateError> {
    Ok(match s {
        Stmt::Print(_) => Predicate::tt(),
        Stmt::Seq(a, b) => or2(prints(a, sigma)?, prints(b, &forward(a, sigma)?)?),
        Stmt::If(c, a, b) => {
            let c = sigma.pred(c)?;
            or2(
                and2(c.clone(), prints(a, sigma)?),
                and2(Predicate::not(c), prints(b, sigma)?),
            )
        }
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
        _ => Predicate::ff(),
    })
}

/// Need of every location at one program point.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SymNeeds {
    pub scalars: BTreeMap<String, Predicate>,
    /// Bodies over [`J`].
    pub arrays: BTreeMap<String, Predicate>,
}

impl SymNeeds {
    /// The final needs themselves.
    pub(crate) fn post(u: &Universe) -> SymNeeds {
        SymNeeds {
            scalars: u
                .scalars
                .iter()
                .map(|x| (x.clone(), Predicate::atom(Term::need(x, true, None))))
                .collect(),
            arrays: u
                .arrays
                .iter()
                .map(|a| (a.clone(), Predicate::atom(Term::need(a, true, Some(j())))))
                .collect(),
        }
    }

    pub(crate) fn none(u: &Universe) -> SymNeeds {
        SymNeeds {
            scalars: u.scalars.iter().map(|x| (x.clone(), Predicate::ff())).collect(),
            arrays: u.arrays.iter().map(|a| (a.clone(), Predicate::ff())).collect(),
        }
    }

    pub(crate) fn at(&self, loc: &SymLoc) -> Predicate {
        match loc {
            SymLoc::Scalar(x) => self.scalars[x].clone(),
            SymLoc::Cell(a, k) => normalize(&subst_bound_pred(&self.arrays[a], J, k)),
        }
    }

    fn kill(&mut self, loc: &SymLoc) {
        match loc {
            SymLoc::Scalar(x) => {
                self.scalars.insert(x.clone(), Predicate::ff());
            }
            SymLoc::Cell(a, k) => {
                let body = self.arrays[a].clone();
                let keep = and2(Predicate::cmp(CmpOp::Ne, j(), k.clone()), body);
                self.arrays.insert(a.clone(), normalize(&keep));
            }
        }
    }

    /// Adds demand `d` on `loc`.
    fn demand(&mut self, loc: &SymLoc, d: &Predicate) {
        match loc {
            SymLoc::Scalar(x) => {
                let p = or2(self.scalars[x].clone(), d.clone());
                self.scalars.insert(x.clone(), p);
            }
            SymLoc::Cell(a, k) => {
                let at = normalize(&and2(Predicate::eq(j(), k.clone()), d.clone()));
                let p = or2(self.arrays[a].clone(), at);
                self.arrays.insert(a.clone(), p);
            }
        }
    }

    fn or_with(&mut self, other: &SymNeeds) {
        for (x, p) in self.scalars.iter_mut() {
            *p = or2(p.clone(), other.scalars[x].clone());
        }
        for (a, p) in self.arrays.iter_mut() {
            *p = or2(p.clone(), other.arrays[a].clone());
        }
    }

    fn guarded(&self, c: &Predicate) -> SymNeeds {
        let g = |p: &Predicate| and2(c.clone(), p.clone());
        SymNeeds {
            scalars: self.scalars.iter().map(|(x, p)| (x.clone(), g(p))).collect(),
            arrays: self.arrays.iter().map(|(a, p)| (a.clone(), g(p))).collect(),
        }
    }

    pub(crate) fn normalized(&self) -> SymNeeds {
        SymNeeds {
            scalars: self.scalars.iter().map(|(x, p)| (x.clone(), normalize(p))).collect(),
            arrays: self.arrays.iter().map(|(a, p)| (a.clone(), normalize(p))).collect(),
        }
    }
}

fn unit_cost(d: Predicate) -> Term {
    Term::if_fi(d, Term::Int(1), Term::Int(0))
}

/// Backward pass: needs before `s` given needs `post` after it, and the time
/// `s` takes. With `sinks` off, prints demand nothing; this computes what a
/// branch's values depend on whether or not it runs.
pub(crate) fn back(
    s: &Stmt,
    sigma: &SymStore,
    post: &SymNeeds,
    sinks: bool,
    u: &Universe,
) -> Result<(SymNeeds, Term), AnnotateError> {
    Ok(match s {
        Stmt::Ok => (post.clone(), Term::Int(0)),
        Stmt::Stop => (SymNeeds::none(u), Term::Int(0)),
        Stmt::Print(e) => {
            let mut pre = post.clone();
            if sinks {
                for r in sigma.reads(e)? {
                    pre.demand(&r, &Predicate::tt());
                }
            }
            (pre, Term::Int(1))
        }
        Stmt::Assign(lv, e) => {
            let (target, mut reads) = match lv {
                Lvalue::Scalar(x) => (SymLoc::Scalar(x.clone()), sigma.reads(e)?),
                Lvalue::Cell(a, i) => {
                    let mut r = sigma.reads(e)?;
                    for extra in sigma.reads(i)? {
                        if !r.contains(&extra) {
                            r.push(extra);
                        }
                    }
                    (SymLoc::Cell(a.clone(), sigma.term(i)?), r)
                }
            };
            let d = post.at(&target);
            let mut pre = post.clone();
            pre.kill(&target);
            for r in reads.drain(..) {
                pre.demand(&r, &d);
            }
            (pre, unit_cost(d))
        }
        Stmt::Seq(a, b) => {
            let mid = forward(a, sigma)?;
            let (n_mid, cb) = back(b, &mid, post, sinks, u)?;
            let (n_pre, ca) = back(a, sigma, &n_mid, sinks, u)?;
            (n_pre, normalize_term(&Term::add(ca, cb)))
        }
        Stmt::If(cond, b, c) => {
            let k = sigma.reads(cond)?;
            let cp = sigma.pred(cond)?;
            let mut pre = back(b, sigma, post, false, u)?.0;
            pre.or_with(&back(c, sigma, post, false, u)?.0);
            let mut w = Vec::new();
            writes(b, sigma, &mut w)?;
            writes(c, sigma, &mut w)?;
            let mut cond_need = w.iter().fold(Predicate::ff(), |acc, l| or2(acc, post.at(l)));
            let mut cost = Term::Int(0);
            if sinks {
                let none = SymNeeds::none(u);
                let not_c = Predicate::not(cp.clone());
                pre.or_with(&back(b, sigma, &none, true, u)?.0.guarded(&cp));
                pre.or_with(&back(c, sigma, &none, true, u)?.0.guarded(&not_c));
                cond_need = or2(
                    cond_need,
                    or2(
                        and2(cp.clone(), prints(b, sigma)?),
                        and2(not_c, prints(c, sigma)?),
                    ),
                );
                let cb = back(b, sigma, post, true, u)?.1;
                let cc = back(c, sigma, post, true, u)?.1;
                cost = normalize_term(&Term::if_fi(cp, cb, cc));
            }
            for r in &k {
                pre.demand(r, &cond_need);
            }
            (pre, cost)
        }
        Stmt::While(..) => return Err(AnnotateError::NotLoopFree),
    })
}
