//! Translation of statements into predicates over initial and final values,
//! time, and need variables.
//!
//! Lazy mode charges an assignment only when its result is needed and
//! defines every initial need from final needs by the occurrence rule.
//! Eager mode charges every assignment and print. Loops are never annotated
//! automatically: each `while` names a user-supplied specification and
//! contributes a refinement obligation.

mod needs;
mod render;
mod symbolic;

use std::collections::BTreeMap;

use thiserror::Error;

pub use needs::{syntactic_needs, syntactic_time};

use crate::ast::{Expr, Stmt, Universe};
use crate::predicate::{check_universe, Predicate, PredError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error("loop refers to unknown specification `{0}`")]
    UnknownSpecName(String),
    #[error("loop has no `spec` clause naming its specification")]
    MissingSpec,
    #[error("`{0}` is not in the variable universe")]
    UniverseMismatch(String),
    #[error("statement contains a loop")]
    NotLoopFree,
    #[error("a loop inside a conditional cannot be annotated")]
    LoopInConditional,
    #[error("expected an integer expression")]
    NotAnInteger,
    #[error("expected a binary expression")]
    NotABinary,
    #[error("runtime error while tracing needs: {0}")]
    Eval(String),
}

/// Where an obligation comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    /// The `ordinal`-th loop of the program (0-based, source order).
    Loop { spec: String, ordinal: usize },
    /// A claim about the whole program.
    Claim,
}

/// `lhs ⇐ rhs`, to be discharged by the refinement checker.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementObligation {
    pub lhs: Predicate,
    pub rhs: Predicate,
    pub origin: Origin,
}

impl RefinementObligation {
    pub fn name(&self) -> String {
        match &self.origin {
            Origin::Loop { spec, .. } => spec.clone(),
            Origin::Claim => "claim".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub stmt: Stmt,
    /// The whole program; a composition when it has several statements.
    pub pred: Predicate,
    /// One entry per top-level statement.
    pub parts: Vec<(Stmt, Predicate)>,
    pub obligations: Vec<RefinementObligation>,
}

impl Annotation {
    /// Adds the obligation `claim ⇐ program`.
    pub fn with_claim(mut self, claim: Predicate) -> Annotation {
        self.obligations.push(RefinementObligation {
            lhs: claim,
            rhs: self.pred.clone(),
            origin: Origin::Claim,
        });
        self
    }
}

/// Lazy annotation.
pub fn annotate(
    s: &Stmt,
    specs: &BTreeMap<String, Predicate>,
    u: &Universe,
) -> Result<Annotation, AnnotateError> {
    Annotator::new(specs, u, true)?.run(s)
}

/// Eager annotation: no need variables, every assignment and print costs 1.
pub fn eager_annotate(
    s: &Stmt,
    specs: &BTreeMap<String, Predicate>,
    u: &Universe,
) -> Result<Annotation, AnnotateError> {
    Annotator::new(specs, u, false)?.run(s)
}

fn covers(u: &Universe, s: &Stmt) -> Result<(), AnnotateError> {
    let used = Universe::of_program(s, u.bound)
        .map_err(|e| AnnotateError::UniverseMismatch(e.to_string()))?;
    for x in &used.scalars {
        if !u.is_scalar(x) {
            return Err(AnnotateError::UniverseMismatch(x.clone()));
        }
    }
    for a in &used.arrays {
        if !u.is_array(a) {
            return Err(AnnotateError::UniverseMismatch(a.clone()));
        }
    }
    Ok(())
}

struct Annotator<'a> {
    specs: &'a BTreeMap<String, Predicate>,
    u: &'a Universe,
    lazy: bool,
    loops: usize,
    obligations: Vec<RefinementObligation>,
}

impl<'a> Annotator<'a> {
    fn new(specs: &'a BTreeMap<String, Predicate>, u: &'a Universe, lazy: bool) -> Result<Self, AnnotateError> {
        for p in specs.values() {
            check_universe(p, u).map_err(|e| match e {
                PredError::UniverseMismatch(v) | PredError::UnboundVariable(v) => {
                    AnnotateError::UniverseMismatch(v)
                }
                other => AnnotateError::UniverseMismatch(other.to_string()),
            })?;
        }
        Ok(Annotator {
            specs,
            u,
            lazy,
            loops: 0,
            obligations: Vec::new(),
        })
    }

    fn run(mut self, s: &Stmt) -> Result<Annotation, AnnotateError> {
        covers(self.u, s)?;
        let mut parts = Vec::new();
        for part in s.flatten() {
            parts.push((part.clone(), self.stmt(part)?));
        }
        let preds: Vec<Predicate> = parts.iter().map(|(_, p)| p.clone()).collect();
        Ok(Annotation {
            stmt: s.clone(),
            pred: chain(preds),
            parts,
            obligations: self.obligations,
        })
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Predicate, AnnotateError> {
        let u = self.u;
        match s {
            Stmt::Ok => Ok(render::ok(u, self.lazy)),
            Stmt::Stop => Ok(render::stop(u, self.lazy)),
            Stmt::Assign(lv, e) => render::assign(u, lv, e, self.lazy),
            Stmt::Print(e) => render::print(u, e, self.lazy),
            Stmt::Seq(..) => {
                let mut preds = Vec::new();
                for part in s.flatten() {
                    preds.push(self.stmt(part)?);
                }
                Ok(chain(preds))
            }
            Stmt::If(c, a, b) if self.lazy => {
                if !s.is_loop_free() {
                    return Err(AnnotateError::LoopInConditional);
                }
                render::symbolic(u, &Stmt::If(c.clone(), a.clone(), b.clone()))
            }
            Stmt::If(c, a, b) => {
                let c = symbolic::SymStore::identity(u).pred(c)?;
                Ok(Predicate::if_fi(c, self.stmt(a)?, self.stmt(b)?))
            }
            Stmt::While(c, body, name) => {
                let name = name.as_ref().ok_or(AnnotateError::MissingSpec)?;
                let spec = self
                    .specs
                    .get(name)
                    .ok_or_else(|| AnnotateError::UnknownSpecName(name.clone()))?
                    .clone();
                let ordinal = self.loops;
                self.loops += 1;
                let body = self.stmt(body)?;
                let mut stages = match body {
                    Predicate::Compose(ps) => ps,
                    p => vec![p],
                };
                stages.push(spec.clone());
                let iterate = Predicate::Compose(stages);
                let rhs = match c {
                    Expr::Bool(true) => iterate,
                    c => {
                        let c = symbolic::SymStore::identity(u).pred(c)?;
                        Predicate::if_fi(c, iterate, render::ok(u, self.lazy))
                    }
                };
                self.obligations.push(RefinementObligation {
                    lhs: spec.clone(),
                    rhs,
                    origin: Origin::Loop {
                        spec: name.clone(),
                        ordinal,
                    },
                });
                Ok(spec)
            }
        }
    }
}

fn chain(mut preds: Vec<Predicate>) -> Predicate {
    match preds.len() {
        1 => preds.pop().unwrap(),
        _ => Predicate::Compose(preds),
    }
}

#[cfg(test)]
mod tests;
