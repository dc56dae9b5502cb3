//! Abstract syntax of the imperative mini-language, plus the value domains
//! shared by the rest of the crate: extended naturals for time, concrete
//! stores and need states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Add;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default length of the modeled array prefix.
pub const DEFAULT_ARRAY_BOUND: usize = 8;

/// Largest operand accepted by the factorial operator.
const MAX_FACTORIAL_OPERAND: u64 = 20_000;

/// Natural numbers extended with infinity. Used for time values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtNat::Fin(_))
    }
}

/// Saturating addition: `Inf` absorbs everything.
pub fn extnat_add(a: ExtNat, b: ExtNat) -> ExtNat {
    match (a, b) {
        (ExtNat::Fin(x), ExtNat::Fin(y)) => x.checked_add(y).map_or(ExtNat::Inf, ExtNat::Fin),
        _ => ExtNat::Inf,
    }
}

impl Add for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: ExtNat) -> ExtNat {
        extnat_add(self, rhs)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
    Fact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "/=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "/\\",
            BinOp::Or => "\\/",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

/// Program expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Index(String, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn index(name: &str, idx: Expr) -> Expr {
        Expr::Index(name.to_string(), Box::new(idx))
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn un(op: UnOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Lvalue {
    Scalar(String),
    Cell(String, Expr),
}

impl Lvalue {
    pub fn name(&self) -> &str {
        match self {
            Lvalue::Scalar(n) | Lvalue::Cell(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    Ok,
    Assign(Lvalue, Expr),
    If(Expr, Box<Stmt>, Box<Stmt>),
    /// `while cond do body od spec name`. The spec name is optional in the
    /// syntax; annotation rejects loops without one.
    While(Expr, Box<Stmt>, Option<String>),
    Seq(Box<Stmt>, Box<Stmt>),
    Print(Expr),
    Stop,
}

impl Stmt {
    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of the given statements; `ok` when empty.
    pub fn seq_all(stmts: Vec<Stmt>) -> Stmt {
        let mut iter = stmts.into_iter().rev();
        let Some(last) = iter.next() else {
            return Stmt::Ok;
        };
        iter.fold(last, |acc, s| Stmt::seq(s, acc))
    }

    /// Flattens nested `Seq` nodes into program order.
    pub fn flatten(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        fn go<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
            match s {
                Stmt::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            Stmt::While(..) => false,
            Stmt::If(_, a, b) | Stmt::Seq(a, b) => a.is_loop_free() && b.is_loop_free(),
            _ => true,
        }
    }

    pub fn ends_with_stop(&self) -> bool {
        matches!(self.flatten().last(), Some(Stmt::Stop))
    }
}

/// A syntactic read: a scalar, or an array cell addressed by an expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReadLoc {
    Scalar(String),
    Cell(String, Expr),
}

/// A concrete storage location.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Location {
    Scalar(String),
    Cell(String, i64),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Scalar(n) => f.write_str(n),
            Location::Cell(n, i) => write!(f, "{n}({i})"),
        }
    }
}

/// Locations syntactically read by `e`. Reads inside an index expression
/// count as reads of `e`.
pub fn reads_of(e: &Expr) -> BTreeSet<ReadLoc> {
    let mut out = BTreeSet::new();
    collect_reads(e, &mut out);
    out
}

fn collect_reads(e: &Expr, out: &mut BTreeSet<ReadLoc>) {
    match e {
        Expr::Int(_) | Expr::Bool(_) => {}
        Expr::Var(n) => {
            out.insert(ReadLoc::Scalar(n.clone()));
        }
        Expr::Index(n, idx) => {
            out.insert(ReadLoc::Cell(n.clone(), (**idx).clone()));
            collect_reads(idx, out);
        }
        Expr::Unary(_, a) => collect_reads(a, out),
        Expr::Binary(_, a, b) => {
            collect_reads(a, out);
            collect_reads(b, out);
        }
    }
}

/// The variables of a program: scalars, arrays, and the array bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub scalars: Vec<String>,
    pub arrays: Vec<String>,
    pub bound: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UniverseError {
    #[error("`{0}` is used both as a scalar and as an array")]
    MixedUse(String),
}

impl Universe {
    pub fn new(scalars: &[&str], arrays: &[&str], bound: usize) -> Universe {
        let mut s: Vec<String> = scalars.iter().map(|x| x.to_string()).collect();
        let mut a: Vec<String> = arrays.iter().map(|x| x.to_string()).collect();
        s.sort();
        s.dedup();
        a.sort();
        a.dedup();
        Universe {
            scalars: s,
            arrays: a,
            bound,
        }
    }

    /// Infers the variable universe from use: anything indexed is an array.
    pub fn of_program(p: &Stmt, bound: usize) -> Result<Universe, UniverseError> {
        let mut scalars = BTreeSet::new();
        let mut arrays = BTreeSet::new();
        collect_stmt_vars(p, &mut scalars, &mut arrays);
        if let Some(both) = scalars.intersection(&arrays).next() {
            return Err(UniverseError::MixedUse(both.clone()));
        }
        Ok(Universe {
            scalars: scalars.into_iter().collect(),
            arrays: arrays.into_iter().collect(),
            bound,
        })
    }

    pub fn is_scalar(&self, name: &str) -> bool {
        self.scalars.binary_search_by(|s| s.as_str().cmp(name)).is_ok()
    }

    pub fn is_array(&self, name: &str) -> bool {
        self.arrays.binary_search_by(|s| s.as_str().cmp(name)).is_ok()
    }

    pub fn scalar_index(&self, name: &str) -> Option<usize> {
        self.scalars.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    pub fn array_index(&self, name: &str) -> Option<usize> {
        self.arrays.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    /// Every concrete location, scalars first, then array cells in order.
    pub fn locations(&self) -> Vec<Location> {
        let mut out: Vec<Location> = self
            .scalars
            .iter()
            .map(|s| Location::Scalar(s.clone()))
            .collect();
        for a in &self.arrays {
            for i in 0..self.bound {
                out.push(Location::Cell(a.clone(), i as i64));
            }
        }
        out
    }

    pub fn location_count(&self) -> usize {
        self.scalars.len() + self.arrays.len() * self.bound
    }

    pub fn merge(&self, other: &Universe) -> Result<Universe, UniverseError> {
        let scalars: BTreeSet<String> = self.scalars.iter().chain(&other.scalars).cloned().collect();
        let arrays: BTreeSet<String> = self.arrays.iter().chain(&other.arrays).cloned().collect();
        if let Some(both) = scalars.intersection(&arrays).next() {
            return Err(UniverseError::MixedUse(both.clone()));
        }
        Ok(Universe {
            scalars: scalars.into_iter().collect(),
            arrays: arrays.into_iter().collect(),
            bound: self.bound.max(other.bound),
        })
    }
}

fn collect_expr_vars(e: &Expr, scalars: &mut BTreeSet<String>, arrays: &mut BTreeSet<String>) {
    match e {
        Expr::Int(_) | Expr::Bool(_) => {}
        Expr::Var(n) => {
            scalars.insert(n.clone());
        }
        Expr::Index(n, i) => {
            arrays.insert(n.clone());
            collect_expr_vars(i, scalars, arrays);
        }
        Expr::Unary(_, a) => collect_expr_vars(a, scalars, arrays),
        Expr::Binary(_, a, b) => {
            collect_expr_vars(a, scalars, arrays);
            collect_expr_vars(b, scalars, arrays);
        }
    }
}

fn collect_stmt_vars(s: &Stmt, scalars: &mut BTreeSet<String>, arrays: &mut BTreeSet<String>) {
    match s {
        Stmt::Ok | Stmt::Stop => {}
        Stmt::Assign(lv, e) => {
            match lv {
                Lvalue::Scalar(n) => {
                    scalars.insert(n.clone());
                }
                Lvalue::Cell(n, i) => {
                    arrays.insert(n.clone());
                    collect_expr_vars(i, scalars, arrays);
                }
            }
            collect_expr_vars(e, scalars, arrays);
        }
        Stmt::If(c, a, b) => {
            collect_expr_vars(c, scalars, arrays);
            collect_stmt_vars(a, scalars, arrays);
            collect_stmt_vars(b, scalars, arrays);
        }
        Stmt::While(c, body, _) => {
            collect_expr_vars(c, scalars, arrays);
            collect_stmt_vars(body, scalars, arrays);
        }
        Stmt::Seq(a, b) => {
            collect_stmt_vars(a, scalars, arrays);
            collect_stmt_vars(b, scalars, arrays);
        }
        Stmt::Print(e) => collect_expr_vars(e, scalars, arrays),
    }
}

/// A concrete store over a bounded array prefix, plus the clock.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub scalars: BTreeMap<String, i64>,
    pub arrays: BTreeMap<String, Vec<i64>>,
    pub time: ExtNat,
}

impl State {
    /// All variables zero, time zero.
    pub fn zeroed(u: &Universe) -> State {
        State {
            scalars: u.scalars.iter().map(|s| (s.clone(), 0)).collect(),
            arrays: u.arrays.iter().map(|a| (a.clone(), vec![0; u.bound])).collect(),
            time: ExtNat::ZERO,
        }
    }

    pub fn get(&self, loc: &Location) -> Option<i64> {
        match loc {
            Location::Scalar(n) => self.scalars.get(n).copied(),
            Location::Cell(n, i) => {
                let i = usize::try_from(*i).ok()?;
                self.arrays.get(n)?.get(i).copied()
            }
        }
    }

    pub fn set(&mut self, loc: &Location, v: i64) {
        match loc {
            Location::Scalar(n) => {
                self.scalars.insert(n.clone(), v);
            }
            Location::Cell(n, i) => {
                if let (Some(arr), Ok(i)) = (self.arrays.get_mut(n), usize::try_from(*i)) {
                    if i < arr.len() {
                        arr[i] = v;
                    }
                }
            }
        }
    }
}

/// One binary need flag per location, shaped exactly like a [`State`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeedState {
    pub scalars: BTreeMap<String, bool>,
    pub arrays: BTreeMap<String, Vec<bool>>,
}

impl NeedState {
    pub fn uniform(u: &Universe, flag: bool) -> NeedState {
        NeedState {
            scalars: u.scalars.iter().map(|s| (s.clone(), flag)).collect(),
            arrays: u
                .arrays
                .iter()
                .map(|a| (a.clone(), vec![flag; u.bound]))
                .collect(),
        }
    }

    pub fn get(&self, loc: &Location) -> Option<bool> {
        match loc {
            Location::Scalar(n) => self.scalars.get(n).copied(),
            Location::Cell(n, i) => {
                let i = usize::try_from(*i).ok()?;
                self.arrays.get(n)?.get(i).copied()
            }
        }
    }

    pub fn set(&mut self, loc: &Location, v: bool) {
        match loc {
            Location::Scalar(n) => {
                self.scalars.insert(n.clone(), v);
            }
            Location::Cell(n, i) => {
                if let (Some(arr), Ok(i)) = (self.arrays.get_mut(n), usize::try_from(*i)) {
                    if i < arr.len() {
                        arr[i] = v;
                    }
                }
            }
        }
    }

    pub fn needed(&self) -> BTreeSet<Location> {
        let mut out = BTreeSet::new();
        for (n, &b) in &self.scalars {
            if b {
                out.insert(Location::Scalar(n.clone()));
            }
        }
        for (n, cells) in &self.arrays {
            for (i, &b) in cells.iter().enumerate() {
                if b {
                    out.insert(Location::Cell(n.clone(), i as i64));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("index {index} of `{array}` is outside the modeled range")]
    IndexOutOfRange { array: String, index: String },
    #[error("inexact division {num} / {den}")]
    InexactDivision { num: String, den: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("factorial of negative number {0}")]
    NegativeFactorial(String),
    #[error("factorial operand {0} is too large")]
    FactorialTooLarge(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(&'static str),
}

/// Runtime values of program expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RtValue {
    Int(BigInt),
    Bool(bool),
}

impl RtValue {
    pub fn as_int(&self) -> Result<&BigInt, EvalError> {
        match self {
            RtValue::Int(i) => Ok(i),
            RtValue::Bool(_) => Err(EvalError::TypeMismatch("expected an integer")),
        }
    }

    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            RtValue::Bool(b) => Ok(*b),
            RtValue::Int(_) => Err(EvalError::TypeMismatch("expected a boolean")),
        }
    }
}

/// Read access to a store, as needed by [`eval_expr`].
pub trait Store {
    fn scalar(&self, name: &str) -> Result<BigInt, EvalError>;
    fn cell(&self, name: &str, index: &BigInt) -> Result<BigInt, EvalError>;
}

impl Store for State {
    fn scalar(&self, name: &str) -> Result<BigInt, EvalError> {
        self.scalars
            .get(name)
            .map(|&v| BigInt::from(v))
            .ok_or_else(|| EvalError::UnknownVariable(name.to_string()))
    }

    fn cell(&self, name: &str, index: &BigInt) -> Result<BigInt, EvalError> {
        let arr = self
            .arrays
            .get(name)
            .ok_or_else(|| EvalError::UnknownVariable(name.to_string()))?;
        index
            .to_usize()
            .and_then(|i| arr.get(i))
            .map(|&v| BigInt::from(v))
            .ok_or_else(|| EvalError::IndexOutOfRange {
                array: name.to_string(),
                index: index.to_string(),
            })
    }
}

pub fn factorial(n: &BigInt) -> Result<BigInt, EvalError> {
    if n.is_negative() {
        return Err(EvalError::NegativeFactorial(n.to_string()));
    }
    let n = n
        .to_u64()
        .filter(|&n| n <= MAX_FACTORIAL_OPERAND)
        .ok_or_else(|| EvalError::FactorialTooLarge(n.to_string()))?;
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Ok(acc)
}

/// Exact integer division; a nonzero remainder is an error.
pub fn exact_div(a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    if b.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    if !(a % b).is_zero() {
        return Err(EvalError::InexactDivision {
            num: a.to_string(),
            den: b.to_string(),
        });
    }
    Ok(a / b)
}

/// Evaluates a program expression against a store.
pub fn eval_expr<S: Store + ?Sized>(e: &Expr, s: &S) -> Result<RtValue, EvalError> {
    Ok(match e {
        Expr::Int(n) => RtValue::Int(BigInt::from(*n)),
        Expr::Bool(b) => RtValue::Bool(*b),
        Expr::Var(n) => RtValue::Int(s.scalar(n)?),
        Expr::Index(n, idx) => {
            let i = eval_expr(idx, s)?;
            RtValue::Int(s.cell(n, i.as_int()?)?)
        }
        Expr::Unary(op, a) => {
            let v = eval_expr(a, s)?;
            match op {
                UnOp::Neg => RtValue::Int(-v.as_int()?.clone()),
                UnOp::Not => RtValue::Bool(!v.as_bool()?),
                UnOp::Fact => RtValue::Int(factorial(v.as_int()?)?),
            }
        }
        Expr::Binary(op, a, b) => {
            // Short-circuit the logical connectives.
            match op {
                BinOp::And => {
                    return Ok(RtValue::Bool(
                        eval_expr(a, s)?.as_bool()? && eval_expr(b, s)?.as_bool()?,
                    ))
                }
                BinOp::Or => {
                    return Ok(RtValue::Bool(
                        eval_expr(a, s)?.as_bool()? || eval_expr(b, s)?.as_bool()?,
                    ))
                }
                _ => {}
            }
            let l = eval_expr(a, s)?;
            let r = eval_expr(b, s)?;
            if let (BinOp::Eq | BinOp::Ne, RtValue::Bool(x), RtValue::Bool(y)) = (op, &l, &r) {
                return Ok(RtValue::Bool((x == y) == (*op == BinOp::Eq)));
            }
            let (x, y) = (l.as_int()?, r.as_int()?);
            match op {
                BinOp::Add => RtValue::Int(x + y),
                BinOp::Sub => RtValue::Int(x - y),
                BinOp::Mul => RtValue::Int(x * y),
                BinOp::Div => RtValue::Int(exact_div(x, y)?),
                BinOp::Eq => RtValue::Bool(x == y),
                BinOp::Ne => RtValue::Bool(x != y),
                BinOp::Lt => RtValue::Bool(x < y),
                BinOp::Le => RtValue::Bool(x <= y),
                BinOp::Gt => RtValue::Bool(x > y),
                BinOp::Ge => RtValue::Bool(x >= y),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fac_state(i: i64) -> State {
        let u = Universe::new(&["i"], &["fac"], 8);
        let mut s = State::zeroed(&u);
        s.scalars.insert("i".into(), i);
        s.arrays.insert("fac".into(), vec![1, 1, 2, 6, 24, 120, 720, 5040]);
        s
    }

    fn int(v: RtValue) -> i64 {
        v.as_int().unwrap().to_i64().unwrap()
    }

    #[test]
    fn first_factorial_iteration() {
        // fac(i - 1) * i with i = 1
        let e = Expr::bin(
            BinOp::Mul,
            Expr::index("fac", Expr::bin(BinOp::Sub, Expr::var("i"), Expr::Int(1))),
            Expr::var("i"),
        );
        assert_eq!(int(eval_expr(&e, &fac_state(1)).unwrap()), 1);
        assert_eq!(int(eval_expr(&Expr::Int(0), &fac_state(1)).unwrap()), 0);
    }

    #[test]
    fn factorial_quotient_is_exact() {
        let e = Expr::bin(
            BinOp::Div,
            Expr::un(UnOp::Fact, Expr::Int(4)),
            Expr::un(UnOp::Fact, Expr::Int(2)),
        );
        assert_eq!(int(eval_expr(&e, &fac_state(0)).unwrap()), 12);
    }

    #[test]
    fn eval_errors() {
        let s = fac_state(0);
        let oob = Expr::index("fac", Expr::Int(8));
        assert!(matches!(eval_expr(&oob, &s), Err(EvalError::IndexOutOfRange { .. })));
        let neg = Expr::index("fac", Expr::Int(-1));
        assert!(matches!(eval_expr(&neg, &s), Err(EvalError::IndexOutOfRange { .. })));
        let inexact = Expr::bin(BinOp::Div, Expr::Int(7), Expr::Int(2));
        assert!(matches!(eval_expr(&inexact, &s), Err(EvalError::InexactDivision { .. })));
        let negfac = Expr::un(UnOp::Fact, Expr::Int(-1));
        assert!(matches!(eval_expr(&negfac, &s), Err(EvalError::NegativeFactorial(_))));
    }

    #[test]
    fn reads_follow_occurrences() {
        let sum = Expr::bin(BinOp::Add, Expr::var("x"), Expr::var("y"));
        assert_eq!(
            reads_of(&sum),
            [ReadLoc::Scalar("x".into()), ReadLoc::Scalar("y".into())].into()
        );
        assert!(reads_of(&Expr::Int(3)).is_empty());
        let idx = Expr::bin(BinOp::Sub, Expr::var("i"), Expr::Int(1));
        let body = Expr::bin(BinOp::Mul, Expr::index("fac", idx.clone()), Expr::var("i"));
        assert_eq!(
            reads_of(&body),
            [ReadLoc::Scalar("i".into()), ReadLoc::Cell("fac".into(), idx)].into()
        );
    }

    #[test]
    fn extnat_arithmetic() {
        use ExtNat::*;
        assert_eq!(Inf + Fin(1), Inf);
        assert_eq!(Fin(0) + Fin(0), Fin(0));
        assert_eq!(Fin(7) + Fin(2), Fin(9));
        assert!(Fin(u64::MAX) < Inf);
        let samples = [Fin(0), Fin(1), Fin(3), Fin(10), Inf];
        for &a in &samples {
            assert_eq!(a + Fin(0), a);
            assert_eq!(a + Inf, Inf);
            for &b in &samples {
                assert_eq!(a + b, b + a);
                for &c in &samples {
                    assert_eq!((a + b) + c, a + (b + c));
                }
            }
        }
    }

    #[test]
    fn universe_inferred_from_use() {
        let p = Stmt::seq(
            Stmt::Assign(Lvalue::Scalar("i".into()), Expr::Int(0)),
            Stmt::Assign(Lvalue::Cell("fac".into(), Expr::Int(0)), Expr::Int(1)),
        );
        let u = Universe::of_program(&p, 8).unwrap();
        assert_eq!(u.scalars, vec!["i".to_string()]);
        assert_eq!(u.arrays, vec!["fac".to_string()]);
        assert_eq!(u.location_count(), 9);
    }
}
