//! Random loop-free programs over scalars `x y z` and array `a(0..3)`, with
//! an interpreter and a backward liveness analysis that share no code with
//! the library beyond the final conversion to its AST.

#![allow(dead_code)]

use std::collections::BTreeSet;

use lazytime::ast::{BinOp, Expr, Location, Lvalue, NeedState, State, Stmt, Universe};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SCALARS: [&str; 3] = ["x", "y", "z"];
pub const ARRAY: &str = "a";
pub const BOUND: usize = 3;

pub fn universe() -> Universe {
    Universe::new(&SCALARS, &[ARRAY], BOUND)
}

#[derive(Debug, Clone)]
pub enum E {
    Int(i64),
    Var(usize),
    Cell(Box<E>),
    Add(Box<E>, Box<E>),
    Sub(Box<E>, Box<E>),
    Mul(Box<E>, Box<E>),
}

#[derive(Debug, Clone)]
pub enum S {
    Set(usize, E),
    SetCell(E, E),
    Print(E),
    /// `if l = r then .. else .. fi`
    If(E, E, Vec<S>, Vec<S>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Loc {
    Var(usize),
    Cell(usize),
}

fn gen_index(rng: &mut ChaCha8Rng) -> E {
    if rng.gen_bool(0.6) {
        E::Int(rng.gen_range(0..BOUND as i64))
    } else {
        E::Var(rng.gen_range(0..SCALARS.len()))
    }
}

pub fn gen_expr(rng: &mut ChaCha8Rng, depth: u32) -> E {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => E::Int(rng.gen_range(0..3)),
            1 => E::Var(rng.gen_range(0..SCALARS.len())),
            _ => E::Cell(Box::new(gen_index(rng))),
        };
    }
    let a = Box::new(gen_expr(rng, depth - 1));
    let b = Box::new(gen_expr(rng, depth - 1));
    match rng.gen_range(0..3) {
        0 => E::Add(a, b),
        1 => E::Sub(a, b),
        _ => E::Mul(a, b),
    }
}

fn gen_simple(rng: &mut ChaCha8Rng) -> S {
    match rng.gen_range(0..6) {
        0 => S::Print(gen_expr(rng, 2)),
        1 | 2 => S::SetCell(gen_index(rng), gen_expr(rng, 2)),
        _ => S::Set(rng.gen_range(0..SCALARS.len()), gen_expr(rng, 2)),
    }
}

/// Assignments and prints only.
pub fn gen_straight(rng: &mut ChaCha8Rng, len: usize) -> Vec<S> {
    (0..len).map(|_| gen_simple(rng)).collect()
}

/// Also conditionals, nested at most once.
pub fn gen_loop_free(rng: &mut ChaCha8Rng, len: usize) -> Vec<S> {
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.25) {
                let l = gen_expr(rng, 1);
                let r = gen_expr(rng, 1);
                let (na, nb) = (rng.gen_range(0..3), rng.gen_range(0..3));
                let a = gen_straight(rng, na);
                let b = gen_straight(rng, nb);
                S::If(l, r, a, b)
            } else {
                gen_simple(rng)
            }
        })
        .collect()
}

pub fn random_store(rng: &mut ChaCha8Rng, values: std::ops::Range<i64>) -> Store {
    Store {
        vars: (0..SCALARS.len()).map(|_| rng.gen_range(values.clone())).collect(),
        cells: (0..BOUND).map(|_| rng.gen_range(values.clone())).collect(),
    }
}

// ---- conversion --------------------------------------------------------

fn lib_expr(e: &E) -> Expr {
    let bin = |op, a: &E, b: &E| Expr::bin(op, lib_expr(a), lib_expr(b));
    match e {
        E::Int(n) => Expr::Int(*n),
        E::Var(k) => Expr::var(SCALARS[*k]),
        E::Cell(i) => Expr::index(ARRAY, lib_expr(i)),
        E::Add(a, b) => bin(BinOp::Add, a, b),
        E::Sub(a, b) => bin(BinOp::Sub, a, b),
        E::Mul(a, b) => bin(BinOp::Mul, a, b),
    }
}

pub fn lib_stmt(ss: &[S]) -> Stmt {
    Stmt::seq_all(
        ss.iter()
            .map(|s| match s {
                S::Set(k, e) => Stmt::Assign(Lvalue::Scalar(SCALARS[*k].to_string()), lib_expr(e)),
                S::SetCell(i, e) => Stmt::Assign(Lvalue::Cell(ARRAY.to_string(), lib_expr(i)), lib_expr(e)),
                S::Print(e) => Stmt::Print(lib_expr(e)),
                S::If(l, r, a, b) => Stmt::If(
                    Expr::bin(BinOp::Eq, lib_expr(l), lib_expr(r)),
                    Box::new(lib_stmt(a)),
                    Box::new(lib_stmt(b)),
                ),
            })
            .collect(),
    )
}

pub fn lib_location(l: Loc) -> Location {
    match l {
        Loc::Var(k) => Location::Scalar(SCALARS[k].to_string()),
        Loc::Cell(i) => Location::Cell(ARRAY.to_string(), i as i64),
    }
}

// ---- interpreter -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Store {
    pub vars: Vec<i64>,
    pub cells: Vec<i64>,
}

impl Store {
    pub fn to_state(&self) -> State {
        let mut s = State::zeroed(&universe());
        for (k, v) in self.vars.iter().enumerate() {
            s.set(&lib_location(Loc::Var(k)), *v);
        }
        for (i, v) in self.cells.iter().enumerate() {
            s.set(&lib_location(Loc::Cell(i)), *v);
        }
        s
    }

    fn get(&self, l: Loc) -> i64 {
        match l {
            Loc::Var(k) => self.vars[k],
            Loc::Cell(i) => self.cells[i],
        }
    }
}

/// Out-of-range index or overflow.
#[derive(Debug)]
pub struct Stuck;

fn cell(i: i64) -> Result<Loc, Stuck> {
    usize::try_from(i).ok().filter(|&i| i < BOUND).map(Loc::Cell).ok_or(Stuck)
}

/// Value of `e` and the locations it reads.
fn eval(e: &E, s: &Store, reads: &mut BTreeSet<Loc>) -> Result<i64, Stuck> {
    Ok(match e {
        E::Int(n) => *n,
        E::Var(k) => {
            reads.insert(Loc::Var(*k));
            s.vars[*k]
        }
        E::Cell(i) => {
            let l = cell(eval(i, s, reads)?)?;
            reads.insert(l);
            s.get(l)
        }
        E::Add(a, b) => eval(a, s, reads)?.checked_add(eval(b, s, reads)?).ok_or(Stuck)?,
        E::Sub(a, b) => eval(a, s, reads)?.checked_sub(eval(b, s, reads)?).ok_or(Stuck)?,
        E::Mul(a, b) => eval(a, s, reads)?.checked_mul(eval(b, s, reads)?).ok_or(Stuck)?,
    })
}

/// One executed assignment or print, with its concrete locations.
#[derive(Debug, Clone)]
pub struct Step {
    pub target: Option<Loc>,
    pub reads: BTreeSet<Loc>,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub steps: Vec<Step>,
    pub printed: Vec<i64>,
    pub store: Store,
}

pub fn execute(ss: &[S], s0: &Store) -> Result<Run, Stuck> {
    let mut run = Run {
        steps: Vec::new(),
        printed: Vec::new(),
        store: s0.clone(),
    };
    exec_into(ss, &mut run)?;
    Ok(run)
}

fn exec_into(ss: &[S], run: &mut Run) -> Result<(), Stuck> {
    for s in ss {
        let mut reads = BTreeSet::new();
        match s {
            S::Set(k, e) => {
                let v = eval(e, &run.store, &mut reads)?;
                run.store.vars[*k] = v;
                run.steps.push(Step {
                    target: Some(Loc::Var(*k)),
                    reads,
                });
            }
            S::SetCell(i, e) => {
                let l = cell(eval(i, &run.store, &mut reads)?)?;
                let v = eval(e, &run.store, &mut reads)?;
                if let Loc::Cell(i) = l {
                    run.store.cells[i] = v;
                }
                run.steps.push(Step { target: Some(l), reads });
            }
            S::Print(e) => {
                let v = eval(e, &run.store, &mut reads)?;
                run.printed.push(v);
                run.steps.push(Step { target: None, reads });
            }
            S::If(l, r, a, b) => {
                let mut ignored = BTreeSet::new();
                let c = eval(l, &run.store, &mut ignored)? == eval(r, &run.store, &mut ignored)?;
                exec_into(if c { a } else { b }, run)?;
            }
        }
    }
    Ok(())
}

/// Backward liveness over an executed straight-line run, counting an
/// assignment only when its target is live after it: the locations live
/// before the run and the number of steps that contribute.
pub fn liveness(run: &Run, live_out: &BTreeSet<Loc>) -> (BTreeSet<Loc>, u64) {
    let mut live = live_out.clone();
    let mut useful = 0;
    for step in run.steps.iter().rev() {
        match step.target {
            None => {
                useful += 1;
                live.extend(step.reads.iter().copied());
            }
            Some(t) => {
                if live.remove(&t) {
                    useful += 1;
                    live.extend(step.reads.iter().copied());
                }
            }
        }
    }
    (live, useful)
}

pub fn all_locations() -> Vec<Loc> {
    (0..SCALARS.len()).map(Loc::Var).chain((0..BOUND).map(Loc::Cell)).collect()
}

pub fn need_state(live: &BTreeSet<Loc>) -> NeedState {
    let mut n = NeedState::uniform(&universe(), false);
    for l in live {
        n.set(&lib_location(*l), true);
    }
    n
}
