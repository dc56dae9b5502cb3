//! Invariants over randomly generated programs and predicates.

mod common;

use std::collections::BTreeMap;

use lazytime::annotator::{annotate, syntactic_time};
use lazytime::ast::{reads_of, ExtNat, ReadLoc, Stmt, Universe};
use lazytime::exec::{run_eager, run_lazy, DEFAULT_FUEL};
use lazytime::parser::{parse_predicate_in, parse_program, pretty_print};
use lazytime::predicate::{compose, eval_pred, normalize, one_point_compose, Binding, Domain, Predicate};
use lazytime::refine::{check_refinement, Strategy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn with_stop(p: Stmt) -> Stmt {
    Stmt::seq(p, Stmt::Stop)
}

fn lazy_annotation(p: &Stmt, u: &Universe) -> Predicate {
    annotate(p, &BTreeMap::new(), u).unwrap().pred
}

fn wide() -> Domain {
    Domain::new(BOUND, (-3..=3).collect(), vec![ExtNat::Fin(0), ExtNat::Fin(1), ExtNat::Inf])
}

/// A binding the straight-line `prog` admits (values from the oracle
/// interpreter, needs and time from the liveness oracle), or none when it
/// gets stuck.
fn consistent(r: &mut ChaCha8Rng, prog: &[S]) -> Option<Binding> {
    let s0 = random_store(r, 0..3);
    let run = execute(prog, &s0).ok()?;
    let live_out = all_locations().into_iter().filter(|_| r.gen_bool(0.4)).collect();
    let (live_in, useful) = liveness(&run, &live_out);
    let mut b = Binding {
        pre: s0.to_state(),
        post: run.store.to_state(),
        pre_need: need_state(&live_in),
        post_need: need_state(&live_out),
    };
    b.post.time = ExtNat::Fin(useful);
    Some(b)
}

/// Changes one final value, one need, or the final time.
fn perturb(r: &mut ChaCha8Rng, mut b: Binding) -> Binding {
    let locs = universe().locations();
    let loc = &locs[r.gen_range(0..locs.len())];
    match r.gen_range(0..4) {
        0 => {
            let v = b.post.get(loc).unwrap_or(0);
            b.post.set(loc, v + 1);
        }
        1 => {
            let n = b.pre_need.get(loc).unwrap_or(false);
            b.pre_need.set(loc, !n);
        }
        2 => {
            let n = b.post_need.get(loc).unwrap_or(false);
            b.post_need.set(loc, !n);
        }
        _ => {
            if let ExtNat::Fin(t) = b.post.time {
                b.post.time = ExtNat::Fin(t + 1);
            }
        }
    }
    b
}

/// Admitted bindings and their perturbations; asserts the former hold.
fn bindings_for(r: &mut ChaCha8Rng, prog: &[S]) -> Vec<Binding> {
    let a = lazy_annotation(&lib_stmt(prog), &universe());
    let mut out = Vec::new();
    for _ in 0..10 {
        if let Some(b) = consistent(r, prog) {
            assert_eq!(eval_pred(&a, &b, &wide()).ok(), Some(true), "{b:?}");
            out.push(perturb(r, b.clone()));
            out.push(b);
        }
    }
    out
}

/// `x y` statements closed over `{0, 1}`.
const SMALL: [&str; 9] = [
    "ok",
    "x := 1",
    "y := 0",
    "x := y",
    "y := x",
    "x := 1 - x",
    "x := x * y",
    "print x",
    "if x = 0 then y := 1 else x := 0 fi",
];

fn small_universe() -> Universe {
    Universe::new(&["x", "y"], &[], 1)
}

fn small(k: usize) -> Predicate {
    let u = small_universe();
    annotate(&parse_program(SMALL[k]).unwrap(), &BTreeMap::new(), &u).unwrap().parts[0].1.clone()
}

fn oracle_reads(e: &E, out: &mut Vec<ReadLoc>) {
    match e {
        E::Int(_) => {}
        E::Var(k) => out.push(ReadLoc::Scalar(SCALARS[*k].to_string())),
        E::Cell(i) => {
            let Stmt::Assign(_, idx) = lib_stmt(&[S::Set(0, (**i).clone())]) else { unreachable!() };
            out.push(ReadLoc::Cell(ARRAY.to_string(), idx));
            oracle_reads(i, out);
        }
        E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) => {
            oracle_reads(a, out);
            oracle_reads(b, out);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn program_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.gen_range(1..6);
        let p = with_stop(lib_stmt(&gen_loop_free(&mut r, len)));
        let text = pretty_print(&p);
        let back = parse_program(&text).unwrap();
        prop_assert_eq!(pretty_print(&back), text);
        prop_assert_eq!(back.flatten(), p.flatten());
    }

    #[test]
    fn annotation_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.gen_range(1..4);
        let u = universe();
        let p = lib_stmt(&gen_loop_free(&mut r, len));
        for (_, part) in annotate(&p, &BTreeMap::new(), &u).unwrap().parts {
            let back = parse_predicate_in(&pretty_print(&part), &u).unwrap();
            prop_assert_eq!(normalize(&back), normalize(&part));
        }
    }

    #[test]
    fn normalize_preserves_meaning(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.gen_range(1..4);
        let prog = gen_straight(&mut r, len);
        let a = lazy_annotation(&lib_stmt(&prog), &universe());
        let n = normalize(&a);
        prop_assert_eq!(normalize(&n), n.clone());
        for b in bindings_for(&mut r, &prog) {
            prop_assert_eq!(eval_pred(&a, &b, &wide()).ok(), eval_pred(&n, &b, &wide()).ok());
        }
    }

    #[test]
    fn ok_is_a_unit_of_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prog = gen_straight(&mut r, 1);
        let p = lazy_annotation(&lib_stmt(&prog), &universe());
        let ok = lazy_annotation(&Stmt::Ok, &universe());
        for b in bindings_for(&mut r, &prog) {
            let want = eval_pred(&p, &b, &wide()).unwrap();
            prop_assert_eq!(eval_pred(&compose(ok.clone(), p.clone()), &b, &wide()).unwrap(), want);
            prop_assert_eq!(eval_pred(&compose(p.clone(), ok.clone()), &b, &wide()).unwrap(), want);
        }
    }

    #[test]
    fn composition_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prog = gen_straight(&mut r, 3);
        let [a, b, c] = [0, 1, 2].map(|k| lazy_annotation(&lib_stmt(&prog[k..=k]), &universe()));
        let left = compose(compose(a.clone(), b.clone()), c.clone());
        let right = compose(a, compose(b, c));
        for bd in bindings_for(&mut r, &prog) {
            prop_assert_eq!(eval_pred(&left, &bd, &wide()).ok(), eval_pred(&right, &bd, &wide()).ok());
        }
    }

    #[test]
    fn one_point_agrees_with_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prog = gen_straight(&mut r, 2);
        let [a, b] = [0, 1].map(|k| lazy_annotation(&lib_stmt(&prog[k..=k]), &universe()));
        let m = one_point_compose(&a, &b);
        prop_assume!(m.is_ok());
        let (m, seq) = (m.unwrap(), compose(a, b));
        for bd in bindings_for(&mut r, &prog) {
            prop_assert_eq!(eval_pred(&m, &bd, &wide()).ok(), eval_pred(&seq, &bd, &wide()).ok());
        }
    }

    #[test]
    fn reads_match_a_syntactic_walk(seed in any::<u64>()) {
        let mut r = rng(seed);
        let e = gen_expr(&mut r, 3);
        let mut want = Vec::new();
        oracle_reads(&e, &mut want);
        want.sort();
        want.dedup();
        let Stmt::Print(lib) = lib_stmt(&[S::Print(e)]) else { unreachable!() };
        prop_assert_eq!(reads_of(&lib).into_iter().collect::<Vec<_>>(), want);
    }

    /// The annotation admits exactly the oracle's needs and time.
    #[test]
    fn annotation_matches_liveness(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = universe();
        let d = Domain::new(BOUND, (-50..=50).collect(), vec![ExtNat::Fin(0), ExtNat::Inf]);
        let len = r.gen_range(1..5);
        let prog = gen_straight(&mut r, len);
        let s0 = random_store(&mut r, 0..3);
        let Ok(run) = execute(&prog, &s0) else { return Ok(()) };
        let live_out = all_locations().into_iter().filter(|_| r.gen_bool(0.4)).collect();
        let (live_in, useful) = liveness(&run, &live_out);
        let p = lib_stmt(&prog);
        let a = lazy_annotation(&p, &u);
        let mut b = Binding {
            pre: s0.to_state(),
            post: run.store.to_state(),
            pre_need: need_state(&live_in),
            post_need: need_state(&live_out),
        };
        b.post.time = ExtNat::Fin(useful);
        prop_assert!(eval_pred(&a, &b, &d).unwrap());
        prop_assert_eq!(syntactic_time(&p, &b.post_need, &b.pre, &u).unwrap(), useful);
        b.post.time = ExtNat::Fin(useful + 1);
        prop_assert!(!eval_pred(&a, &b, &d).unwrap());
    }

    /// Laziness changes cost, not results.
    #[test]
    fn lazy_execution_is_sound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = r.gen_range(1..7);
        let prog = gen_loop_free(&mut r, len);
        let s0 = random_store(&mut r, 0..3);
        let Ok(run) = execute(&prog, &s0) else { return Ok(()) };
        let p = lib_stmt(&prog);
        let eager = run_eager(&p, &s0.to_state(), DEFAULT_FUEL).unwrap();
        let lazy = run_lazy(&p, &s0.to_state(), DEFAULT_FUEL).unwrap();
        let printed: Vec<String> = run.printed.iter().map(ToString::to_string).collect();
        let shown = |v: &[num_bigint::BigInt]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        prop_assert_eq!(shown(&eager.printed), printed.clone());
        prop_assert_eq!(shown(&lazy.printed), printed);
        prop_assert!(lazy.time.as_extnat() <= eager.time.as_extnat());
        prop_assert_eq!(lazy.final_store, eager.final_store);
    }

    #[test]
    fn run_report_json_shape(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prog = gen_loop_free(&mut r, 4);
        let s0 = random_store(&mut r, 0..3);
        let Ok(rep) = run_lazy(&lib_stmt(&prog), &s0.to_state(), DEFAULT_FUEL) else { return Ok(()) };
        let j = rep.to_json();
        let obj = j.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        prop_assert_eq!(keys, vec!["mode", "neededEvents", "printed", "stability", "time"]);
        prop_assert_eq!(&j["mode"], "lazy");
        prop_assert!(j["time"]["fin"].is_u64());
        prop_assert!(j["printed"].as_array().unwrap().iter().all(|v| v.is_i64() || v.is_string()));
        prop_assert!(["exact", "fuel-stable", "unstable"].contains(&j["stability"].as_str().unwrap()));
        prop_assert_eq!(j["neededEvents"].as_array().unwrap().len() as u64, j["time"]["fin"].as_u64().unwrap());
    }
}

const SPECS: [&str; 7] = [
    "true",
    "t' >= t",
    "t' >= t + 1",
    "t' = t + 1",
    "x' = x",
    "x' = x /\\ t' = t + 1",
    "t' = t + if need x' then 1 else 0 fi",
];

fn spec(k: usize) -> Predicate {
    let u = small_universe();
    if k < SPECS.len() {
        parse_predicate_in(SPECS[k], &u).unwrap()
    } else {
        small(k - SPECS.len())
    }
}

fn refines(a: &Predicate, b: &Predicate) -> bool {
    let d = Domain::new(1, vec![-1, 0, 1, 2], vec![ExtNat::Fin(0), ExtNat::Fin(1), ExtNat::Inf]);
    check_refinement("p", a, b, &small_universe(), &d, Strategy::Exhaustive)
        .unwrap()
        .holds()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_is_reflexive(k in 0..SPECS.len() + SMALL.len()) {
        prop_assert!(refines(&spec(k), &spec(k)));
    }
}

#[test]
fn refinement_is_transitive() {
    let n = SPECS.len() + SMALL.len();
    let ps: Vec<Predicate> = (0..n).map(spec).collect();
    let table: Vec<Vec<bool>> = ps.iter().map(|a| ps.iter().map(|b| refines(a, b)).collect()).collect();
    let mut chains = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if table[i][j] && table[j][k] && i != j && j != k {
                    chains += 1;
                    assert!(table[i][k], "{} <= {} <= {}", i, j, k);
                }
            }
        }
    }
    assert!(chains > 10, "only {chains} nontrivial chains");
}
