use std::collections::BTreeMap;

use super::*;
use crate::annotator::{annotate, eager_annotate};
use crate::ast::Universe;
use crate::exec::DEFAULT_FUEL;
use crate::parser::{parse_predicate_in, parse_program, parse_spec_in};
use crate::predicate::eval_pred;

const FACTORIAL: &str = include_str!("../../examples/factorial3.imp");
const LOOP: &str = include_str!("../../examples/loop.spec");

fn xy() -> Universe {
    Universe::new(&["x", "y"], &[], 1)
}

fn small() -> Domain {
    Domain::new(1, vec![-1, 0, 1, 2], vec![ExtNat::Fin(0), ExtNat::Fin(1), ExtNat::Inf])
}

fn sampled(samples: u64) -> Strategy {
    Strategy::Sampled { samples, seed: 7 }
}

#[test]
fn assignment_implies_its_consequence() {
    let u = xy();
    let p = parse_program("x := y + 1").unwrap();
    let rhs = eager_annotate(&p, &BTreeMap::new(), &u).unwrap().parts[0].1.clone();
    let lhs = parse_predicate_in("x' > y", &u).unwrap();
    let r = check_refinement("c", &lhs, &rhs, &u, &small(), Strategy::Exhaustive).unwrap();
    assert_eq!(r.verdict, Verdict::HoldsExhaustive);
    assert_eq!(r.stores, 4 * 4 * 3);
    let lhs = parse_predicate_in("x' > y + 1", &u).unwrap();
    let r = check_refinement("c", &lhs, &rhs, &u, &small(), Strategy::Exhaustive).unwrap();
    assert_eq!(r.verdict, Verdict::Fails);
    // Minimized: both initial values zeroed, time zero.
    let b = r.counterexample.unwrap();
    assert_eq!(b.pre.scalars["y"], 0);
    assert_eq!(b.pre.time, ExtNat::ZERO);
    assert!(eval_pred(&rhs, &b, &small()).unwrap());
    assert!(!eval_pred(&lhs, &b, &small()).unwrap());
}

#[test]
fn weakest_specification() {
    let u = xy();
    let rhs = parse_predicate_in("x' = 2 * x /\\ t' = t + 5", &u).unwrap();
    let r = check_refinement("c", &Predicate::tt(), &rhs, &u, &small(), Strategy::default()).unwrap();
    assert!(r.holds());
}

#[test]
fn exhaustive_refuses_large_domains() {
    let u = Universe::new(&["i"], &["fac"], 8);
    let d = Domain::with_bound(8);
    let e = check_refinement("c", &Predicate::tt(), &Predicate::tt(), &u, &d, Strategy::Exhaustive);
    assert!(matches!(e, Err(RefineError::DomainTooLarge { .. })));
}

#[test]
fn specialization() {
    let u = xy();
    let d = small();
    let strong = parse_predicate_in("x' = 1 /\\ t' = t + 9 /\\ ~need x", &u).unwrap();
    let weak = parse_predicate_in("t' = t + 9", &u).unwrap();
    assert!(specialize_check(&strong, &weak, &u, &d, Strategy::Exhaustive).unwrap().holds());
    assert!(specialize_check(&weak, &weak, &u, &d, Strategy::Exhaustive).unwrap().holds());
    let stronger = parse_predicate_in("t' = t + 9 /\\ ~need x", &u).unwrap();
    assert!(!specialize_check(&weak, &stronger, &u, &d, Strategy::Exhaustive).unwrap().holds());
}

fn factorial_setup(u: &Universe) -> (crate::ast::Stmt, BTreeMap<String, Predicate>) {
    (parse_program(FACTORIAL).unwrap(), parse_spec_in(LOOP, u).unwrap())
}

#[test]
fn factorial_claims() {
    let u = Universe::new(&["i"], &["fac"], 6);
    let d = Domain::with_bound(6);
    let (p, specs) = factorial_setup(&u);
    let a = annotate(&p, &specs, &u).unwrap();
    let good = a.clone().with_claim(parse_predicate_in("t' = t + 9", &u).unwrap());
    let reports = check_obligations(&good, &u, &d, sampled(200)).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(RefinementReport::holds), "{reports:?}");
    let bad = a.with_claim(parse_predicate_in("t' = t + 8", &u).unwrap());
    let reports = check_obligations(&bad, &u, &d, sampled(200)).unwrap();
    assert!(reports[0].holds());
    assert_eq!(reports[1].verdict, Verdict::Fails);
}

#[test]
fn eager_factorial_claim() {
    let u = Universe::new(&["i"], &["fac"], 6);
    let d = Domain::with_bound(6);
    let p = parse_program(FACTORIAL).unwrap();
    let specs = parse_spec_in("loop = t' = t + inf", &u).unwrap();
    let a = eager_annotate(&p, &specs, &u)
        .unwrap()
        .with_claim(parse_predicate_in("t' = t + inf", &u).unwrap());
    let reports = check_obligations(&a, &u, &d, sampled(100)).unwrap();
    assert!(reports.iter().all(RefinementReport::holds), "{reports:?}");
}

#[test]
fn sampling_is_reproducible() {
    let u = Universe::new(&["i"], &["fac"], 6);
    let d = Domain::with_bound(6);
    let (p, specs) = factorial_setup(&u);
    let a = annotate(&p, &specs, &u).unwrap();
    let o = &a.obligations[0];
    let run = || check_refinement("loop", &o.lhs, &o.rhs, &u, &d, sampled(60)).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn crosscheck_factorial() {
    let u = Universe::new(&["i"], &["fac"], 6);
    let d = Domain::with_bound(6);
    let (p, specs) = factorial_setup(&u);
    let a = annotate(&p, &specs, &u).unwrap();
    let r = crosscheck(&p, &a.pred, &u, &d, 40, 3, DEFAULT_FUEL).unwrap();
    assert!(r.checked > 0);
    assert!(r.disagreements.is_empty(), "{:?}", r.disagreements);
}

#[test]
fn crosscheck_conditional() {
    let u = Universe::new(&["x", "y", "z"], &[], 1);
    let d = Domain::with_bound(1);
    let p = parse_program("if x = 0 then y := 1 else y := z fi; print y; x := y + z; stop").unwrap();
    let a = annotate(&p, &BTreeMap::new(), &u).unwrap();
    let r = crosscheck(&p, &a.pred, &u, &d, 60, 5, 100).unwrap();
    assert_eq!(r.checked, 60);
    assert!(r.disagreements.is_empty(), "{:?}", r.disagreements);
}
