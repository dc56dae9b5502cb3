use std::collections::BTreeMap;

use super::*;
use crate::ast::{NeedState, State};
use crate::parser::{parse_predicate_in, parse_program, pretty_print};
use crate::predicate::normalize;

fn scalars() -> Universe {
    Universe::new(&["x", "y"], &[], 2)
}

fn pair() -> Universe {
    Universe::new(&["y"], &["x"], 2)
}

fn lazy(src: &str, u: &Universe) -> Predicate {
    let p = parse_program(src).unwrap();
    let a = annotate(&p, &BTreeMap::new(), u).unwrap();
    // The parser appends `stop`; drop it.
    a.parts[0].1.clone()
}

fn golden(src: &str, u: &Universe, expected: &str) {
    let got = normalize(&lazy(src, u));
    let want = normalize(&parse_predicate_in(expected, u).unwrap());
    assert_eq!(got, want, "\n got: {}\nwant: {}", pretty_print(&got), pretty_print(&want));
}

#[test]
fn ok_golden() {
    golden(
        "ok",
        &scalars(),
        "x' = x /\\ y' = y /\\ t' = t /\\ need x = need x' /\\ need y = need y'",
    );
}

#[test]
fn constant_assignment_golden() {
    golden(
        "x := 3",
        &scalars(),
        "x' = 3 /\\ y' = y /\\ t' = t + if need x' then 1 else 0 fi /\\ ~need x /\\ need y = need y'",
    );
}

#[test]
fn sum_assignment_golden() {
    golden(
        "x := x + y",
        &scalars(),
        "x' = x + y /\\ y' = y /\\ t' = t + if need x' then 1 else 0 fi \
         /\\ need x = need x' /\\ need y = (need x' \\/ need y')",
    );
}

#[test]
fn cell_goldens() {
    let tail = "y' = y /\\ t' = t + if need x'(0) then 1 else 0 fi /\\ ~need x(0)";
    golden(
        "x(0) := 2",
        &pair(),
        &format!("x'(0) = 2 /\\ x'(1) = x(1) /\\ {tail} /\\ need x(1) = need x'(1) /\\ need y = need y'"),
    );
    golden(
        "x(0) := x(1)",
        &pair(),
        &format!(
            "x'(0) = x(1) /\\ x'(1) = x(1) /\\ {tail} \
             /\\ need x(1) = (need x'(0) \\/ need x'(1)) /\\ need y = need y'"
        ),
    );
    golden(
        "x(0) := y",
        &pair(),
        &format!(
            "x'(0) = y /\\ x'(1) = x(1) /\\ {tail} \
             /\\ need x(1) = need x'(1) /\\ need y = (need x'(0) \\/ need y')"
        ),
    );
}

#[test]
fn conditional_golden() {
    golden(
        "if x = 0 then y := 0 else x := 0 fi",
        &scalars(),
        "x' = if x = 0 then x else 0 fi /\\ y' = if x = 0 then 0 else y fi \
         /\\ t' = t + if x = 0 /\\ need y' then 1 else if x /= 0 /\\ need x' then 1 else 0 fi fi \
         /\\ need x = (need x' \\/ need y') /\\ need y = need y'",
    );
}

#[test]
fn runtime_index_uses_split_form() {
    let u = Universe::new(&["i"], &["fac"], 4);
    let text = pretty_print(&lazy("fac(i) := fac(i - 1) * i", &u));
    assert!(text.contains("~need fac(i)"), "{text}");
    assert!(text.contains("need fac(i - 1) = (need fac'(i) \\/ need fac'(i - 1))"), "{text}");
    assert!(text.contains("need i = (need fac'(i) \\/ need i')"), "{text}");
}

#[test]
fn print_demand_is_unconditional() {
    let u = Universe::new(&["i"], &["fac"], 4);
    let text = pretty_print(&lazy("print fac(3)", &u));
    assert!(text.contains("t' = t + 1"), "{text}");
    assert!(text.contains("need fac(3) /\\"), "{text}");
}

#[test]
fn eager_forms() {
    let u = scalars();
    let p = parse_program("x := y + 1").unwrap();
    let a = eager_annotate(&p, &BTreeMap::new(), &u).unwrap();
    let want = parse_predicate_in("x' = y + 1 /\\ y' = y /\\ t' = t + 1", &u).unwrap();
    assert_eq!(normalize(&a.parts[0].1), normalize(&want));
    let p = parse_program("ok").unwrap();
    let a = eager_annotate(&p, &BTreeMap::new(), &u).unwrap();
    let want = parse_predicate_in("x' = x /\\ y' = y /\\ t' = t", &u).unwrap();
    assert_eq!(normalize(&a.parts[0].1), normalize(&want));
}

#[test]
fn loops_need_specs() {
    let u = Universe::new(&["i"], &[], 2);
    let p = parse_program("while true do i := i + 1 od").unwrap();
    assert_eq!(annotate(&p, &BTreeMap::new(), &u), Err(AnnotateError::MissingSpec));
    let p = parse_program("while true do i := i + 1 od spec loop").unwrap();
    assert_eq!(
        annotate(&p, &BTreeMap::new(), &u),
        Err(AnnotateError::UnknownSpecName("loop".into()))
    );
    let specs = BTreeMap::from([("loop".to_string(), parse_predicate_in("t' = t + inf", &u).unwrap())]);
    let a = eager_annotate(&p, &specs, &u)
        .unwrap()
        .with_claim(parse_predicate_in("t' = t + inf", &u).unwrap());
    assert_eq!(a.obligations.len(), 2);
}

#[test]
fn universe_must_cover_program() {
    let p = parse_program("z := 1").unwrap();
    assert_eq!(
        annotate(&p, &BTreeMap::new(), &scalars()),
        Err(AnnotateError::UniverseMismatch("z".into()))
    );
}

fn needs_of(u: &Universe, pairs: &[(&str, bool)]) -> NeedState {
    let mut n = NeedState::uniform(u, false);
    for (x, b) in pairs {
        n.scalars.insert(x.to_string(), *b);
    }
    n
}

#[test]
fn dead_store_is_not_needed() {
    let u = scalars();
    let p = parse_program("x := 2; y := 3; print y; stop").unwrap();
    let s0 = State::zeroed(&u);
    let none = NeedState::uniform(&u, false);
    assert_eq!(syntactic_needs(&p, &none, &s0, &u).unwrap(), none);
    // Before `y := 3`, y is not needed either.
    let rest = parse_program("y := 3; print y; stop").unwrap();
    assert_eq!(syntactic_needs(&rest, &none, &s0, &u).unwrap(), none);
    assert_eq!(syntactic_time(&p, &none, &s0, &u).unwrap(), 2);
}

#[test]
fn needs_through_sum() {
    let u = scalars();
    let p = parse_program("x := x + y").unwrap();
    let p = p.flatten()[0].clone();
    let s0 = State::zeroed(&u);
    let post = needs_of(&u, &[("x", true)]);
    let pre = syntactic_needs(&p, &post, &s0, &u).unwrap();
    assert_eq!(pre, needs_of(&u, &[("x", true), ("y", true)]));
    let any = needs_of(&u, &[("y", true)]);
    assert_eq!(syntactic_needs(&Stmt::Ok, &any, &s0, &u).unwrap(), any);
}
