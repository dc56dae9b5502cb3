//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.
//!
//! Expected numbers are recomputed here from hand-written oracles where
//! possible; the CLI is driven as a subprocess.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use lazytime::annotator::{annotate, syntactic_needs, syntactic_time};
use lazytime::ast::{ExtNat, Location, NeedState, State, Universe};
use lazytime::exec::{build_trace, run_eager, run_lazy, DEFAULT_FUEL};
use lazytime::parser::{parse_predicate_in, parse_program};
use lazytime::predicate::{compose, eval_pred, normalize, one_point_compose, Binding, Domain, Predicate};
use lazytime::refine::crosscheck;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use common::*;

type Outcome = Result<String, String>;

fn examples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn example(name: &str) -> String {
    examples().join(name).to_string_lossy().into_owned()
}

fn lazytime(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lazytime"))
        .args(args)
        .env_remove("LAZYTIME_FUEL")
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn json(text: &str) -> Result<Value, String> {
    serde_json::from_str(text).map_err(|e| format!("bad JSON ({e}): {text}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `run --lazy --json` on an example: (time, printed, needed events).
fn lazy_run(name: &str) -> Result<(u64, Vec<i64>, Vec<u64>), String> {
    let (code, out) = lazytime(&["run", "--lazy", "--json", &example(name)])?;
    ensure(code == 0, || format!("exit {code}: {out}"))?;
    let v = json(&out)?;
    ensure(v["stability"] != "unstable", || format!("unstable run: {out}"))?;
    let time = v["time"]["fin"].as_u64().ok_or_else(|| format!("no finite time: {out}"))?;
    let printed = v["printed"].as_array().into_iter().flatten().filter_map(Value::as_i64).collect();
    let needed = v["neededEvents"].as_array().into_iter().flatten().filter_map(Value::as_u64).collect();
    Ok((time, printed, needed))
}

fn factorial(n: i64) -> i64 {
    (1..=n).product()
}

/// Demanding `fac(k)` after the factorial loop: the two initializations
/// (or just `fac(0) := 1` when `k = 0`), two events per iteration up to
/// `k`, and the print.
fn hand_lazy_time(k: u64) -> u64 {
    if k == 0 {
        1 + 1
    } else {
        1 + 1 + 2 * k + 1
    }
}

fn criterion_1() -> Outcome {
    let (time, printed, _) = lazy_run("factorial3.imp")?;
    let want = (hand_lazy_time(3), vec![factorial(3)]);
    ensure((time, printed.clone()) == want, || format!("got time {time}, printed {printed:?}; want {want:?}"))?;
    Ok(format!("time {time}, printed {printed:?}"))
}

fn criterion_2() -> Outcome {
    let (time, printed, needed) = lazy_run("factorial0.imp")?;
    ensure(time == hand_lazy_time(0) && printed == [1], || {
        format!("got time {time}, printed {printed:?}")
    })?;
    // The first event of the trace is `i := 0`.
    let p = parse_program(&std::fs::read_to_string(example("factorial0.imp")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let u = Universe::of_program(&p, 8).map_err(|e| e.to_string())?;
    let tr = build_trace(&p, &State::zeroed(&u), DEFAULT_FUEL).map_err(|e| e.to_string())?;
    let first = &tr.events[0];
    ensure(first.target == Some(Location::Scalar("i".into())), || {
        format!("event 0 is {first:?}")
    })?;
    ensure(!needed.contains(&0), || format!("i := 0 is needed: {needed:?}"))?;
    Ok(format!("time {time}, needed events {needed:?} exclude i := 0"))
}

fn criterion_3() -> Outcome {
    let prog = example("factorial3.imp");
    for fuel in [3, 4, 10, 100, 1000, 10_000] {
        let (code, out) = lazytime(&["run", "--eager", "--json", "--fuel", &fuel.to_string(), &prog])?;
        let v = json(&out)?;
        ensure(code == 3 && v["time"]["fuelExceeded"] == fuel, || {
            format!("fuel {fuel}: exit {code}, {out}")
        })?;
    }
    let (code, out) = lazytime(&[
        "check",
        "--eager",
        "--json",
        "--specs",
        &example("loop_eager.spec"),
        "--claim",
        "t' = t + inf",
        &prog,
    ])?;
    let v = json(&out)?;
    let reports = v.as_array().ok_or("check output is not a list")?;
    let all_hold = reports.iter().all(|r| r["verdict"].as_str().is_some_and(|s| s.starts_with("holds")));
    ensure(code == 0 && reports.len() == 2 && all_hold, || format!("exit {code}: {out}"))?;
    Ok("fuel exceeded at 3..10000; t' = t + inf holds".into())
}

fn criterion_4() -> Outcome {
    let xy = Universe::new(&["x", "y"], &[], 2);
    let cells = Universe::new(&["y"], &["x"], 2);
    let cell_tail = "y' = y /\\ t' = t + if need x'(0) then 1 else 0 fi /\\ ~need x(0)";
    let goldens: Vec<(&str, &Universe, String)> = vec![
        ("ok", &xy, "x' = x /\\ y' = y /\\ t' = t /\\ need x = need x' /\\ need y = need y'".into()),
        (
            "x := 3",
            &xy,
            "x' = 3 /\\ y' = y /\\ t' = t + if need x' then 1 else 0 fi /\\ ~need x /\\ need y = need y'".into(),
        ),
        (
            "x := x + y",
            &xy,
            "x' = x + y /\\ y' = y /\\ t' = t + if need x' then 1 else 0 fi \
             /\\ need x = need x' /\\ need y = (need x' \\/ need y')"
                .into(),
        ),
        (
            "x(0) := 2",
            &cells,
            format!("x'(0) = 2 /\\ x'(1) = x(1) /\\ {cell_tail} /\\ need x(1) = need x'(1) /\\ need y = need y'"),
        ),
        (
            "x(0) := x(1)",
            &cells,
            format!(
                "x'(0) = x(1) /\\ x'(1) = x(1) /\\ {cell_tail} \
                 /\\ need x(1) = (need x'(0) \\/ need x'(1)) /\\ need y = need y'"
            ),
        ),
        (
            "x(0) := y",
            &cells,
            format!(
                "x'(0) = y /\\ x'(1) = x(1) /\\ {cell_tail} \
                 /\\ need x(1) = need x'(1) /\\ need y = (need x'(0) \\/ need y')"
            ),
        ),
        (
            "if x = 0 then y := 0 else x := 0 fi",
            &xy,
            "x' = if x = 0 then x else 0 fi /\\ y' = if x = 0 then 0 else y fi \
             /\\ t' = t + if x = 0 /\\ need y' then 1 else if x /= 0 /\\ need x' then 1 else 0 fi fi \
             /\\ need x = (need x' \\/ need y') /\\ need y = need y'"
                .into(),
        ),
    ];
    let mut matched = 0;
    for (src, u, want) in &goldens {
        let p = parse_program(src).map_err(|e| e.to_string())?;
        let a = annotate(&p, &BTreeMap::new(), u).map_err(|e| e.to_string())?;
        let got = normalize(&a.parts[0].1);
        let want = normalize(&parse_predicate_in(want, u).map_err(|e| e.to_string())?);
        ensure(got == want, || format!("{src}: structural mismatch"))?;
        matched += 1;
    }
    Ok(format!("{matched}/7 goldens match"))
}

/// `check` at array bound 6: (exit code, reports by claim name).
fn check_factorial(specs: &str, claim: Option<&str>) -> Result<(i32, BTreeMap<String, Value>), String> {
    let prog = example("factorial3.imp");
    let mut args = vec!["check", "--json", "--array-bound", "6", "--samples", "10000", "--seed", "1", "--specs", specs];
    if let Some(c) = claim {
        args.extend(["--claim", c]);
    }
    args.push(&prog);
    let (code, out) = lazytime(&args)?;
    let v = json(&out)?;
    let reports = v
        .as_array()
        .ok_or_else(|| format!("exit {code}: {out}"))?
        .iter()
        .map(|r| (r["claim"].as_str().unwrap_or_default().to_string(), r.clone()))
        .collect();
    Ok((code, reports))
}

/// Holds over at least 10 000 in-range stores, cycling through every
/// combination of `i ∈ 0..=5`, the four time samples and the 2^7 final
/// need vectors.
fn holds_on_full_budget(r: &Value) -> Result<(), String> {
    let checked = r["storesChecked"].as_u64().unwrap_or(0) - r["storesSkipped"].as_u64().unwrap_or(0);
    let grid = 6 * 4 * (1 << 7);
    ensure(
        r["verdict"].as_str().is_some_and(|v| v.starts_with("holds"))
            && r["counterexample"].is_null()
            && checked >= 10_000
            && r["grid"] == grid,
        || format!("{r}"),
    )
}

fn fails_with_counterexample(r: &Value) -> Result<(), String> {
    ensure(r["verdict"] == "fails" && r["counterexample"].is_object(), || format!("{r}"))
}

fn criterion_5() -> Outcome {
    let spec = example("loop.spec");
    let (code, reports) = check_factorial(&spec, None)?;
    ensure(code == 0, || format!("exit {code}"))?;
    holds_on_full_budget(reports.get("loop").ok_or("no loop report")?)?;
    let text = std::fs::read_to_string(&spec).map_err(|e| e.to_string())?;
    let mutated = text.replacen("then 2 *", "then 1 *", 1);
    ensure(mutated != text, || "mutation site not found".into())?;
    let path = std::env::temp_dir().join(format!("lazytime-mutant-{}.spec", std::process::id()));
    std::fs::write(&path, mutated).map_err(|e| e.to_string())?;
    let r = check_factorial(&path.to_string_lossy(), None);
    let _ = std::fs::remove_file(&path);
    let (code, reports) = r?;
    ensure(code == 4, || format!("mutant exit {code}"))?;
    fails_with_counterexample(reports.get("loop").ok_or("no loop report")?)?;
    Ok("loop obligation holds on 10000 stores; factor-1 mutant refuted".into())
}

fn criterion_6() -> Outcome {
    let spec = example("loop.spec");
    let (code, reports) = check_factorial(&spec, Some("t' = t + 9"))?;
    ensure(code == 0, || format!("exit {code}"))?;
    holds_on_full_budget(reports.get("claim").ok_or("no claim report")?)?;
    let (code, reports) = check_factorial(&spec, Some("t' = t + 8"))?;
    ensure(code == 4, || format!("t+8 exit {code}"))?;
    fails_with_counterexample(reports.get("claim").ok_or("no claim report")?)?;
    Ok("t' = t + 9 holds; t' = t + 8 refuted".into())
}

/// 1000 loop-free programs that run to completion from a random store.
fn corpus(seed: u64) -> Vec<(Vec<S>, Store)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < 1000 {
        let len = rng.gen_range(1..7);
        let prog = gen_loop_free(&mut rng, len);
        let s0 = random_store(&mut rng, 0..3);
        if execute(&prog, &s0).is_ok() {
            out.push((prog, s0));
        }
    }
    out
}

fn property_a(corpus: &[(Vec<S>, Store)]) -> Result<String, String> {
    for (prog, s0) in corpus {
        let p = lib_stmt(prog);
        let eager = run_eager(&p, &s0.to_state(), DEFAULT_FUEL).map_err(|e| e.to_string())?;
        let lazy = run_lazy(&p, &s0.to_state(), DEFAULT_FUEL).map_err(|e| e.to_string())?;
        let oracle = execute(prog, s0).map_err(|_| "oracle stuck")?;
        let (Some(e), Some(l)) = (eager.time.as_extnat(), lazy.time.as_extnat()) else {
            return Err(format!("no time for {p:?}"));
        };
        ensure(e == ExtNat::Fin(oracle.steps.len() as u64), || format!("eager {e:?} for {p:?}"))?;
        ensure(l <= e, || format!("lazy {l:?} > eager {e:?} for {p:?}"))?;
    }
    Ok("(a) lazy <= eager".into())
}

fn property_b(corpus: &[(Vec<S>, Store)]) -> Result<String, String> {
    let u = universe();
    let d = Domain::new(BOUND, vec![0, 1, 2], vec![ExtNat::Fin(0), ExtNat::Inf]);
    let (mut checked, mut disagreements) = (0, 0);
    for (k, (prog, _)) in corpus.iter().enumerate() {
        let p = lib_stmt(prog);
        let a = annotate(&p, &BTreeMap::new(), &u).map_err(|e| e.to_string())?;
        let r = crosscheck(&p, &a.pred, &u, &d, 2, k as u64, DEFAULT_FUEL).map_err(|e| e.to_string())?;
        checked += r.checked;
        disagreements += r.disagreements.len();
        ensure(r.disagreements.is_empty(), || format!("{p:?}: {:?}", r.disagreements[0]))?;
    }
    ensure(checked >= 1000, || format!("only {checked} samples checked"))?;
    Ok(format!("(b) {checked} crosschecks, {disagreements} disagreements"))
}

fn property_c() -> Result<String, String> {
    let u = universe();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut programs = 0;
    while programs < 1000 {
        let len = rng.gen_range(1..8);
        let prog = gen_straight(&mut rng, len);
        let s0 = random_store(&mut rng, 0..3);
        let Ok(run) = execute(&prog, &s0) else { continue };
        programs += 1;
        let live_out: BTreeSet<Loc> = all_locations().into_iter().filter(|_| rng.gen_bool(0.3)).collect();
        let (live_in, useful) = liveness(&run, &live_out);
        let p = lib_stmt(&prog);
        let pre = s0.to_state();
        let post = need_state(&live_out);
        let got = syntactic_needs(&p, &post, &pre, &u).map_err(|e| e.to_string())?;
        ensure(got == need_state(&live_in), || format!("needs differ on {p:?} with {live_out:?}"))?;
        let t = syntactic_time(&p, &post, &pre, &u).map_err(|e| e.to_string())?;
        ensure(t == useful, || format!("time {t} vs {useful} on {p:?}"))?;
        let lazy = run_lazy(&p, &pre, DEFAULT_FUEL).map_err(|e| e.to_string())?;
        let (_, prints_only) = liveness(&run, &BTreeSet::new());
        ensure(lazy.time.as_extnat() == Some(ExtNat::Fin(prints_only)), || {
            format!("lazy {:?} vs {prints_only} on {p:?}", lazy.time)
        })?;
    }
    Ok(format!("(c) {programs} straight-line programs match liveness"))
}

/// Two-variable statements whose results stay within `{0, 1}`.
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

fn bindings(u: &Universe) -> Vec<Binding> {
    let locs = u.locations();
    let mut out = Vec::new();
    let times = [ExtNat::Fin(0), ExtNat::Fin(1)];
    let later = [ExtNat::Fin(0), ExtNat::Fin(1), ExtNat::Fin(2), ExtNat::Fin(3), ExtNat::Inf];
    for bits in 0..1u32 << (4 * locs.len()) {
        let bit = |k: usize| bits >> k & 1 == 1;
        let mut pre = State::zeroed(u);
        let mut post = State::zeroed(u);
        let mut pre_need = NeedState::uniform(u, false);
        let mut post_need = NeedState::uniform(u, false);
        for (k, loc) in locs.iter().enumerate() {
            let n = locs.len();
            pre.set(loc, bit(k) as i64);
            post.set(loc, bit(n + k) as i64);
            pre_need.set(loc, bit(2 * n + k));
            post_need.set(loc, bit(3 * n + k));
        }
        for t in times {
            for t2 in later {
                pre.time = t;
                post.time = t2;
                out.push(Binding {
                    pre: pre.clone(),
                    post: post.clone(),
                    pre_need: pre_need.clone(),
                    post_need: post_need.clone(),
                });
            }
        }
    }
    out
}

fn property_d() -> Result<String, String> {
    let u = Universe::new(&["x", "y"], &[], 1);
    let d = Domain::new(1, vec![0, 1], vec![ExtNat::Fin(0), ExtNat::Fin(1), ExtNat::Fin(2), ExtNat::Inf]);
    let preds: Vec<Predicate> = SMALL
        .iter()
        .map(|src| {
            let p = parse_program(src).map_err(|e| e.to_string())?;
            Ok(annotate(&p, &BTreeMap::new(), &u).map_err(|e| e.to_string())?.parts[0].1.clone())
        })
        .collect::<Result<_, String>>()?;
    let bs = bindings(&u);
    let (mut pairs, mut evaluated) = (0, 0);
    for (i, a) in preds.iter().enumerate() {
        for (j, b) in preds.iter().enumerate() {
            let Ok(merged) = one_point_compose(a, b) else { continue };
            pairs += 1;
            let seq = compose(a.clone(), b.clone());
            for bd in &bs {
                let want = eval_pred(&seq, bd, &d).map_err(|e| e.to_string())?;
                let got = eval_pred(&merged, bd, &d).map_err(|e| e.to_string())?;
                ensure(want == got, || format!("`{}; {}` disagree on {bd:?}", SMALL[i], SMALL[j]))?;
                evaluated += 1;
            }
        }
    }
    ensure(pairs == preds.len() * preds.len(), || {
        format!("one-point elimination applied to only {pairs} pairs")
    })?;
    Ok(format!("(d) {pairs} pairs agree on {evaluated} bindings"))
}

fn criterion_7() -> Outcome {
    let corpus = corpus(7);
    let parts = [property_a(&corpus)?, property_b(&corpus)?, property_c()?, property_d()?];
    Ok(parts.join("; "))
}

fn criterion_8() -> Outcome {
    let want = hand_lazy_time(4);
    ensure(want == 1 + 1 + 2 * 4 + 1, || "hand oracle".into())?;
    // The loop's time line with only `fac'(4)` demanded, from `i = 0`:
    // 2 × (4 − 0) = 8 for the loop.
    let u = Universe::new(&["i"], &["fac"], 6);
    let spec = std::fs::read_to_string(example("loop.spec")).map_err(|e| e.to_string())?;
    let start = spec.lines().position(|l| l.contains("t' = t +")).ok_or("no time conjunct")?;
    let mut conjunct = String::new();
    for (k, l) in spec.lines().enumerate().skip(start) {
        let l = l.trim();
        if k > start && l.starts_with("/\\") {
            break;
        }
        conjunct.push_str(l.trim_start_matches("/\\"));
        conjunct.push(' ');
    }
    let time_line = parse_predicate_in(&conjunct, &u).map_err(|e| e.to_string())?;
    let d = Domain::with_bound(6);
    let mut post_need = NeedState::uniform(&u, false);
    post_need.set(&Location::Cell("fac".into(), 4), true);
    let loop_time = |t: u64| {
        let mut post = State::zeroed(&u);
        post.time = ExtNat::Fin(t);
        let b = Binding {
            pre: State::zeroed(&u),
            post,
            pre_need: NeedState::uniform(&u, false),
            post_need: post_need.clone(),
        };
        eval_pred(&time_line, &b, &d).map_err(|e| e.to_string())
    };
    ensure(loop_time(8)? && !loop_time(7)? && !loop_time(9)?, || "loop time is not 8".into())?;
    let (time, printed, _) = lazy_run("factorial4.imp")?;
    ensure(time == want && time == 1 + 1 + 8 + 1 && printed == [factorial(4)], || {
        format!("got time {time}, printed {printed:?}")
    })?;
    Ok(format!("time {time} = 1 + 1 + 8 + 1, printed {printed:?}"))
}

fn main() {
    let criteria: [(fn() -> Outcome, Duration); 8] = [
        (criterion_1, Duration::from_secs(1)),
        (criterion_2, Duration::from_secs(1)),
        (criterion_3, Duration::from_secs(10)),
        (criterion_4, Duration::from_secs(1)),
        (criterion_5, Duration::from_secs(60)),
        (criterion_6, Duration::from_secs(60)),
        (criterion_7, Duration::from_secs(120)),
        (criterion_8, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (k, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = run();
        let took = start.elapsed();
        let r = r.and_then(|msg| {
            ensure(took <= *budget, || format!("{msg}; took {took:.2?}, budget {budget:?}"))?;
            Ok(msg)
        });
        match r {
            Ok(msg) => println!("criterion {}: PASS ({took:.2?}) {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL ({took:.2?}) {msg}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
