//! The `lazytime` command line.
//!
//! Exit codes: 0 success; 1 parse, universe or runtime error; 2 unstable
//! lazy result or crosscheck disagreement; 3 eager run out of fuel; 4 a
//! refinement obligation fails.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::annotator::{annotate, eager_annotate, AnnotateError, Annotation};
use crate::ast::{NeedState, State, Stmt, Universe, UniverseError, DEFAULT_ARRAY_BOUND};
use crate::exec::{run_eager, run_lazy, ExecError, ExecReport, Stability, TimeReport, DEFAULT_FUEL};
use crate::parser::{parse_predicate, parse_predicate_in, parse_program_with_warnings, parse_spec, parse_spec_in, pretty_print, ParseError};
use crate::predicate::{Binding, Domain, Predicate};
use crate::refine::{check_obligations, crosscheck, RefineError, RefinementReport, Strategy, Verdict, DEFAULT_SAMPLES, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_FUEL: i32 = 3;
pub const EXIT_REFUTED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lazytime", version, about = "Lazy and eager timing of imperative programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a program and report its time.
    Run(RunArgs),
    /// Print the timing and need predicates of a program.
    Annotate(AnnotateArgs),
    /// Check loop specifications and an optional claim by bounded enumeration.
    Check(CheckArgs),
    /// Compare lazy execution against the annotation's predicted timing.
    Crosscheck(CrosscheckArgs),
}

#[derive(Debug, Args)]
struct Common {
    program: PathBuf,
    /// Length of the modeled prefix of every array.
    #[arg(long, default_value_t = DEFAULT_ARRAY_BOUND)]
    array_bound: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct Fuel {
    /// Maximum number of assignments and prints per run.
    #[arg(long, env = "LAZYTIME_FUEL", default_value_t = DEFAULT_FUEL)]
    fuel: u64,
}

#[derive(Debug, Args)]
struct ModeFlags {
    #[arg(long, conflicts_with = "lazy")]
    eager: bool,
    /// The default.
    #[arg(long)]
    lazy: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    mode: ModeFlags,
    #[command(flatten)]
    fuel: Fuel,
}

#[derive(Debug, Args)]
struct AnnotateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    mode: ModeFlags,
    #[arg(long)]
    specs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    mode: ModeFlags,
    #[arg(long)]
    specs: Option<PathBuf>,
    /// A predicate the whole program must refine, such as "t' = t + 9".
    #[arg(long)]
    claim: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Fail instead of sampling when the domain is too large.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Debug, Args)]
struct CrosscheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    specs: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    fuel: Fuel,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("claim:{0}")]
    Claim(#[source] ParseError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Refine(#[from] RefineError),
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out, err),
        Command::Annotate(a) => cmd_annotate(&a, out, err),
        Command::Check(a) => cmd_check(&a, out, err),
        Command::Crosscheck(a) => cmd_crosscheck(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

struct Loaded {
    program: Stmt,
    specs: BTreeMap<String, Predicate>,
    u: Universe,
}

/// Parses the program and specifications; the universe covers both.
fn load(common: &Common, specs: Option<&Path>, claim: Option<&str>, err: &mut dyn Write) -> Result<Loaded, CliError> {
    let path = common.program.display().to_string();
    let parsed = parse_program_with_warnings(&read(&common.program)?)
        .map_err(|source| CliError::Parse { path: path.clone(), source })?;
    for w in &parsed.warnings {
        let _ = writeln!(err, "{path}:{w}");
    }
    let mut u = Universe::of_program(&parsed.program, common.array_bound)?;
    let spec_text = specs.map(read).transpose()?;
    let spec_path = specs.map(|p| p.display().to_string()).unwrap_or_default();
    let mut extra = Vec::new();
    if let Some(text) = &spec_text {
        let loose = parse_spec(text).map_err(|source| CliError::Parse {
            path: spec_path.clone(),
            source,
        })?;
        extra.extend(loose.into_values());
    }
    if let Some(c) = claim {
        extra.push(parse_predicate(c).map_err(CliError::Claim)?);
    }
    for p in &extra {
        let mut scalars = Vec::new();
        let mut arrays = Vec::new();
        for (name, indexed) in p.variables() {
            if indexed {
                arrays.push(name);
            } else {
                scalars.push(name);
            }
        }
        let s: Vec<&str> = scalars.iter().map(String::as_str).collect();
        let a: Vec<&str> = arrays.iter().map(String::as_str).collect();
        u = u.merge(&Universe::new(&s, &a, common.array_bound))?;
    }
    let specs = match &spec_text {
        Some(text) => parse_spec_in(text, &u).map_err(|source| CliError::Parse { path: spec_path, source })?,
        None => BTreeMap::new(),
    };
    Ok(Loaded {
        program: parsed.program,
        specs,
        u,
    })
}

fn annotation(l: &Loaded, eager: bool) -> Result<Annotation, AnnotateError> {
    if eager {
        eager_annotate(&l.program, &l.specs, &l.u)
    } else {
        annotate(&l.program, &l.specs, &l.u)
    }
}

fn emit(out: &mut dyn Write, text: &str) {
    let _ = out.write_all(text.as_bytes());
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let l = load(&a.common, None, None, err)?;
    let s0 = State::zeroed(&l.u);
    let report = if a.mode.eager {
        run_eager(&l.program, &s0, a.fuel.fuel)?
    } else {
        run_lazy(&l.program, &s0, a.fuel.fuel)?
    };
    if a.common.json {
        emit(out, &format!("{}\n", report.to_json()));
    } else {
        emit(out, &run_text(&report));
    }
    Ok(match (report.time, report.stability) {
        (TimeReport::FuelExceeded(_), _) => EXIT_FUEL,
        (_, Some(Stability::Unstable)) => EXIT_UNSTABLE,
        _ => EXIT_OK,
    })
}

fn run_text(r: &ExecReport) -> String {
    let mut s = String::new();
    let mode = if r.stability.is_some() { "lazy" } else { "eager" };
    let _ = writeln!(s, "mode: {mode}");
    let _ = match r.time {
        TimeReport::Fin(n) => writeln!(s, "time: {n}"),
        TimeReport::Inf => writeln!(s, "time: inf"),
        TimeReport::FuelExceeded(n) => writeln!(s, "time: fuel exceeded ({n} events)"),
    };
    let printed: Vec<String> = r.printed.iter().map(ToString::to_string).collect();
    let _ = writeln!(s, "printed: [{}]", printed.join(", "));
    if let Some(st) = r.stability {
        let name = match st {
            Stability::Exact => "exact",
            Stability::FuelStable => "fuel-stable",
            Stability::Unstable => "unstable",
        };
        let _ = writeln!(s, "stability: {name}");
        if let Some(loc) = &r.offending {
            let _ = writeln!(s, "offending location: {loc}");
        }
        let ids: Vec<String> = r.needed_events.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "needed events: [{}]", ids.join(", "));
    }
    s
}

fn cmd_annotate(a: &AnnotateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let l = load(&a.common, a.specs.as_deref(), None, err)?;
    let ann = annotation(&l, a.mode.eager)?;
    if a.common.json {
        let parts: Vec<_> = ann
            .parts
            .iter()
            .map(|(st, p)| json!({ "statement": pretty_print(st).trim_end(), "predicate": pretty_print(p) }))
            .collect();
        let obligations: Vec<_> = ann
            .obligations
            .iter()
            .map(|o| json!({ "name": o.name(), "lhs": pretty_print(&o.lhs), "rhs": pretty_print(&o.rhs) }))
            .collect();
        let v = json!({ "parts": parts, "program": pretty_print(&ann.pred), "obligations": obligations });
        emit(out, &format!("{v}\n"));
        return Ok(EXIT_OK);
    }
    let mut s = String::new();
    for (st, p) in &ann.parts {
        let _ = writeln!(s, "-- {}", pretty_print(st).split_whitespace().collect::<Vec<_>>().join(" "));
        let _ = writeln!(s, "{}\n", pretty_print(p));
    }
    let _ = writeln!(s, "-- program\n{}", pretty_print(&ann.pred));
    for o in &ann.obligations {
        let _ = writeln!(s, "\n-- obligation {}\n{}\n  <==\n{}", o.name(), pretty_print(&o.lhs), pretty_print(&o.rhs));
    }
    emit(out, &s);
    Ok(EXIT_OK)
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let l = load(&a.common, a.specs.as_deref(), a.claim.as_deref(), err)?;
    let mut ann = annotation(&l, a.mode.eager)?;
    if let Some(c) = &a.claim {
        ann = ann.with_claim(parse_predicate_in(c, &l.u).map_err(CliError::Claim)?);
    }
    let d = Domain::with_bound(a.common.array_bound);
    let strategy = if a.exhaustive {
        Strategy::Exhaustive
    } else {
        Strategy::Auto {
            samples: a.samples,
            seed: a.seed,
        }
    };
    let reports = check_obligations(&ann, &l.u, &d, strategy)?;
    if a.common.json {
        let v: Vec<_> = reports.iter().map(RefinementReport::to_json).collect();
        emit(out, &format!("{}\n", json!(v)));
    } else {
        let mut s = String::new();
        for r in &reports {
            s.push_str(&report_text(r));
        }
        if reports.is_empty() {
            s.push_str("no obligations\n");
        }
        emit(out, &s);
    }
    Ok(if reports.iter().all(RefinementReport::holds) {
        EXIT_OK
    } else {
        EXIT_REFUTED
    })
}

fn report_text(r: &RefinementReport) -> String {
    let verdict = match r.verdict {
        Verdict::HoldsExhaustive => "holds (exhaustive)".to_string(),
        Verdict::HoldsSampled(k) => format!("holds (sampled, {k} stores)"),
        Verdict::Fails => "FAILS".to_string(),
    };
    let mut s = format!(
        "{}: {verdict}; {} bindings, {} stores, {} skipped, array bound {}",
        r.claim, r.bindings_checked, r.stores, r.skipped, r.array_bound
    );
    if let Some(seed) = r.seed {
        let _ = write!(s, ", seed {seed}");
    }
    if r.grid > 0 {
        let _ = write!(s, ", {} enumerated combinations", r.grid);
    }
    s.push('\n');
    if let Some(b) = &r.counterexample {
        s.push_str(&binding_text(b));
    }
    s
}

fn state_text(s: &State) -> String {
    let mut parts: Vec<String> = s.scalars.iter().map(|(k, v)| format!("{k}={v}")).collect();
    for (k, cells) in &s.arrays {
        let cells: Vec<String> = cells.iter().map(ToString::to_string).collect();
        parts.push(format!("{k}=[{}]", cells.join(", ")));
    }
    parts.push(format!("t={}", s.time));
    parts.join(" ")
}

fn needs_text(n: &NeedState) -> String {
    let locs: Vec<String> = n.needed().iter().map(ToString::to_string).collect();
    format!("{{{}}}", locs.join(", "))
}

fn binding_text(b: &Binding) -> String {
    format!(
        "  counterexample:\n    initial: {}\n    final:   {}\n    needed initially: {}\n    needed finally:   {}\n",
        state_text(&b.pre),
        state_text(&b.post),
        needs_text(&b.pre_need),
        needs_text(&b.post_need)
    )
}

fn cmd_crosscheck(a: &CrosscheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let l = load(&a.common, a.specs.as_deref(), None, err)?;
    let ann = annotation(&l, false)?;
    let d = Domain::with_bound(a.common.array_bound);
    let r = crosscheck(&l.program, &ann.pred, &l.u, &d, a.samples, a.seed, a.fuel.fuel)?;
    if a.common.json {
        emit(out, &format!("{}\n", json!(r)));
    } else {
        let mut s = format!(
            "checked {}, skipped {}, disagreements {}\n",
            r.checked,
            r.skipped,
            r.disagreements.len()
        );
        for dis in r.disagreements.iter().take(5) {
            let predicted = dis.predicted_time.map_or("none".to_string(), |t| t.to_string());
            let _ = writeln!(
                s,
                "  initial {} with final needs {}: lazy time {}, predicted {predicted}",
                state_text(&dis.pre),
                needs_text(&dis.post_need),
                dis.lazy_time
            );
        }
        emit(out, &s);
    }
    Ok(if r.disagreements.is_empty() { EXIT_OK } else { EXIT_UNSTABLE })
}
