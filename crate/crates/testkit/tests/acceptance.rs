//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use score_core::{Error as KbError, Kb};
use score_kdef::{eval_str, load_str, Error, ErrorKind, Value};
use score_testkit::run_equivalence_seed;

const PRELUDE: &str = include_str!("../../../fixtures/prelude.kdef");
const MEETING: &str = include_str!("../../../fixtures/meeting.kdef");
const MEETING_LAZY: &str = include_str!("../../../fixtures/meeting-lazy.kdef");
const TRIP: &str = include_str!("../../../fixtures/trip.kdef");
const EPOCH: &str = include_str!("../../../fixtures/epoch.kdef");
const FIDO: &str = include_str!("../../../fixtures/fido.kdef");
const PENGUIN: &str = include_str!("../../../fixtures/penguin.kdef");

const WALKTHROUGH_LIMIT: Duration = Duration::from_secs(1);
const EQUIVALENCE_SEEDS: u64 = 1000;
const EQUIVALENCE_LIMIT: Duration = Duration::from_secs(60);
const MAX_ELEMENTS: usize = 200;
const MAX_RULES: usize = 10;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn load(kb: &mut Kb, text: &str, file: &str) -> Result<(), String> {
    load_str(kb, text, file).map(|_| ()).map_err(|e| e.to_string())
}

fn query(kb: &mut Kb, form: &str) -> Result<String, String> {
    let mut vals = eval_str(kb, form, "<query>").map_err(|e| e.to_string())?;
    let v = vals.pop().ok_or("no value")?;
    Ok(v.render(kb))
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:?}, limit {limit:?}"))
}

fn if_added_walkthrough() -> Outcome {
    let start = Instant::now();
    let mut kb = Kb::new();
    load(&mut kb, PRELUDE, "prelude.kdef")?;
    load(&mut kb, MEETING, "meeting.kdef")?;
    let firings = kb.firing_log().len();
    ensure(firings == 1, format!("{firings} firings, expected 1"))?;
    let d = query(&mut kb, "(the-x-of-y {duration} {meeting 27})")?;
    ensure(d == "{1 hour}", format!("duration {d}"))?;

    let mut half = Kb::new();
    load(&mut half, PRELUDE, "prelude.kdef")?;
    let head: String = MEETING
        .lines()
        .filter(|l| !l.contains("{end time} {meeting 27}"))
        .collect::<Vec<_>>()
        .join("\n");
    load(&mut half, &head, "meeting.kdef")?;
    let early = half.firing_log().len();
    ensure(early == 0, format!("start time alone fired {early} times"))?;
    within(WALKTHROUGH_LIMIT, start)?;
    Ok(format!("1 firing, {d}; start time alone: 0 firings ({:?})", start.elapsed()))
}

fn if_needed_walkthrough() -> Outcome {
    let start = Instant::now();
    let mut kb = Kb::new();
    load(&mut kb, PRELUDE, "prelude.kdef")?;
    load(&mut kb, MEETING_LAZY, "meeting-lazy.kdef")?;
    let acts = kb.stats().trigger_activations;
    ensure(acts == 0, format!("{acts} trigger activations while adding times"))?;
    let before = kb.stats().clone();
    let first = query(&mut kb, "(the-x-of-y {duration} {meeting 27})")?;
    let after_first = kb.stats().clone();
    ensure(first == "{1 hour}", format!("first request gave {first}"))?;
    let allocs = after_first.marker_allocations - before.marker_allocations;
    ensure(allocs >= 1, "first request allocated no markers")?;
    let second = query(&mut kb, "(the-x-of-y {duration} {meeting 27})")?;
    ensure(second == first, format!("second request gave {second}"))?;
    let checks = kb.stats().rule_checks - after_first.rule_checks;
    ensure(checks == 0, format!("second request ran {checks} rule checks"))?;
    within(WALKTHROUGH_LIMIT, start)?;
    Ok(format!("{first} with {allocs} marker allocations, then cached with 0 rule checks"))
}

fn appendix_tests() -> Outcome {
    let mut kb = Kb::new();
    load(&mut kb, TRIP, "trip.kdef")?;
    let flying = query(&mut kb, "(is-x-a-y? {my trip} {flying event})")?;
    ensure(flying == "T", format!("my trip flying event: {flying}"))?;

    let mut kb = Kb::new();
    load(&mut kb, EPOCH, "epoch.kdef")?;
    let d = eval_str(&mut kb, "(the-x-of-y {duration} {my meeting})", "<query>").map_err(|e| e.to_string())?;
    let Some(Value::Element(e)) = d.last() else { return Err("no duration".into()) };
    let payload = kb.payload(*e).map(|p| p.to_string());
    ensure(payload.as_deref() == Some("3600"), format!("duration payload {payload:?}"))?;
    Ok("trip is a flying event; epoch duration payload 3600".into())
}

fn role_semantics() -> Outcome {
    let mut kb = Kb::new();
    load(&mut kb, FIDO, "fido.kdef")?;
    let id = |kb: &Kb, n: &str| kb.lookup(n).ok_or(format!("no {{{n}}}"));
    let (pet, john, fido) = (id(&kb, "pet")?, id(&kb, "John")?, id(&kb, "Fido")?);
    let mut run = |owners: bool| -> Result<Vec<String>, String> {
        let m = kb.alloc_marker_pair().map_err(|e| e.to_string())?;
        let r = if owners {
            kb.mark_role_owners(pet, fido, m)
        } else {
            kb.mark_role_fillers(pet, john, m)
        };
        let got = kb.marked_elements(m).into_iter().map(|e| kb.display(e)).collect();
        kb.free_marker(m);
        r.map_err(|e| e.to_string())?;
        Ok(got)
    };
    let fillers = run(false)?;
    let owners = run(true)?;
    ensure(fillers == ["{Fido}"], format!("fillers {fillers:?}"))?;
    ensure(owners == ["{John}"], format!("owners {owners:?}"))?;
    Ok("pet of John = {Fido}; Fido is the pet of {John}".into())
}

fn cancellation() -> Outcome {
    let mut kb = Kb::new();
    load(&mut kb, PENGUIN, "penguin.kdef")?;
    let flies = query(&mut kb, "(is-x-a-y? {penguin} {flying thing})")?;
    let bird = query(&mut kb, "(is-x-a-y? {penguin} {bird})")?;
    ensure(flies == "NIL", format!("penguin flying thing: {flies}"))?;
    ensure(bird == "T", format!("penguin bird: {bird}"))?;
    Ok("penguin: flying thing NIL, bird T".into())
}

fn connectedness() -> Outcome {
    let mut kb = Kb::new();
    let text = "(new-type {person} {thing})
(new-type {female} {person})
(new-indv-role {mother} {person} {female})
(new-if-added-rule (a b c d) ((a {mother} b) (c {mother} d)) (new-eq a c))";
    match load_str(&mut kb, text, "mother.kdef") {
        Err(Error {
            kind: ErrorKind::Kb(KbError::DisconnectedPredicates(_)),
            ..
        }) => {}
        other => return Err(format!("expected disconnected-predicates, got {other:?}")),
    }
    ensure(kb.rule_count() == 0, "rule was installed anyway")?;
    Ok("mother rule rejected with disconnected-predicates".into())
}

struct SuiteTotals {
    mismatches: Vec<String>,
    pool_leaks: Vec<String>,
    depth_violations: Vec<String>,
    steps: usize,
    max_elements: usize,
    max_rules: usize,
    firings: usize,
    scans: usize,
    elapsed: Duration,
}

fn run_suite() -> SuiteTotals {
    let start = Instant::now();
    let mut t = SuiteTotals {
        mismatches: Vec::new(),
        pool_leaks: Vec::new(),
        depth_violations: Vec::new(),
        steps: 0,
        max_elements: 0,
        max_rules: 0,
        firings: 0,
        scans: 0,
        elapsed: Duration::ZERO,
    };
    for seed in 0..EQUIVALENCE_SEEDS {
        let rep = run_equivalence_seed(seed);
        let tag = |m: String| format!("seed {seed}: {m}");
        t.mismatches.extend(rep.mismatches.into_iter().map(tag));
        t.pool_leaks.extend(rep.pool_leaks.into_iter().map(tag));
        t.depth_violations.extend(rep.depth_violations.into_iter().map(tag));
        t.steps += rep.steps;
        t.max_elements = t.max_elements.max(rep.elements);
        t.max_rules = t.max_rules.max(rep.rules);
        t.firings += rep.firings;
        t.scans += rep.scans_compared;
    }
    t.elapsed = start.elapsed();
    t
}

fn first(v: &[String]) -> String {
    v.first().cloned().unwrap_or_default()
}

fn oracle_equivalence(t: &SuiteTotals) -> Outcome {
    ensure(
        t.mismatches.is_empty(),
        format!("{} mismatches, first: {}", t.mismatches.len(), first(&t.mismatches)),
    )?;
    ensure(t.max_elements <= MAX_ELEMENTS, format!("a KB reached {} elements", t.max_elements))?;
    ensure(t.max_rules <= MAX_RULES, format!("a KB had {} rules", t.max_rules))?;
    ensure(
        t.elapsed <= EQUIVALENCE_LIMIT,
        format!("took {:?}, limit {EQUIVALENCE_LIMIT:?}", t.elapsed),
    )?;
    Ok(format!(
        "{EQUIVALENCE_SEEDS} seeds, {} firings and {} scans matched, max {} elements, {:.1?}",
        t.firings, t.scans, t.max_elements, t.elapsed
    ))
}

fn chain_rule(n: usize) -> String {
    let vars: Vec<String> = (0..=n).map(|i| format!("v{i}")).collect();
    let preds: Vec<String> = (0..n).map(|i| format!("(v{i} {{link}} v{})", i + 1)).collect();
    let mut s = String::from("(new-type {node} {thing})\n(new-type-role {link} {node} {node})\n");
    s += &format!(
        "(new-if-added-rule ({}) ({}) (new-is-a v0 {{node}}))\n",
        vars.join(" "),
        preds.join(" ")
    );
    for i in 0..=n {
        s += &format!("(new-indv {{n{i}}} {{node}})\n");
    }
    for i in 0..n {
        s += &format!("(x-is-a-y-of-z {{n{i}}} {{link}} {{n{}}})\n", i + 1);
    }
    s
}

fn resource_invariants(t: &SuiteTotals) -> Outcome {
    ensure(
        t.pool_leaks.is_empty(),
        format!("{} pool leaks, first: {}", t.pool_leaks.len(), first(&t.pool_leaks)),
    )?;
    ensure(
        t.depth_violations.is_empty(),
        format!("{} depth violations, first: {}", t.depth_violations.len(), first(&t.depth_violations)),
    )?;

    let mut kb = Kb::new();
    let cap = kb.marker_capacity();
    ensure(cap == 14, format!("default capacity {cap}"))?;
    let mut held = Vec::new();
    for _ in 0..cap {
        held.push(kb.alloc_marker_pair().map_err(|e| e.to_string())?);
    }
    match kb.alloc_marker_pair() {
        Err(KbError::PoolExhausted(_)) => {}
        other => return Err(format!("15th pair: {other:?}")),
    }
    for m in held {
        kb.free_marker(m);
    }
    ensure(kb.markers_available() == cap, "pool not full after freeing")?;

    let mut kb = Kb::new();
    let err = load_str(&mut kb, &chain_rule(15), "chain.kdef").err();
    ensure(
        matches!(&err, Some(Error { kind: ErrorKind::Kb(KbError::PoolExhausted(_)), .. })),
        format!("15-predicate chain gave {err:?}"),
    )?;
    ensure(kb.markers_available() == cap, "pool not full after exhaustion")?;
    Ok(format!(
        "pool full after {} steps; depth within predicate count; 15th pair and 15-predicate chain exhaust",
        t.steps
    ))
}

fn transcript() -> Result<String, String> {
    let suites: [&[(&str, &str)]; 6] = [
        &[("trip.kdef", TRIP), ("<query>", "(is-x-a-y? {my trip} {flying event})")],
        &[
            ("prelude.kdef", PRELUDE),
            ("meeting.kdef", MEETING),
            ("<query>", "(the-x-of-y {duration} {meeting 27})"),
        ],
        &[
            ("prelude.kdef", PRELUDE),
            ("meeting-lazy.kdef", MEETING_LAZY),
            ("<query>", "(the-x-of-y {duration} {meeting 27})"),
            ("<query>", "(the-x-of-y {duration} {meeting 27})"),
        ],
        &[("epoch.kdef", EPOCH)],
        &[("fido.kdef", FIDO)],
        &[("penguin.kdef", PENGUIN), ("<query>", "(is-x-a-y? {Opus} {flying thing})")],
    ];
    let mut out = String::new();
    for suite in suites {
        let mut kb = Kb::new();
        kb.set_trace(true);
        for (file, text) in suite {
            let vals = eval_str(&mut kb, text, file).map_err(|e| e.to_string())?;
            for line in kb.take_trace() {
                out += &line;
                out.push('\n');
            }
            for v in vals {
                out += &v.render(&kb);
                out.push('\n');
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let a = transcript()?;
    let b = transcript()?;
    ensure(a == b, "transcripts differ")?;
    ensure(a.contains("FIRE R1"), "transcript has no firings")?;
    Ok(format!("{} transcript bytes identical across runs", a.len()))
}

fn main() -> ExitCode {
    let suite = run_suite();
    let results: Vec<(&str, Outcome)> = vec![
        ("if-added meeting walkthrough", if_added_walkthrough()),
        ("if-needed meeting walkthrough", if_needed_walkthrough()),
        ("trip and epoch fixtures", appendix_tests()),
        ("role filler and owner scans", role_semantics()),
        ("penguin cancellation", cancellation()),
        ("disconnected rule rejected", connectedness()),
        ("oracle equivalence", oracle_equivalence(&suite)),
        ("resource invariants", resource_invariants(&suite)),
        ("deterministic transcripts", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
