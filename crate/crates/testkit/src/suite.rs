//! Replays generated knowledge bases through the engine and compares every
//! answer with the [`Oracle`].

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use score_core::{ElementId, Kb, Marker, Result as KbResult, RuleId};
use score_kdef::eval_str;

use crate::gen::{gen_random_kb, gen_random_rules, gen_scan_kb};
use crate::oracle::Oracle;
use crate::snapshot::KbSnapshot;

#[derive(Clone, Debug, Default)]
pub struct SeedReport {
    pub seed: u64,
    pub size: usize,
    /// Elements in the rule knowledge base after all instance steps.
    pub elements: usize,
    pub rules: usize,
    pub firings: usize,
    /// Public operations after which the marker pool was checked.
    pub steps: usize,
    pub pool_leaks: Vec<String>,
    pub depth_violations: Vec<String>,
    pub mismatches: Vec<String>,
    pub scans_compared: usize,
}

impl SeedReport {
    pub fn is_clean(&self) -> bool {
        self.pool_leaks.is_empty() && self.depth_violations.is_empty() && self.mismatches.is_empty()
    }
}

/// Size and rule count used for `seed` by the equivalence suite.
pub fn seed_shape(seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.gen_range(10..=120), rng.gen_range(1..=10))
}

fn indices(ids: &[ElementId]) -> BTreeSet<usize> {
    ids.iter().map(|e| e.index()).collect()
}

fn marked(kb: &mut Kb, scan: impl FnOnce(&mut Kb, Marker) -> KbResult<()>) -> KbResult<BTreeSet<usize>> {
    let m = kb.alloc_marker_pair()?;
    let r = scan(kb, m);
    let out = indices(&kb.marked_elements(m));
    kb.free_marker(m);
    r.map(|_| out)
}

/// Runs the rule knowledge base for `seed` step by step, then compares
/// firings and scans with the oracle. A second, richer knowledge base with
/// eq, cancel links and contexts is used for scans alone.
pub fn run_equivalence_seed(seed: u64) -> SeedReport {
    let (size, n_rules) = seed_shape(seed);
    let g = gen_random_kb(seed, size);
    let rules = gen_random_rules(seed, &g, n_rules);
    let mut rep = SeedReport {
        seed,
        size,
        rules: rules.len(),
        ..Default::default()
    };
    let mut kb = Kb::new();
    let full = kb.marker_capacity();
    let forms = g.schema_forms.iter().chain(&rules).chain(&g.instance_forms);
    for (step, form) in forms.enumerate() {
        if let Err(e) = eval_str(&mut kb, form, "gen") {
            rep.mismatches.push(format!("step {step}: {form}: {e}"));
        }
        rep.steps += 1;
        if kb.markers_available() != full {
            rep.pool_leaks.push(format!("step {step}: {} of {full} pairs free", kb.markers_available()));
        }
    }
    for d in kb.take_diagnostics() {
        rep.mismatches.push(format!("diagnostic: {d}"));
    }
    rep.elements = kb.len();
    rep.firings = kb.firing_log().len();

    let oracle = Oracle::new(&KbSnapshot::of(&kb));
    let installed: Vec<(RuleId, score_core::Rule)> = kb.rules().map(|(id, r)| (id, r.clone())).collect();
    for (id, rule) in &installed {
        let fired: BTreeSet<Vec<usize>> = kb
            .firing_log()
            .iter()
            .filter(|f| f.rule == *id)
            .map(|f| f.bindings.iter().map(|e| e.index()).collect())
            .collect();
        match oracle.satisfying_tuples(rule) {
            Ok(expected) if expected == fired => {}
            Ok(expected) => rep.mismatches.push(format!(
                "{id}: engine fired {fired:?}, oracle expects {expected:?}"
            )),
            Err(e) => rep.mismatches.push(format!("{id}: {e}")),
        }
        let depth = kb.stats().rule_search_depth.get(id.0).copied().unwrap_or(0);
        if depth > rule.predicates.len() {
            rep.depth_violations
                .push(format!("{id}: depth {depth} > {} predicates", rule.predicates.len()));
        }
    }
    compare_scans(&mut kb, &oracle, seed, &mut rep);

    let mut scan_kb = Kb::new();
    for form in gen_scan_kb(seed, size) {
        let _ = eval_str(&mut scan_kb, &form, "gen");
        if scan_kb.markers_available() != full {
            rep.pool_leaks.push(format!("scan kb: {form}"));
        }
    }
    scan_kb.take_diagnostics();
    let oracle = Oracle::new(&KbSnapshot::of(&scan_kb));
    compare_scans(&mut scan_kb, &oracle, seed, &mut rep);
    rep
}

fn compare_scans(kb: &mut Kb, oracle: &Oracle, seed: u64, rep: &mut SeedReport) {
    let ids: Vec<ElementId> = kb.elements().map(|(id, _)| id).collect();
    let mut check = |what: String, engine: KbResult<BTreeSet<usize>>, expected: BTreeSet<usize>| {
        rep.scans_compared += 1;
        match engine {
            Ok(got) if got == expected => {}
            Ok(got) => rep.mismatches.push(format!("{what}: engine {got:?}, oracle {expected:?}")),
            Err(e) => rep.mismatches.push(format!("{what}: {e}")),
        }
    };
    for &x in &ids {
        let i = x.index();
        check(format!("superiors {x}"), kb.superiors(x).map(|v| indices(&v)), oracle.superiors(i).clone());
        check(format!("inferiors {x}"), kb.inferiors(x).map(|v| indices(&v)), oracle.inferiors(i));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca9);
    let roles: Vec<ElementId> = ids.iter().copied().filter(|&e| kb.is_role(e)).collect();
    let rels: Vec<ElementId> = ids
        .iter()
        .copied()
        .filter(|&e| kb.element(e).kind() == score_core::ElementKind::Relation)
        .collect();
    let nodes: Vec<ElementId> = ids.iter().copied().filter(|&e| kb.element(e).kind().is_node()).collect();
    for &r in &roles {
        let Some(o) = kb.owner_of(r) else { continue };
        let y = kb.element(r).copy_of().unwrap_or(r);
        check(
            format!("fillers of {y} of {o}"),
            marked(kb, |kb, m| kb.mark_role_fillers(y, o, m)),
            oracle.role_fillers(y.index(), o.index()),
        );
    }
    let statements: Vec<(ElementId, ElementId, ElementId)> = ids
        .iter()
        .map(|&s| kb.element(s))
        .filter(|e| e.kind() == score_core::ElementKind::Statement)
        .filter_map(|e| Some((e.a_wire()?, e.rel_wire()?, e.b_wire()?)))
        .collect();
    for (a, r, b) in statements {
        check(format!("{r} b-side of {a}"), marked(kb, |kb, m| kb.mark_rel_b(r, a, m)), oracle.rel_b(r.index(), a.index()));
        check(format!("{r} a-side of {b}"), marked(kb, |kb, m| kb.mark_rel_a(r, b, m)), oracle.rel_a(r.index(), b.index()));
    }
    for _ in 0..20 {
        let (Some(&y), Some(&n)) = (roles.choose(&mut rng), nodes.choose(&mut rng)) else { break };
        let (yi, ni) = (y.index(), n.index());
        check(
            format!("fillers of {y} of {n}"),
            marked(kb, |kb, m| kb.mark_role_fillers(y, n, m)),
            oracle.role_fillers(yi, ni),
        );
        check(
            format!("owners of {y} played by {n}"),
            marked(kb, |kb, m| kb.mark_role_owners(y, n, m)),
            oracle.role_owners(yi, ni),
        );
    }
    for _ in 0..10 {
        let (Some(&r), Some(&n)) = (rels.choose(&mut rng), nodes.choose(&mut rng)) else { break };
        let (ri, ni) = (r.index(), n.index());
        check(
            format!("{r} b-side of {n}"),
            marked(kb, |kb, m| kb.mark_rel_b(r, n, m)),
            oracle.rel_b(ri, ni),
        );
        check(
            format!("{r} a-side of {n}"),
            marked(kb, |kb, m| kb.mark_rel_a(r, n, m)),
            oracle.rel_a(ri, ni),
        );
    }
}
