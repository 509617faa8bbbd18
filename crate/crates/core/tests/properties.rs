use std::collections::BTreeSet;

use num_rational::Ratio;
use proptest::prelude::*;
use score_core::{
    Builtin, ElementId, Error, Expr, Kb, KnowledgeBase, Payload, Rule, RuleVariable, Term, VarId, XyzPredicate,
};

/// Each type `i > 0` gets parent `parents[i] % i`, plus optional extra
/// is-a links from later to earlier types and cancel links.
fn build(parents: &[usize], extra: &[(usize, usize)], cancels: &[(usize, usize)]) -> (Kb, Vec<ElementId>) {
    let mut kb = Kb::new();
    let mut ids = vec![kb.new_type("t0", kb.root()).unwrap()];
    for (i, p) in parents.iter().enumerate() {
        let i = i + 1;
        let id = kb.new_type(&format!("t{i}"), ids[p % i]).unwrap();
        ids.push(id);
    }
    let n = ids.len();
    for &(a, b) in extra {
        let (a, b) = (a % n, b % n);
        if a > b {
            kb.add_is_a(ids[a], ids[b]).unwrap();
        }
    }
    for &(a, b) in cancels {
        let (a, b) = (a % n, b % n);
        if a != b {
            kb.add_cancel(ids[a], ids[b]).unwrap();
        }
    }
    (kb, ids)
}

fn sup(kb: &mut Kb, x: ElementId) -> BTreeSet<ElementId> {
    kb.superiors(x).unwrap().into_iter().collect()
}

fn inf(kb: &mut Kb, x: ElementId) -> BTreeSet<ElementId> {
    kb.inferiors(x).unwrap().into_iter().collect()
}

fn dag() -> impl Strategy<Value = (Vec<usize>, Vec<(usize, usize)>)> {
    (
        prop::collection::vec(0usize..64, 0..25),
        prop::collection::vec((0usize..64, 0usize..64), 0..10),
    )
}

proptest! {
    #[test]
    fn superiors_are_reflexive_and_transitive((parents, extra) in dag()) {
        let (mut kb, ids) = build(&parents, &extra, &[]);
        for &x in &ids {
            let up = sup(&mut kb, x);
            prop_assert!(up.contains(&x) && up.contains(&kb.root()));
            for &y in &up {
                let above = sup(&mut kb, y);
                prop_assert!(above.is_subset(&up));
            }
        }
    }

    #[test]
    fn superiors_and_inferiors_are_dual(
        (parents, extra) in dag(),
        cancels in prop::collection::vec((0usize..64, 0usize..64), 0..4),
    ) {
        let (mut kb, ids) = build(&parents, &extra, &cancels);
        let all: Vec<ElementId> = ids.iter().copied().chain([kb.root()]).collect();
        for &x in &all {
            let up = sup(&mut kb, x);
            for &y in &all {
                let down = inf(&mut kb, y);
                prop_assert_eq!(up.contains(&y), down.contains(&x));
            }
        }
        prop_assert_eq!(kb.markers_available(), kb.marker_capacity());
    }

    #[test]
    fn adding_is_a_only_grows_superiors((parents, extra) in dag(), a in 0usize..64, b in 0usize..64) {
        let (mut kb, ids) = build(&parents, &extra, &[]);
        let before: Vec<_> = ids.iter().map(|&x| sup(&mut kb, x)).collect();
        let (a, b) = (a % ids.len(), b % ids.len());
        if kb.add_is_a(ids[a], ids[b]).is_ok() {
            for (i, &x) in ids.iter().enumerate() {
                prop_assert!(before[i].is_subset(&sup(&mut kb, x)));
            }
            prop_assert!(kb.is_x_a_y(ids[a], ids[b]).unwrap());
        }
    }

    #[test]
    fn upscan_is_idempotent((parents, extra) in dag(), pick in 0usize..64) {
        let (mut kb, ids) = build(&parents, &extra, &[]);
        let x = ids[pick % ids.len()];
        let m = kb.alloc_marker_pair().unwrap();
        kb.upscan(x, m).unwrap();
        let once = kb.marked_elements(m);
        kb.upscan(x, m).unwrap();
        prop_assert_eq!(once, kb.marked_elements(m));
        kb.free_marker(m);
    }
}

#[test]
fn rational_payloads_compute_durations() {
    let mut kb: KnowledgeBase<Ratio<i64>> = KnowledgeBase::new();
    let root = kb.root();
    let hours = kb.new_type("hours", root).unwrap();
    let meeting = kb.new_type("meeting", root).unwrap();
    let start = kb.new_indv_role("start", meeting, hours).unwrap();
    let end = kb.new_indv_role("end", meeting, hours).unwrap();
    let duration = kb.new_indv_role("duration", meeting, hours).unwrap();
    let rule = Rule::if_needed(
        vec![RuleVariable::new("a").proper(), RuleVariable::new("b").proper(), RuleVariable::new("c")],
        vec![
            XyzPredicate { x: Term::Var(VarId(0)), y: start, z: Term::Var(VarId(2)) },
            XyzPredicate { x: Term::Var(VarId(1)), y: end, z: Term::Var(VarId(2)) },
        ],
        Expr::Call(Builtin::Subtract, vec![Expr::Var(VarId(1)), Expr::Var(VarId(0))]),
        duration,
        VarId(2),
    );
    kb.install_rule(rule).unwrap();
    let m = kb.new_indv("standup", meeting).unwrap();
    let t0 = kb.new_indv_with_payload("9:15", hours, Payload::Number(Ratio::new(37, 4))).unwrap();
    let t1 = kb.new_indv_with_payload("9:45", hours, Payload::Number(Ratio::new(39, 4))).unwrap();
    kb.x_is_the_y_of_z(t0, start, m).unwrap();
    kb.x_is_the_y_of_z(t1, end, m).unwrap();
    let d = kb.request_value(duration, m).unwrap().expect("computed");
    assert_eq!(kb.payload(d), Some(&Payload::Number(Ratio::new(1, 2))));
}

#[test]
fn fifteen_pairs_exhaust_the_default_pool() {
    let mut kb = Kb::new();
    let held: Vec<_> = (0..14).map(|_| kb.alloc_marker_pair().unwrap()).collect();
    assert!(matches!(kb.alloc_marker_pair(), Err(Error::PoolExhausted(14))));
    for m in held {
        kb.free_marker(m);
    }
    assert!(kb.alloc_marker_pair().is_ok());
}
