use std::collections::BTreeSet;

use score_core::Kb;
use score_kdef::load_str;
use score_testkit::{KbSnapshot, Oracle};

const PRELUDE: &str = include_str!("../../../fixtures/prelude.kdef");
const MEETING: &str = include_str!("../../../fixtures/meeting.kdef");
const PENGUIN: &str = include_str!("../../../fixtures/penguin.kdef");
const FIDO: &str = include_str!("../../../fixtures/fido.kdef");

fn kb_of(texts: &[&str]) -> Kb {
    let mut kb = Kb::new();
    for t in texts {
        load_str(&mut kb, t, "fixture").unwrap();
    }
    kb
}

fn set(snap: &KbSnapshot, names: &[&str]) -> BTreeSet<usize> {
    names.iter().map(|n| snap.by_name(n).unwrap()).collect()
}

#[test]
fn clyde_superiors() {
    let kb = kb_of(&["(new-type {elephant} {thing}) (new-indv {Clyde} {elephant})"]);
    let snap = KbSnapshot::of(&kb);
    let o = Oracle::new(&snap);
    let clyde = snap.by_name("Clyde").unwrap();
    assert_eq!(o.superiors(clyde), &set(&snap, &["Clyde", "elephant", "thing"]));
    assert_eq!(o.superiors(0), &set(&snap, &["thing"]));
}

#[test]
fn penguin_cancellation() {
    let kb = kb_of(&[PENGUIN]);
    let snap = KbSnapshot::of(&kb);
    let o = Oracle::new(&snap);
    let id = |n| snap.by_name(n).unwrap();
    assert!(!o.is_x_a_y(id("penguin"), id("flying thing")));
    assert!(!o.is_x_a_y(id("Opus"), id("flying thing")));
    assert!(o.is_x_a_y(id("Opus"), id("bird")));
    assert!(o.is_x_a_y(id("Tweety"), id("flying thing")));
    assert!(!o.inferiors(id("flying thing")).contains(&id("Opus")));
}

#[test]
fn fido_is_johns_pet() {
    let kb = kb_of(&[FIDO]);
    let snap = KbSnapshot::of(&kb);
    let o = Oracle::new(&snap);
    let id = |n| snap.by_name(n).unwrap();
    assert_eq!(o.role_fillers(id("pet"), id("John")), set(&snap, &["Fido"]));
    assert_eq!(o.role_owners(id("pet"), id("Fido")), set(&snap, &["John"]));
}

#[test]
fn meeting_27_has_exactly_one_tuple() {
    let kb = kb_of(&[PRELUDE, MEETING]);
    let o = Oracle::new(&KbSnapshot::of(&kb));
    let (_, rule) = kb.rules().next().unwrap();
    let tuples = o.satisfying_tuples(rule).unwrap();
    assert_eq!(tuples.len(), 1);
    let names: Vec<String> = tuples
        .iter()
        .next()
        .unwrap()
        .iter()
        .map(|&i| kb.label(kb.elements().nth(i).unwrap().0))
        .collect();
    assert!(names.contains(&"meeting 27".to_string()), "{names:?}");
}

#[test]
fn premise_free_kb_has_no_tuples() {
    let kb = kb_of(&["(new-type {event} {thing}) (new-type {time} {thing})
         (new-type-role {start time} {event} {time})
         (new-if-added-rule (a b) ((a {start time} b)) (new-is-a b {time}))"]);
    let o = Oracle::new(&KbSnapshot::of(&kb));
    let (_, r) = kb.rules().next().unwrap();
    assert!(o.satisfying_tuples(r).unwrap().is_empty());
}

#[test]
fn snapshot_equality_ignores_order() {
    let kb = kb_of(&[FIDO]);
    let a = KbSnapshot::of(&kb);
    let mut b = a.clone();
    b.elements.reverse();
    assert_eq!(a, b);
    b.elements.pop();
    assert_ne!(a, b);
}

#[test]
fn contexts_hide_elements() {
    let kb = kb_of(&["(new-type {bird} {thing})
         (new-context {dream})
         (in-context {dream})
         (new-type {dragon} {bird})
         (in-context {general})"]);
    let snap = KbSnapshot::of(&kb);
    let o = Oracle::new(&snap);
    let dragon = snap.by_name("dragon").unwrap();
    assert!(!o.is_visible(dragon));
    assert!(o.superiors(dragon).is_empty());
    assert!(!o.inferiors(snap.by_name("bird").unwrap()).contains(&dragon));
}
