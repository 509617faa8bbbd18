use score_core::Kb;
use score_kdef::eval_str;
use score_testkit::{gen_random_kb, gen_random_rules, run_equivalence_seed, seed_shape, KbSnapshot};

const GOLDEN_SEED0_SIZE50: &str = "f5fb0f90ec7d0d626bd9fad8e675b953e54d4d728c0acc031851472bbe1ed17b";

#[test]
fn seed_0_size_50_fingerprint_is_stable() {
    assert_eq!(gen_random_kb(0, 50).fingerprint(), GOLDEN_SEED0_SIZE50);
    assert_eq!(gen_random_kb(0, 50).text(), gen_random_kb(0, 50).text());
    assert_ne!(gen_random_kb(1, 50).fingerprint(), GOLDEN_SEED0_SIZE50);
}

#[test]
fn size_zero_is_a_fresh_kb() {
    let g = gen_random_kb(7, 0);
    assert!(g.text().is_empty());
    let mut kb = Kb::new();
    eval_str(&mut kb, &g.text(), "gen").unwrap();
    assert_eq!(KbSnapshot::of(&kb), KbSnapshot::of(&Kb::new()));
    assert!(gen_random_rules(7, &g, 5).is_empty());
}

#[test]
fn generated_rules_always_validate() {
    for seed in 0..1000 {
        let (size, n) = seed_shape(seed);
        let g = gen_random_kb(seed, size);
        let rules = gen_random_rules(seed, &g, n);
        assert_eq!(rules.len(), n);
        let mut kb = Kb::new();
        for f in &g.schema_forms {
            eval_str(&mut kb, f, "schema").unwrap();
        }
        for r in &rules {
            eval_str(&mut kb, r, "rule").unwrap_or_else(|e| panic!("seed {seed}: {r}: {e}"));
        }
        assert!(kb.rules().all(|(_, r)| r.variables.len() <= 4));
    }
}

#[test]
fn engine_agrees_with_oracle_on_a_sample() {
    for seed in [0, 1, 2, 3, 42, 999] {
        let rep = run_equivalence_seed(seed);
        assert!(rep.is_clean(), "seed {seed}: {:?} {:?} {:?}", rep.mismatches, rep.pool_leaks, rep.depth_violations);
        assert!(rep.scans_compared > 0);
    }
}
