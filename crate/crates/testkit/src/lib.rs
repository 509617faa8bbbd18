//! Ground truth for testing the score engine: frozen snapshots, brute-force
//! oracles that share no traversal code with the engine, and seeded random
//! knowledge-base and rule generators.

pub mod gen;
pub mod oracle;
pub mod snapshot;
pub mod suite;

pub use gen::{gen_random_kb, gen_random_rules, gen_scan_kb, GeneratedKb, Schema};
pub use oracle::{BudgetExceeded, Oracle, TUPLE_BUDGET};
pub use snapshot::{KbSnapshot, SnapElement};
pub use suite::{run_equivalence_seed, seed_shape, SeedReport};
