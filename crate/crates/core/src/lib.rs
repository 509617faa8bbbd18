//! A semantic-network knowledge base with marker-passing inference and a
//! production rule engine.
//!
//! Knowledge lives in a network of [`Element`]s: type and individual nodes,
//! roles owned by other nodes, relations, and the links (is-a, eq, has,
//! cancel, statement) that connect them. Queries run as marker scans over the
//! is-a hierarchy. Rules come in two flavours: *if-added* rules are checked
//! whenever a link is added and fire eagerly, *if-needed* rules are checked
//! only when a role value is requested and missing.
//!
//! Element payloads are generic over a [`Scalar`] type; [`Kb`] is the
//! everyday `i64` instantiation.

mod element;
mod error;
mod kb;
mod marker;
mod rule;
mod scalar;
mod scan;
mod trigger;

pub use element::{Element, ElementId, ElementKind, Payload, PropertyKey};
pub use error::{Error, Result};
pub use kb::{Config, KnowledgeBase, Stats};
pub use marker::{Marker, MarkerPool, DEFAULT_MARKER_PAIRS, MAX_MARKER_PAIRS};
pub use rule::{
    Assertion, Bindings, Builtin, Expr, Rule, RuleAction, RuleId, RuleKind, RuleVariable, Term,
    VarId, XyzPredicate,
};
pub use scalar::Scalar;
pub use trigger::{FiringRecord, Hook, Trigger, TriggerKind};

/// Knowledge base with 64-bit integer payloads (timestamps, minutes, counts).
pub type Kb = KnowledgeBase<i64>;

/// Knowledge base with 128-bit integer payloads.
pub type WideKb = KnowledgeBase<i128>;
