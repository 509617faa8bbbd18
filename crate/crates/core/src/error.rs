use thiserror::Error;

/// Errors raised by knowledge-base, marker and rule operations.
///
/// Element references are rendered as `{name}` strings so the error stays
/// meaningful once detached from the knowledge base.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("unknown parent {0}")]
    UnknownParent(String),
    #[error("parent {0} is not a type")]
    ParentNotAType(String),
    #[error("unknown owner {0}")]
    UnknownOwner(String),
    #[error("unknown context {0}")]
    UnknownContext(String),
    #[error("is-a link {0} -> {1} would create a cycle")]
    CycleDetected(String, String),
    #[error("{0} is an individual and cannot have inferiors")]
    InferiorOfIndividual(String),
    #[error("cannot make {0} eq to itself")]
    SelfEq(String),
    #[error("cannot link {0} to {1}: {2}")]
    KindMismatch(String, String, &'static str),
    #[error("{0} is not a role")]
    NotARole(String),
    #[error("{0} is not a relation")]
    NotARelation(String),
    #[error("{owner} is not an inferior of {expected}, the owner of {role}")]
    OwnerMismatch {
        role: String,
        owner: String,
        expected: String,
    },
    #[error("{element} violates the {side} type constraint {constraint} of {relation}")]
    ConstraintViolation {
        relation: String,
        side: &'static str,
        element: String,
        constraint: String,
    },
    #[error("marker pool exhausted ({0} pairs in use)")]
    PoolExhausted(usize),
    #[error("marker pair count {0} outside 1..={1}")]
    InvalidMarkerPairs(usize, usize),
    #[error("rule chain exceeded {0} firings")]
    ChainDepthExceeded(usize),
    #[error("rule {0}: x-y-z predicates are not connected")]
    DisconnectedPredicates(String),
    #[error("rule {0}: predicate element {1} is not a role or relation")]
    YNotRoleOrRelation(String, String),
    #[error("rule {0}: predicate ({1}) has no variable")]
    GroundPredicate(String, String),
    #[error("rule {0}: variable {1} appears in no predicate")]
    UnusedVariable(String, String),
    #[error("rule {0}: bad action: {1}")]
    BadActionShape(String, String),
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(String),
    #[error("unknown rule {0}")]
    UnknownRule(String),
    #[error("rule {0}: variable {1} is unbound")]
    Unbound(String, String),
    #[error("rule {0}: no predicate can be checked from the current bindings")]
    NoCheckablePredicate(String),
    #[error("rule {0}: action failed: {1}")]
    ActionError(String, String),
}

impl Error {
    /// Fatal errors abort a propagation episode; the rest are reported as
    /// diagnostics when they come out of a rule action.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            Error::PoolExhausted(_) | Error::ChainDepthExceeded(_) | Error::NoCheckablePredicate(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
