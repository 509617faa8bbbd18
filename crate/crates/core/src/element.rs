use std::collections::BTreeMap;
use std::fmt;

use crate::marker::MarkerBits;
use crate::trigger::Trigger;

/// Handle to an element of one knowledge base. Never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId(pub(crate) u32);

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    TypeNode,
    IndvNode,
    TypeRole,
    IndvRole,
    IsA,
    Eq,
    Has,
    Cancel,
    Statement,
    Relation,
}

impl ElementKind {
    pub fn is_link(self) -> bool {
        matches!(
            self,
            Self::IsA | Self::Eq | Self::Has | Self::Cancel | Self::Statement
        )
    }

    pub fn is_node(self) -> bool {
        matches!(
            self,
            Self::TypeNode | Self::IndvNode | Self::TypeRole | Self::IndvRole
        )
    }

    pub fn is_role(self) -> bool {
        matches!(self, Self::TypeRole | Self::IndvRole)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TypeNode => "type-node",
            Self::IndvNode => "indv-node",
            Self::TypeRole => "type-role",
            Self::IndvRole => "indv-role",
            Self::IsA => "is-a-link",
            Self::Eq => "eq-link",
            Self::Has => "has-link",
            Self::Cancel => "cancel-link",
            Self::Statement => "statement-link",
            Self::Relation => "relation",
        }
    }
}

/// Concrete value carried by a proper value node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Payload<N> {
    Number(N),
    Text(String),
}

impl<N: fmt::Display> fmt::Display for Payload<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Number(n) => write!(f, "{n}"),
            Payload::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropertyKey {
    RuleTriggers,
}

/// One node, link or relation of the network.
///
/// Relations reuse the A/B wires for their argument type constraints.
/// Statement links additionally carry a rel-wire.
#[derive(Clone, Debug)]
pub struct Element<N> {
    pub(crate) name: Option<String>,
    pub(crate) kind: ElementKind,
    pub(crate) a_wire: Option<ElementId>,
    pub(crate) b_wire: Option<ElementId>,
    pub(crate) owner_wire: Option<ElementId>,
    pub(crate) rel_wire: Option<ElementId>,
    pub(crate) context_wire: ElementId,
    pub(crate) proper: bool,
    pub(crate) payload: Option<Payload<N>>,
    /// Set on materialized virtual copies: the role this node copies.
    pub(crate) copy_of: Option<ElementId>,
    pub(crate) properties: BTreeMap<PropertyKey, Vec<Trigger>>,
    pub(crate) markers: MarkerBits,
    /// Links whose A-wire is this element.
    pub(crate) out_links: Vec<ElementId>,
    /// Links whose B-wire is this element.
    pub(crate) in_links: Vec<ElementId>,
}

impl<N> Element<N> {
    pub(crate) fn new(kind: ElementKind, context: ElementId) -> Self {
        Element {
            name: None,
            kind,
            a_wire: None,
            b_wire: None,
            owner_wire: None,
            rel_wire: None,
            context_wire: context,
            proper: false,
            payload: None,
            copy_of: None,
            properties: BTreeMap::new(),
            markers: MarkerBits::default(),
            out_links: Vec::new(),
            in_links: Vec::new(),
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn a_wire(&self) -> Option<ElementId> {
        self.a_wire
    }

    pub fn b_wire(&self) -> Option<ElementId> {
        self.b_wire
    }

    pub fn owner_wire(&self) -> Option<ElementId> {
        self.owner_wire
    }

    pub fn rel_wire(&self) -> Option<ElementId> {
        self.rel_wire
    }

    pub fn context_wire(&self) -> ElementId {
        self.context_wire
    }

    pub fn is_proper(&self) -> bool {
        self.proper
    }

    pub fn payload(&self) -> Option<&Payload<N>> {
        self.payload.as_ref()
    }

    pub fn copy_of(&self) -> Option<ElementId> {
        self.copy_of
    }

    pub fn triggers(&self) -> &[Trigger] {
        self.properties
            .get(&PropertyKey::RuleTriggers)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn out_links(&self) -> &[ElementId] {
        &self.out_links
    }

    pub fn in_links(&self) -> &[ElementId] {
        &self.in_links
    }

    pub fn is_role(&self) -> bool {
        self.kind.is_role()
    }
}
