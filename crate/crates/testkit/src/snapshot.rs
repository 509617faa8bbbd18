use std::collections::HashSet;

use score_core::{ElementKind, KnowledgeBase, Scalar};

/// One element flattened to plain indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SnapElement {
    pub id: usize,
    pub kind: ElementKind,
    pub name: Option<String>,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub owner: Option<usize>,
    pub rel: Option<usize>,
    pub context: usize,
    pub proper: bool,
    pub payload: Option<String>,
}

/// A frozen copy of a knowledge base. Equality ignores element order.
#[derive(Clone, Debug)]
pub struct KbSnapshot {
    pub elements: Vec<SnapElement>,
    pub active_context: usize,
}

impl KbSnapshot {
    pub fn of<N: Scalar>(kb: &KnowledgeBase<N>) -> Self {
        let elements = kb
            .elements()
            .map(|(id, e)| SnapElement {
                id: id.index(),
                kind: e.kind(),
                name: e.name().map(str::to_string),
                a: e.a_wire().map(|w| w.index()),
                b: e.b_wire().map(|w| w.index()),
                owner: e.owner_wire().map(|w| w.index()),
                rel: e.rel_wire().map(|w| w.index()),
                context: e.context_wire().index(),
                proper: e.is_proper(),
                payload: e.payload().map(|p| p.to_string()),
            })
            .collect();
        KbSnapshot {
            elements,
            active_context: kb.active_context().index(),
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Element at index `i`, looked up by id rather than position.
    pub fn get(&self, i: usize) -> Option<&SnapElement> {
        match self.elements.get(i) {
            Some(e) if e.id == i => Some(e),
            _ => self.elements.iter().find(|e| e.id == i),
        }
    }

    pub fn by_name(&self, name: &str) -> Option<usize> {
        self.elements
            .iter()
            .find(|e| e.name.as_deref() == Some(name))
            .map(|e| e.id)
    }
}

impl PartialEq for KbSnapshot {
    fn eq(&self, other: &Self) -> bool {
        if self.active_context != other.active_context || self.len() != other.len() {
            return false;
        }
        let mine: HashSet<&SnapElement> = self.elements.iter().collect();
        other.elements.iter().all(|e| mine.contains(e))
    }
}

impl Eq for KbSnapshot {}
