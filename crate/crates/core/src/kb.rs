use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::element::{Element, ElementId, ElementKind, Payload};
use crate::error::{Error, Result};
use crate::marker::{MarkerPool, CONTEXT_BIT, DEFAULT_MARKER_PAIRS};
use crate::rule::{Rule, RuleId};
use crate::scalar::Scalar;
use crate::trigger::{EngineState, Hook};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    /// Number of allocatable marker pairs (the context bit is extra).
    pub marker_pairs: usize,
    /// Maximum rule firings caused by one external mutation or request.
    pub max_chain_depth: usize,
    /// Record trigger/substitution/firing events in the trace buffer.
    pub trace: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            marker_pairs: DEFAULT_MARKER_PAIRS,
            max_chain_depth: 1000,
            trace: false,
        }
    }
}

/// Instrumentation counters. All monotonically increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub marker_allocations: u64,
    pub rule_checks: u64,
    pub trigger_activations: u64,
    pub firings: u64,
    /// Deepest nesting of marker pairs held by the rule-checking search.
    pub max_search_depth: usize,
    /// The same, per rule, indexed by rule id.
    pub rule_search_depth: Vec<usize>,
}

/// The element network plus the rule engine state that hangs off it.
///
/// All operations take `&mut self`; there is no internal locking.
pub struct KnowledgeBase<N: Scalar = i64> {
    pub(crate) elements: Vec<Element<N>>,
    pub(crate) names: HashMap<String, ElementId>,
    pub(crate) root: ElementId,
    pub(crate) general: ElementId,
    pub(crate) active_context: ElementId,
    pub(crate) contexts: Vec<ElementId>,
    pub(crate) pool: MarkerPool,
    pub(crate) config: Config,
    /// Materialized virtual copies keyed by (role, owner).
    pub(crate) copies: HashMap<(ElementId, ElementId), Vec<ElementId>>,
    pub(crate) payload_index: HashMap<N, Vec<ElementId>>,
    pub(crate) rel_statements: HashMap<ElementId, Vec<ElementId>>,
    pub(crate) cancel_links: usize,
    pub(crate) number_type: Option<ElementId>,
    pub(crate) rules: Vec<Arc<Rule>>,
    pub(crate) rule_names: HashMap<String, RuleId>,
    pub(crate) engine: EngineState,
    pub(crate) hooks: BTreeMap<String, Hook>,
    pub(crate) stats: Stats,
    pub(crate) trace: Vec<String>,
    pub(crate) diagnostics: Vec<String>,
}

impl<N: Scalar> fmt::Debug for KnowledgeBase<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("elements", &self.elements.len())
            .field("rules", &self.rules.len())
            .field("active_context", &self.active_context)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl<N: Scalar> Default for KnowledgeBase<N> {
    fn default() -> Self {
        Self::new()
    }
}

impl<N: Scalar> KnowledgeBase<N> {
    pub fn new() -> Self {
        Self::with_config(Config::default()).expect("default config is valid")
    }

    /// Creates a knowledge base holding only `{thing}` and `{general}`, with
    /// `{general}` active.
    pub fn with_config(config: Config) -> Result<Self> {
        let pool = MarkerPool::new(config.marker_pairs)?;
        let root = ElementId(0);
        let general = ElementId(1);
        let mut kb = KnowledgeBase {
            elements: Vec::new(),
            names: HashMap::new(),
            root,
            general,
            active_context: general,
            contexts: vec![general],
            pool,
            config,
            copies: HashMap::new(),
            payload_index: HashMap::new(),
            rel_statements: HashMap::new(),
            cancel_links: 0,
            number_type: None,
            rules: Vec::new(),
            rule_names: HashMap::new(),
            engine: EngineState::default(),
            hooks: BTreeMap::new(),
            stats: Stats::default(),
            trace: Vec::new(),
            diagnostics: Vec::new(),
        };
        let mut thing = Element::new(ElementKind::TypeNode, general);
        thing.name = Some("thing".into());
        kb.push(thing);
        let mut gen = Element::new(ElementKind::TypeNode, general);
        gen.name = Some("general".into());
        kb.push(gen);
        kb.activate_context(general)?;
        Ok(kb)
    }

    // ---- accessors -------------------------------------------------------

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn set_trace(&mut self, on: bool) {
        self.config.trace = on;
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn root(&self) -> ElementId {
        self.root
    }

    pub fn general_context(&self) -> ElementId {
        self.general
    }

    pub fn active_context(&self) -> ElementId {
        self.active_context
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, id: ElementId) -> Option<&Element<N>> {
        self.elements.get(id.index())
    }

    /// # Panics
    /// If `id` does not belong to this knowledge base.
    pub fn element(&self, id: ElementId) -> &Element<N> {
        &self.elements[id.index()]
    }

    pub fn elements(&self) -> impl Iterator<Item = (ElementId, &Element<N>)> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, e)| (ElementId(i as u32), e))
    }

    pub fn lookup(&self, name: &str) -> Option<ElementId> {
        self.names.get(name).copied()
    }

    pub fn is_visible(&self, id: ElementId) -> bool {
        let ctx = self.elements[id.index()].context_wire;
        self.elements[ctx.index()].markers.has(CONTEXT_BIT)
    }

    pub fn is_role(&self, id: ElementId) -> bool {
        self.elements[id.index()].kind.is_role()
    }

    pub(crate) fn kind(&self, id: ElementId) -> ElementKind {
        self.elements[id.index()].kind
    }

    /// Owner of a role (or virtual copy); `None` for other kinds.
    pub fn owner_of(&self, role: ElementId) -> Option<ElementId> {
        self.elements[role.index()].owner_wire
    }

    pub fn payload(&self, id: ElementId) -> Option<&Payload<N>> {
        self.elements[id.index()].payload.as_ref()
    }

    /// Name without braces; links get a derived description.
    pub fn label(&self, id: ElementId) -> String {
        let e = &self.elements[id.index()];
        if let Some(name) = &e.name {
            return name.clone();
        }
        let wire = |w: Option<ElementId>| w.map(|x| self.label(x)).unwrap_or_else(|| "?".into());
        match e.kind {
            ElementKind::IsA => format!("{} is-a {}", wire(e.a_wire), wire(e.b_wire)),
            ElementKind::Eq => format!("{} eq {}", wire(e.a_wire), wire(e.b_wire)),
            ElementKind::Has => format!("{} has {}", wire(e.b_wire), wire(e.a_wire)),
            ElementKind::Cancel => format!("{} cancels {}", wire(e.a_wire), wire(e.b_wire)),
            ElementKind::Statement => format!(
                "{} {} {}",
                wire(e.a_wire),
                wire(e.rel_wire),
                wire(e.b_wire)
            ),
            _ => match (e.copy_of, e.owner_wire) {
                (Some(role), Some(owner)) => format!("{} of {}", self.label(role), self.label(owner)),
                _ => format!("element {}", id.0),
            },
        }
    }

    /// `{name}` rendering used in traces, errors and the REPL.
    pub fn display(&self, id: ElementId) -> String {
        format!("{{{}}}", self.label(id))
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn take_diagnostics(&mut self) -> Vec<String> {
        std::mem::take(&mut self.diagnostics)
    }

    pub(crate) fn check(&self, id: ElementId) -> Result<()> {
        if id.index() < self.elements.len() {
            Ok(())
        } else {
            Err(Error::UnknownElement(id.to_string()))
        }
    }

    pub(crate) fn exists(&self, id: ElementId) -> bool {
        id.index() < self.elements.len()
    }

    // ---- element creation ------------------------------------------------

    fn push(&mut self, e: Element<N>) -> ElementId {
        let id = ElementId(self.elements.len() as u32);
        if let Some(name) = &e.name {
            self.names.insert(name.clone(), id);
        }
        self.elements.push(e);
        id
    }

    fn ensure_free_name(&self, name: &str) -> Result<()> {
        if self.names.contains_key(name) {
            Err(Error::DuplicateName(format!("{{{name}}}")))
        } else {
            Ok(())
        }
    }

    fn new_node(&mut self, name: Option<&str>, kind: ElementKind) -> ElementId {
        let mut e = Element::new(kind, self.active_context);
        e.name = name.map(str::to_owned);
        e.proper = kind == ElementKind::IndvNode;
        self.push(e)
    }

    fn new_link(&mut self, kind: ElementKind, a: ElementId, b: ElementId) -> ElementId {
        let mut e = Element::new(kind, self.active_context);
        e.a_wire = Some(a);
        e.b_wire = Some(b);
        let id = self.push(e);
        self.elements[a.index()].out_links.push(id);
        self.elements[b.index()].in_links.push(id);
        id
    }

    /// A visible link of `kind` from `a` to `b`, if one exists.
    fn find_link(&self, kind: ElementKind, a: ElementId, b: ElementId, rel: Option<ElementId>) -> Option<ElementId> {
        self.elements[a.index()].out_links.iter().copied().find(|&l| {
            let e = &self.elements[l.index()];
            e.kind == kind && e.b_wire == Some(b) && e.rel_wire == rel && self.is_visible(l)
        })
    }

    pub fn new_type(&mut self, name: &str, parent: ElementId) -> Result<ElementId> {
        self.ensure_free_name(name)?;
        if !self.exists(parent) {
            return Err(Error::UnknownParent(parent.to_string()));
        }
        if self.kind(parent) != ElementKind::TypeNode {
            return Err(Error::ParentNotAType(self.display(parent)));
        }
        let id = self.new_node(Some(name), ElementKind::TypeNode);
        self.add_is_a(id, parent)?;
        Ok(id)
    }

    pub fn new_indv(&mut self, name: &str, parent: ElementId) -> Result<ElementId> {
        self.new_indv_inner(Some(name), parent, None)
    }

    /// A proper individual carrying a concrete value.
    pub fn new_indv_with_payload(&mut self, name: &str, parent: ElementId, payload: Payload<N>) -> Result<ElementId> {
        self.new_indv_inner(Some(name), parent, Some(payload))
    }

    fn new_indv_inner(&mut self, name: Option<&str>, parent: ElementId, payload: Option<Payload<N>>) -> Result<ElementId> {
        if let Some(name) = name {
            self.ensure_free_name(name)?;
        }
        if !self.exists(parent) {
            return Err(Error::UnknownParent(parent.to_string()));
        }
        if self.kind(parent) == ElementKind::IndvNode {
            return Err(Error::InferiorOfIndividual(self.display(parent)));
        }
        let id = self.new_node(name, ElementKind::IndvNode);
        if let Some(Payload::Number(n)) = &payload {
            self.payload_index.entry(n.clone()).or_default().push(id);
        }
        self.elements[id.index()].payload = payload;
        self.add_is_a(id, parent)?;
        Ok(id)
    }

    /// The `{number}` type, created under `{thing}` on first use.
    pub fn number_type(&mut self) -> Result<ElementId> {
        if let Some(t) = self.number_type {
            return Ok(t);
        }
        let t = match self.lookup("number") {
            Some(t) => t,
            None => self.new_type("number", self.root)?,
        };
        self.number_type = Some(t);
        Ok(t)
    }

    /// A proper individual under `{number}` named `name` with payload `value`.
    pub fn new_number(&mut self, name: &str, value: N) -> Result<ElementId> {
        let parent = self.number_type()?;
        self.new_indv_inner(Some(name), parent, Some(Payload::Number(value)))
    }

    /// Reuses the first visible element carrying `value`, else creates a
    /// number individual named after the value.
    pub fn number_element(&mut self, value: N) -> Result<ElementId> {
        if let Some(found) = self
            .payload_index
            .get(&value)
            .and_then(|ids| ids.iter().copied().find(|&e| self.is_visible(e)))
        {
            return Ok(found);
        }
        let name = value.to_string();
        let parent = self.number_type()?;
        let name = if self.names.contains_key(&name) { None } else { Some(name) };
        self.new_indv_inner(name.as_deref(), parent, Some(Payload::Number(value)))
    }

    pub fn add_is_a(&mut self, a: ElementId, b: ElementId) -> Result<ElementId> {
        self.check(a)?;
        self.check(b)?;
        if a == self.root {
            return Err(Error::CycleDetected(self.display(a), self.display(b)));
        }
        let (ka, kb) = (self.kind(a), self.kind(b));
        if kb == ElementKind::IndvNode {
            return Err(Error::InferiorOfIndividual(self.display(b)));
        }
        self.check_hierarchy_kinds(a, b)?;
        if ka == ElementKind::Relation && kb != ElementKind::Relation {
            return Err(Error::KindMismatch(self.display(a), self.display(b), "relations only specialize relations"));
        }
        if a == b || self.reaches_by_is_a(b, a) {
            return Err(Error::CycleDetected(self.display(a), self.display(b)));
        }
        if let Some(existing) = self.find_link(ElementKind::IsA, a, b, None) {
            return Ok(existing);
        }
        let link = self.new_link(ElementKind::IsA, a, b);
        self.notify_link(link)?;
        Ok(link)
    }

    pub fn add_eq(&mut self, a: ElementId, b: ElementId) -> Result<ElementId> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::SelfEq(self.display(a)));
        }
        self.check_hierarchy_kinds(a, b)?;
        if (self.kind(a) == ElementKind::Relation) != (self.kind(b) == ElementKind::Relation) {
            return Err(Error::KindMismatch(self.display(a), self.display(b), "relations only equal relations"));
        }
        if let Some(existing) = self
            .find_link(ElementKind::Eq, a, b, None)
            .or_else(|| self.find_link(ElementKind::Eq, b, a, None))
        {
            return Ok(existing);
        }
        let link = self.new_link(ElementKind::Eq, a, b);
        self.notify_link(link)?;
        Ok(link)
    }

    /// Blocks inheritance of `b` (and what lies only above it) by `a`.
    pub fn add_cancel(&mut self, a: ElementId, b: ElementId) -> Result<ElementId> {
        self.check(a)?;
        self.check(b)?;
        self.check_hierarchy_kinds(a, b)?;
        if let Some(existing) = self.find_link(ElementKind::Cancel, a, b, None) {
            return Ok(existing);
        }
        self.cancel_links += 1;
        Ok(self.new_link(ElementKind::Cancel, a, b))
    }

    fn check_hierarchy_kinds(&self, a: ElementId, b: ElementId) -> Result<()> {
        if self.kind(a).is_link() || self.kind(b).is_link() {
            return Err(Error::KindMismatch(
                self.display(a),
                self.display(b),
                "links are not part of the is-a hierarchy",
            ));
        }
        Ok(())
    }

    /// Whether `to` is reachable from `from` over is-a links of any context.
    fn reaches_by_is_a(&self, from: ElementId, to: ElementId) -> bool {
        let mut seen = vec![false; self.elements.len()];
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            if std::mem::replace(&mut seen[x.index()], true) {
                continue;
            }
            for &l in &self.elements[x.index()].out_links {
                let link = &self.elements[l.index()];
                if link.kind == ElementKind::IsA {
                    stack.extend(link.b_wire);
                }
            }
        }
        false
    }

    pub fn new_type_role(&mut self, name: &str, owner: ElementId, parent: ElementId) -> Result<ElementId> {
        self.new_role(name, owner, parent, ElementKind::TypeRole)
    }

    pub fn new_indv_role(&mut self, name: &str, owner: ElementId, parent: ElementId) -> Result<ElementId> {
        self.new_role(name, owner, parent, ElementKind::IndvRole)
    }

    fn new_role(&mut self, name: &str, owner: ElementId, parent: ElementId, kind: ElementKind) -> Result<ElementId> {
        self.ensure_free_name(name)?;
        if !self.exists(owner) || !self.kind(owner).is_node() {
            return Err(Error::UnknownOwner(owner.to_string()));
        }
        if !self.exists(parent) {
            return Err(Error::UnknownParent(parent.to_string()));
        }
        if self.kind(parent) == ElementKind::IndvNode {
            return Err(Error::InferiorOfIndividual(self.display(parent)));
        }
        let role = self.new_node(Some(name), kind);
        self.elements[role.index()].owner_wire = Some(owner);
        self.new_link(ElementKind::Has, role, owner);
        self.add_is_a(role, parent)?;
        Ok(role)
    }

    pub fn new_relation(&mut self, name: &str, a_type: ElementId, b_type: ElementId) -> Result<ElementId> {
        self.ensure_free_name(name)?;
        self.check(a_type)?;
        self.check(b_type)?;
        let rel = self.new_node(Some(name), ElementKind::Relation);
        let e = &mut self.elements[rel.index()];
        e.a_wire = Some(a_type);
        e.b_wire = Some(b_type);
        Ok(rel)
    }

    pub fn new_statement(&mut self, a: ElementId, rel: ElementId, b: ElementId) -> Result<ElementId> {
        self.check(a)?;
        self.check(rel)?;
        self.check(b)?;
        if self.kind(rel) != ElementKind::Relation {
            return Err(Error::NotARelation(self.display(rel)));
        }
        let (a_type, b_type) = {
            let r = &self.elements[rel.index()];
            (r.a_wire.expect("relation wires"), r.b_wire.expect("relation wires"))
        };
        for (side, element, constraint) in [("A", a, a_type), ("B", b, b_type)] {
            if !self.is_x_a_y(element, constraint)? {
                return Err(Error::ConstraintViolation {
                    relation: self.display(rel),
                    side,
                    element: self.display(element),
                    constraint: self.display(constraint),
                });
            }
        }
        if let Some(existing) = self.find_link(ElementKind::Statement, a, b, Some(rel)) {
            return Ok(existing);
        }
        let link = self.new_link(ElementKind::Statement, a, b);
        self.elements[link.index()].rel_wire = Some(rel);
        self.rel_statements.entry(rel).or_default().push(link);
        self.notify_link(link)?;
        Ok(link)
    }

    /// The node standing for "the `role` of `owner`", materialized on first
    /// demand. For the role's own owner this is the role itself.
    pub fn virtual_copy(&mut self, role: ElementId, owner: ElementId) -> Result<ElementId> {
        self.check(role)?;
        self.check(owner)?;
        let Some(declared_owner) = self.owner_of(role) else {
            return Err(Error::NotARole(self.display(role)));
        };
        if owner == declared_owner {
            return Ok(role);
        }
        if !self.is_x_a_y(owner, declared_owner)? {
            return Err(Error::OwnerMismatch {
                role: self.display(role),
                owner: self.display(owner),
                expected: self.display(declared_owner),
            });
        }
        if let Some(found) = self.existing_copy(role, owner) {
            return Ok(found);
        }
        let name = format!("{} of {}", self.label(role), self.label(owner));
        let name = if self.names.contains_key(&name) { None } else { Some(name) };
        let copy = self.new_node(name.as_deref(), self.kind(role));
        {
            let e = &mut self.elements[copy.index()];
            e.owner_wire = Some(owner);
            e.copy_of = Some(role);
        }
        self.copies.entry((role, owner)).or_default().push(copy);
        self.new_link(ElementKind::Has, copy, owner);
        self.add_is_a(copy, role)?;
        Ok(copy)
    }

    fn existing_copy(&self, role: ElementId, owner: ElementId) -> Option<ElementId> {
        self.copies
            .get(&(role, owner))
            .and_then(|v| v.iter().copied().find(|&c| self.is_visible(c)))
    }

    /// "x is a `role` of `owner`".
    pub fn x_is_a_y_of_z(&mut self, x: ElementId, role: ElementId, owner: ElementId) -> Result<ElementId> {
        self.check(x)?;
        let copy = self.virtual_copy(role, owner)?;
        self.add_is_a(x, copy)
    }

    /// "x is the `role` of `owner`". Same structure as [`Self::x_is_a_y_of_z`];
    /// the role is expected to be an individual role.
    pub fn x_is_the_y_of_z(&mut self, x: ElementId, role: ElementId, owner: ElementId) -> Result<ElementId> {
        self.x_is_a_y_of_z(x, role, owner)
    }

    /// First proper filler of "the `role` of `owner`", without rule checking
    /// and without marker allocation.
    pub fn lookup_the_y_of_z(&self, role: ElementId, owner: ElementId) -> Result<Option<ElementId>> {
        self.check(role)?;
        self.check(owner)?;
        let Some(declared_owner) = self.owner_of(role) else {
            return Err(Error::NotARole(self.display(role)));
        };
        let copy = if owner == declared_owner {
            Some(role)
        } else {
            self.existing_copy(role, owner)
        };
        let Some(copy) = copy else { return Ok(None) };
        let node = &self.elements[copy.index()];
        let incoming = node.in_links.iter().filter_map(|&l| {
            let link = &self.elements[l.index()];
            matches!(link.kind, ElementKind::IsA | ElementKind::Eq)
                .then_some((l, link.a_wire?))
        });
        let outgoing_eq = node.out_links.iter().filter_map(|&l| {
            let link = &self.elements[l.index()];
            (link.kind == ElementKind::Eq).then_some((l, link.b_wire?))
        });
        Ok(incoming
            .chain(outgoing_eq)
            .filter(|&(l, x)| {
                self.is_visible(l) && self.is_visible(x) && !self.is_role(x) && self.elements[x.index()].proper
            })
            .map(|(_, x)| x)
            .next())
    }

    // ---- contexts --------------------------------------------------------

    pub fn new_context(&mut self, name: &str, parent: ElementId) -> Result<ElementId> {
        self.ensure_free_name(name)?;
        if !self.exists(parent) {
            return Err(Error::UnknownContext(parent.to_string()));
        }
        let ctx = self.new_node(Some(name), ElementKind::TypeNode);
        self.contexts.push(ctx);
        self.add_is_a(ctx, parent)?;
        Ok(ctx)
    }

    pub fn contexts(&self) -> &[ElementId] {
        &self.contexts
    }

    /// Moves the context marker to `c` and its superiors. Context links are
    /// followed regardless of their own context.
    pub fn activate_context(&mut self, c: ElementId) -> Result<()> {
        if !self.exists(c) || !self.kind(c).is_node() {
            return Err(Error::UnknownContext(c.to_string()));
        }
        self.clear_bit(CONTEXT_BIT);
        let mut queue = std::collections::VecDeque::from([c]);
        self.set_bit(c, CONTEXT_BIT);
        while let Some(x) = queue.pop_front() {
            let e = &self.elements[x.index()];
            let ups: Vec<ElementId> = e
                .out_links
                .iter()
                .filter_map(|&l| {
                    let link = &self.elements[l.index()];
                    matches!(link.kind, ElementKind::IsA | ElementKind::Eq).then_some(link.b_wire?)
                })
                .chain(e.in_links.iter().filter_map(|&l| {
                    let link = &self.elements[l.index()];
                    (link.kind == ElementKind::Eq).then_some(link.a_wire?)
                }))
                .collect();
            for up in ups {
                if self.set_bit(up, CONTEXT_BIT) {
                    queue.push_back(up);
                }
            }
        }
        if !self.contexts.contains(&c) {
            self.contexts.push(c);
        }
        self.active_context = c;
        Ok(())
    }

    pub(crate) fn rule_arc(&self, id: RuleId) -> Arc<Rule> {
        Arc::clone(&self.rules[id.0])
    }
}
